"""Shared rectangular-grid table model used by the HTML and PDF extractors."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

# Footnote superscripts appear as caret tokens ("ppb ^A") in span text and as
# <sup> remnants in HTML; both are stripped during cell trimming.
_SUPERSCRIPT_RE = re.compile(r"\^\w+")
_WS_RE = re.compile(r"\s+")


def clean_cell(text: str) -> str:
    """Trim a raw cell: drop footnote superscript markers, collapse whitespace."""
    text = _SUPERSCRIPT_RE.sub(" ", text)
    text = _WS_RE.sub(" ", text)
    return text.strip()


@dataclass
class RawTable:
    """A rectangular grid of trimmed cell strings plus page-level context.

    Short rows are padded with empty strings at construction; the number of
    padded cells is recorded in ``padded_cells``.
    """

    cells: list[list[str]]
    header_row_index: Optional[int] = None
    context_text: str = ""
    source_url: str = ""
    page_number: Optional[int] = None
    padded_cells: int = 0

    def __post_init__(self) -> None:
        widths = {len(r) for r in self.cells}
        if len(widths) > 1:
            width = max(widths)
            for row in self.cells:
                self.padded_cells += width - len(row)
                row.extend([""] * (width - len(row)))

    @property
    def n_rows(self) -> int:
        return len(self.cells)

    @property
    def n_cols(self) -> int:
        return len(self.cells[0]) if self.cells else 0

    @property
    def header(self) -> Optional[list[str]]:
        if self.header_row_index is None:
            return None
        return self.cells[self.header_row_index]

    def data_rows(self) -> list[list[str]]:
        """Rows excluding the header row, in document order."""
        return [r for i, r in enumerate(self.cells) if i != self.header_row_index]

    def is_rectangular(self) -> bool:
        return len({len(r) for r in self.cells}) <= 1


@dataclass
class PageContext:
    """Document-level fields recovered outside any table."""

    title: str = ""
    matrix_hits: list[str] = field(default_factory=list)
    test_name: str = ""
    text: str = ""
