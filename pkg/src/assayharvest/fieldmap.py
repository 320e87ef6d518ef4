"""Regex-guarded keyword ensembles and the header-synonym dictionary.

Patterns are stored as lowercase regex fragments (``antimicrobial.?drug``).
At match time each fragment is bracketed by non-word guards on both sides so
a keyword never matches inside a larger word ("urine" never fires inside
"purines"). Start and end of string count as non-word context.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import AmbiguousHeaderError, StructuralError
from .tables import RawTable

CANONICAL_FIELDS = ("Drug", "Sensitivity", "Test", "Matrix", "MRL", "Tolerance")

_DATA_DIR = Path(__file__).parent / "data"


def guarded(pattern: str) -> re.Pattern:
    """Compile a fragment with non-word guards; string edges count as non-word."""
    return re.compile(r"(?<!\w)(?:" + pattern + r")(?!\w)", re.IGNORECASE)


@dataclass
class KeywordDictionary:
    """Guarded keyword ensembles for matrix, field, and unit scanning."""

    categories: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._compiled = {
            cat: [guarded(p) for p in pats] for cat, pats in self.categories.items()
        }

    @classmethod
    def load(cls, path: Path | str | None = None) -> "KeywordDictionary":
        path = Path(path) if path else _DATA_DIR / "keywords.tsv"
        return cls(_read_tsv(path))

    def save(self, path: Path | str) -> None:
        _write_tsv(Path(path), self.categories)


@dataclass
class HeaderSynonymTable:
    """Map from canonical field name to guarded variant patterns."""

    entries: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        unknown = set(self.entries) - set(CANONICAL_FIELDS)
        if unknown:
            raise ValueError(f"unknown canonical field names: {sorted(unknown)}")
        self._compiled = {
            name: [guarded(p) for p in pats] for name, pats in self.entries.items()
        }

    @classmethod
    def load(cls, path: Path | str | None = None) -> "HeaderSynonymTable":
        path = Path(path) if path else _DATA_DIR / "fields.tsv"
        return cls(_read_tsv(path))

    def save(self, path: Path | str) -> None:
        _write_tsv(Path(path), self.entries)


def _read_tsv(path: Path) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        name, *variants = line.split("\t")
        out[name] = [v for v in variants if v]
    return out


def _write_tsv(path: Path, entries: dict[str, list[str]]) -> None:
    lines = ["\t".join([name, *variants]) for name, variants in entries.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def keyword_scan(
    text: str, kw: KeywordDictionary, category: str
) -> list[tuple[str, int]]:
    """All guarded matches of one category, ordered by position.

    Overlapping matches are collapsed to the longest one. The returned keyword
    is the matched text, lowercased.
    """
    hits: list[tuple[int, int, str]] = []
    for pat in kw._compiled.get(category, []):
        for m in pat.finditer(text):
            hits.append((m.start(), m.end(), m.group(0).lower()))
    hits.sort(key=lambda h: (h[0], -(h[1] - h[0])))
    result: list[tuple[str, int]] = []
    last_end = -1
    for start, end, word in hits:
        if start < last_end:
            continue
        result.append((word, start))
        last_end = end
    return result


def map_header(header_cell: str, syn: HeaderSynonymTable) -> Optional[str]:
    """Canonical field name for a header cell, or None when nothing matches.

    When variants of two different canonical names match, the strictly longest
    match wins ("Test Sensitivity" is Sensitivity, not Test); an exact tie is
    an ambiguity error, never a silent pick.
    """
    best_len: dict[str, int] = {}
    for name, pats in syn._compiled.items():
        for pat in pats:
            for m in pat.finditer(header_cell):
                length = m.end() - m.start()
                if length > best_len.get(name, 0):
                    best_len[name] = length
    if not best_len:
        return None
    if len(best_len) == 1:
        return next(iter(best_len))
    top = max(best_len.values())
    winners = sorted(name for name, ln in best_len.items() if ln == top)
    if len(winners) > 1:
        raise AmbiguousHeaderError(header_cell, winners)
    return winners[0]


@dataclass
class TableSchema:
    """Column-index to canonical-field mapping plus the relevance verdict."""

    columns: dict[int, str]
    relevant: bool


def map_table_schema(t: RawTable, syn: HeaderSynonymTable) -> TableSchema:
    """Map every header cell; a table is relevant iff it covers Drug and Sensitivity.

    Two columns resolving to the same canonical field (after any folding) is a
    structural error.
    """
    if t.header is None:
        return TableSchema(columns={}, relevant=False)
    columns: dict[int, str] = {}
    seen: dict[str, int] = {}
    for i, cell in enumerate(t.header):
        name = map_header(cell, syn)
        if name is None:
            continue
        if name in seen:
            raise StructuralError(
                f"columns {seen[name]} and {i} both map to {name}"
            )
        seen[name] = i
        columns[i] = name
    relevant = {"Drug", "Sensitivity"} <= set(columns.values())
    return TableSchema(columns=columns, relevant=relevant)


def detect_header_row(cells: list[str], syn: HeaderSynonymTable) -> bool:
    """Header heuristic: at least half the non-empty cells match some synonym.

    Single-cell rows (page titles, ribbons) are never headers.
    """
    non_empty = [c for c in cells if c]
    if len(non_empty) < 2:
        return False
    hits = 0
    for cell in non_empty:
        try:
            if map_header(cell, syn) is not None:
                hits += 1
        except AmbiguousHeaderError:
            hits += 1
    return hits > 0 and hits * 2 >= len(non_empty)


def lint(syn: HeaderSynonymTable) -> list[str]:
    """Validate the no-overlap invariant across canonical names.

    Each variant is rendered to plain text and mapped back through the whole
    table; a variant that maps to a different field, or ambiguously, is a
    conflict.
    """
    conflicts = []
    for name, variants in syn.entries.items():
        for variant in variants:
            sample = _render_plain(variant)
            try:
                mapped = map_header(sample, syn)
            except AmbiguousHeaderError as exc:
                conflicts.append(f"{name}:{variant} is ambiguous ({exc.candidates})")
                continue
            if mapped != name:
                conflicts.append(f"{name}:{variant} maps to {mapped}")
    return conflicts


def _render_plain(pattern: str) -> str:
    """Turn a stored pattern fragment into representative plain text."""
    text = pattern.replace(".?", " ")
    text = re.sub(r"(\w)\?", r"\1", text)  # optional single letters kept
    text = re.sub(r"\s+", " ", text)
    return text.strip()


def scan_headers(headers: Iterable[str], syn: HeaderSynonymTable) -> list[str]:
    """Lint helper for real header strings: report ambiguous cells."""
    problems = []
    for h in headers:
        try:
            map_header(h, syn)
        except AmbiguousHeaderError as exc:
            problems.append(f"{h!r}: {exc.candidates}")
    return problems
