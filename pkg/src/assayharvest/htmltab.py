"""Extract data tables and page-level context from HTML documents.

Built on the stdlib ``html.parser``; sources are decoded per declared charset
with a UTF-8 fallback. Nested tables in these pages are layout scaffolding,
so only the innermost data-bearing table is emitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Optional

from . import fieldmap
from .canon import strip_trailing_test_word
from .corpus import SourceDocument, _decode_html
from .errors import MalformedHtmlError
from .fieldmap import HeaderSynonymTable, KeywordDictionary, keyword_scan
from .tables import PageContext, RawTable, clean_cell

_HEADINGS = {"h1", "h2", "h3", "h4", "h5", "h6"}
_SKIP_CONTENT = {"script", "style"}


@dataclass
class _Table:
    parent: Optional["_Table"]
    rows: list[list[str]] = field(default_factory=list)
    header_is_th: bool = False
    children: list["_Table"] = field(default_factory=list)
    _cell_parts: Optional[list[str]] = None
    _row: Optional[list[str]] = None

    def start_row(self) -> None:
        self.end_row()
        self._row = []

    def end_row(self) -> None:
        self.end_cell()
        if self._row:
            self.rows.append(self._row)
        self._row = None

    def start_cell(self, is_th: bool) -> None:
        self.end_cell()
        if self._row is None:
            self._row = []
        self._cell_parts = []
        if is_th and not self.rows and not self._row:
            self.header_is_th = True

    def end_cell(self) -> None:
        if self._cell_parts is not None and self._row is not None:
            self._row.append(clean_cell(" ".join(self._cell_parts)))
        self._cell_parts = None

    def add_text(self, text: str) -> None:
        if self._cell_parts is not None:
            self._cell_parts.append(text)


class _PageParser(HTMLParser):
    def __init__(self) -> None:
        super().__init__()
        self.top_tables: list[_Table] = []
        self.context_parts: list[str] = []
        self.title = ""
        self.first_heading = ""
        self._stack: list[_Table] = []
        self._sup_depth = 0
        self._skip_depth = 0
        self._in_title = False
        self._in_heading = False

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_CONTENT:
            self._skip_depth += 1
        elif tag == "sup":
            self._sup_depth += 1
        elif tag == "table":
            table = _Table(parent=self._stack[-1] if self._stack else None)
            if table.parent is not None:
                table.parent.children.append(table)
            else:
                self.top_tables.append(table)
            self._stack.append(table)
        elif tag == "tr" and self._stack:
            self._stack[-1].start_row()
        elif tag in ("td", "th") and self._stack:
            self._stack[-1].start_cell(is_th=tag == "th")
        elif tag == "title":
            self._in_title = True
        elif tag in _HEADINGS:
            self._in_heading = True
        elif tag == "br":
            self.handle_data(" ")

    def handle_endtag(self, tag):
        if tag in _SKIP_CONTENT:
            self._skip_depth = max(0, self._skip_depth - 1)
        elif tag == "sup":
            self._sup_depth = max(0, self._sup_depth - 1)
        elif tag == "table" and self._stack:
            self._stack[-1].end_row()
            self._stack.pop()
        elif tag == "tr" and self._stack:
            self._stack[-1].end_row()
        elif tag in ("td", "th") and self._stack:
            self._stack[-1].end_cell()
        elif tag == "title":
            self._in_title = False
        elif tag in _HEADINGS:
            self._in_heading = False

    def handle_data(self, data):
        if self._skip_depth or self._sup_depth:
            return
        if self._in_title:
            self.title += data
            return
        if self._in_heading and not self.first_heading.strip():
            self.first_heading += data
        if self._stack:
            self._stack[-1].add_text(data)
        elif data.strip():
            self.context_parts.append(data.strip())


def _parse(doc: SourceDocument) -> _PageParser:
    if doc.kind != "html":
        raise ValueError(f"expected an html document, got {doc.kind}")
    text = _decode_html(doc)
    parser = _PageParser()
    try:
        parser.feed(text)
        parser.close()
    except Exception as exc:
        line, col = parser.getpos()
        offset = sum(len(ln) + 1 for ln in text.splitlines()[: line - 1]) + col
        raise MalformedHtmlError(str(exc), offset) from exc
    return parser


def _qualifies(table: _Table, syn: HeaderSynonymTable) -> Optional[RawTable]:
    rows = [row for row in table.rows if any(cell for cell in row)]
    if not rows:
        return None
    if len(rows) == 1 and len(rows[0]) == 1:
        return None  # single-cell layout table
    header_index = None
    if table.header_is_th or fieldmap.detect_header_row(rows[0], syn):
        header_index = 0
    if header_index is not None and len(rows) < 2:
        return None  # zero data rows after header
    return RawTable(cells=[list(r) for r in rows], header_row_index=header_index)


def _collect(table: _Table, syn: HeaderSynonymTable) -> list[RawTable]:
    from_children = [t for child in table.children for t in _collect(child, syn)]
    if from_children:
        return from_children
    own = _qualifies(table, syn)
    return [own] if own is not None else []


def extract_html_tables(
    doc: SourceDocument, syn: Optional[HeaderSynonymTable] = None
) -> list[RawTable]:
    """One RawTable per data-bearing table element, in document order."""
    syn = syn or HeaderSynonymTable.load()
    parser = _parse(doc)
    context = " ".join(parser.context_parts)
    tables: list[RawTable] = []
    for top in parser.top_tables:
        tables.extend(_collect(top, syn))
    for t in tables:
        t.context_text = context
        t.source_url = doc.ref.url
    return tables


def derive_page_context(
    doc: SourceDocument, kw: Optional[KeywordDictionary] = None
) -> PageContext:
    """Page title (fallback: first heading), matrix keyword hits, test name."""
    kw = kw or KeywordDictionary.load()
    parser = _parse(doc)
    title = clean_cell(parser.title) or clean_cell(parser.first_heading)
    context = " ".join(parser.context_parts)
    hits = list(dict.fromkeys(word for word, _ in keyword_scan(f"{title} {context}", kw, "matrix")))
    return PageContext(
        title=title,
        matrix_hits=hits,
        test_name=strip_trailing_test_word(title),
        text=context,
    )
