"""Reconstruct tables from positioned text spans and repair extraction pathologies.

Three documented failure modes are handled explicitly: trailing rows dropped
by the extractor (surfaced as ExtractionGaps, repaired only via an operator-
confirmed CLI step), class-title rows embedded mid-table (removed when a row
holds no positive real number), and side-by-side repeated column blocks
(folded into a single stacked block).

Span fixtures are line-delimited ``page<TAB>x<TAB>y<TAB>width<TAB>text``
records so tables can be authored without binary PDFs; the production path
reads the text layer of Flate-compressed or plain PDF content streams.
"""

from __future__ import annotations

import base64
import re
import statistics
import zlib
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import NoTextLayerError, StructuralError
from .fieldmap import HeaderSynonymTable, detect_header_row, map_header
from .tables import RawTable, clean_cell


@dataclass(frozen=True)
class TextSpan:
    page: int
    x: float
    y: float  # top-down page units
    width: float
    text: str

    def __post_init__(self) -> None:
        if self.page < 1:
            raise ValueError("page numbers start at 1")
        if self.width < 0:
            raise ValueError("width must be >= 0")
        if not self.text.strip():
            raise ValueError("span text must be non-empty after trimming")

    @property
    def mid_x(self) -> float:
        return self.x + self.width / 2


@dataclass
class GridModel:
    row_bands: list[tuple[float, float]]
    col_bands: list[tuple[float, float]]


@dataclass
class ExtractionGap:
    table_id: str
    missing_terms: list[str]
    severity: str = "row_suspected"  # row_suspected | unknown

    def __post_init__(self) -> None:
        if not self.missing_terms:
            raise ValueError("missing_terms must be non-empty")


# ---------------------------------------------------------------------------
# Span fixture format
# ---------------------------------------------------------------------------


def read_span_file(path: Path | str) -> list[TextSpan]:
    spans = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        page, x, y, width, text = line.split("\t")
        spans.append(TextSpan(int(page), float(x), float(y), float(width), text))
    return spans


def write_span_file(spans: Iterable[TextSpan], path: Path | str) -> None:
    lines = [f"{s.page}\t{s.x}\t{s.y}\t{s.width}\t{s.text}" for s in spans]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# PDF text layer
# ---------------------------------------------------------------------------


def scan_pages(doc) -> list[list[TextSpan]]:
    """Text spans per page, in reading order. Encrypted or image-only PDFs
    raise NoTextLayerError; the caller logs and skips the document."""
    if doc.kind != "pdf":
        raise ValueError(f"expected a pdf document, got {doc.kind}")
    data = doc.bytes
    if b"/Encrypt" in data:
        raise NoTextLayerError(f"encrypted PDF: {doc.ref.url}")
    pages = _extract_pdf_spans(data)
    if not any(pages):
        raise NoTextLayerError(f"no text layer: {doc.ref.url}")
    return pages


_STREAM_RE = re.compile(rb"<<(.*?)>>\s*stream\r?\n(.*?)\s*endstream", re.S)
_MEDIABOX_RE = re.compile(rb"/MediaBox\s*\[\s*[\d.]+\s+[\d.]+\s+[\d.]+\s+([\d.]+)")


def _extract_pdf_spans(data: bytes) -> list[list[TextSpan]]:
    m = _MEDIABOX_RE.search(data)
    page_height = float(m.group(1)) if m else 792.0
    pages: list[list[TextSpan]] = []
    for header, raw in _STREAM_RE.findall(data):
        header = header.split(b"<<")[-1]  # innermost dict before the stream
        if b"/Image" in header or b"/Subtype" in header and b"/XML" in header:
            continue
        content = raw
        if b"ASCII85Decode" in header:
            compact = b"".join(content.split())
            if compact.endswith(b"~>"):
                compact = compact[:-2]
            try:
                content = base64.a85decode(compact)
            except ValueError:
                continue
        if b"FlateDecode" in header:
            try:
                content = zlib.decompress(content)
            except zlib.error:
                continue
        if b"BT" not in content:
            continue
        spans = _spans_from_content(content, page_height, page=len(pages) + 1)
        pages.append(spans)
    return pages


def _spans_from_content(content: bytes, page_height: float, page: int) -> list[TextSpan]:
    spans: list[TextSpan] = []
    x = y = 0.0
    line_x = line_y = 0.0
    leading = 12.0
    font_size = 12.0
    stack: list = []
    for kind, value in _tokenize_content(content):
        if kind in ("num", "str", "arr", "name"):
            stack.append((kind, value))
            continue
        op = value
        if op == "Tf" and stack:
            font_size = float(stack[-1][1]) if stack[-1][0] == "num" else font_size
        elif op == "TL" and stack and stack[-1][0] == "num":
            leading = float(stack[-1][1])
        elif op == "Tm" and len(stack) >= 6:
            x = line_x = float(stack[-2][1])
            y = line_y = float(stack[-1][1])
        elif op in ("Td", "TD") and len(stack) >= 2:
            line_x += float(stack[-2][1])
            line_y += float(stack[-1][1])
            x, y = line_x, line_y
            if op == "TD":
                leading = -float(stack[-1][1])
        elif op == "T*":
            line_y -= leading
            x, y = line_x, line_y
        elif op in ("Tj", "'") and stack and stack[-1][0] == "str":
            text = stack[-1][1]
            if op == "'":
                line_y -= leading
                x, y = line_x, line_y
            if text.strip():
                spans.append(
                    TextSpan(page, x, page_height - y, 0.5 * font_size * len(text), text.strip())
                )
            x += 0.5 * font_size * len(text)
        elif op == "TJ" and stack and stack[-1][0] == "arr":
            text = "".join(part for k, part in stack[-1][1] if k == "str")
            if text.strip():
                spans.append(
                    TextSpan(page, x, page_height - y, 0.5 * font_size * len(text), text.strip())
                )
            x += 0.5 * font_size * len(text)
        stack.clear()
    spans.sort(key=lambda s: (s.y, s.x))
    return spans


def _tokenize_content(content: bytes):
    """Minimal content-stream tokenizer: numbers, strings, arrays, operators."""
    i, n = 0, len(content)
    arr: Optional[list] = None
    while i < n:
        c = content[i : i + 1]
        if c.isspace():
            i += 1
        elif c == b"(":
            text, i = _parse_string(content, i)
            if arr is not None:
                arr.append(("str", text))
            else:
                yield ("str", text)
        elif c == b"[":
            arr = []
            i += 1
        elif c == b"]":
            yield ("arr", arr or [])
            arr = None
            i += 1
        elif c == b"<":
            j = content.find(b">", i)
            i = (j + 1) if j >= 0 else n
        elif c == b"/":
            j = i + 1
            while j < n and not content[j : j + 1].isspace() and content[j : j + 1] not in b"[]()<>/":
                j += 1
            yield ("name", content[i:j].decode("latin-1"))
            i = j
        elif c in b"+-." or c.isdigit():
            j = i
            while j < n and content[j : j + 1] in b"+-.0123456789":
                j += 1
            tok = content[i:j]
            try:
                num = float(tok)
            except ValueError:
                num = 0.0
            if arr is not None:
                arr.append(("num", num))
            else:
                yield ("num", num)
            i = j
        else:
            j = i
            while j < n and not content[j : j + 1].isspace() and content[j : j + 1] not in b"[]()<>/":
                j += 1
            yield ("op", content[i:j].decode("latin-1"))
            i = j


def _parse_string(content: bytes, start: int) -> tuple[str, int]:
    out = bytearray()
    depth = 0
    i = start
    while i < len(content):
        c = content[i]
        if c == 0x5C and i + 1 < len(content):  # backslash
            nxt = content[i + 1]
            escapes = {0x6E: 10, 0x72: 13, 0x74: 9, 0x62: 8, 0x66: 12}
            if nxt in escapes:
                out.append(escapes[nxt])
                i += 2
            elif 0x30 <= nxt <= 0x37:
                j = i + 1
                octal = 0
                while j < len(content) and j - i <= 3 and 0x30 <= content[j] <= 0x37:
                    octal = octal * 8 + (content[j] - 0x30)
                    j += 1
                out.append(octal & 0xFF)
                i = j
            else:
                out.append(nxt)
                i += 2
        elif c == 0x28:  # (
            if depth:
                out.append(c)
            depth += 1
            i += 1
        elif c == 0x29:  # )
            depth -= 1
            if depth == 0:
                return out.decode("latin-1"), i + 1
            out.append(c)
            i += 1
        else:
            out.append(c)
            i += 1
    return out.decode("latin-1"), i


# ---------------------------------------------------------------------------
# Grid reconstruction
# ---------------------------------------------------------------------------


def default_tolerances(spans: list[TextSpan]) -> tuple[float, float]:
    """Median-based defaults: row_tol = 40% of the median y-gap between
    consecutive distinct y values, col_gap = 1.5x the median intra-row x-gap.
    Medians are robust to footnote clutter; both are overridable per document.
    """
    ys = sorted({s.y for s in spans})
    y_gaps = [b - a for a, b in zip(ys, ys[1:]) if b - a > 0]
    row_tol = 0.4 * statistics.median(y_gaps) if y_gaps else 1.0
    x_gaps = []
    for y in ys:
        row = sorted((s for s in spans if abs(s.y - y) <= row_tol), key=lambda s: s.x)
        for a, b in zip(row, row[1:]):
            gap = b.x - (a.x + a.width)
            if gap > 0:
                x_gaps.append(gap)
    col_gap = 1.5 * statistics.median(x_gaps) if x_gaps else 10.0
    return row_tol, col_gap


def _cluster_rows(spans: list[TextSpan], row_tol: float) -> list[list[TextSpan]]:
    ordered = sorted(spans, key=lambda s: (s.y, s.x))
    clusters: list[list[TextSpan]] = []
    for span in ordered:
        if clusters and span.y - clusters[-1][-1].y <= row_tol:
            clusters[-1].append(span)
        else:
            clusters.append([span])
    return clusters


def _merge_col_bands(
    clusters: list[list[TextSpan]], col_gap: float
) -> list[tuple[float, float]]:
    # Only multi-span rows define the column structure; full-width title and
    # ribbon spans would otherwise bridge every column gap.
    contributing = [s for cluster in clusters if len(cluster) >= 2 for s in cluster]
    intervals = sorted((s.x, s.x + s.width) for s in contributing)
    bands: list[list[float]] = []
    for lo, hi in intervals:
        if bands and lo - bands[-1][1] < col_gap:
            bands[-1][1] = max(bands[-1][1], hi)
        else:
            bands.append([lo, hi])
    return [(lo, hi) for lo, hi in bands]


def reconstruct_table(
    spans: list[TextSpan],
    row_tol: Optional[float] = None,
    col_gap: Optional[float] = None,
    syn: Optional[HeaderSynonymTable] = None,
) -> Optional[tuple[RawTable, GridModel]]:
    """Cluster one page's spans into a rectangular grid.

    Returns None (distinct from an error) when fewer than 2 rows or 2 columns
    emerge. A span straddling two column bands goes to the band containing its
    horizontal midpoint; spans colliding in one cell concatenate left-to-right.
    """
    if not spans:
        return None
    if {s.page for s in spans} != {spans[0].page}:
        raise ValueError("reconstruct_table expects spans from a single page")
    if row_tol is None or col_gap is None:
        d_row, d_col = default_tolerances(spans)
        row_tol = d_row if row_tol is None else row_tol
        col_gap = d_col if col_gap is None else col_gap
    if row_tol <= 0 or col_gap <= 0:
        raise ValueError("row_tol and col_gap must be positive")

    clusters = _cluster_rows(spans, row_tol)
    bands = _merge_col_bands(clusters, col_gap)
    if len(clusters) < 2 or len(bands) < 2:
        return None

    band_starts = [lo for lo, _ in bands]
    cells = []
    for cluster in clusters:
        row = [[] for _ in bands]
        for span in sorted(cluster, key=lambda s: s.x):
            idx = max(0, bisect_right(band_starts, span.mid_x) - 1)
            row[idx].append(span.text)
        cells.append([clean_cell(" ".join(parts)) for parts in row])

    table = RawTable(cells=cells)
    syn = syn or HeaderSynonymTable.load()
    for i, row in enumerate(cells):
        # page furniture (title, ribbon) may precede the real header row
        if detect_header_row(row, syn):
            table.header_row_index = i
            break
    grid = GridModel(
        row_bands=[(min(s.y for s in c), max(s.y for s in c)) for c in clusters],
        col_bands=bands,
    )
    return table, grid


# ---------------------------------------------------------------------------
# Pathology repair
# ---------------------------------------------------------------------------

_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?")


def _has_positive_real(cell: str) -> bool:
    return any(float(tok) > 0 for tok in _NUMBER_RE.findall(clean_cell(cell)))


def drop_class_title_rows(t: RawTable) -> RawTable:
    """Remove non-header rows with no positive real number in any cell, and
    full-width ribbon rows carrying a single non-empty cell."""
    kept = []
    header = t.header_row_index
    new_header = None
    for i, row in enumerate(t.cells):
        if i == header:
            new_header = len(kept)
            kept.append(list(row))
            continue
        non_empty = [c for c in row if c]
        if len(non_empty) == 1 and len(row) > 1:
            continue  # headline / ribbon row
        if not any(_has_positive_real(c) for c in row):
            continue  # class-title row: strings only
        kept.append(list(row))
    return RawTable(
        cells=kept,
        header_row_index=new_header,
        context_text=t.context_text,
        source_url=t.source_url,
        page_number=t.page_number,
    )


def _canonical_header_seq(t: RawTable, syn: HeaderSynonymTable) -> list[str]:
    seq = []
    for cell in t.header or []:
        mapped = map_header(cell, syn)
        seq.append(mapped if mapped is not None else clean_cell(cell).lower())
    return seq


def fold_repeated_columns(t: RawTable, syn: Optional[HeaderSynonymTable] = None) -> RawTable:
    """Stack side-by-side repeated column blocks top-to-bottom, block 1 first."""
    syn = syn or HeaderSynonymTable.load()
    if t.header_row_index is None:
        raise ValueError("fold_repeated_columns requires a header row")
    seq = _canonical_header_seq(t, syn)
    starts = [i for i, name in enumerate(seq) if name == seq[0]]
    if len(starts) < 2:
        return t
    widths = [b - a for a, b in zip(starts, starts[1:])] + [len(seq) - starts[-1]]
    if len(set(widths)) != 1:
        bad = next(i for i, w in enumerate(widths) if w != widths[0])
        raise StructuralError(
            f"repeated blocks have unequal widths {widths}; offending block {bad + 1}"
        )
    width = widths[0]
    first = seq[:width]
    for k, start in enumerate(starts[1:], start=2):
        if seq[start : start + width] != first:
            return t  # not a true repetition
    data = t.data_rows()
    new_cells = [list(t.header[:width])]
    for start in starts:
        for row in data:
            block = [row[start + j] for j in range(width)]
            if any(c for c in block):
                new_cells.append(block)
    return RawTable(
        cells=new_cells,
        header_row_index=0,
        context_text=t.context_text,
        source_url=t.source_url,
        page_number=t.page_number,
    )


# ---------------------------------------------------------------------------
# Completeness audit
# ---------------------------------------------------------------------------


def _term_pattern(term: str) -> re.Pattern:
    return re.compile(r"(?<!\w)" + re.escape(term).replace(r"\ ", r"\s+") + r"(?!\w)", re.IGNORECASE)


def audit_completeness(
    t: RawTable,
    page_spans: list[TextSpan],
    drug_lexicon: Iterable[str],
    table_id: str = "",
) -> list[ExtractionGap]:
    """Report lexicon names present in the page's span text but absent from
    every cell of the table. Gaps are reported, never auto-filled; repair is
    an explicit operator-confirmed CLI step.

    Only occurrences on lines that carry a positive real number count (a name
    in prose or a page title is not a suspected row), and an occurrence nested
    inside a longer matched name ("Penicillin" within "Penicillin G") is
    shadowed by the longer one.
    """
    terms = sorted(set(drug_lexicon), key=len, reverse=True)
    patterns = {term: _term_pattern(term) for term in terms}
    cell_text = "\n".join(c for row in t.cells for c in row if c)
    row_tol, _ = default_tolerances(page_spans) if page_spans else (1.0, 10.0)
    lines = [
        " ".join(s.text for s in sorted(cluster, key=lambda s: s.x))
        for cluster in _cluster_rows(page_spans, row_tol)
    ]

    gaps: list[ExtractionGap] = []
    for term in terms:
        pat = patterns[term]
        if pat.search(cell_text):
            continue
        found = False
        for line in lines:
            if not _has_positive_real(line):
                continue
            for m in pat.finditer(line):
                shadowed = any(
                    other != term
                    and len(other) > len(term)
                    and any(
                        om.start() <= m.start() and m.end() <= om.end()
                        for om in patterns[other].finditer(line)
                    )
                    for other in terms
                )
                if not shadowed:
                    found = True
                    break
            if found:
                break
        if found:
            gaps.append(ExtractionGap(table_id=table_id, missing_terms=[term]))
    gaps.sort(key=lambda g: g.missing_terms[0])
    return gaps
