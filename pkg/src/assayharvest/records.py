"""Canonical assay records: sensitivity parsing, record building, tolerance annotation.

The canonical CSV column order is fixed for golden-file stability:
Drug, Sensitivity, Matrix, Test, Type, Tolerance, MRL, Species, Manufacturer, URL.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from . import canon
from .errors import RangeOrderError, SensitivityParseError, UnitError
from .fieldmap import KeywordDictionary, TableSchema, keyword_scan
from .tables import PageContext, RawTable, clean_cell

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "Drug", "Sensitivity", "Matrix", "Test", "Type",
    "Tolerance", "MRL", "Species", "Manufacturer", "URL",
)

PPM_TO_PPB = 1000.0

_UNIT_ALIASES = {"ppb": "ppb", "ppm": "ppm", "µg/kg": "ppb", "ug/kg": "ppb"}
_UNIT_RE = r"(?:ppb|ppm|µg/kg|ug/kg)"
_NUM = r"\d+(?:\.\d+)?"
_SCALAR_RE = re.compile(rf"^({_NUM})\s*({_UNIT_RE})?$", re.IGNORECASE)
_RANGE_RE = re.compile(rf"^({_NUM})\s*(?:to|-|–)\s*({_NUM})\s*({_UNIT_RE})?$", re.IGNORECASE)


@dataclass(frozen=True)
class SensitivityValue:
    low: float
    high: float
    unit: str  # ppb | ppm
    raw: str = ""

    def __post_init__(self) -> None:
        if not (0 < self.low <= self.high):
            raise ValueError(f"require 0 < low <= high, got {self.low}..{self.high}")
        if self.unit not in ("ppb", "ppm"):
            raise ValueError(f"unit must be ppb or ppm: {self.unit!r}")

    @property
    def is_scalar(self) -> bool:
        return self.low == self.high

    def in_ppb(self) -> tuple[float, float]:
        factor = PPM_TO_PPB if self.unit == "ppm" else 1.0
        return self.low * factor, self.high * factor

    def format(self) -> str:
        if self.is_scalar:
            return f"{_fmt_num(self.low)} {self.unit}"
        return f"{_fmt_num(self.low)} to {_fmt_num(self.high)} {self.unit}"

    def same_value(self, other: "SensitivityValue") -> bool:
        """Equality on normalized (low, high), not on raw strings or units."""
        return self.in_ppb() == other.in_ppb()


def _fmt_num(v: float) -> str:
    return f"{v:g}"


def parse_sensitivity(cell: str, column_unit_hint: Optional[str] = None) -> SensitivityValue:
    """Parse "v", "v unit", "a to b", or "a to b unit" with footnote
    superscripts stripped. The unit comes from the cell, else from the column
    heading hint; missing everywhere is a unit-resolution error."""
    raw = cell
    text = clean_cell(cell)
    if not text:
        raise SensitivityParseError("empty cell", raw)
    m = _RANGE_RE.match(text)
    if m:
        low, high, unit_tok = float(m.group(1)), float(m.group(2)), m.group(3)
        if low > high:
            raise RangeOrderError(f"range out of order: {raw!r}")
    else:
        m = _SCALAR_RE.match(text)
        if not m:
            raise SensitivityParseError("no parseable number", raw)
        low = high = float(m.group(1))
        unit_tok = m.group(2)
    unit = _UNIT_ALIASES.get(unit_tok.lower()) if unit_tok else None
    if unit is None:
        unit = _UNIT_ALIASES.get(column_unit_hint.lower()) if column_unit_hint else None
    if unit is None:
        raise UnitError(f"no unit in cell or column heading: {raw!r}")
    if low <= 0:
        raise SensitivityParseError("value must be positive", raw)
    return SensitivityValue(low=low, high=high, unit=unit, raw=raw)


@dataclass(frozen=True)
class ReferenceValue:
    """A tolerance (US) or MRL-like reference. ``explicit_none`` marks a
    source that states there is no tolerance, distinct from missing data."""

    value: Optional[SensitivityValue] = None
    explicit_none: bool = False
    source: str = "table"  # table | curated

    def format(self) -> str:
        if self.explicit_none:
            return "None"
        return self.value.format() if self.value else ""


def parse_reference(cell: str, column_unit_hint: Optional[str] = None) -> Optional[ReferenceValue]:
    text = clean_cell(cell)
    if not text:
        return None
    if text.lower() == "none":
        return ReferenceValue(explicit_none=True)
    try:
        return ReferenceValue(value=parse_sensitivity(text, column_unit_hint))
    except (SensitivityParseError, UnitError, RangeOrderError):
        return None


@dataclass
class AssayRecord:
    drug: str
    sensitivity: SensitivityValue
    matrix: str
    test: str
    type: Optional[str] = None
    tolerance: Optional[ReferenceValue] = None
    mrl: Optional[str] = None
    species: Optional[str] = None
    manufacturer: Optional[str] = None
    source_url: str = ""
    flags: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        for name in ("drug", "matrix", "test", "source_url"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")

    def identity_key(self) -> tuple[str, str, str, str]:
        return (self.drug, self.test, self.matrix, self.type or "")

    def to_csv_row(self) -> list[str]:
        return [
            self.drug,
            self.sensitivity.format(),
            self.matrix,
            self.test,
            self.type or "",
            self.tolerance.format() if self.tolerance else "",
            self.mrl or "",
            self.species or "",
            self.manufacturer or "",
            self.source_url,
        ]

    @classmethod
    def from_csv_row(cls, row: list[str]) -> "AssayRecord":
        drug, sens, matrix, test, type_, tol, mrl, species, manuf, url = row
        return cls(
            drug=drug,
            sensitivity=parse_sensitivity(sens),
            matrix=matrix,
            test=test,
            type=type_ or None,
            tolerance=parse_reference(tol),
            mrl=mrl or None,
            species=species or None,
            manufacturer=manuf or None,
            source_url=url,
        )


# ---------------------------------------------------------------------------
# Tolerance reference table (curated eCFR input file)
# ---------------------------------------------------------------------------


@dataclass
class ToleranceTable:
    """Curated (drug, species, matrix) -> tolerance rows; at most one row per triple."""

    rows: dict[tuple[str, str, str], tuple[SensitivityValue, str]] = field(default_factory=dict)

    @classmethod
    def load(cls, path: Path | str) -> "ToleranceTable":
        table = cls()
        for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            if i == 1 and line.lower().startswith("drug\t"):
                continue
            drug, species, matrix, value, unit, citation = line.split("\t")
            key = (drug.lower(), species.lower(), matrix.lower())
            if key in table.rows:
                raise ValueError(f"duplicate tolerance row at line {i}: {key}")
            table.rows[key] = (parse_sensitivity(f"{value} {unit}"), citation)
        return table

    def lookup(
        self, drug: str, species: Optional[str], matrix: Optional[str]
    ) -> Optional[tuple[SensitivityValue, str]]:
        candidates = [
            (drug, species or "", matrix or ""),
            (drug, species or "", ""),
            (drug, "", matrix or ""),
            (drug, "", ""),
        ]
        for key in candidates:
            hit = self.rows.get(tuple(part.lower() for part in key))
            if hit:
                return hit
        return None


def annotate_tolerance(r: AssayRecord, tol: ToleranceTable) -> AssayRecord:
    """Fill the tolerance from the curated table; cross-check against a
    table-sourced tolerance column. A mismatch is flagged (table value kept in
    the flag), never silently overwritten."""
    hit = tol.lookup(r.drug, r.species, r.matrix)
    if hit is None:
        return r
    curated, _citation = hit
    flags = list(r.flags)
    if r.tolerance and r.tolerance.value and not r.tolerance.value.same_value(curated):
        flags.append(f"tolerance_conflict:table={r.tolerance.value.format()},curated={curated.format()}")
    return replace(r, tolerance=ReferenceValue(value=curated, source="curated"), flags=flags)


def below_tolerance(r: AssayRecord) -> Optional[bool]:
    """True iff the sensitivity's upper bound is at or below the tolerance
    after unit normalization (ppm = 1000 ppb). Absent without a tolerance."""
    if r.tolerance is None or r.tolerance.explicit_none or r.tolerance.value is None:
        return None
    _, sens_high = r.sensitivity.in_ppb()
    tol_low, tol_high = r.tolerance.value.in_ppb()
    if tol_low != tol_high:
        raise UnitError(f"tolerance is a range, cannot compare: {r.tolerance.value.raw!r}")
    return sens_high <= tol_low


# ---------------------------------------------------------------------------
# Record building
# ---------------------------------------------------------------------------


def context_from_spans(page_spans, kw: KeywordDictionary, test_groups) -> PageContext:
    """Document-level test/matrix for PDFs, recovered from page prose."""
    text = " ".join(s.text for s in page_spans)
    hits = list(dict.fromkeys(word for word, _ in keyword_scan(text, kw, "matrix")))
    test_name = canon.find_test_name(text, test_groups) or ""
    return PageContext(title="", matrix_hits=hits, test_name=test_name, text=text)


def _column_unit_hint(header_cell: str, kw: KeywordDictionary) -> Optional[str]:
    hits = keyword_scan(header_cell, kw, "unit")
    if hits:
        return hits[0][0]
    if re.search(r"(?<!\w)(?:µg|ug)\s*/\s*kg(?!\w)", header_cell, re.IGNORECASE):
        return "µg/kg"
    return None


def build_records(
    t: RawTable,
    schema: TableSchema,
    ctx: PageContext,
    drug_groups: list[canon.SynonymGroup],
    test_groups: list[canon.SynonymGroup],
    matrix_groups: list[canon.SynonymGroup],
    kw: Optional[KeywordDictionary] = None,
    skip_log: Optional[list] = None,
) -> list[AssayRecord]:
    """One record per data row. Test/Matrix/Type come from columns when
    mapped, else from document-level context. Rows whose sensitivity fails to
    parse are skipped with a logged reason, never fabricated."""
    if not schema.relevant:
        raise ValueError("schema is not relevant (missing Drug or Sensitivity column)")
    kw = kw or KeywordDictionary.load()
    cols = {name: idx for idx, name in schema.columns.items()}
    header = t.header or []
    sens_hint = _column_unit_hint(header[cols["Sensitivity"]], kw) if header else None
    tol_hint = _column_unit_hint(header[cols["Tolerance"]], kw) if header and "Tolerance" in cols else None

    def skip(row, reason):
        log.info("skipping row %r: %s", row, reason)
        if skip_log is not None:
            skip_log.append((row, reason))

    records: list[AssayRecord] = []
    for row in t.data_rows():
        drug_cell = clean_cell(row[cols["Drug"]])
        if not drug_cell:
            skip(row, "empty drug cell")
            continue
        drug_name, qualifier = canon.split_method_qualifier(drug_cell)
        drug, _ = canon.canonicalize(drug_name, drug_groups)

        try:
            sensitivity = parse_sensitivity(row[cols["Sensitivity"]], sens_hint)
        except (SensitivityParseError, UnitError, RangeOrderError) as exc:
            skip(row, f"sensitivity: {exc}")
            continue

        if "Test" in cols and clean_cell(row[cols["Test"]]):
            raw_test = clean_cell(row[cols["Test"]])
        else:
            raw_test = ctx.test_name
        if not raw_test:
            skip(row, "no test name in column or context")
            continue
        raw_test, test_qualifier = canon.split_method_qualifier(raw_test)
        test, _ = canon.canonicalize(raw_test, test_groups)
        qualifier = qualifier or test_qualifier

        if "Matrix" in cols and clean_cell(row[cols["Matrix"]]):
            raw_matrix = clean_cell(row[cols["Matrix"]])
        elif ctx.matrix_hits:
            raw_matrix = ctx.matrix_hits[0]
        else:
            skip(row, "no matrix in column or context")
            continue
        matrix, _ = canon.canonicalize(raw_matrix, matrix_groups)

        tolerance = parse_reference(row[cols["Tolerance"]], tol_hint) if "Tolerance" in cols else None
        mrl = clean_cell(row[cols["MRL"]]) or None if "MRL" in cols else None

        species = None
        flags: list[str] = []
        context_blob = f"{ctx.title} {ctx.text}".lower()
        if "cow milk" in context_blob or "cow's milk" in context_blob:
            species = "Cattle"
            flags.append("species_defaulted")

        records.append(
            AssayRecord(
                drug=drug,
                sensitivity=sensitivity,
                matrix=matrix,
                test=test,
                type=qualifier,
                tolerance=tolerance,
                mrl=mrl,
                species=species,
                source_url=t.source_url or "unknown",
                flags=flags,
            )
        )
    return records
