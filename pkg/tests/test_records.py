"""Sensitivity parsing, tolerance handling, and record building."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from assayharvest import fieldmap, records
from assayharvest.errors import RangeOrderError, SensitivityParseError, UnitError
from assayharvest.records import (
    AssayRecord,
    ReferenceValue,
    SensitivityValue,
    ToleranceTable,
    annotate_tolerance,
    below_tolerance,
    parse_reference,
    parse_sensitivity,
)
from assayharvest.tables import RawTable

from conftest import FIXTURES


@pytest.mark.parametrize(
    "cell,hint,low,high,unit",
    [
        ("8.4 ppb", None, 8.4, 8.4, "ppb"),
        ("8.0 ppb", None, 8.0, 8.0, "ppb"),
        ("2.5 to 4", "ppb", 2.5, 4.0, "ppb"),
        ("5.9", "ppb", 5.9, 5.9, "ppb"),
        ("2 to 3 ^b", "ppb", 2.0, 3.0, "ppb"),
        ("75-100", "ppb", 75.0, 100.0, "ppb"),
        ("0.5 ppm", None, 0.5, 0.5, "ppm"),
        ("10 µg/kg", None, 10.0, 10.0, "ppb"),
        ("10 ug/kg", None, 10.0, 10.0, "ppb"),
    ],
)
def test_parse_sensitivity_forms(cell, hint, low, high, unit):
    v = parse_sensitivity(cell, hint)
    assert (v.low, v.high, v.unit) == (low, high, unit)


def test_parse_sensitivity_errors():
    with pytest.raises(RangeOrderError):
        parse_sensitivity("35 to 25", "ppb")
    with pytest.raises(SensitivityParseError):
        parse_sensitivity("n/a", "ppb")
    with pytest.raises(SensitivityParseError):
        parse_sensitivity("0", "ppb")
    with pytest.raises(SensitivityParseError):
        parse_sensitivity("5 mg/L")  # unrecognized unit token
    with pytest.raises(UnitError):
        parse_sensitivity("5")  # bare number with no unit anywhere


def test_ppm_normalizes_to_ppb():
    assert parse_sensitivity("0.5 ppm").in_ppb() == (500.0, 500.0)
    assert parse_sensitivity("1 ppm").same_value(parse_sensitivity("1000 ppb"))


def test_format_round_trips_scalar_and_range():
    assert parse_sensitivity("8.4 ppb").format() == "8.4 ppb"
    assert parse_sensitivity("8.0 ppb").format() == "8 ppb"
    assert parse_sensitivity("2.5 to 4", "ppb").format() == "2.5 to 4 ppb"


def test_parse_reference_none_vs_missing():
    assert parse_reference("") is None
    ref = parse_reference("None")
    assert ref.explicit_none and ref.format() == "None"
    assert parse_reference("10 ppb").value.in_ppb() == (10.0, 10.0)


def test_below_tolerance_scalar():
    rec = AssayRecord(
        drug="Amoxicillin",
        sensitivity=parse_sensitivity("8.4 ppb"),
        matrix="Milk",
        test="T",
        tolerance=parse_reference("10 ppb"),
        source_url="file:///x",
    )
    assert below_tolerance(rec) is True


def test_below_tolerance_range_uses_upper_bound():
    rec = AssayRecord(
        drug="Cloxacillin",
        sensitivity=parse_sensitivity("25 to 35", "ppb"),
        matrix="Milk",
        test="T",
        tolerance=parse_reference("30 ppb"),
        source_url="file:///x",
    )
    assert below_tolerance(rec) is False


def test_below_tolerance_absent_cases():
    rec = AssayRecord(
        drug="Dapsone",
        sensitivity=parse_sensitivity("1 to 2", "ppb"),
        matrix="Milk",
        test="T",
        source_url="file:///x",
    )
    assert below_tolerance(rec) is None
    rec.tolerance = ReferenceValue(explicit_none=True)
    assert below_tolerance(rec) is None


def test_tolerance_table_lookup_fallback(tmp_path):
    tol = ToleranceTable.load(FIXTURES / "tolerances.tsv")
    v, cite = tol.lookup("Amoxicillin", "Cattle", "Milk")
    assert v.in_ppb() == (10.0, 10.0)
    assert cite == "21 CFR 556.38"
    # species-free row reached via fallback
    assert tol.lookup("Tetracycline", "Cattle", "Milk")[0].in_ppb() == (300.0, 300.0)
    # matrix-free row reached via fallback
    assert tol.lookup("Tylosin", None, "Milk")[0].in_ppb() == (50.0, 50.0)
    assert tol.lookup("Unknownium", None, None) is None


def test_tolerance_table_duplicate_row_rejected(tmp_path):
    path = tmp_path / "tol.tsv"
    path.write_text(
        "A\tCattle\tMilk\t10\tppb\tc1\nA\tCattle\tMilk\t20\tppb\tc2\n",
        encoding="utf-8",
    )
    with pytest.raises(ValueError):
        ToleranceTable.load(path)


def test_annotate_tolerance_conflict_is_flagged():
    tol = ToleranceTable.load(FIXTURES / "tolerances.tsv")
    rec = AssayRecord(
        drug="Amoxicillin",
        sensitivity=parse_sensitivity("8.4 ppb"),
        matrix="Milk",
        test="T",
        species="Cattle",
        tolerance=parse_reference("20 ppb"),
        source_url="file:///x",
    )
    out = annotate_tolerance(rec, tol)
    assert out.tolerance.value.in_ppb() == (10.0, 10.0)
    assert out.tolerance.source == "curated"
    assert any(f.startswith("tolerance_conflict:") for f in out.flags)
    # agreeing values add no flag
    rec.tolerance = parse_reference("10 ppb")
    assert annotate_tolerance(rec, tol).flags == []


sens_strategy = st.builds(
    lambda lo, delta, unit: SensitivityValue(
        low=round(lo, 2), high=round(lo + delta, 2), unit=unit, raw="x"
    ),
    st.floats(min_value=0.1, max_value=900, allow_nan=False),
    st.sampled_from([0.0, 1.5, 25.0]),
    st.sampled_from(["ppb", "ppm"]),
)

name_strategy = st.text(
    alphabet="abcdefghij ,\"'", min_size=1, max_size=12
).filter(lambda s: s.strip())


@given(
    drug=name_strategy,
    matrix=name_strategy,
    test=name_strategy,
    sens=sens_strategy,
    type_=st.one_of(st.none(), st.just("Sequential")),
)
def test_csv_row_round_trip(drug, matrix, test, sens, type_):
    rec = AssayRecord(
        drug=drug,
        sensitivity=sens,
        matrix=matrix,
        test=test,
        type=type_,
        source_url="file:///x",
    )
    again = AssayRecord.from_csv_row(rec.to_csv_row())
    assert again.identity_key() == rec.identity_key()
    assert again.sensitivity.same_value(rec.sensitivity)
    assert again.to_csv_row() == rec.to_csv_row()


def test_build_records_skips_are_logged(syn, kw, drug_groups, test_groups, matrix_groups):
    t = RawTable(
        cells=[
            ["Drug", "Sensitivity (ppb)"],
            ["Amoxicillin", "8.4"],
            ["Ampicillin", "n/a"],
        ],
        header_row_index=0,
        source_url="file:///x",
    )
    schema = fieldmap.map_table_schema(t, syn)
    from assayharvest.tables import PageContext

    ctx = PageContext(title="", matrix_hits=["milk"], test_name="SNAP NBL", text="")
    skips = []
    recs = records.build_records(
        t, schema, ctx, drug_groups, test_groups, matrix_groups, kw, skip_log=skips
    )
    assert [r.drug for r in recs] == ["Amoxicillin"]
    assert len(skips) == 1
    assert skips[0][0][0] == "Ampicillin"


def test_species_defaulted_from_cow_milk_context(figure_records):
    fig6 = figure_records["fig6"]
    assert all(r.species == "Cattle" for r in fig6)
    assert all("species_defaulted" in r.flags for r in fig6)
    fig4 = figure_records["fig4"]
    assert all(r.species is None for r in fig4)
