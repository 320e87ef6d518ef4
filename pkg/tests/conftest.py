"""Shared fixtures: dictionaries, figure span fixtures, pipeline helpers."""

from pathlib import Path

import pytest

from assayharvest import canon, fieldmap, pdftab, records

FIXTURES = Path(__file__).parent / "fixtures"

# fixture geometry: one span per cell, columns far apart relative to these
ROW_TOL = 6
COL_GAP = 15


@pytest.fixture(scope="session")
def syn():
    return fieldmap.HeaderSynonymTable.load()


@pytest.fixture(scope="session")
def kw():
    return fieldmap.KeywordDictionary.load()


@pytest.fixture(scope="session")
def drug_groups():
    return canon.load_groups("drug")


@pytest.fixture(scope="session")
def test_groups():
    return canon.load_groups("test")


@pytest.fixture(scope="session")
def matrix_groups():
    return canon.load_groups("matrix")


@pytest.fixture(scope="session")
def drug_lexicon(drug_groups):
    return [v for g in drug_groups for v in g.variants]


def run_pdf_pipeline(spans, syn, kw, drug_groups, test_groups, matrix_groups, url):
    """Reconstruct, clean, fold, and build records from one page of spans."""
    result = pdftab.reconstruct_table(spans, row_tol=ROW_TOL, col_gap=COL_GAP, syn=syn)
    assert result is not None
    table, _grid = result
    table.source_url = url
    table = pdftab.drop_class_title_rows(table)
    table = pdftab.fold_repeated_columns(table, syn)
    schema = fieldmap.map_table_schema(table, syn)
    assert schema.relevant
    ctx = records.context_from_spans(spans, kw, test_groups)
    return table, records.build_records(
        table, schema, ctx, drug_groups, test_groups, matrix_groups, kw
    )


@pytest.fixture(scope="session")
def figure_records(syn, kw, drug_groups, test_groups, matrix_groups):
    """All records extracted from the four span fixtures, keyed by fixture name."""
    out = {}
    for name in ("fig4", "fig5", "fig6", "fig7"):
        spans = pdftab.read_span_file(FIXTURES / f"{name}_spans.tsv")
        _, recs = run_pdf_pipeline(
            spans, syn, kw, drug_groups, test_groups, matrix_groups,
            f"file:///corpus/{name}.pdf",
        )
        out[name] = recs
    return out
