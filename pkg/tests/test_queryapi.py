"""HTTP query service: filtering, pagination, CSV export, atomic reload."""

import csv
import io
import random

import pytest
from fastapi.testclient import TestClient

from assayharvest import consolidate, queryapi
from assayharvest.records import ToleranceTable, annotate_tolerance

from conftest import FIXTURES


@pytest.fixture(scope="module")
def master_path(tmp_path_factory, figure_records):
    tol = ToleranceTable.load(FIXTURES / "tolerances.tsv")
    ds = consolidate.MasterDataset()
    for recs in figure_records.values():
        annotated = [annotate_tolerance(r, tol) for r in recs]
        ds, _ = consolidate.merge(ds, annotated)
    path = tmp_path_factory.mktemp("master") / "master.csv"
    consolidate.export(ds, path)
    return path


@pytest.fixture(scope="module")
def client(master_path):
    app = queryapi.create_app(master_path)
    with TestClient(app) as c:
        yield c


def test_records_default_page(client):
    body = client.get("/records").json()
    assert body["total"] == 62
    assert len(body["rows"]) == 62  # default limit is 100
    drugs = [(r["drug"], r["test"]) for r in body["rows"]]
    assert drugs == sorted(drugs)


def test_filter_is_case_insensitive_substring(client):
    body = client.get("/records", params={"drug": "amoxi", "matrix": "MILK"}).json()
    assert body["total"] == 4
    assert {r["test"] for r in body["rows"]} == {
        "Charm 3 SL3 Beta-Lactam",
        "Charm Flunixin and Beta-Lactam",
        "Charm MRL Beta-Lactam",
        "Charm Cowside II",
    }
    assert body["applied_filters"]["drug"] == "amoxi"


def test_below_tolerance_only(client):
    body = client.get(
        "/records", params={"drug": "Amoxicillin", "below_tolerance_only": "true"}
    ).json()
    assert body["total"] == 4
    assert all(r["below_tolerance"] is True for r in body["rows"])
    # Cloxacillin 25 to 35 vs 30 ppb tolerance must drop out
    body = client.get(
        "/records", params={"drug": "Cloxacillin", "below_tolerance_only": "true"}
    ).json()
    sens = {r["sensitivity"] for r in body["rows"]}
    assert "25 to 35 ppb" not in sens


def test_pagination(client):
    page1 = client.get("/records", params={"limit": 10, "offset": 0}).json()
    page2 = client.get("/records", params={"limit": 10, "offset": 10}).json()
    assert page1["total"] == page2["total"] == 62
    assert len(page1["rows"]) == len(page2["rows"]) == 10
    assert page1["rows"][-1] != page2["rows"][0]


def test_invalid_params_are_400(client):
    resp = client.get("/records", params={"limit": -1})
    assert resp.status_code == 400
    assert "limit" in resp.json()["fields"]
    resp = client.get("/records", params={"offset": "abc"})
    assert resp.status_code == 400
    assert "offset" in resp.json()["fields"]


def test_records_csv_matches_canonical_format(client):
    resp = client.get("/records.csv", params={"drug": "Amoxicillin", "limit": 0})
    assert resp.status_code == 200
    rows = list(csv.reader(io.StringIO(resp.text)))
    assert rows[0] == list(queryapi.CSV_COLUMNS)
    assert len(rows) == 5
    assert all(r[0] == "Amoxicillin" for r in rows[1:])


def test_dictionaries_endpoint(client):
    body = client.get("/dictionaries").json()
    assert "Amoxicillin" in body["drugs"]
    assert "Charm 3 SL3 Beta-Lactam" in body["tests"]
    assert "Milk" in body["matrices"]


def test_health_ok(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["record_count"] == 62
    assert body["last_error"] is None


def brute_force(rows, **terms):
    out = []
    below_only = terms.pop("below_tolerance_only", False)
    for row in rows:
        if any(v.lower() not in row[k].lower() for k, v in terms.items() if v):
            continue
        if below_only and row["below_tolerance"] is not True:
            continue
        out.append(row)
    return out


def test_randomized_filters_sound_and_complete(client):
    all_rows = client.get("/records", params={"limit": 0}).json()["rows"]
    rng = random.Random(42)
    fields = ["drug", "matrix", "test", "species"]
    fragments = ["a", "mi", "charm", "cill", "milk", "II", "zzz", "tetra", "G"]
    for _ in range(200):
        terms = {
            f: rng.choice(fragments)
            for f in rng.sample(fields, rng.randint(0, 3))
        }
        below = rng.random() < 0.3
        params = dict(terms, limit=0)
        if below:
            params["below_tolerance_only"] = "true"
        got = client.get("/records", params=params).json()["rows"]
        expected = brute_force(all_rows, below_tolerance_only=below, **terms)
        assert got == expected, params


def test_reload_atomicity(master_path, client):
    original = master_path.read_bytes()
    try:
        master_path.write_bytes(b"Drug,Broken\ngarbage\n")
        resp = client.post("/reload")
        assert resp.status_code == 400
        assert resp.json()["reloaded"] is False
        # old snapshot still serves in full
        assert client.get("/records").json()["total"] == 62
        health = client.get("/health").json()
        assert health["status"] == "stale-with-error"
        assert health["last_error"]
    finally:
        master_path.write_bytes(original)
    resp = client.post("/reload")
    assert resp.status_code == 200
    assert resp.json() == {"reloaded": True, "record_count": 62}
    assert client.get("/health").json()["status"] == "ok"


def test_reload_picks_up_new_records(master_path, client, figure_records):
    original = master_path.read_bytes()
    try:
        ds = consolidate.load(master_path)
        extra = list(figure_records["fig4"])[0]
        ds.records.pop(extra.identity_key())
        consolidate.export(ds, master_path)
        assert client.post("/reload").json()["record_count"] == 61
    finally:
        master_path.write_bytes(original)
        client.post("/reload")


def test_static_ui_mount(tmp_path, master_path):
    static = tmp_path / "dist"
    static.mkdir()
    (static / "index.html").write_text("<html><body>search ui</body></html>", encoding="utf-8")
    app = queryapi.create_app(master_path, static_dir=static)
    with TestClient(app) as c:
        resp = c.get("/ui/")
        assert resp.status_code == 200
        assert "search ui" in resp.text
