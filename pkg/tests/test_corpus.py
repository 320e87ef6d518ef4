"""Content-addressed corpus store, link discovery, and document decoding."""

import hashlib

import pytest

from assayharvest import corpus
from assayharvest.errors import FetchError

from conftest import FIXTURES

SITE = FIXTURES / "site"


def site_index_doc():
    return corpus.document_from_path(SITE / "index.html", kind="html")


def test_source_ref_validation():
    corpus.SourceRef(url="https://example.com/a.pdf", kind="pdf")
    corpus.SourceRef(url="file:///tmp/a.html", kind="html")
    with pytest.raises(ValueError):
        corpus.SourceRef(url="relative/path.pdf", kind="pdf")
    with pytest.raises(ValueError):
        corpus.SourceRef(url="https://example.com/a", kind="docx")


def test_content_hash_is_sha256():
    data = b"assay data"
    assert corpus.content_hash(data) == hashlib.sha256(data).hexdigest()


def test_discover_pdf_links_filters_and_dedupes():
    refs = corpus.discover_pdf_links(site_index_doc(), "MRK", {2018, 2019})
    urls = [r.url for r in refs]
    assert len(urls) == 2
    assert urls[0].endswith("pdfs/2018/MRK-288.pdf")
    assert urls[1].endswith("pdfs/2019/mrk-003.pdf")
    assert all(r.kind == "pdf" for r in refs)
    assert refs[0].year_hint == 2018
    assert refs[1].year_hint == 2019


def test_discover_excludes_out_of_range_years():
    refs = corpus.discover_pdf_links(site_index_doc(), "MRK", {2016})
    assert [r.url for r in refs] == [
        (SITE / "pdfs/2016/MRK-210.pdf").resolve().as_uri()
    ]


def test_discover_pattern_is_case_insensitive_in_text_too():
    refs = corpus.discover_pdf_links(site_index_doc(), "leaflet", {2019})
    assert len(refs) == 1
    assert refs[0].url.endswith("mrk-003.pdf")


def test_store_fetch_is_idempotent(tmp_path):
    store = corpus.CorpusStore(tmp_path / "corpus")
    ref = corpus.SourceRef(
        url=(SITE / "pdfs/2018/MRK-288.pdf").resolve().as_uri(), kind="pdf"
    )
    doc1 = store.fetch(ref)
    doc2 = store.fetch(ref)
    assert doc1.content_hash == doc2.content_hash
    entries = store.manifest_entries()
    assert len(entries) == 1
    assert entries[0]["url"] == ref.url
    assert entries[0]["fetched_at"] == doc2.fetched_at.isoformat()
    blob = tmp_path / "corpus" / "blobs" / doc1.content_hash
    assert blob.read_bytes() == store.load(doc1.content_hash)


def test_store_records_changed_content_separately(tmp_path):
    src = tmp_path / "page.html"
    src.write_text("<html>v1</html>", encoding="utf-8")
    store = corpus.CorpusStore(tmp_path / "corpus")
    ref = corpus.SourceRef(url=src.resolve().as_uri(), kind="html")
    store.fetch(ref)
    src.write_text("<html>v2</html>", encoding="utf-8")
    store.fetch(ref)
    entries = store.manifest_entries()
    assert len(entries) == 2
    assert entries[0]["content_hash"] != entries[1]["content_hash"]


def test_fetch_missing_file_is_fetch_error(tmp_path):
    store = corpus.CorpusStore(tmp_path / "corpus")
    ref = corpus.SourceRef(url=(tmp_path / "nope.pdf").resolve().as_uri(), kind="pdf")
    with pytest.raises(FetchError):
        store.fetch(ref)


def test_parse_anchors_returns_href_and_text():
    anchors = corpus.parse_anchors(site_index_doc())
    assert ("pdfs/2018/manual.pdf", "Operator manual") in [
        (href, text.strip()) for href, text in anchors
    ]
