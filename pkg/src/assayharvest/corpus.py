"""Document acquisition: PDF link discovery and a content-addressed corpus store.

The store keeps blobs under ``<dir>/blobs/<sha256>`` plus an append-only
manifest (one tab-separated record per line: url, kind, content_hash,
fetched_at RFC 3339 UTC, title). Re-fetching an already-manifested URL with
unchanged bytes is a no-op, so repeated runs over a fixture tree leave the
store byte-identical.
"""

from __future__ import annotations

import hashlib
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from html.parser import HTMLParser
from pathlib import Path
from typing import Optional
from urllib.parse import urljoin, urlparse, unquote

import requests

from .errors import FetchError, MalformedHtmlError

_YEAR_RE = re.compile(r"(?<!\d)(19|20)\d{2}(?!\d)")


@dataclass(frozen=True)
class SourceRef:
    url: str
    kind: str  # html | pdf
    title: str = ""
    year_hint: Optional[int] = None

    def __post_init__(self) -> None:
        parsed = urlparse(self.url)
        if not parsed.scheme or not (parsed.netloc or parsed.scheme == "file"):
            raise ValueError(f"url must be absolute: {self.url!r}")
        if self.kind not in ("html", "pdf"):
            raise ValueError(f"kind must be html or pdf: {self.kind!r}")


@dataclass(frozen=True)
class SourceDocument:
    ref: SourceRef
    bytes: bytes
    fetched_at: datetime
    content_hash: str

    @property
    def kind(self) -> str:
        return self.ref.kind


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class _AnchorCollector(HTMLParser):
    def __init__(self) -> None:
        super().__init__()
        self.anchors: list[tuple[str, str]] = []  # (href, text)
        self._open_href: Optional[str] = None
        self._text_parts: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag == "a":
            href = dict(attrs).get("href")
            if href:
                self._open_href = href
                self._text_parts = []

    def handle_endtag(self, tag):
        if tag == "a" and self._open_href is not None:
            self.anchors.append((self._open_href, " ".join(self._text_parts).strip()))
            self._open_href = None

    def handle_data(self, data):
        if self._open_href is not None and data.strip():
            self._text_parts.append(data.strip())


def _decode_html(doc: SourceDocument) -> str:
    data = doc.bytes
    m = re.search(rb'charset=["\']?([A-Za-z0-9_-]+)', data[:2048])
    encoding = m.group(1).decode("ascii") if m else "utf-8"
    try:
        return data.decode(encoding, errors="strict")
    except (UnicodeDecodeError, LookupError) as exc:
        offset = getattr(exc, "start", 0)
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc2:
            raise MalformedHtmlError("undecodable HTML bytes", exc2.start) from exc


def parse_anchors(doc: SourceDocument) -> list[tuple[str, str]]:
    """(href, link text) pairs in document order."""
    text = _decode_html(doc)
    collector = _AnchorCollector()
    try:
        collector.feed(text)
        collector.close()
    except Exception as exc:  # html.parser raises only on grossly broken input
        line, col = collector.getpos()
        offset = sum(len(ln) + 1 for ln in text.splitlines()[: line - 1]) + col
        raise MalformedHtmlError(str(exc), offset) from exc
    return collector.anchors


def discover_pdf_links(
    page: SourceDocument, title_pattern: str, years: set[int]
) -> list[SourceRef]:
    """Anchors ending in .pdf whose text or filename contains the pattern
    (case-insensitive) and whose path or context carries a requested year.

    Document order, deduplicated by URL. Zero matches is an empty list.
    """
    if not title_pattern:
        raise ValueError("title_pattern must be non-empty")
    if not years:
        raise ValueError("years must be non-empty")
    needle = title_pattern.lower()
    year_strs = {str(y) for y in years}
    refs: list[SourceRef] = []
    seen: set[str] = set()
    for href, text in parse_anchors(page):
        url = urljoin(page.ref.url, href)
        path = urlparse(url).path
        if not path.lower().endswith(".pdf"):
            continue
        filename = unquote(path.rsplit("/", 1)[-1])
        if needle not in filename.lower() and needle not in text.lower():
            continue
        segments = set(path.split("/"))
        context_years = {m.group(0) for m in _YEAR_RE.finditer(f"{url} {text}")}
        matched_years = (segments | context_years) & year_strs
        if not matched_years:
            continue
        if url in seen:
            continue
        seen.add(url)
        refs.append(
            SourceRef(
                url=url,
                kind="pdf",
                title=text or filename,
                year_hint=int(min(matched_years)),
            )
        )
    return refs


class CorpusStore:
    """Content-addressed blob store with a serialized manifest writer."""

    MANIFEST = "manifest.tsv"

    def __init__(self, directory: Path | str):
        self.dir = Path(directory)
        self.blob_dir = self.dir / "blobs"
        self.blob_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _manifest_path(self) -> Path:
        return self.dir / self.MANIFEST

    def manifest_entries(self) -> list[dict]:
        path = self._manifest_path()
        if not path.exists():
            return []
        entries = []
        for line in path.read_text(encoding="utf-8").splitlines():
            url, kind, digest, fetched_at, title = line.split("\t")
            entries.append(
                dict(url=url, kind=kind, content_hash=digest, fetched_at=fetched_at, title=title)
            )
        return entries

    def load(self, digest: str) -> bytes:
        return (self.blob_dir / digest).read_bytes()

    def fetch(self, ref: SourceRef, session: Optional[requests.Session] = None) -> SourceDocument:
        """Retrieve, hash and persist a document. Idempotent per (url, bytes)."""
        data = _transport_get(ref.url, session)
        digest = content_hash(data)
        for entry in self.manifest_entries():
            if entry["url"] == ref.url and entry["content_hash"] == digest:
                return SourceDocument(
                    ref=ref,
                    bytes=data,
                    fetched_at=datetime.fromisoformat(entry["fetched_at"]),
                    content_hash=digest,
                )
        fetched_at = datetime.now(timezone.utc).replace(microsecond=0)
        blob = self.blob_dir / digest
        if not blob.exists():
            blob.write_bytes(data)
        with self._lock:
            line = "\t".join(
                [ref.url, ref.kind, digest, fetched_at.isoformat(), ref.title.replace("\t", " ")]
            )
            with self._manifest_path().open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        return SourceDocument(ref=ref, bytes=data, fetched_at=fetched_at, content_hash=digest)


def _transport_get(url: str, session: Optional[requests.Session]) -> bytes:
    parsed = urlparse(url)
    if parsed.scheme == "file":
        path = Path(unquote(parsed.path))
        if not path.exists():
            raise FetchError(f"no such file: {path}", retryable=False)
        return path.read_bytes()
    try:
        resp = (session or requests).get(url, timeout=30)
    except requests.RequestException as exc:
        raise FetchError(f"unreachable: {url} ({exc})", retryable=True) from exc
    if resp.status_code != 200 and not (200 < resp.status_code < 300):
        raise FetchError(
            f"HTTP {resp.status_code} for {url}", retryable=resp.status_code >= 500,
            status=resp.status_code,
        )
    return resp.content


def document_from_path(path: Path | str, kind: str, url: Optional[str] = None) -> SourceDocument:
    """Wrap a local file as a SourceDocument without going through a store."""
    path = Path(path)
    data = path.read_bytes()
    ref = SourceRef(url=url or path.resolve().as_uri(), kind=kind, title=path.name)
    return SourceDocument(
        ref=ref,
        bytes=data,
        fetched_at=datetime.now(timezone.utc).replace(microsecond=0),
        content_hash=content_hash(data),
    )


def document_from_bytes(data: bytes, kind: str, url: str, title: str = "") -> SourceDocument:
    ref = SourceRef(url=url, kind=kind, title=title)
    return SourceDocument(
        ref=ref,
        bytes=data,
        fetched_at=datetime.now(timezone.utc).replace(microsecond=0),
        content_hash=content_hash(data),
    )
