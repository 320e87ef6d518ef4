"""Read-mostly HTTP/JSON query service over the consolidated dataset.

Many concurrent readers share an immutable snapshot; reload is the only
writer and swaps the snapshot atomically. A reload that fails validation is
rejected and the last good snapshot keeps serving (reported via /health).
"""

from __future__ import annotations

import csv
import io
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from . import canon
from .consolidate import load
from .records import CSV_COLUMNS, AssayRecord, below_tolerance

JSON_FIELDS = tuple(c.lower() for c in CSV_COLUMNS)  # url, not source_url


def record_to_row(rec: AssayRecord) -> dict:
    row = dict(zip(JSON_FIELDS, rec.to_csv_row()))
    row["below_tolerance"] = below_tolerance(rec)
    return row


@dataclass
class Snapshot:
    rows: list[dict]
    loaded_at: datetime
    path: str


class SnapshotHolder:
    def __init__(self, path: Path | str):
        self._lock = threading.Lock()
        self._snapshot: Optional[Snapshot] = None
        self.last_error: Optional[str] = None
        self.path = Path(path)
        self.reload(self.path)
        if self._snapshot is None:
            raise RuntimeError(f"initial dataset failed to load: {self.last_error}")

    @property
    def snapshot(self) -> Snapshot:
        return self._snapshot

    def reload(self, path: Path | str | None = None) -> bool:
        """Validate then swap. In-flight readers keep the old snapshot object."""
        path = Path(path) if path else self.path
        try:
            ds = load(path)
            rows = [record_to_row(r) for r in ds.records.values()]
            rows.sort(key=lambda r: (r["drug"], r["test"]))
        except Exception as exc:
            self.last_error = str(exc)
            return False
        snap = Snapshot(rows=rows, loaded_at=datetime.now(timezone.utc), path=str(path))
        with self._lock:
            self._snapshot = snap
            self.last_error = None
        return True


_SUBSTRING_FILTERS = ("drug", "matrix", "test", "species", "manufacturer")


def apply_filters(
    rows: list[dict],
    drug: Optional[str] = None,
    matrix: Optional[str] = None,
    test: Optional[str] = None,
    species: Optional[str] = None,
    manufacturer: Optional[str] = None,
    below_tolerance_only: bool = False,
) -> list[dict]:
    """Case-insensitive substring match on each supplied term."""
    terms = {
        "drug": drug, "matrix": matrix, "test": test,
        "species": species, "manufacturer": manufacturer,
    }
    out = []
    for row in rows:
        if any(t and t.lower() not in row[f].lower() for f, t in terms.items()):
            continue
        if below_tolerance_only and row["below_tolerance"] is not True:
            continue
        out.append(row)
    return out


def create_app(master_path: Path | str, static_dir: Path | str | None = None) -> FastAPI:
    holder = SnapshotHolder(master_path)
    app = FastAPI(title="assayharvest query service")
    app.state.holder = holder

    @app.exception_handler(RequestValidationError)
    async def _bad_query(request: Request, exc: RequestValidationError):
        fields = [str(e["loc"][-1]) for e in exc.errors()]
        return JSONResponse(status_code=400, content={"error": "invalid query parameter", "fields": fields})

    def _query(
        drug: Optional[str] = None,
        matrix: Optional[str] = None,
        test: Optional[str] = None,
        species: Optional[str] = None,
        manufacturer: Optional[str] = None,
        below_tolerance_only: bool = False,
        limit: int = Query(default=100, ge=0),
        offset: int = Query(default=0, ge=0),
    ):
        snap = holder.snapshot
        matched = apply_filters(
            snap.rows, drug, matrix, test, species, manufacturer, below_tolerance_only
        )
        page = matched[offset : offset + limit] if limit else matched[offset:]
        applied = {
            "drug": drug, "matrix": matrix, "test": test, "species": species,
            "manufacturer": manufacturer, "below_tolerance_only": below_tolerance_only,
        }
        return matched, page, applied

    @app.get("/records")
    def records(
        drug: Optional[str] = None,
        matrix: Optional[str] = None,
        test: Optional[str] = None,
        species: Optional[str] = None,
        manufacturer: Optional[str] = None,
        below_tolerance_only: bool = False,
        limit: int = Query(default=100, ge=0),
        offset: int = Query(default=0, ge=0),
    ):
        matched, page, applied = _query(
            drug, matrix, test, species, manufacturer, below_tolerance_only, limit, offset
        )
        return {"rows": page, "total": len(matched), "applied_filters": applied}

    @app.get("/records.csv")
    def records_csv(
        drug: Optional[str] = None,
        matrix: Optional[str] = None,
        test: Optional[str] = None,
        species: Optional[str] = None,
        manufacturer: Optional[str] = None,
        below_tolerance_only: bool = False,
        limit: int = Query(default=100, ge=0),
        offset: int = Query(default=0, ge=0),
    ):
        _, page, _ = _query(
            drug, matrix, test, species, manufacturer, below_tolerance_only, limit, offset
        )
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in page:
            writer.writerow([row[f] for f in JSON_FIELDS])
        return PlainTextResponse(buf.getvalue(), media_type="text/csv")

    @app.get("/dictionaries")
    def dictionaries():
        return {
            "drugs": [g.canonical for g in canon.load_groups("drug")],
            "tests": [g.canonical for g in canon.load_groups("test")],
            "matrices": [g.canonical for g in canon.load_groups("matrix")],
        }

    @app.get("/health")
    def health():
        snap = holder.snapshot
        status = "ok" if holder.last_error is None else "stale-with-error"
        return {
            "status": status,
            "loaded_at": snap.loaded_at.isoformat(),
            "record_count": len(snap.rows),
            "last_error": holder.last_error,
        }

    @app.post("/reload")
    def reload(path: Optional[str] = None):
        ok = holder.reload(path)
        if not ok:
            return JSONResponse(
                status_code=400,
                content={"reloaded": False, "error": holder.last_error},
            )
        return {"reloaded": True, "record_count": len(holder.snapshot.rows)}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
