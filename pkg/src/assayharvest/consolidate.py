"""Merge extracted records into the persistent master dataset.

Update/insert rule: a record whose identity key (drug, test, matrix, type) is
absent is inserted; a present key with a different sensitivity is updated
(the old value goes to the history log); an equal sensitivity is unchanged.
Sensitivity equality is on normalized (low, high) values, so "8 ppb" versus
"8.0 ppb" is not a change. Deletions never happen automatically.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .errors import DatasetError
from .records import CSV_COLUMNS, AssayRecord

Key = tuple[str, str, str, str]


@dataclass
class MergeOutcome:
    key: Key
    action: str  # inserted | updated | unchanged
    old_sensitivity: Optional[str]
    new_sensitivity: Optional[str]
    source_url: str
    at: datetime

    def __post_init__(self) -> None:
        if self.action == "updated" and self.old_sensitivity == self.new_sensitivity:
            raise ValueError("updated outcome requires old != new")


@dataclass
class MasterDataset:
    records: dict[Key, AssayRecord] = field(default_factory=dict)
    history: list[MergeOutcome] = field(default_factory=list)


def merge(
    ds: MasterDataset, incoming: list[AssayRecord], now: Optional[datetime] = None
) -> tuple[MasterDataset, list[MergeOutcome]]:
    """Apply the update/insert rule per record. Later records for the same key
    within one batch supersede earlier ones (last writer wins, logged)."""
    now = now or datetime.now(timezone.utc).replace(microsecond=0)
    outcomes: list[MergeOutcome] = []
    for rec in incoming:
        key = rec.identity_key()
        existing = ds.records.get(key)
        if existing is None:
            action = "inserted"
            old = None
        elif existing.sensitivity.same_value(rec.sensitivity):
            action = "unchanged"
            old = existing.sensitivity.format()
        else:
            action = "updated"
            old = existing.sensitivity.format()
        if action != "unchanged":
            ds.records[key] = rec
        outcome = MergeOutcome(
            key=key,
            action=action,
            old_sensitivity=old,
            new_sensitivity=rec.sensitivity.format(),
            source_url=rec.source_url,
            at=now,
        )
        outcomes.append(outcome)
        if action != "unchanged":
            ds.history.append(outcome)
    return ds, outcomes


def export(ds: MasterDataset, path: Path | str, history_path: Path | str | None = None) -> None:
    """Canonical CSV sorted by identity key for stable diffs, plus an optional
    sidecar history log. UTF-8, comma-separated, double-quote escaping, LF."""
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for key in sorted(ds.records):
        writer.writerow(ds.records[key].to_csv_row())
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")
    if history_path is not None:
        lines = [
            "\t".join(
                [
                    o.at.isoformat(),
                    o.action,
                    *o.key,
                    o.old_sensitivity or "",
                    o.new_sensitivity or "",
                    o.source_url,
                ]
            )
            for o in ds.history
        ]
        Path(history_path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load(path: Path | str) -> MasterDataset:
    """Round-trips export exactly; duplicate identity keys or malformed rows
    are validation errors carrying the 1-based line number."""
    ds = MasterDataset()
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetError("empty dataset file", line=1)
    if header != list(CSV_COLUMNS):
        raise DatasetError(f"unexpected header {header!r}", line=1)
    for i, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_COLUMNS):
            raise DatasetError(f"expected {len(CSV_COLUMNS)} columns, got {len(row)}", line=i)
        try:
            rec = AssayRecord.from_csv_row(row)
        except Exception as exc:
            raise DatasetError(f"invalid record: {exc}", line=i) from exc
        key = rec.identity_key()
        if key in ds.records:
            raise DatasetError(f"duplicate identity key {key}", line=i)
        ds.records[key] = rec
    return ds
