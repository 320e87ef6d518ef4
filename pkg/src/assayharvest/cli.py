"""``harvest`` command line interface.

Subcommands mirror the pipeline stages: crawl (discover + fetch), extract-html,
extract-pdf, dict lint, merge, repair, serve.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from . import canon, consolidate, fieldmap, htmltab, pdftab, records
from .corpus import CorpusStore, SourceRef, discover_pdf_links, document_from_bytes
from .errors import HarvestError, NoTextLayerError

log = logging.getLogger("harvest")


def _root_to_url(root: str) -> str:
    path = Path(root)
    if path.exists():
        return path.resolve().as_uri()
    return root


def cmd_crawl(args) -> int:
    store = CorpusStore(args.out)
    years = {int(y) for y in args.years.split(",")}
    root_url = _root_to_url(args.root)
    kind = "html"
    page = document_from_bytes(
        _read_root(root_url), kind=kind, url=root_url, title=args.root
    )
    store.fetch(page.ref)
    refs = discover_pdf_links(page, args.pattern, years)
    for ref in refs:
        doc = store.fetch(ref)
        log.info("fetched %s -> %s", ref.url, doc.content_hash[:12])
    print(f"crawled {len(refs)} pdf link(s) into {args.out}")
    return 0


def _read_root(url: str) -> bytes:
    from .corpus import _transport_get

    return _transport_get(url, None)


def _load_dictionaries(config_dir: str | None):
    base = Path(config_dir) if config_dir else None
    syn = fieldmap.HeaderSynonymTable.load(base / "fields.tsv" if base else None)
    kw = fieldmap.KeywordDictionary.load(base / "keywords.tsv" if base else None)
    drug_groups = canon.load_groups("drug", base / "drugs.tsv" if base else None)
    test_groups = canon.load_groups("test", base / "tests.tsv" if base else None)
    matrix_groups = canon.load_groups("matrix", base / "matrices.tsv" if base else None)
    return syn, kw, drug_groups, test_groups, matrix_groups


def _write_records_csv(recs: list[records.AssayRecord], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(records.CSV_COLUMNS)
        for rec in recs:
            writer.writerow(rec.to_csv_row())


def cmd_extract_html(args) -> int:
    store = CorpusStore(args.corpus)
    syn, kw, drug_groups, test_groups, matrix_groups = _load_dictionaries(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n_tables = n_records = 0
    for entry in store.manifest_entries():
        if entry["kind"] != "html":
            continue
        doc = document_from_bytes(
            store.load(entry["content_hash"]), kind="html", url=entry["url"], title=entry["title"]
        )
        ctx = htmltab.derive_page_context(doc, kw)
        ctx.test_name, _ = canon.canonicalize(ctx.test_name, test_groups)
        for i, table in enumerate(htmltab.extract_html_tables(doc, syn)):
            schema = fieldmap.map_table_schema(table, syn)
            if not schema.relevant:
                continue
            recs = records.build_records(
                table, schema, ctx, drug_groups, test_groups, matrix_groups, kw
            )
            _write_records_csv(recs, out / f"{entry['content_hash'][:16]}_{i}.csv")
            n_tables += 1
            n_records += len(recs)
    print(f"extracted {n_records} record(s) from {n_tables} table(s)")
    return 0


def cmd_extract_pdf(args) -> int:
    store = CorpusStore(args.corpus)
    syn, kw, drug_groups, test_groups, matrix_groups = _load_dictionaries(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lexicon = [v for g in drug_groups for v in g.variants]
    n_records = 0
    gap_lines = []
    for entry in store.manifest_entries():
        if entry["kind"] != "pdf":
            continue
        doc = document_from_bytes(
            store.load(entry["content_hash"]), kind="pdf", url=entry["url"], title=entry["title"]
        )
        try:
            pages = pdftab.scan_pages(doc)
        except NoTextLayerError as exc:
            log.warning("skipping %s: %s", entry["url"], exc)
            continue
        for page_no, spans in enumerate(pages, start=1):
            result = pdftab.reconstruct_table(spans, syn=syn)
            if result is None:
                continue
            table, _grid = result
            table.source_url = entry["url"]
            table.page_number = page_no
            table = pdftab.drop_class_title_rows(table)
            table = pdftab.fold_repeated_columns(table, syn)
            schema = fieldmap.map_table_schema(table, syn)
            if not schema.relevant:
                continue
            table_id = f"{entry['content_hash'][:16]}_p{page_no}"
            ctx = records.context_from_spans(spans, kw, test_groups)
            recs = records.build_records(
                table, schema, ctx, drug_groups, test_groups, matrix_groups, kw
            )
            _write_records_csv(recs, out / f"{table_id}.csv")
            pdftab.write_span_file(spans, out / f"{table_id}.spans.tsv")
            n_records += len(recs)
            for gap in pdftab.audit_completeness(table, spans, lexicon, table_id):
                gap_lines.append(f"{gap.table_id}\t{gap.severity}\t{','.join(gap.missing_terms)}")
    if gap_lines:
        (out / "gaps.tsv").write_text("\n".join(gap_lines) + "\n", encoding="utf-8")
        print(f"WARNING: {len(gap_lines)} suspected missing row(s); see gaps.tsv and run 'harvest repair'")
    print(f"extracted {n_records} record(s)")
    return 0


def cmd_dict_lint(args) -> int:
    syn = fieldmap.HeaderSynonymTable.load(args.fields)
    conflicts = fieldmap.lint(syn)
    for conflict in conflicts:
        print(f"CONFLICT: {conflict}")
    if conflicts:
        return 1
    print("dictionary ok: no cross-field overlaps")
    return 0


def cmd_merge(args) -> int:
    master_path = Path(args.master)
    if master_path.exists():
        ds = consolidate.load(master_path)
    else:
        ds = consolidate.MasterDataset()
    incoming_dir = Path(args.incoming)
    batch: list[records.AssayRecord] = []
    for path in sorted(incoming_dir.glob("*.csv")):
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != list(records.CSV_COLUMNS):
                print(f"validation failure: {path} has unexpected header", file=sys.stderr)
                return 2
            for row in reader:
                batch.append(records.AssayRecord.from_csv_row(row))
    ds, outcomes = consolidate.merge(ds, batch)
    consolidate.export(ds, master_path, args.history)
    counts = {"inserted": 0, "updated": 0, "unchanged": 0}
    for o in outcomes:
        counts[o.action] += 1
    print(
        f"merged {len(batch)} record(s): "
        f"{counts['inserted']} inserted, {counts['updated']} updated, {counts['unchanged']} unchanged"
    )
    return 0


def cmd_repair(args) -> int:
    """Semi-automatic gap repair: show the suspected raw spans, then accept an
    operator-confirmed row to append to the extracted records file."""
    spans = pdftab.read_span_file(args.spans)
    drug_groups = canon.load_groups("drug")
    lexicon = [v for g in drug_groups for v in g.variants]
    table_csv = Path(args.records)
    with table_csv.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    from .tables import RawTable

    table = RawTable(cells=[list(r) for r in rows], header_row_index=0)
    gaps = pdftab.audit_completeness(table, spans, lexicon)
    if not gaps:
        print("no gaps detected")
        return 0
    for gap in gaps:
        term = gap.missing_terms[0]
        print(f"suspected missing row for: {term}")
        for span in spans:
            if term.lower() in span.text.lower():
                print(f"  raw span: page={span.page} x={span.x} y={span.y} text={span.text!r}")
        answer = input(f"confirmed CSV row for {term} (empty to skip): ").strip()
        if answer:
            with table_csv.open("a", encoding="utf-8", newline="") as fh:
                fh.write(answer + "\n")
            print("row appended")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .queryapi import create_app

    bind = os.environ.get("HARVEST_BIND", args.bind)
    host, _, port = bind.partition(":")
    app = create_app(args.master, static_dir=args.static)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harvest")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("crawl", help="discover and fetch PDF links from a web root")
    p.add_argument("--root", required=True, help="root URL or local path of the index page")
    p.add_argument("--pattern", required=True, help="title pattern, e.g. MRK")
    p.add_argument("--years", required=True, help="comma-separated years, e.g. 2018,2019,2020")
    p.add_argument("--out", required=True, help="corpus directory")
    p.set_defaults(func=cmd_crawl)

    p = sub.add_parser("extract-html", help="extract records from stored HTML documents")
    p.add_argument("corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None, help="dictionary config directory")
    p.set_defaults(func=cmd_extract_html)

    p = sub.add_parser("extract-pdf", help="extract records from stored PDF documents")
    p.add_argument("corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_extract_pdf)

    p = sub.add_parser("dict", help="dictionary maintenance")
    dict_sub = p.add_subparsers(dest="dict_command", required=True)
    pl = dict_sub.add_parser("lint", help="validate the no-overlap invariant")
    pl.add_argument("--fields", default=None, help="fields.tsv path (default: shipped)")
    pl.set_defaults(func=cmd_dict_lint)

    p = sub.add_parser("merge", help="merge extracted records into the master dataset")
    p.add_argument("--master", required=True)
    p.add_argument("--incoming", required=True)
    p.add_argument("--history", default=None)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("repair", help="operator-confirmed gap repair")
    p.add_argument("--spans", required=True)
    p.add_argument("--records", required=True)
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("serve", help="serve the dataset over HTTP")
    p.add_argument("--master", required=True)
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--static", default=None, help="directory of UI static files")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO)
    try:
        return args.func(args)
    except HarvestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
