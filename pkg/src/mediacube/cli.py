"""Command-line front end for catalog ingestion, logging, and reporting.

Exit codes: 0 on success, 1 on domain errors (the error case name goes to
standard error), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import date, datetime
from pathlib import Path

from . import analytics, service
from .codes import MalformedCode, parse_document_code
from .descriptors import record_to_dict
from .errors import MediaCubeError
from .federation import SourceDescriptor, ingest_source, mapping_from_dict
from .store import (
    CatalogStore,
    StorageIO,
    UsageEvent,
    UserProfile,
    format_timestamp,
    parse_timestamp,
    utc_now,
)

CATALOG_ENV = "MEDIACUBE_CATALOG"

FIX_DIMENSIONS = ("doc", "context", "user", "time")
TIME_GRAMMAR = ('"YYYY-MM-DD" or "YYYY-MM-DDThh:mm:ssZ/YYYY-MM-DDThh:mm:ssZ"')


def _timestamp_arg(text: str) -> datetime:
    try:
        return parse_timestamp(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected an instant like 2024-01-01T09:00:00Z, got {text!r}")


def _parse_time_filter(text: str):
    """Parse a --fix time value: an exact day or a half-open instant range."""
    if "/" in text:
        start_text, _, end_text = text.partition("/")
        return (parse_timestamp(start_text), parse_timestamp(end_text))
    return date.fromisoformat(text)


def _parse_fixes(parser: argparse.ArgumentParser, pairs: list[str]) -> analytics.DimensionFilter:
    fixed: dict[str, object] = {}
    for pair in pairs or []:
        dim, sep, value = pair.partition("=")
        if not sep or not value:
            parser.error(f"--fix expects DIM=VALUE, got {pair!r}")
        if dim not in FIX_DIMENSIONS:
            parser.error(f"--fix dimension must be one of {', '.join(FIX_DIMENSIONS)}, got {dim!r}")
        if dim in fixed:
            parser.error(f"--fix {dim} given twice")
        if dim == "time":
            try:
                fixed["time"] = _parse_time_filter(value)
            except ValueError:
                parser.error(f"--fix time expects {TIME_GRAMMAR}, got {value!r}")
        elif dim == "doc":
            try:
                fixed["document"] = parse_document_code(value)
            except MalformedCode as exc:
                parser.error(f"--fix doc: {exc}")
        else:
            fixed[dim] = value
    return analytics.DimensionFilter(**fixed)


def _catalog_path(args: argparse.Namespace) -> Path:
    path = args.catalog or os.environ.get(CATALOG_ENV)
    if not path:
        args.parser.error(f"no catalog path: pass --catalog or set {CATALOG_ENV}")
    return Path(path)


def _open_store(args: argparse.Namespace, create: bool = False) -> tuple[CatalogStore, Path]:
    path = _catalog_path(args)
    if path.exists():
        return CatalogStore.load(path), path
    if create:
        return CatalogStore(), path
    raise StorageIO(f"no catalog at {path}")


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2)


def _code_arg(parser: argparse.ArgumentParser, text: str):
    try:
        return parse_document_code(text)
    except MalformedCode as exc:
        parser.error(str(exc))


# -- command handlers --------------------------------------------------------


def _cmd_source_register(args) -> int:
    store, path = _open_store(args, create=True)
    try:
        mapping_data = json.loads(Path(args.mapping).read_text(encoding="utf-8"))
    except OSError as exc:
        raise StorageIO(f"cannot read mapping file: {exc}") from exc
    except json.JSONDecodeError as exc:
        args.parser.error(f"mapping file is not valid JSON: {exc}")
    descriptor = SourceDescriptor(
        source_id=args.source_id,
        kind=args.kind,
        location=args.location,
        mapping=mapping_from_dict(mapping_data),
        enabled=not args.disabled,
    )
    store.sources.register(descriptor)
    store.save(path)
    print(descriptor.source_id)
    return 0


def _cmd_ingest(args) -> int:
    store, path = _open_store(args)
    report = ingest_source(store, args.source_id)
    store.save(path)
    print(f"ingested {len(report.ingested)} records from {report.source_id}")
    for problem in report.problems:
        print(f"{problem.locator}\t{problem.case}\t{problem.message}", file=sys.stderr)
    if report.problems:
        print(f"{len(report.problems)} record problem(s)", file=sys.stderr)
    return 0


def _cmd_record_get(args) -> int:
    store, _ = _open_store(args)
    record = store.get_record(_code_arg(args.parser, args.code))
    print(_dump_json(record_to_dict(record)))
    return 0


def _cmd_resolve(args) -> int:
    store, _ = _open_store(args)
    raw = store.sources.resolve(_code_arg(args.parser, args.code))
    print(_dump_json({
        "source_id": raw.source_id,
        "local_id": raw.local_id,
        "raw_fields": dict(raw.raw_fields),
    }))
    return 0


def _cmd_user_register(args) -> int:
    store, path = _open_store(args, create=True)
    store.register_user(UserProfile(
        user_id=args.user_id,
        name=args.name,
        address=args.address,
        social_class=args.social_class,
    ))
    store.save(path)
    print(args.user_id)
    return 0


def _cmd_usage_log(args) -> int:
    store, path = _open_store(args)
    event_id = store.record_usage(UsageEvent(
        document_code=_code_arg(args.parser, args.doc),
        context=args.context,
        user_id=args.user,
        timestamp=args.time or utc_now(),
        use_type=args.type,
    ))
    store.save(path)
    print(event_id)
    return 0


def _cmd_contexts(args) -> int:
    store, _ = _open_store(args)
    for entry in store.list_contexts():
        print(f"{entry.label}\t{entry.origin}\t{format_timestamp(entry.first_seen)}")
    return 0


def _cmd_cube(args) -> int:
    store, _ = _open_store(args)
    query = analytics.CubeQuery(
        fixed=_parse_fixes(args.parser, args.fix),
        time_granularity=args.granularity,
    )
    result = analytics.cube_query(store.snapshot(), query)
    sys.stdout.write(result.to_tsv())
    return 0


def _cmd_report(args) -> int:
    store, _ = _open_store(args)
    snapshot = store.snapshot()
    if args.name == "importance":
        for code, count in analytics.document_importance(snapshot):
            print(f"{code}\t{count}")
    elif args.name == "interest":
        if not args.user:
            args.parser.error("report interest requires --user")
        interest = analytics.user_interest(snapshot, args.user)
        for label, count in interest.contexts.items():
            print(f"context\t{label}\t{count}")
        for code, count in interest.documents.items():
            print(f"document\t{code}\t{count}")
    elif args.name == "evolution":
        for bucket, count in analytics.usage_evolution(snapshot, args.granularity):
            print(f"{bucket}\t{count}")
    elif args.name == "type-ratio":
        ratio = analytics.usage_type_ratio(snapshot)
        print(f"repetitive\t{ratio.repetitive}")
        print(f"occasional\t{ratio.occasional}")
    else:  # social-class
        for (social, context), count in analytics.context_by_social_class(snapshot).items():
            print(f"{social}\t{context}\t{count}")
    return 0


def _cmd_save(args) -> int:
    store, _ = _open_store(args)
    store.save(args.to)
    return 0


def _cmd_load(args) -> int:
    store = CatalogStore.load(args.source)
    path = _catalog_path(args)
    store.save(path)
    snapshot = store.snapshot()
    print(f"loaded {len(snapshot.records)} records, {len(snapshot.events)} events, "
          f"{len(snapshot.users)} users, {len(snapshot.contexts)} contexts")
    return 0


def _cmd_serve(args) -> int:
    store, path = _open_store(args)
    try:
        server = service.make_server(store, path, host=args.host, port=args.port)
    except OSError as exc:
        print(f"cannot serve on {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 1
    host, port = server.server_address[:2]
    print(f"serving catalog {path} on http://{host}:{port}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mediacube",
        description="Federated multimedia metadata catalog with usage-cube analytics.",
    )
    parser.add_argument("--catalog", help=f"catalog file path (or set {CATALOG_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("source-register", help="register a federated source")
    p.add_argument("--source-id", required=True)
    p.add_argument("--kind", required=True, choices=["tabular", "file-tree", "remote-line"])
    p.add_argument("--location", required=True, help="file, directory, or host:port")
    p.add_argument("--mapping", required=True, help="JSON file with the field mapping")
    p.add_argument("--disabled", action="store_true")
    p.set_defaults(func=_cmd_source_register)

    p = sub.add_parser("ingest", help="harvest one source into the catalog")
    p.add_argument("source_id")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("record-get", help="print one generic record")
    p.add_argument("code")
    p.set_defaults(func=_cmd_record_get)

    p = sub.add_parser("resolve", help="fetch the full source record behind a code")
    p.add_argument("code")
    p.set_defaults(func=_cmd_resolve)

    p = sub.add_parser("user-register", help="register or update a user profile")
    p.add_argument("--user-id", required=True)
    p.add_argument("--name", required=True)
    p.add_argument("--address")
    p.add_argument("--social-class")
    p.set_defaults(func=_cmd_user_register)

    p = sub.add_parser("usage-log", help="append one usage event")
    p.add_argument("--doc", required=True, help="document code")
    p.add_argument("--context", required=True)
    p.add_argument("--user", required=True)
    p.add_argument("--time", type=_timestamp_arg, help="UTC instant, default now")
    p.add_argument("--type", required=True, choices=["repetitive", "occasional"])
    p.set_defaults(func=_cmd_usage_log)

    p = sub.add_parser("contexts", help="list context registry entries")
    p.set_defaults(func=_cmd_contexts)

    p = sub.add_parser("cube", help="run one cross-analysis cube query")
    p.add_argument("--fix", action="append", metavar="DIM=VALUE",
                   help=f"fix a dimension; DIM is one of {', '.join(FIX_DIMENSIONS)}; "
                        f"time values use {TIME_GRAMMAR}")
    p.add_argument("--granularity", default="day", choices=["day", "month", "year"])
    p.set_defaults(func=_cmd_cube)

    p = sub.add_parser("report", help="run a derived usage report")
    p.add_argument("name", choices=["importance", "interest", "evolution",
                                    "type-ratio", "social-class"])
    p.add_argument("--user", help="user id (report interest)")
    p.add_argument("--granularity", default="day", choices=["day", "month", "year"])
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("save", help="write the catalog's canonical form to a path")
    p.add_argument("--to", required=True)
    p.set_defaults(func=_cmd_save)

    p = sub.add_parser("load", help="replace the catalog with another catalog file")
    p.add_argument("--from", dest="source", required=True)
    p.set_defaults(func=_cmd_load)

    p = sub.add_parser("serve", help="run the HTTP query service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8470)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    # Give handlers access to the parser so value errors surface as usage errors.
    args.parser = parser
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except MediaCubeError as exc:
        print(f"{exc.case}: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
