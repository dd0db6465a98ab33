"""Source registration, harvesting, and mapping into the generic schema.

Three adapter kinds cover heterogeneous ingestion at desk scale:

* ``tabular``: a UTF-8 file whose first line is a tab-separated header of
  field paths and whose remaining lines are tab-separated values. The
  column named ``local_id`` (or, failing that, the first column) supplies
  the record identifier.
* ``file-tree``: a directory with one ``<local_id>.meta`` sidecar per
  document, each holding ``field<TAB>value`` lines.
* ``remote-line``: a byte-stream endpoint speaking a newline-delimited
  protocol: ``LIST`` returns one local_id per line then a blank line,
  ``GET <local_id>`` returns ``field<TAB>value`` lines then a blank line,
  and ``ERR <msg>`` signals failure.

Per-record problems never abort a harvest; only source-level connection
failures do. Sources are mutually independent.
"""

from __future__ import annotations

import socket
import threading
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import TYPE_CHECKING, Mapping

from .codes import DocumentCode, MalformedCode, SOURCE_ID_PATTERN, parse_document_code
from .descriptors import (
    CODES,
    DATE,
    LABELS,
    GenericRecord,
    SCHEMA_FIELDS,
    make_descriptor,
    required_fields,
    validate_record,
)
from .errors import MediaCubeError
from .taxonomy import MediaPresence, classify

if TYPE_CHECKING:
    from .store import CatalogStore

ADAPTER_KINDS = ("tabular", "file-tree", "remote-line")
TRANSFORMS = ("identity", "lowercase", "date-parse", "split-list")

REMOTE_TIMEOUT = 10.0


class DuplicateSource(MediaCubeError):
    pass


class InvalidMapping(MediaCubeError):
    pass


class UnknownSource(MediaCubeError):
    pass


class SourceDisabled(MediaCubeError):
    pass


class SourceUnreachable(MediaCubeError):
    pass


class NotFoundAtSource(MediaCubeError):
    pass


class PresenceUndecidable(MediaCubeError):
    pass


class RequiredFieldMissing(MediaCubeError):
    def __init__(self, field_path: str, detail: str = ""):
        self.field_path = field_path
        super().__init__(field_path if not detail else f"{field_path}: {detail}")


class FieldTransformError(MediaCubeError):
    pass


class MappedRecordInvalid(MediaCubeError):
    pass


# ---------------------------------------------------------------------------
# Mapping model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PresenceRule:
    """Declares a medium present when a raw field matches.

    With ``equals`` set, the medium is present when the raw field carries
    exactly that value; otherwise any non-empty value suffices. Rules for
    the same medium combine as alternatives.
    """

    medium: str
    field: str
    equals: str | None = None

    def satisfied_by(self, raw_fields: Mapping[str, str]) -> bool:
        value = raw_fields.get(self.field)
        if value is None or value == "":
            return False
        return value == self.equals if self.equals is not None else True


@dataclass(frozen=True)
class FieldRule:
    """Copies one raw field into a generic field, optionally transformed."""

    source: str
    target: str
    transform: str = "identity"


@dataclass(frozen=True)
class FieldMapping:
    """Declarative mapping from a source's raw fields to the generic schema."""

    presence_rules: tuple[PresenceRule, ...]
    field_rules: tuple[FieldRule, ...]
    defaults: Mapping[str, str] = field(default_factory=dict)
    uri_field: str | None = None

    @property
    def declared_media(self) -> tuple[str, ...]:
        seen: list[str] = []
        for rule in self.presence_rules:
            if rule.medium not in seen:
                seen.append(rule.medium)
        return tuple(seen)


@dataclass(frozen=True)
class SourceDescriptor:
    """Registration of one federated source plus its field mapping."""

    source_id: str
    kind: str
    location: str
    mapping: FieldMapping
    enabled: bool = True


@dataclass(frozen=True)
class SourceRecord:
    """One raw record as the origin source holds it."""

    source_id: str
    local_id: str
    raw_fields: Mapping[str, str]


@dataclass(frozen=True)
class RecordProblem:
    """A per-record failure: which record, which error case, and why."""

    locator: str
    case: str
    message: str


@dataclass(frozen=True)
class HarvestResult:
    source_id: str
    records: tuple[SourceRecord, ...]
    problems: tuple[RecordProblem, ...] = ()


@dataclass(frozen=True)
class IngestReport:
    source_id: str
    ingested: tuple[str, ...]
    problems: tuple[RecordProblem, ...] = ()


def validate_mapping(mapping: FieldMapping) -> None:
    """Raise :class:`InvalidMapping` naming the first offending rule."""
    if not mapping.presence_rules:
        raise InvalidMapping("mapping declares no presence rules")
    for rule in mapping.presence_rules:
        if rule.medium not in ("text", "image", "sound"):
            raise InvalidMapping(f"presence rule names unknown medium {rule.medium!r}")
        if not rule.field:
            raise InvalidMapping(f"presence rule for {rule.medium} names no raw field")
    for rule in mapping.field_rules:
        if not rule.source:
            raise InvalidMapping(f"{rule.target}: rule names no raw source field")
        spec = SCHEMA_FIELDS.get(rule.target)
        if spec is None:
            raise InvalidMapping(rule.target)
        if rule.transform not in TRANSFORMS:
            raise InvalidMapping(f"{rule.target}: unknown transform {rule.transform!r}")
        if rule.transform == "date-parse" and spec.kind != DATE:
            raise InvalidMapping(f"{rule.target}: date-parse targets a non-date field")
        if rule.transform == "split-list" and spec.kind not in (LABELS, CODES):
            raise InvalidMapping(f"{rule.target}: split-list targets a scalar field")
    for target in mapping.defaults:
        if target not in SCHEMA_FIELDS:
            raise InvalidMapping(target)
    covered = {rule.target for rule in mapping.field_rules} | set(mapping.defaults)
    for medium in mapping.declared_media:
        for path in required_fields(medium):
            if path not in covered:
                raise InvalidMapping(f"{path} has neither a rule nor a default")


# ---------------------------------------------------------------------------
# Transforms and generic mapping
# ---------------------------------------------------------------------------


def _parse_date(text: str) -> date:
    for parser in (date.fromisoformat, _slash_date):
        try:
            return parser(text)
        except ValueError:
            continue
    raise ValueError(f"unparseable date: {text!r}")


def _slash_date(text: str) -> date:
    parts = text.split("/")
    if len(parts) != 3:
        raise ValueError(text)
    return date(int(parts[0]), int(parts[1]), int(parts[2]))


def _split_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _coerce(path: str, value) -> object:
    """Coerce a transformed value to the kind its generic field expects."""
    kind = SCHEMA_FIELDS[path].kind
    try:
        if kind == DATE:
            return value if isinstance(value, date) else _parse_date(str(value))
        if kind == CODES:
            items = value if isinstance(value, tuple) else (value,)
            return tuple(parse_document_code(str(v)) for v in items)
        if kind == LABELS:
            return value if isinstance(value, tuple) else (str(value),)
        if isinstance(value, tuple):
            raise ValueError("list value for a scalar field")
        return str(value)
    except (ValueError, MalformedCode) as exc:
        raise FieldTransformError(f"{path}: {exc}") from exc


def _apply_transform(rule: FieldRule, value: str) -> object:
    if rule.transform == "lowercase":
        return value.lower()
    if rule.transform == "date-parse":
        try:
            return _parse_date(value)
        except ValueError as exc:
            raise FieldTransformError(f"{rule.target}: {exc}") from exc
    if rule.transform == "split-list":
        return _split_list(value)
    return value


def map_to_generic(raw: SourceRecord, mapping: FieldMapping) -> GenericRecord:
    """Map one raw source record into a validated :class:`GenericRecord`.

    Presence rules decide the media triple (all-false raises
    :class:`PresenceUndecidable`); field rules and defaults populate the
    descriptors; a required field left unpopulated raises
    :class:`RequiredFieldMissing` naming the generic field.
    """
    present = {
        medium: any(r.satisfied_by(raw.raw_fields)
                    for r in mapping.presence_rules if r.medium == medium)
        for medium in ("text", "image", "sound")
    }
    presence = MediaPresence(**present)
    if not presence.any:
        raise PresenceUndecidable(
            f"{raw.source_id}:{raw.local_id}: presence rules decide no medium")

    if mapping.uri_field and raw.raw_fields.get(mapping.uri_field):
        code = DocumentCode.for_uri(raw.raw_fields[mapping.uri_field])
    else:
        code = DocumentCode.compound(raw.source_id, raw.local_id)

    staged: dict[str, object] = {}
    for rule in mapping.field_rules:
        value = raw.raw_fields.get(rule.source)
        if value is None or value == "":
            continue
        staged[rule.target] = _coerce(rule.target, _apply_transform(rule, value))
    for target, value in mapping.defaults.items():
        if target not in staged:
            staged[target] = _coerce(target, value)

    values: dict[str, dict[str, object]] = {m: {} for m in ("text", "image", "sound")}
    for path, value in staged.items():
        spec = SCHEMA_FIELDS[path]
        if present[spec.medium]:
            values[spec.medium][spec.attribute] = value

    for medium in ("text", "image", "sound"):
        if not present[medium]:
            continue
        for path in required_fields(medium):
            if SCHEMA_FIELDS[path].attribute not in values[medium]:
                raise RequiredFieldMissing(path, f"required for {medium} and not mapped")

    record = GenericRecord(
        document_code=code,
        media_class=classify(presence),
        **{m: make_descriptor(m, values[m]) if present[m] else None
           for m in ("text", "image", "sound")},
    )
    report = validate_record(record)
    if not report.ok:
        details = "; ".join(f"{p.field}: {p.message}" for p in report.violations)
        raise MappedRecordInvalid(f"{code}: {details}")
    return record


# ---------------------------------------------------------------------------
# Adapters
# ---------------------------------------------------------------------------


def _parse_meta_lines(lines, locator: str) -> dict[str, str]:
    fields: dict[str, str] = {}
    for line in lines:
        if not line:
            continue
        if "\t" not in line:
            raise ValueError(f"{locator}: line without field/value separator: {line!r}")
        name, _, value = line.partition("\t")
        fields[name] = value
    return fields


def _harvest_tabular(descriptor: SourceDescriptor) -> HarvestResult:
    path = Path(descriptor.location)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SourceUnreachable(f"{descriptor.source_id}: cannot open {path}: {exc}") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        return HarvestResult(descriptor.source_id, ())
    header = lines[0].split("\t")
    id_column = header.index("local_id") if "local_id" in header else 0

    records: dict[str, SourceRecord] = {}
    problems: list[RecordProblem] = []

    def problem(line_no: int, message: str):
        problems.append(RecordProblem(f"line {line_no}", "MalformedSourceRecord", message))

    for line_no, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        cells = line.split("\t")
        if len(cells) != len(header):
            problem(line_no, f"expected {len(header)} columns, got {len(cells)}")
            continue
        local_id = cells[id_column]
        if not local_id:
            problem(line_no, "empty local_id")
            continue
        if local_id in records:
            problem(line_no, f"duplicate local_id {local_id!r}")
            continue
        records[local_id] = SourceRecord(descriptor.source_id, local_id, dict(zip(header, cells)))

    ordered = tuple(records[k] for k in sorted(records))
    return HarvestResult(descriptor.source_id, ordered, tuple(problems))


def _harvest_file_tree(descriptor: SourceDescriptor) -> HarvestResult:
    root = Path(descriptor.location)
    if not root.is_dir():
        raise SourceUnreachable(f"{descriptor.source_id}: {root} is not a directory")
    records: list[SourceRecord] = []
    problems: list[RecordProblem] = []
    for meta in sorted(root.glob("*.meta"), key=lambda p: p.stem):
        local_id = meta.stem
        try:
            lines = meta.read_text(encoding="utf-8").split("\n")
            fields = _parse_meta_lines(lines, local_id)
        except (OSError, ValueError) as exc:
            problems.append(RecordProblem(local_id, "MalformedSourceRecord", str(exc)))
            continue
        records.append(SourceRecord(descriptor.source_id, local_id, fields))
    return HarvestResult(descriptor.source_id, tuple(records), tuple(problems))


class _RemoteFailure(Exception):
    """An ERR reply from a remote-line endpoint."""


class _LineClient:
    """Client side of the newline-delimited request/response protocol."""

    def __init__(self, location: str):
        host, port = _parse_endpoint(location)
        try:
            self._sock = socket.create_connection((host, port), timeout=REMOTE_TIMEOUT)
        except OSError as exc:
            raise SourceUnreachable(f"cannot connect to {host}:{port}: {exc}") from exc
        self._reader = self._sock.makefile("r", encoding="utf-8", newline="\n")
        self._writer = self._sock.makefile("w", encoding="utf-8", newline="\n")

    def request(self, command: str) -> list[str]:
        """Send one command, return the reply lines up to the blank line.

        An ``ERR <msg>`` reply is a single line with no blank terminator,
        so the stream stays aligned for the next request.
        """
        try:
            self._writer.write(command + "\n")
            self._writer.flush()
            lines: list[str] = []
            while True:
                line = self._reader.readline()
                if line == "":
                    raise SourceUnreachable("connection closed mid-reply")
                line = line.rstrip("\n")
                if line == "":
                    return lines
                if not lines and line.startswith("ERR "):
                    raise _RemoteFailure(line[4:])
                lines.append(line)
        except OSError as exc:
            raise SourceUnreachable(f"remote endpoint failed: {exc}") from exc

    def close(self):
        try:
            self._reader.close()
            self._writer.close()
            self._sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def _parse_endpoint(location: str) -> tuple[str, int]:
    text = location.removeprefix("tcp://")
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise SourceUnreachable(f"remote location must be host:port, got {location!r}")
    return host, int(port)


def _harvest_remote_line(descriptor: SourceDescriptor) -> HarvestResult:
    with _LineClient(descriptor.location) as client:
        try:
            local_ids = [line for line in client.request("LIST") if line]
        except _RemoteFailure as exc:
            raise SourceUnreachable(f"{descriptor.source_id}: LIST failed: {exc}") from exc
        records: list[SourceRecord] = []
        problems: list[RecordProblem] = []
        for local_id in sorted(set(local_ids)):
            try:
                lines = client.request(f"GET {local_id}")
                fields = _parse_meta_lines(lines, local_id)
            except _RemoteFailure as exc:
                problems.append(RecordProblem(local_id, "NotFoundAtSource", str(exc)))
            except ValueError as exc:
                problems.append(RecordProblem(local_id, "MalformedSourceRecord", str(exc)))
            else:
                records.append(SourceRecord(descriptor.source_id, local_id, fields))
    return HarvestResult(descriptor.source_id, tuple(records), tuple(problems))


_ADAPTERS = {
    "tabular": _harvest_tabular,
    "file-tree": _harvest_file_tree,
    "remote-line": _harvest_remote_line,
}


def _fetch_one(descriptor: SourceDescriptor, local_id: str) -> SourceRecord:
    if descriptor.kind == "file-tree":
        meta = Path(descriptor.location) / f"{local_id}.meta"
        if not meta.is_file():
            raise NotFoundAtSource(f"{descriptor.source_id}:{local_id}")
        try:
            fields = _parse_meta_lines(meta.read_text(encoding="utf-8").split("\n"), local_id)
        except ValueError as exc:
            raise NotFoundAtSource(str(exc)) from exc
        return SourceRecord(descriptor.source_id, local_id, fields)
    if descriptor.kind == "remote-line":
        with _LineClient(descriptor.location) as client:
            try:
                lines = client.request(f"GET {local_id}")
                fields = _parse_meta_lines(lines, local_id)
            except (_RemoteFailure, ValueError) as exc:
                raise NotFoundAtSource(f"{descriptor.source_id}:{local_id}: {exc}") from exc
        return SourceRecord(descriptor.source_id, local_id, fields)
    for record in _harvest_tabular(descriptor).records:
        if record.local_id == local_id:
            return record
    raise NotFoundAtSource(f"{descriptor.source_id}:{local_id}")


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


class SourceRegistry:
    """Registered federated sources; concurrent reads, serialized writes."""

    def __init__(self):
        self._sources: dict[str, SourceDescriptor] = {}
        self._write_lock = threading.Lock()

    def register(self, descriptor: SourceDescriptor) -> str:
        if not SOURCE_ID_PATTERN.match(descriptor.source_id):
            raise MalformedCode(
                f"source_id {descriptor.source_id!r} must match [a-z0-9_-]{{1,32}}")
        if descriptor.kind not in ADAPTER_KINDS:
            raise InvalidMapping(
                f"unknown adapter kind {descriptor.kind!r}; expected one of {ADAPTER_KINDS}")
        validate_mapping(descriptor.mapping)
        with self._write_lock:
            if descriptor.source_id in self._sources:
                raise DuplicateSource(f"source {descriptor.source_id!r} already registered")
            self._sources[descriptor.source_id] = descriptor
        return descriptor.source_id

    def get(self, source_id: str) -> SourceDescriptor:
        try:
            return self._sources[source_id]
        except KeyError:
            raise UnknownSource(f"source {source_id!r} is not registered") from None

    def list(self) -> list[SourceDescriptor]:
        return [self._sources[k] for k in sorted(self._sources)]

    def harvest(self, source_id: str) -> HarvestResult:
        """Enumerate a source's records in deterministic local_id order."""
        descriptor = self.get(source_id)
        if not descriptor.enabled:
            raise SourceDisabled(f"source {source_id!r} is disabled")
        return _ADAPTERS[descriptor.kind](descriptor)

    def resolve(self, code: DocumentCode) -> SourceRecord:
        """Fetch the full raw record behind ``code`` from its origin.

        URI codes are returned as a deferred-fetch record carrying only the
        URI; no content is downloaded.
        """
        if code.is_uri:
            return SourceRecord("uri", code.uri, {"uri": code.uri})
        return _fetch_one(self.get(code.source_id), code.local_id)


def ingest_source(store: "CatalogStore", source_id: str) -> IngestReport:
    """Harvest one source, map every record, and put the results in the store.

    Per-record failures (malformed rows, mapping errors, invalid records)
    are collected in the report; they never abort the ingest.
    """
    descriptor = store.sources.get(source_id)
    result = store.sources.harvest(source_id)
    problems = list(result.problems)
    ingested: list[str] = []
    for raw in result.records:
        try:
            record = map_to_generic(raw, descriptor.mapping)
            store.put_record(record)
        except MediaCubeError as exc:
            problems.append(RecordProblem(raw.local_id, exc.case, str(exc)))
        else:
            ingested.append(str(record.document_code))
    return IngestReport(source_id, tuple(ingested), tuple(problems))


# ---------------------------------------------------------------------------
# Mapping serialization (shared by the catalog file and the CLI)
# ---------------------------------------------------------------------------


def _presence_rule_to_dict(rule: PresenceRule) -> dict:
    out: dict[str, str] = {"medium": rule.medium, "field": rule.field}
    if rule.equals is not None:
        out["equals"] = rule.equals
    return out


def _field_rule_to_dict(rule: FieldRule) -> dict:
    out: dict[str, str] = {"source": rule.source, "target": rule.target}
    if rule.transform != "identity":
        out["transform"] = rule.transform
    return out


def mapping_to_dict(mapping: FieldMapping) -> dict:
    out: dict[str, object] = {
        "presence": [_presence_rule_to_dict(r) for r in mapping.presence_rules],
        "fields": [_field_rule_to_dict(r) for r in mapping.field_rules],
    }
    if mapping.defaults:
        out["defaults"] = dict(mapping.defaults)
    if mapping.uri_field:
        out["uri_field"] = mapping.uri_field
    return out


def mapping_from_dict(data: Mapping) -> FieldMapping:
    presence = tuple(
        PresenceRule(medium=r["medium"], field=r["field"], equals=r.get("equals"))
        for r in data.get("presence", [])
    )
    rules = tuple(
        FieldRule(source=r["source"], target=r["target"],
                  transform=r.get("transform", "identity"))
        for r in data.get("fields", [])
    )
    return FieldMapping(
        presence_rules=presence,
        field_rules=rules,
        defaults=dict(data.get("defaults", {})),
        uri_field=data.get("uri_field"),
    )


def source_to_dict(descriptor: SourceDescriptor) -> dict:
    return {
        "source_id": descriptor.source_id,
        "adapter": descriptor.kind,
        "location": descriptor.location,
        "enabled": descriptor.enabled,
        "mapping": mapping_to_dict(descriptor.mapping),
    }


def source_from_dict(data: Mapping) -> SourceDescriptor:
    return SourceDescriptor(
        source_id=data["source_id"],
        kind=data["adapter"],
        location=data["location"],
        mapping=mapping_from_dict(data.get("mapping", {})),
        enabled=bool(data.get("enabled", True)),
    )
