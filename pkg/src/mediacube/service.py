"""Minimal HTTP/1.1 query service over one catalog.

Endpoints mirror the CLI: GET /records/{code}, GET /resolve/{code},
GET /cube, GET /contexts, and POST /usage. Responses use the canonical
JSON serialization; 400 marks malformed input, 404 not-found, 409
referential-integrity failures. Only POST /usage mutates the catalog.
"""

from __future__ import annotations

import json
import threading
from datetime import date
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, unquote, urlsplit

from . import analytics
from .codes import MalformedCode, parse_document_code
from .descriptors import record_to_dict
from .federation import NotFoundAtSource, UnknownSource
from .store import (
    CatalogStore,
    MalformedEvent,
    RecordNotFound,
    UnknownContext,
    UnknownDocument,
    UnknownUser,
    UsageEvent,
    format_timestamp,
    parse_timestamp,
    utc_now,
)

_NOT_FOUND = (RecordNotFound, UnknownSource, NotFoundAtSource,
              UnknownDocument, UnknownUser, UnknownContext)
_MALFORMED = (MalformedCode, MalformedEvent, analytics.InvalidTimeRange,
              analytics.InvalidGranularity)


class _BadRequest(Exception):
    pass


def _parse_time_param(text: str):
    if "/" in text:
        start_text, _, end_text = text.partition("/")
        return (parse_timestamp(start_text), parse_timestamp(end_text))
    return date.fromisoformat(text)


class CatalogServer(ThreadingHTTPServer):
    """Threaded server owning the store; POSTs are serialized and persisted."""

    daemon_threads = True

    def __init__(self, store: CatalogStore, catalog_path: str | Path, address):
        self.store = store
        self.catalog_path = Path(catalog_path)
        self.post_lock = threading.Lock()
        super().__init__(address, CatalogRequestHandler)


class CatalogRequestHandler(BaseHTTPRequestHandler):
    server: CatalogServer

    # -- plumbing -------------------------------------------------------------

    def log_message(self, format, *args):
        pass

    def _send_json(self, status: int, payload) -> None:
        body = json.dumps(payload, sort_keys=True, ensure_ascii=False,
                          separators=(",", ":")).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_case(self, status: int, exc: Exception) -> None:
        case = getattr(exc, "case", type(exc).__name__)
        self._send_json(status, {"error": case, "message": str(exc)})

    def _single_param(self, params: dict, name: str) -> str | None:
        values = params.get(name)
        if values is None:
            return None
        if len(values) != 1:
            raise _BadRequest(f"parameter {name} given more than once")
        return values[0]

    # -- GET ------------------------------------------------------------------

    def do_GET(self):
        url = urlsplit(self.path)
        try:
            if url.path == "/contexts":
                return self._get_contexts()
            if url.path == "/cube":
                return self._get_cube(parse_qs(url.query))
            if url.path.startswith("/records/"):
                return self._get_record(unquote(url.path[len("/records/"):]))
            if url.path.startswith("/resolve/"):
                return self._get_resolve(unquote(url.path[len("/resolve/"):]))
            self._send_json(404, {"error": "NotFound", "message": f"no endpoint {url.path}"})
        except _BadRequest as exc:
            self._send_json(400, {"error": "BadRequest", "message": str(exc)})
        except _MALFORMED as exc:
            self._send_error_case(400, exc)
        except _NOT_FOUND as exc:
            self._send_error_case(404, exc)

    def _get_record(self, code_text: str):
        record = self.server.store.get_record(parse_document_code(code_text))
        self._send_json(200, record_to_dict(record))

    def _get_resolve(self, code_text: str):
        raw = self.server.store.sources.resolve(parse_document_code(code_text))
        self._send_json(200, {
            "source_id": raw.source_id,
            "local_id": raw.local_id,
            "raw_fields": dict(raw.raw_fields),
        })

    def _get_contexts(self):
        entries = [
            {"label": c.label, "origin": c.origin, "first_seen": format_timestamp(c.first_seen)}
            for c in self.server.store.list_contexts()
        ]
        self._send_json(200, entries)

    def _get_cube(self, params: dict):
        known = {"doc", "context", "user", "time", "granularity"}
        unknown = set(params) - known
        if unknown:
            raise _BadRequest(f"unknown query parameters: {', '.join(sorted(unknown))}")
        fixed: dict[str, object] = {}
        doc = self._single_param(params, "doc")
        if doc is not None:
            fixed["document"] = parse_document_code(doc)
        context = self._single_param(params, "context")
        if context is not None:
            fixed["context"] = context
        user = self._single_param(params, "user")
        if user is not None:
            fixed["user"] = user
        time_text = self._single_param(params, "time")
        if time_text is not None:
            try:
                fixed["time"] = _parse_time_param(time_text)
            except ValueError:
                raise _BadRequest(f"time expects a day or an instant range, got {time_text!r}")
        granularity = self._single_param(params, "granularity") or "day"

        query = analytics.CubeQuery(fixed=analytics.DimensionFilter(**fixed),
                                    time_granularity=granularity)
        result = analytics.cube_query(self.server.store.snapshot(), query)
        self._send_json(200, {
            "pattern": result.pattern,
            "free_dimensions": list(result.free_dimensions),
            "cells": [
                {
                    "key": dict(zip(result.free_dimensions, cell.key)),
                    "count": cell.count,
                    "event_ids": list(cell.event_ids),
                }
                for cell in result.cells
            ],
            "total": result.total,
        })

    # -- POST -----------------------------------------------------------------

    def do_POST(self):
        url = urlsplit(self.path)
        if url.path != "/usage":
            self._send_json(404, {"error": "NotFound", "message": f"no endpoint {url.path}"})
            return
        try:
            event = self._read_usage_event()
        except _BadRequest as exc:
            self._send_json(400, {"error": "BadRequest", "message": str(exc)})
            return
        except _MALFORMED as exc:
            self._send_error_case(400, exc)
            return
        try:
            with self.server.post_lock:
                event_id = self.server.store.record_usage(event)
                self.server.store.save(self.server.catalog_path)
        except MalformedEvent as exc:
            self._send_error_case(400, exc)
        except (UnknownDocument, UnknownUser) as exc:
            self._send_error_case(409, exc)
        else:
            self._send_json(201, {"event_id": event_id})

    def _read_usage_event(self) -> UsageEvent:
        length = int(self.headers.get("Content-Length") or 0)
        try:
            data = json.loads(self.rfile.read(length).decode("utf-8") or "{}")
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise _BadRequest(f"body is not valid JSON: {exc}")
        if not isinstance(data, dict):
            raise _BadRequest("body must be a JSON object")
        for name in ("document_code", "context", "user_id", "use_type"):
            if name not in data:
                raise _BadRequest(f"missing field {name}")
        if "timestamp" in data:
            try:
                timestamp = parse_timestamp(str(data["timestamp"]))
            except ValueError:
                raise _BadRequest(f"bad timestamp {data['timestamp']!r}")
        else:
            timestamp = utc_now()
        return UsageEvent(
            document_code=parse_document_code(str(data["document_code"])),
            context=str(data["context"]),
            user_id=str(data["user_id"]),
            timestamp=timestamp,
            use_type=str(data["use_type"]),
        )


def make_server(store: CatalogStore, catalog_path: str | Path,
                host: str = "127.0.0.1", port: int = 0) -> CatalogServer:
    """Build the service; ``port=0`` picks a free port (see server_address)."""
    return CatalogServer(store, catalog_path, (host, port))
