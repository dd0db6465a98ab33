from __future__ import annotations

import json
import threading
import urllib.error
import urllib.request

import pytest

from mediacube.service import make_server
from mediacube.store import CatalogStore


@pytest.fixture
def served_catalog(five_event_catalog):
    store = CatalogStore.load(five_event_catalog)
    server = make_server(store, five_event_catalog, port=0)
    thread = threading.Thread(
        target=lambda: server.serve_forever(poll_interval=0.02), daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    try:
        yield f"http://{host}:{port}", five_event_catalog
    finally:
        server.shutdown()
        server.server_close()


def get(base: str, path: str):
    try:
        with urllib.request.urlopen(base + path) as response:
            return response.status, json.loads(response.read().decode("utf-8"))
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read().decode("utf-8"))


def post(base: str, path: str, payload: dict):
    body = json.dumps(payload).encode("utf-8")
    request = urllib.request.Request(
        base + path, data=body, headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(request) as response:
            return response.status, json.loads(response.read().decode("utf-8"))
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read().decode("utf-8"))


def test_cube_endpoint_matches_fixture(served_catalog):
    base, _ = served_catalog
    status, body = get(base, "/cube?context=teaching")
    assert status == 200
    assert body["pattern"] == 5
    assert body["total"] == 3
    assert body["free_dimensions"] == ["document", "user", "time"]
    cells = {(c["key"]["document"], c["key"]["user"], c["key"]["time"]): c["count"]
             for c in body["cells"]}
    assert cells == {
        ("fx:d1", "u1", "2024-01-01"): 1,
        ("fx:d1", "u1", "2024-01-02"): 1,
        ("fx:d2", "u1", "2024-01-02"): 1,
    }


def test_cube_endpoint_time_range(served_catalog):
    base, _ = served_catalog
    status, body = get(
        base, "/cube?time=2024-01-01T00:00:00Z/2024-01-02T00:00:00Z")
    assert status == 200
    assert body["total"] == 2
    status, body = get(base, "/cube?time=2024-01-02")
    assert status == 200
    assert body["total"] == 3


def test_cube_endpoint_month_granularity(served_catalog):
    base, _ = served_catalog
    status, body = get(base, "/cube?context=teaching&granularity=month")
    assert status == 200
    assert body["total"] == 3
    assert {c["key"]["time"] for c in body["cells"]} == {"2024-01"}


def test_cube_endpoint_bad_inputs(served_catalog):
    base, _ = served_catalog
    assert get(base, "/cube?time=2024-13-01")[0] == 400
    assert get(base, "/cube?granularity=week")[0] == 400
    assert get(base, "/cube?colour=red")[0] == 400
    status, body = get(base, "/cube?user=u9")
    assert status == 404
    assert body["error"] == "UnknownUser"


def test_records_endpoint(served_catalog):
    base, _ = served_catalog
    status, body = get(base, "/records/fx:d1")
    assert status == 200
    assert body["document_code"] == "fx:d1"
    assert get(base, "/records/s01:ghost")[0] == 404
    assert get(base, "/records/not=a=code")[0] == 400


def test_resolve_endpoint_unknown_source(served_catalog):
    base, _ = served_catalog
    status, body = get(base, "/resolve/s99:x")
    assert status == 404
    assert body["error"] == "UnknownSource"


def test_contexts_endpoint(served_catalog):
    base, _ = served_catalog
    status, body = get(base, "/contexts")
    assert status == 200
    assert [entry["label"] for entry in body] == [
        "documentation", "entertainment", "learning", "teaching"]
    assert all(entry["origin"] == "static" for entry in body)


def test_unknown_endpoint(served_catalog):
    base, _ = served_catalog
    assert get(base, "/nope")[0] == 404


def test_post_usage_unknown_user_conflict(served_catalog):
    base, _ = served_catalog
    status, body = post(base, "/usage", {
        "document_code": "fx:d1", "context": "teaching",
        "user_id": "u9", "use_type": "occasional",
        "timestamp": "2024-02-01T00:00:00Z"})
    assert status == 409
    assert body["error"] == "UnknownUser"


def test_post_usage_appends_and_persists(served_catalog):
    base, path = served_catalog
    status, body = post(base, "/usage", {
        "document_code": "fx:d2", "context": "fieldwork",
        "user_id": "u1", "use_type": "repetitive",
        "timestamp": "2024-02-01T08:30:00Z"})
    assert status == 201
    assert body["event_id"] == 6
    reloaded = CatalogStore.load(path)
    assert len(reloaded.snapshot().events) == 6
    assert "fieldwork" in {c.label for c in reloaded.list_contexts()}


def test_post_usage_malformed_body(served_catalog):
    base, _ = served_catalog
    assert post(base, "/usage", {"context": "teaching"})[0] == 400
    assert post(base, "/usage", {
        "document_code": "fx:d1", "context": "teaching",
        "user_id": "u1", "use_type": "occasional",
        "timestamp": "yesterday"})[0] == 400


def test_gets_are_side_effect_free(served_catalog):
    base, path = served_catalog
    before = path.read_bytes()
    get(base, "/cube?context=teaching")
    get(base, "/records/fx:d1")
    get(base, "/contexts")
    assert path.read_bytes() == before
