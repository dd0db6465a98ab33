from __future__ import annotations

import pytest

from catalog_fixtures import make_five_event_store


@pytest.fixture
def five_event_store():
    return make_five_event_store()


@pytest.fixture
def five_event_catalog(tmp_path):
    """The five-event store saved to disk; returns the catalog path."""
    path = tmp_path / "catalog.jsonl"
    make_five_event_store().save(path)
    return path
