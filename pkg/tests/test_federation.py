from __future__ import annotations

import dataclasses
from datetime import date

import pytest

from catalog_fixtures import (
    BOOK_MAPPING,
    IMAGE_MAPPING,
    SOUND_MAPPING,
    LineSourceServer,
    closed_port,
    remote_source,
    sound_records,
    write_file_tree_source,
    write_tabular_source,
)
from mediacube.codes import parse_document_code
from mediacube.federation import (
    DuplicateSource,
    FieldMapping,
    FieldRule,
    InvalidMapping,
    MappedRecordInvalid,
    NotFoundAtSource,
    PresenceRule,
    PresenceUndecidable,
    RequiredFieldMissing,
    SourceDescriptor,
    SourceRecord,
    SourceRegistry,
    SourceUnreachable,
    UnknownSource,
    ingest_source,
    map_to_generic,
    mapping_from_dict,
    mapping_to_dict,
    source_from_dict,
    source_to_dict,
    validate_mapping,
)
from mediacube.store import CatalogStore
from mediacube.taxonomy import MediaClass


def registry_with(*descriptors) -> SourceRegistry:
    registry = SourceRegistry()
    for descriptor in descriptors:
        registry.register(descriptor)
    return registry


# -- registration -------------------------------------------------------------


def test_register_and_get(tmp_path):
    descriptor = write_tabular_source(tmp_path / "books.tsv", source_id="s01")
    registry = SourceRegistry()
    assert registry.register(descriptor) == "s01"
    assert registry.get("s01") is descriptor


def test_register_duplicate_rejected(tmp_path):
    descriptor = write_tabular_source(tmp_path / "books.tsv", source_id="s01")
    registry = registry_with(descriptor)
    with pytest.raises(DuplicateSource):
        registry.register(descriptor)


def test_mapping_with_unknown_target_rejected():
    mapping = FieldMapping(
        presence_rules=(PresenceRule(medium="image", field="colour"),),
        field_rules=(FieldRule(source="hue", target="image.hue"),),
        defaults={"image.dominant_colour": "red", "image.dominant_shape": "oval",
                  "image.image_format": "jpeg", "image.image_medium": "paper",
                  "image.image_type": "sketch"},
    )
    with pytest.raises(InvalidMapping, match="image.hue"):
        validate_mapping(mapping)


def test_mapping_missing_required_coverage_rejected():
    mapping = FieldMapping(
        presence_rules=(PresenceRule(medium="image", field="colour"),),
        field_rules=(FieldRule(source="colour", target="image.dominant_colour"),),
    )
    with pytest.raises(InvalidMapping, match="image."):
        validate_mapping(mapping)


def test_mapping_transform_kind_mismatch_rejected():
    mapping = FieldMapping(
        presence_rules=(PresenceRule(medium="text", field="title"),),
        field_rules=(FieldRule(source="title", target="text.title", transform="split-list"),),
    )
    with pytest.raises(InvalidMapping):
        validate_mapping(mapping)


# -- harvesting ---------------------------------------------------------------


def test_file_tree_harvest_sorted(tmp_path):
    descriptor = write_file_tree_source(tmp_path / "imgs", count=3)
    result = registry_with(descriptor).harvest("gallery")
    assert [r.local_id for r in result.records] == ["i001", "i002", "i003"]
    assert result.problems == ()


def test_tabular_harvest_with_one_corrupt_row(tmp_path):
    descriptor = write_tabular_source(tmp_path / "books.tsv", count=50, corrupt_line=True)
    result = registry_with(descriptor).harvest("lib")
    assert len(result.records) == 50
    assert len(result.problems) == 1
    assert result.problems[0].locator.startswith("line ")


def test_harvest_deterministic(tmp_path):
    descriptor = write_tabular_source(tmp_path / "books.tsv", count=20)
    registry = registry_with(descriptor)
    assert registry.harvest("lib") == registry.harvest("lib")


def test_remote_harvest():
    records = sound_records(count=5)
    with LineSourceServer(records) as server:
        descriptor = remote_source(server.endpoint)
        result = registry_with(descriptor).harvest("radio")
    assert [r.local_id for r in result.records] == sorted(records)
    assert result.records[0].raw_fields == records["s001"]


def test_remote_refused_connection():
    descriptor = remote_source(f"127.0.0.1:{closed_port()}")
    with pytest.raises(SourceUnreachable):
        registry_with(descriptor).harvest("radio")


def test_harvest_unknown_source():
    with pytest.raises(UnknownSource):
        SourceRegistry().harvest("nope")


def test_distinct_sources_harvest_concurrently(tmp_path):
    import threading

    registry = registry_with(
        write_tabular_source(tmp_path / "books.tsv", source_id="lib", count=30),
        write_file_tree_source(tmp_path / "imgs", source_id="gallery", count=30),
    )
    results: dict[str, object] = {}

    def harvest(source_id):
        results[source_id] = registry.harvest(source_id)

    threads = [threading.Thread(target=harvest, args=(sid,))
               for sid in ("lib", "gallery")]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(results["lib"].records) == 30
    assert len(results["gallery"].records) == 30
    assert results["lib"] == registry.harvest("lib")


def test_harvest_disabled_source(tmp_path):
    descriptor = write_tabular_source(tmp_path / "books.tsv")
    descriptor = dataclasses.replace(descriptor, enabled=False)
    registry = registry_with(descriptor)
    from mediacube.federation import SourceDisabled
    with pytest.raises(SourceDisabled):
        registry.harvest("lib")


# -- mapping to generic records ------------------------------------------------


def test_map_book_row_to_text_record():
    raw = SourceRecord("s01", "b1", {"kind": "book", "title": "X", "author": "Y"})
    mapping = FieldMapping(
        presence_rules=(PresenceRule(medium="text", field="kind", equals="book"),),
        field_rules=(
            FieldRule(source="title", target="text.title"),
            FieldRule(source="author", target="text.author"),
        ),
    )
    record = map_to_generic(raw, mapping)
    assert str(record.document_code) == "s01:b1"
    assert record.media_class is MediaClass.TEXT
    assert record.text.title == "X"
    assert record.text.author == "Y"


def test_map_without_medium_evidence():
    raw = SourceRecord("s01", "b1", {"title": "X"})
    with pytest.raises(PresenceUndecidable):
        map_to_generic(raw, BOOK_MAPPING)


def test_map_missing_required_image_field():
    raw = SourceRecord("g", "i1", {"shape": "oval", "format": "jpeg",
                                   "medium": "paper", "type": "sketch",
                                   "colour": ""})
    mapping = dataclasses.replace(
        IMAGE_MAPPING,
        presence_rules=(PresenceRule(medium="image", field="shape"),),
    )
    with pytest.raises(RequiredFieldMissing, match="image.dominant_colour"):
        map_to_generic(raw, mapping)


def test_map_applies_transforms_and_defaults():
    raw = SourceRecord("radio", "s1", {
        "artist": "A", "stype": "MUSIC", "when": "2022-03-04", "tags": "one, two"})
    record = map_to_generic(raw, mapping_from_dict(mapping_to_dict(SOUND_MAPPING)))
    assert record.sound.sound_type == "music"
    assert record.sound.publication_date == date(2022, 3, 4)
    assert record.sound.descriptors == ("one", "two")
    assert record.sound.target == "public"


def test_map_closed_vocabulary_violation_surfaces():
    raw = SourceRecord("g", "i1", {"colour": "MAUVE", "shape": "oval",
                                   "format": "jpeg", "medium": "paper",
                                   "type": "sketch"})
    with pytest.raises(MappedRecordInvalid, match="dominant_colour"):
        map_to_generic(raw, IMAGE_MAPPING)


def test_map_is_idempotent():
    raw = SourceRecord("s01", "b1", {"kind": "book", "title": "X",
                                     "published": "2020-01-02",
                                     "keywords": "a, b", "related": ""})
    assert map_to_generic(raw, BOOK_MAPPING) == map_to_generic(raw, BOOK_MAPPING)


def test_map_uri_field_takes_over():
    raw = SourceRecord("s01", "b1", {"kind": "book", "title": "X",
                                     "url": "https://example.org/d/7"})
    mapping = dataclasses.replace(BOOK_MAPPING, uri_field="url")
    record = map_to_generic(raw, mapping)
    assert record.document_code.is_uri
    assert str(record.document_code) == "https://example.org/d/7"


# -- resolve -------------------------------------------------------------------


def test_resolve_round_trip(tmp_path):
    descriptor = write_tabular_source(tmp_path / "books.tsv", source_id="s01", count=5)
    registry = registry_with(descriptor)
    harvested = {r.local_id: r for r in registry.harvest("s01").records}
    resolved = registry.resolve(parse_document_code("s01:b003"))
    assert resolved == harvested["b003"]


def test_resolve_missing_record(tmp_path):
    descriptor = write_tabular_source(tmp_path / "books.tsv", source_id="s01", count=5)
    with pytest.raises(NotFoundAtSource):
        registry_with(descriptor).resolve(parse_document_code("s01:ghost"))


def test_resolve_unknown_source():
    with pytest.raises(UnknownSource):
        SourceRegistry().resolve(parse_document_code("s99:b1"))


def test_resolve_uri_code_defers_fetch():
    record = SourceRegistry().resolve(parse_document_code("https://example.org/d/7"))
    assert record.raw_fields == {"uri": "https://example.org/d/7"}


def test_resolve_remote_record():
    records = sound_records(count=3)
    with LineSourceServer(records) as server:
        registry = registry_with(remote_source(server.endpoint))
        resolved = registry.resolve(parse_document_code("radio:s002"))
        assert resolved.raw_fields == records["s002"]
        with pytest.raises(NotFoundAtSource):
            registry.resolve(parse_document_code("radio:zzz"))


# -- ingest --------------------------------------------------------------------


def test_ingest_collects_problems_without_aborting(tmp_path):
    store = CatalogStore()
    store.sources.register(
        write_tabular_source(tmp_path / "books.tsv", count=10, corrupt_line=True))
    report = ingest_source(store, "lib")
    assert len(report.ingested) == 10
    assert len(report.problems) == 1
    for code in report.ingested:
        assert store.get_record(code) is not None


def test_ingest_round_trip_reproduces_descriptors(tmp_path):
    store = CatalogStore()
    descriptor = write_file_tree_source(tmp_path / "imgs", count=8)
    store.sources.register(descriptor)
    report = ingest_source(store, "gallery")
    assert len(report.ingested) == 8
    for code_text in report.ingested:
        code = parse_document_code(code_text)
        raw = store.sources.resolve(code)
        assert map_to_generic(raw, descriptor.mapping) == store.get_record(code)


# -- serialization ---------------------------------------------------------------


def test_mapping_dict_round_trip():
    data = mapping_to_dict(BOOK_MAPPING)
    assert mapping_from_dict(data) == BOOK_MAPPING


def test_source_dict_round_trip(tmp_path):
    descriptor = write_tabular_source(tmp_path / "books.tsv")
    data = source_to_dict(descriptor)
    assert data["adapter"] == "tabular"
    assert source_from_dict(data) == descriptor


def test_source_descriptor_bad_kind_rejected(tmp_path):
    descriptor = SourceDescriptor(source_id="x", kind="carrier-pigeon",
                                  location="nowhere", mapping=BOOK_MAPPING)
    with pytest.raises(InvalidMapping):
        SourceRegistry().register(descriptor)
