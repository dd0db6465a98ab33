"""Brute-force reference implementations the analytics tests check against.

Deliberately independent of the package's grouping code: filtering,
bucketing, and ordering are re-derived here from first principles.
"""

from __future__ import annotations

import random
from datetime import date, datetime, timedelta, timezone

from mediacube import (
    CatalogStore,
    CubeQuery,
    DimensionFilter,
    DocumentCode,
    GenericRecord,
    MediaClass,
    TextDescriptor,
    UsageEvent,
    UserProfile,
    cube_query,
    parse_document_code,
)

DIMS = ("document", "context", "user", "time")


def _bucket(ts: datetime, granularity: str) -> str:
    utc = ts.astimezone(timezone.utc)
    if granularity == "year":
        return f"{utc.year:04d}"
    if granularity == "month":
        return f"{utc.year:04d}-{utc.month:02d}"
    return f"{utc.year:04d}-{utc.month:02d}-{utc.day:02d}"


def _event_value(event: UsageEvent, dim: str, granularity: str) -> str:
    if dim == "document":
        return str(event.document_code)
    if dim == "context":
        return event.context
    if dim == "user":
        return event.user_id
    return _bucket(event.timestamp, granularity)


def _keep(event: UsageEvent, fixed: dict) -> bool:
    for dim, wanted in fixed.items():
        if dim == "time":
            ts = event.timestamp.astimezone(timezone.utc)
            if isinstance(wanted, tuple):
                start, end = wanted
                if ts < start or ts >= end:
                    return False
            else:
                if (ts.year, ts.month, ts.day) != (wanted.year, wanted.month, wanted.day):
                    return False
        elif _event_value(event, dim, "day") != str(wanted):
            return False
    return True


def brute_force_cube(events, fixed: dict, granularity: str = "day"):
    """Filter-then-group scan. Returns (ordered cell keys, cells, total).

    ``fixed`` maps dimension names to fixed values; document values may be
    code strings. Cells map each free-dimension key tuple to the sorted
    list of contributing event ids.
    """
    free = [d for d in DIMS if d not in fixed]
    cells: dict[tuple, list[int]] = {}
    total = 0
    for event in events:
        if not _keep(event, fixed):
            continue
        key = tuple(_event_value(event, d, granularity) for d in free)
        cells.setdefault(key, []).append(event.event_id)
        total += 1
    for ids in cells.values():
        ids.sort()
    return sorted(cells), cells, total


def dimension_filter_from(fixed: dict) -> DimensionFilter:
    """Build a DimensionFilter from an oracle-style fixed-value dict."""
    prepared = dict(fixed)
    if "document" in prepared:
        prepared["document"] = parse_document_code(str(prepared["document"]))
    return DimensionFilter(**prepared)


def assert_cube_matches_oracle(snapshot, fixed: dict, granularity: str = "day"):
    """Cell-for-cell equality of cube_query and the brute-force scan."""
    result = cube_query(snapshot, CubeQuery(fixed=dimension_filter_from(fixed),
                                            time_granularity=granularity))
    keys, cells, total = brute_force_cube(snapshot.events, fixed, granularity)
    assert [c.key for c in result.cells] == keys
    assert {c.key: list(c.event_ids) for c in result.cells} == cells
    assert all(c.count == len(c.event_ids) for c in result.cells)
    assert result.total == total
    return result


# ---------------------------------------------------------------------------
# Randomized catalogs
# ---------------------------------------------------------------------------

STATIC = ("teaching", "learning", "documentation", "entertainment")
SOCIAL = ("student", "teacher", "analyst", None)
WINDOW_START = date(2024, 1, 1)
WINDOW_DAYS = 60


def _text_record(code: DocumentCode) -> GenericRecord:
    return GenericRecord(
        document_code=code,
        media_class=MediaClass.TEXT,
        text=TextDescriptor(title=code.local_id.upper()),
    )


def random_store(rng: random.Random, max_docs: int = 50, max_users: int = 20,
                 max_contexts: int = 10, max_events: int = 1000) -> CatalogStore:
    """A store with random documents, users, contexts, and usage events."""
    store = CatalogStore()
    codes = [DocumentCode.compound("fx", f"d{i:02d}")
             for i in range(rng.randint(1, max_docs))]
    for code in codes:
        store.put_record(_text_record(code))
    users = [f"u{i:02d}" for i in range(rng.randint(1, max_users))]
    for user_id in users:
        store.register_user(UserProfile(
            user_id=user_id, name=user_id.upper(), social_class=rng.choice(SOCIAL)))
    n_contexts = rng.randint(1, max_contexts)
    contexts = list(STATIC[:min(n_contexts, 4)])
    contexts += [f"ctx{i}" for i in range(n_contexts - len(contexts))]

    for _ in range(rng.randint(0, max_events)):
        day = WINDOW_START + timedelta(days=rng.randrange(WINDOW_DAYS))
        ts = datetime(day.year, day.month, day.day,
                      rng.randrange(24), rng.randrange(60), rng.randrange(60),
                      tzinfo=timezone.utc)
        store.record_usage(UsageEvent(
            document_code=rng.choice(codes),
            context=rng.choice(contexts),
            user_id=rng.choice(users),
            timestamp=ts,
            use_type=rng.choice(("repetitive", "occasional")),
        ))
    return store


def draw_fixed(rng: random.Random, snapshot, dims: tuple[str, ...]) -> dict:
    """Random fixed values for ``dims``, drawn from the snapshot's populations."""
    fixed: dict = {}
    for dim in dims:
        if dim == "document":
            fixed[dim] = str(rng.choice(snapshot.records).document_code)
        elif dim == "context":
            fixed[dim] = rng.choice(sorted(snapshot.context_labels))
        elif dim == "user":
            fixed[dim] = rng.choice(snapshot.users).user_id
        else:
            day = WINDOW_START + timedelta(days=rng.randrange(WINDOW_DAYS))
            if rng.random() < 0.5:
                fixed[dim] = day
            else:
                start = datetime(day.year, day.month, day.day, tzinfo=timezone.utc)
                end = start + timedelta(days=rng.randint(1, 14))
                fixed[dim] = (start, end)
    return fixed


def all_dimension_subsets() -> list[tuple[str, ...]]:
    """All 16 subsets of the four dimensions, in pattern order."""
    subsets = []
    for doc in (False, True):
        for ctx in (False, True):
            for user in (False, True):
                for time_ in (False, True):
                    dims = tuple(
                        d for d, on in zip(DIMS, (doc, ctx, user, time_)) if on)
                    subsets.append(dims)
    subsets.sort(key=lambda dims: (("document" in dims) * 8 + ("context" in dims) * 4
                                   + ("user" in dims) * 2 + ("time" in dims)))
    return subsets
