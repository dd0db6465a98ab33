"""Four-dimensional usage analytics over catalog snapshots.

Every query fixes a subset of the dimensions Document, Context, User, Time
and aggregates event counts over the free ones. The sixteen fix/aggregate
combinations are numbered 1..16; derived reports (document importance,
user interest, usage evolution, use-type ratio, social-class cross-tab)
are re-groupings of the same cube.

All operations are pure functions over an immutable snapshot and return
deterministically ordered results.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from datetime import date, datetime, timezone
from typing import NamedTuple

from .codes import DocumentCode
from .errors import MediaCubeError
from .store import (
    CatalogSnapshot,
    UnknownContext,
    UnknownDocument,
    UnknownUser,
    UsageEvent,
    normalize_timestamp,
)

DIMENSIONS = ("document", "context", "user", "time")
GRANULARITIES = ("day", "month", "year")


class InvalidTimeRange(MediaCubeError):
    pass


class InvalidGranularity(MediaCubeError):
    pass


@dataclass(frozen=True)
class DimensionFilter:
    """A partial fixing of the four dimensions.

    ``time`` is either an exact UTC day or a half-open instant range
    ``(start, end)``.
    """

    document: DocumentCode | None = None
    context: str | None = None
    user: str | None = None
    time: date | tuple[datetime, datetime] | None = None

    def __post_init__(self):
        if isinstance(self.time, tuple):
            start, end = self.time
            object.__setattr__(self, "time",
                               (normalize_timestamp(start), normalize_timestamp(end)))

    def fixed_dimensions(self) -> tuple[str, ...]:
        return tuple(d for d in DIMENSIONS if getattr(self, d) is not None)


@dataclass(frozen=True)
class CubeQuery:
    fixed: DimensionFilter = DimensionFilter()
    time_granularity: str = "day"


@dataclass(frozen=True)
class CubeCell:
    """One group: free-dimension values, its count, and the contributing events."""

    key: tuple[str, ...]
    count: int
    event_ids: tuple[int, ...]


@dataclass(frozen=True)
class CubeResult:
    pattern: int
    free_dimensions: tuple[str, ...]
    cells: tuple[CubeCell, ...]
    total: int

    def to_tsv(self) -> str:
        """Tab-separated table: free-dimension header, one row per cell, TOTAL."""
        lines = ["\t".join(self.free_dimensions + ("count",))]
        for cell in self.cells:
            lines.append("\t".join(cell.key + (str(cell.count),)))
        lines.append(f"TOTAL\t{self.total}")
        return "\n".join(lines) + "\n"


def pattern_id(query: CubeQuery) -> int:
    """Row number (1..16) of the query's fix/aggregate combination."""
    fixed = query.fixed.fixed_dimensions()
    return (1
            + 8 * ("document" in fixed)
            + 4 * ("context" in fixed)
            + 2 * ("user" in fixed)
            + 1 * ("time" in fixed))


def time_bucket(timestamp: datetime, granularity: str) -> str:
    """Bucket label of a UTC instant at day, month, or year granularity."""
    utc = timestamp.astimezone(timezone.utc)
    if granularity == "day":
        return utc.strftime("%Y-%m-%d")
    if granularity == "month":
        return utc.strftime("%Y-%m")
    if granularity == "year":
        return utc.strftime("%Y")
    raise InvalidGranularity(f"granularity must be one of {GRANULARITIES}, got {granularity!r}")


def _check_fixed(snapshot: CatalogSnapshot, fixed: DimensionFilter) -> None:
    if fixed.document is not None and str(fixed.document) not in snapshot.record_by_code:
        raise UnknownDocument(f"no record for {fixed.document}")
    if fixed.context is not None and fixed.context not in snapshot.context_labels:
        raise UnknownContext(f"context {fixed.context!r} not in the registry")
    if fixed.user is not None and fixed.user not in snapshot.user_by_id:
        raise UnknownUser(f"user {fixed.user!r} is not registered")
    if isinstance(fixed.time, tuple):
        start, end = fixed.time
        if not start < end:
            raise InvalidTimeRange(f"empty time range [{start}, {end})")


def _matches(event: UsageEvent, fixed: DimensionFilter) -> bool:
    if fixed.document is not None and str(event.document_code) != str(fixed.document):
        return False
    if fixed.context is not None and event.context != fixed.context:
        return False
    if fixed.user is not None and event.user_id != fixed.user:
        return False
    if fixed.time is not None:
        utc = event.timestamp.astimezone(timezone.utc)
        if isinstance(fixed.time, tuple):
            start, end = fixed.time
            if not (start <= utc < end):
                return False
        elif utc.date() != fixed.time:
            return False
    return True


def _key_value(event: UsageEvent, dimension: str, granularity: str) -> str:
    if dimension == "document":
        return str(event.document_code)
    if dimension == "context":
        return event.context
    if dimension == "user":
        return event.user_id
    return time_bucket(event.timestamp, granularity)


def cube_query(snapshot: CatalogSnapshot, query: CubeQuery) -> CubeResult:
    """Group the events matching the fixed dimensions by the free ones.

    Equivalent to filtering the event list and counting per group; empty
    groups are omitted, cells come sorted by key, and each cell retains
    the contributing event ids.
    """
    if query.time_granularity not in GRANULARITIES:
        raise InvalidGranularity(
            f"granularity must be one of {GRANULARITIES}, got {query.time_granularity!r}")
    _check_fixed(snapshot, query.fixed)
    free = tuple(d for d in DIMENSIONS if d not in query.fixed.fixed_dimensions())

    groups: dict[tuple[str, ...], list[int]] = {}
    for event in snapshot.events:
        if not _matches(event, query.fixed):
            continue
        key = tuple(_key_value(event, d, query.time_granularity) for d in free)
        groups.setdefault(key, []).append(event.event_id)

    cells = tuple(
        CubeCell(key=key, count=len(ids), event_ids=tuple(ids))
        for key, ids in sorted(groups.items())
    )
    return CubeResult(
        pattern=pattern_id(query),
        free_dimensions=free,
        cells=cells,
        total=sum(cell.count for cell in cells),
    )


# ---------------------------------------------------------------------------
# Derived reports
# ---------------------------------------------------------------------------


class UserInterest(NamedTuple):
    contexts: dict[str, int]
    documents: dict[str, int]


class UseTypeCounts(NamedTuple):
    repetitive: int
    occasional: int


def document_importance(snapshot: CatalogSnapshot) -> list[tuple[str, int]]:
    """Documents ranked by total usage, count descending, code ascending."""
    counts = Counter(str(e.document_code) for e in snapshot.events)
    return sorted(counts.items(), key=lambda item: (-item[1], item[0]))


def user_interest(snapshot: CatalogSnapshot, user_id: str) -> UserInterest:
    """Per-context and per-document usage counts for one user."""
    if user_id not in snapshot.user_by_id:
        raise UnknownUser(f"user {user_id!r} is not registered")
    contexts: Counter[str] = Counter()
    documents: Counter[str] = Counter()
    for event in snapshot.events:
        if event.user_id == user_id:
            contexts[event.context] += 1
            documents[str(event.document_code)] += 1
    return UserInterest(
        contexts=dict(sorted(contexts.items())),
        documents=dict(sorted(documents.items())),
    )


def usage_evolution(snapshot: CatalogSnapshot, granularity: str = "day") -> list[tuple[str, int]]:
    """Event counts per time bucket, ascending; empty buckets omitted."""
    counts = Counter(time_bucket(e.timestamp, granularity) for e in snapshot.events)
    return sorted(counts.items())


def usage_type_ratio(snapshot: CatalogSnapshot) -> UseTypeCounts:
    """How often documents were used repetitively versus occasionally."""
    repetitive = sum(1 for e in snapshot.events if e.use_type == "repetitive")
    return UseTypeCounts(repetitive=repetitive, occasional=len(snapshot.events) - repetitive)


def context_by_social_class(snapshot: CatalogSnapshot) -> dict[tuple[str, str], int]:
    """Cross-tab of (social class, context) event counts.

    Users without a social class count under ``"unspecified"``.
    """
    counts: Counter[tuple[str, str]] = Counter()
    for event in snapshot.events:
        profile = snapshot.user_by_id.get(event.user_id)
        social = profile.social_class if profile and profile.social_class else "unspecified"
        counts[(social, event.context)] += 1
    return dict(sorted(counts.items()))
