"""Shared exception base for the mediacube package.

Every domain error raised by the package derives from :class:`MediaCubeError`
so callers (notably the CLI and the query service) can map any failure to the
error case name without enumerating modules.
"""

from __future__ import annotations


class MediaCubeError(Exception):
    """Base class for all domain errors."""

    @property
    def case(self) -> str:
        """Stable name of the error case, e.g. ``UnknownSource``."""
        return type(self).__name__
