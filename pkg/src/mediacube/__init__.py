"""Federated multimedia metadata catalog with usage-cube analytics."""

from .analytics import (
    CubeCell,
    CubeQuery,
    CubeResult,
    DimensionFilter,
    context_by_social_class,
    cube_query,
    document_importance,
    pattern_id,
    usage_evolution,
    usage_type_ratio,
    user_interest,
)
from .codes import DocumentCode, format_document_code, parse_document_code
from .descriptors import (
    BUILTIN_VOCABULARIES,
    ControlledVocabulary,
    GenericRecord,
    ImageDescriptor,
    SoundDescriptor,
    TextDescriptor,
    attach_descriptor,
    validate_record,
)
from .errors import MediaCubeError
from .federation import (
    FieldMapping,
    FieldRule,
    PresenceRule,
    SourceDescriptor,
    SourceRecord,
    ingest_source,
    map_to_generic,
)
from .store import CatalogSnapshot, CatalogStore, ContextEntry, UsageEvent, UserProfile
from .taxonomy import MediaClass, MediaPresence, classify, decompose, subsumes

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_VOCABULARIES",
    "CatalogSnapshot",
    "CatalogStore",
    "ContextEntry",
    "ControlledVocabulary",
    "CubeCell",
    "CubeQuery",
    "CubeResult",
    "DimensionFilter",
    "DocumentCode",
    "FieldMapping",
    "FieldRule",
    "GenericRecord",
    "ImageDescriptor",
    "MediaClass",
    "MediaCubeError",
    "MediaPresence",
    "PresenceRule",
    "SoundDescriptor",
    "SourceDescriptor",
    "SourceRecord",
    "TextDescriptor",
    "UsageEvent",
    "UserProfile",
    "attach_descriptor",
    "classify",
    "context_by_social_class",
    "cube_query",
    "decompose",
    "document_importance",
    "format_document_code",
    "ingest_source",
    "map_to_generic",
    "parse_document_code",
    "pattern_id",
    "subsumes",
    "usage_evolution",
    "usage_type_ratio",
    "user_interest",
    "validate_record",
]
