"""
Core utilities for msgflow.
Provides configuration, errors, serialization and caching.
"""

from .config import (
    AnalysisConfig,
    SyncMode,
    TF_TOPIC,
    STATE_COLORS,
    EDGE_COLORS,
)
from .errors import (
    MsgflowError,
    TraceError,
    ParseError,
    MalformedRecord,
    UnknownKind,
    SchemaViolation,
    DuplicateHost,
    SyncError,
    Disconnected,
    InfeasibleOffsets,
    SeedNotFound,
    FlowGraphError,
    InvalidConfig,
    DocumentVersionError,
)
from .utils import make_json_serializable, dumps_document, read_document, write_document
from .cache import compute_data_hash, AnalysisCache

__all__ = [
    'AnalysisConfig',
    'SyncMode',
    'TF_TOPIC',
    'STATE_COLORS',
    'EDGE_COLORS',
    'MsgflowError',
    'TraceError',
    'ParseError',
    'MalformedRecord',
    'UnknownKind',
    'SchemaViolation',
    'DuplicateHost',
    'SyncError',
    'Disconnected',
    'InfeasibleOffsets',
    'SeedNotFound',
    'FlowGraphError',
    'InvalidConfig',
    'DocumentVersionError',
    'make_json_serializable',
    'dumps_document',
    'read_document',
    'write_document',
    'compute_data_hash',
    'AnalysisCache',
]
