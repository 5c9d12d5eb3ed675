"""
Trace model: event vocabulary, record codec and per-host bundles.
"""

from .events import (
    EventKind,
    TraceEvent,
    SCHEMAS,
    INIT_KINDS,
    RUNTIME_KINDS,
    make_event,
    parse_event,
    serialize_event,
    validate_payload,
)
from .bundle import HostTrace, TraceBundle, load_bundle, read_trace_file, write_bundle
from .identity import ObjectKey, callback_uid, publication_uid

__all__ = [
    'EventKind',
    'TraceEvent',
    'SCHEMAS',
    'INIT_KINDS',
    'RUNTIME_KINDS',
    'make_event',
    'parse_event',
    'serialize_event',
    'validate_payload',
    'HostTrace',
    'TraceBundle',
    'load_bundle',
    'read_trace_file',
    'write_bundle',
    'ObjectKey',
    'callback_uid',
    'publication_uid',
]
