"""
Trace event vocabulary, payload schemas and the line-delimited record codec.

One record per line, one JSON object per record:

    {"ts":1000,"host":"A","pid":42,"tid":42,"kind":"timer_init","timer_handle":7,"period_ns":5000000}
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Mapping, Union

import orjson

from ..core.errors import MalformedRecord, SchemaViolation, UnknownKind

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1
MAX_GID_BYTES = 24

BASE_FIELDS = ("ts", "host", "pid", "tid", "kind")
LINK_TYPES = ("periodic_async", "partial_sync")


class EventKind(str, Enum):
    # Initialization
    NODE_INIT = "node_init"
    PUB_INIT_RCL = "pub_init_rcl"
    PUB_INIT_RMW = "pub_init_rmw"
    PUB_INIT_DDS = "pub_init_dds"
    SUB_INIT_RCL = "sub_init_rcl"
    SUB_INIT_RMW = "sub_init_rmw"
    CALLBACK_REGISTER = "callback_register"
    TIMER_INIT = "timer_init"
    TIMER_NODE_LINK = "timer_node_link"
    MESSAGE_LINK_ANNOTATION = "message_link_annotation"
    # Runtime
    PUBLISH_RCLCPP = "publish_rclcpp"
    PUBLISH_RCL = "publish_rcl"
    PUBLISH_RMW = "publish_rmw"
    DDS_WRITE = "dds_write"
    RMW_TAKE = "rmw_take"
    CALLBACK_START = "callback_start"
    CALLBACK_END = "callback_end"
    EXECUTOR_WAIT_BEGIN = "executor_wait_begin"
    EXECUTOR_WAIT_END = "executor_wait_end"
    EXECUTOR_EXECUTE_BEGIN = "executor_execute_begin"
    EXECUTOR_EXECUTE_END = "executor_execute_end"


# Field types: handle/int -> integer, str, bool, gid -> hex string,
# handles -> non-empty integer list, link_type -> one of LINK_TYPES
SCHEMAS: Dict[EventKind, Dict[str, str]] = {
    EventKind.NODE_INIT: {"node_handle": "handle", "node_name": "str", "node_namespace": "str"},
    EventKind.PUB_INIT_RCL: {
        "publisher_handle": "handle",
        "node_handle": "handle",
        "rmw_publisher_handle": "handle",
        "topic_name": "str",
    },
    EventKind.PUB_INIT_RMW: {"rmw_publisher_handle": "handle", "gid": "gid"},
    EventKind.PUB_INIT_DDS: {"writer_handle": "handle", "gid": "gid", "topic_name": "str"},
    EventKind.SUB_INIT_RCL: {
        "subscription_handle": "handle",
        "node_handle": "handle",
        "rmw_subscription_handle": "handle",
        "topic_name": "str",
    },
    EventKind.SUB_INIT_RMW: {"rmw_subscription_handle": "handle", "gid": "gid"},
    EventKind.CALLBACK_REGISTER: {"callback_ref": "handle", "owner_handle": "handle"},
    EventKind.TIMER_INIT: {"timer_handle": "handle", "period_ns": "int"},
    EventKind.TIMER_NODE_LINK: {"timer_handle": "handle", "node_handle": "handle"},
    EventKind.MESSAGE_LINK_ANNOTATION: {
        "link_type": "link_type",
        "subscription_handles": "handles",
        "publisher_handles": "handles",
    },
    EventKind.PUBLISH_RCLCPP: {"publisher_handle": "handle", "message_ref": "handle"},
    EventKind.PUBLISH_RCL: {"publisher_handle": "handle", "message_ref": "handle"},
    EventKind.PUBLISH_RMW: {"rmw_publisher_handle": "handle", "message_ref": "handle"},
    EventKind.DDS_WRITE: {"writer_handle": "handle", "message_ref": "handle", "source_timestamp": "int"},
    EventKind.RMW_TAKE: {
        "rmw_subscription_handle": "handle",
        "message_ref": "handle",
        "source_timestamp": "int",
        "taken": "bool",
    },
    EventKind.CALLBACK_START: {"callback_ref": "handle"},
    EventKind.CALLBACK_END: {"callback_ref": "handle"},
    EventKind.EXECUTOR_WAIT_BEGIN: {},
    EventKind.EXECUTOR_WAIT_END: {},
    EventKind.EXECUTOR_EXECUTE_BEGIN: {"target_handle": "handle"},
    EventKind.EXECUTOR_EXECUTE_END: {},
}

INIT_KINDS = frozenset({
    EventKind.NODE_INIT,
    EventKind.PUB_INIT_RCL,
    EventKind.PUB_INIT_RMW,
    EventKind.PUB_INIT_DDS,
    EventKind.SUB_INIT_RCL,
    EventKind.SUB_INIT_RMW,
    EventKind.CALLBACK_REGISTER,
    EventKind.TIMER_INIT,
    EventKind.TIMER_NODE_LINK,
    EventKind.MESSAGE_LINK_ANNOTATION,
})
RUNTIME_KINDS = frozenset(EventKind) - INIT_KINDS

PUBLISH_KINDS = frozenset({
    EventKind.PUBLISH_RCLCPP,
    EventKind.PUBLISH_RCL,
    EventKind.PUBLISH_RMW,
    EventKind.DDS_WRITE,
})
EXECUTOR_KINDS = frozenset({
    EventKind.EXECUTOR_WAIT_BEGIN,
    EventKind.EXECUTOR_WAIT_END,
    EventKind.EXECUTOR_EXECUTE_BEGIN,
    EventKind.EXECUTOR_EXECUTE_END,
})

_KIND_BY_VALUE = {kind.value: kind for kind in EventKind}


@dataclass(frozen=True, slots=True)
class TraceEvent:
    """One timestamped record from one host/process/thread."""

    timestamp: int
    host: str
    pid: int
    tid: int
    kind: EventKind
    payload: Mapping[str, Any]

    def __getitem__(self, key: str) -> Any:
        return self.payload[key]

    def to_record(self) -> Dict[str, Any]:
        record = {
            "ts": self.timestamp,
            "host": self.host,
            "pid": self.pid,
            "tid": self.tid,
            "kind": self.kind.value,
        }
        record.update(self.payload)
        return record


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check_int64(name: str, value: Any) -> int:
    if not _is_int(value):
        raise SchemaViolation(f"field {name!r} must be an integer, got {type(value).__name__}")
    if not INT64_MIN <= value <= INT64_MAX:
        raise SchemaViolation(f"field {name!r} out of signed 64-bit range")
    return value


def _check_field(name: str, ftype: str, value: Any) -> Any:
    if ftype in ("handle", "int"):
        return _check_int64(name, value)
    if ftype == "str":
        if not isinstance(value, str):
            raise SchemaViolation(f"field {name!r} must be a string")
        return value
    if ftype == "bool":
        if not isinstance(value, bool):
            raise SchemaViolation(f"field {name!r} must be a boolean")
        return value
    if ftype == "gid":
        if not isinstance(value, str):
            raise SchemaViolation(f"field {name!r} must be a hex string")
        if not value or len(value) % 2 or len(value) > 2 * MAX_GID_BYTES:
            raise SchemaViolation(f"field {name!r} must encode 1-{MAX_GID_BYTES} bytes")
        try:
            bytes.fromhex(value)
        except ValueError:
            raise SchemaViolation(f"field {name!r} is not valid hex") from None
        return value.lower()
    if ftype == "handles":
        if not isinstance(value, list) or not value:
            raise SchemaViolation(f"field {name!r} must be a non-empty array")
        return [_check_int64(name, v) for v in value]
    if ftype == "link_type":
        if value not in LINK_TYPES:
            raise SchemaViolation(f"field {name!r} must be one of {', '.join(LINK_TYPES)}")
        return value
    raise AssertionError(f"unknown field type {ftype}")


def validate_payload(kind: EventKind, payload: Mapping[str, Any]) -> Dict[str, Any]:
    """Check payload against the kind's schema; returns the normalized payload."""
    schema = SCHEMAS[kind]
    missing = [name for name in schema if name not in payload]
    if missing:
        raise SchemaViolation(f"{kind.value}: missing field(s) {', '.join(missing)}")
    extra = [name for name in payload if name not in schema]
    if extra:
        raise SchemaViolation(f"{kind.value}: unexpected field(s) {', '.join(sorted(extra))}")
    return {name: _check_field(name, ftype, payload[name]) for name, ftype in schema.items()}


def make_event(
    timestamp: int,
    host: str,
    pid: int,
    tid: int,
    kind: Union[EventKind, str],
    **payload: Any,
) -> TraceEvent:
    """Build a validated event from Python values."""
    kind = EventKind(kind)
    return event_from_record({
        "ts": timestamp, "host": host, "pid": pid, "tid": tid, "kind": kind.value, **payload,
    })


def event_from_record(record: Any) -> TraceEvent:
    if not isinstance(record, dict):
        raise MalformedRecord("record is not a JSON object")

    kind_value = record.get("kind")
    if kind_value is None:
        raise SchemaViolation("missing field 'kind'")
    if not isinstance(kind_value, str):
        raise SchemaViolation("field 'kind' must be a string")
    kind = _KIND_BY_VALUE.get(kind_value)
    if kind is None:
        raise UnknownKind(repr(kind_value))

    for name in BASE_FIELDS:
        if name not in record:
            raise SchemaViolation(f"missing field {name!r}")

    ts = _check_int64("ts", record["ts"])
    if ts < 0:
        raise SchemaViolation(f"negative timestamp {ts}")
    host = record["host"]
    if not isinstance(host, str) or not host:
        raise SchemaViolation("field 'host' must be a non-empty string")
    pid = _check_int64("pid", record["pid"])
    tid = _check_int64("tid", record["tid"])

    payload = {k: v for k, v in record.items() if k not in BASE_FIELDS}
    return TraceEvent(ts, host, pid, tid, kind, validate_payload(kind, payload))


def parse_event(line: Union[str, bytes]) -> TraceEvent:
    """Parse and validate one trace record."""
    try:
        record = orjson.loads(line)
    except orjson.JSONDecodeError as e:
        raise MalformedRecord(str(e)) from None
    return event_from_record(record)


def serialize_event(event: TraceEvent) -> str:
    return orjson.dumps(event.to_record()).decode()
