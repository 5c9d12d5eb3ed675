import orjson
import pytest
from hypothesis import given, strategies as st

from msgflow.core.errors import MalformedRecord, ParseError, SchemaViolation, UnknownKind
from msgflow.trace.events import EventKind, SCHEMAS, make_event, parse_event, serialize_event
from msgflow.trace.identity import ObjectKey


def _line(**record) -> str:
    base = {"ts": 10, "host": "A", "pid": 1, "tid": 1}
    base.update(record)
    return orjson.dumps(base).decode()


def test_every_kind_has_a_schema():
    assert set(SCHEMAS) == set(EventKind)
    assert len(EventKind) == 21


def test_parse_timer_init():
    event = parse_event(_line(kind="timer_init", timer_handle=7, period_ns=5_000_000))
    assert event.kind is EventKind.TIMER_INIT
    assert event.timestamp == 10
    assert event["period_ns"] == 5_000_000


def test_unknown_kind():
    with pytest.raises(UnknownKind):
        parse_event(_line(kind="context_switch"))


def test_invalid_json():
    with pytest.raises(MalformedRecord):
        parse_event("{\"ts\": 1,")


def test_non_object_record():
    with pytest.raises(MalformedRecord):
        parse_event("[1, 2, 3]")


def test_missing_payload_field():
    with pytest.raises(SchemaViolation, match="message_ref"):
        parse_event(_line(kind="publish_rcl", publisher_handle=3))


def test_extra_payload_field():
    with pytest.raises(SchemaViolation, match="unexpected"):
        parse_event(_line(kind="executor_wait_end", target_handle=3))


def test_negative_timestamp():
    with pytest.raises(SchemaViolation, match="negative"):
        parse_event(_line(ts=-1, kind="executor_wait_begin"))


def test_bool_is_not_an_integer():
    with pytest.raises(SchemaViolation):
        parse_event(_line(kind="callback_start", callback_ref=True))


def _raw_callback_start(callback_ref: str) -> str:
    return ('{"ts": 10, "host": "A", "pid": 1, "tid": 1, "kind": "callback_start", '
            f'"callback_ref": {callback_ref}}}')


def test_out_of_range_integer():
    with pytest.raises(SchemaViolation, match="64-bit"):
        parse_event(_raw_callback_start(str(1 << 63)))
    with pytest.raises(SchemaViolation):
        parse_event(_raw_callback_start(str(1 << 64)))
    assert parse_event(_raw_callback_start(str((1 << 63) - 1))).payload["callback_ref"] == (1 << 63) - 1


def test_taken_must_be_boolean():
    with pytest.raises(SchemaViolation):
        parse_event(_line(kind="rmw_take", rmw_subscription_handle=1, message_ref=2,
                          source_timestamp=3, taken=1))


@pytest.mark.parametrize("gid", ["", "abc", "zz", "00" * 25])
def test_bad_gid(gid):
    with pytest.raises(SchemaViolation):
        parse_event(_line(kind="pub_init_rmw", rmw_publisher_handle=1, gid=gid))


def test_gid_is_lowercased():
    event = parse_event(_line(kind="pub_init_rmw", rmw_publisher_handle=1, gid="0A0B"))
    assert event["gid"] == "0a0b"


def test_annotation_link_type_checked():
    with pytest.raises(SchemaViolation):
        make_event(1, "A", 1, 1, "message_link_annotation", link_type="exact_sync",
                   subscription_handles=[1], publisher_handles=[2])


def test_annotation_handles_must_be_non_empty():
    with pytest.raises(SchemaViolation):
        make_event(1, "A", 1, 1, "message_link_annotation", link_type="partial_sync",
                   subscription_handles=[], publisher_handles=[2])


def test_empty_host_rejected():
    with pytest.raises(SchemaViolation):
        parse_event(_line(host="", kind="executor_wait_begin"))


@given(
    ts=st.integers(min_value=0, max_value=(1 << 63) - 1),
    pid=st.integers(min_value=1, max_value=1 << 31),
    handle=st.integers(min_value=-(1 << 63), max_value=(1 << 63) - 1),
    src=st.integers(min_value=0, max_value=(1 << 63) - 1),
)
def test_serialize_then_parse_preserves_dds_write(ts, pid, handle, src):
    event = make_event(ts, "host-1", pid, pid + 1, EventKind.DDS_WRITE,
                       writer_handle=handle, message_ref=handle, source_timestamp=src)
    assert parse_event(serialize_event(event)) == event


def test_object_key_text_form():
    key = ObjectKey("ecu1", 42, 4096)
    assert str(key) == "ecu1:42:4096"
    assert ObjectKey.parse("ecu1:42:4096") == key
    assert ObjectKey.parse("ecu1:42:0x1000") == key


def test_object_key_host_may_contain_colons():
    assert ObjectKey.parse("fe80::1:7:9") == ObjectKey("fe80::1", 7, 9)


@given(st.binary(max_size=200))
def test_arbitrary_bytes_parse_or_raise_parse_error(data):
    try:
        parse_event(data)
    except ParseError:
        pass
