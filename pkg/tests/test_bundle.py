import pytest

from msgflow.core.errors import DuplicateHost, MalformedRecord, SchemaViolation
from msgflow.trace.bundle import TraceBundle, load_bundle, read_trace_file, write_bundle
from msgflow.trace.events import make_event

from tracekit import HostKit, bundle_of


def _write(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_events_sorted_stably_by_timestamp(tmp_path):
    path = _write(tmp_path / "a.jsonl", [
        '{"ts":30,"host":"A","pid":1,"tid":1,"kind":"executor_wait_begin"}',
        '{"ts":10,"host":"A","pid":1,"tid":1,"kind":"callback_start","callback_ref":1}',
        '{"ts":10,"host":"A","pid":1,"tid":1,"kind":"callback_end","callback_ref":1}',
    ])
    trace = read_trace_file(path)
    assert trace.host == "A"
    assert [e.kind.value for e in trace.events] == ["callback_start", "callback_end", "executor_wait_begin"]


def test_parse_error_carries_file_and_line(tmp_path):
    path = _write(tmp_path / "a.jsonl", [
        '{"ts":1,"host":"A","pid":1,"tid":1,"kind":"executor_wait_begin"}',
        '',
        '{"ts":2,"host":"A",',
    ])
    with pytest.raises(MalformedRecord) as info:
        read_trace_file(path)
    assert info.value.line == 3
    assert info.value.path == str(path)
    assert f"{path}:3:" in str(info.value)


def test_invalid_utf8_is_a_malformed_record(tmp_path):
    path = tmp_path / "a.jsonl"
    path.write_bytes(b'{"ts":1,"host":"A","pid":1,"tid":1,"kind":"executor_wait_begin"}\n'
                     b'{"kind": "rcl_init", "ts": 1\xff\xfe}\n')
    with pytest.raises(MalformedRecord) as info:
        load_bundle([path])
    assert info.value.line == 2


def test_mixed_hosts_in_one_file(tmp_path):
    path = _write(tmp_path / "a.jsonl", [
        '{"ts":1,"host":"A","pid":1,"tid":1,"kind":"executor_wait_begin"}',
        '{"ts":2,"host":"B","pid":1,"tid":1,"kind":"executor_wait_end"}',
    ])
    with pytest.raises(SchemaViolation, match="differs"):
        read_trace_file(path)


def test_empty_file_named_after_stem(tmp_path):
    path = _write(tmp_path / "ecu9.jsonl", [])
    trace = read_trace_file(path)
    assert trace.host == "ecu9"
    assert len(trace) == 0


def test_duplicate_host(tmp_path):
    line = '{"ts":1,"host":"A","pid":1,"tid":1,"kind":"executor_wait_begin"}'
    a = _write(tmp_path / "a.jsonl", [line])
    b = _write(tmp_path / "b.jsonl", [line])
    with pytest.raises(DuplicateHost) as info:
        load_bundle([a, b])
    assert info.value.host == "A"


def test_load_without_paths_is_empty():
    bundle = load_bundle([])
    assert bundle.hosts == []
    assert bundle.event_count == 0


def test_write_then_load(tmp_path):
    a = HostKit("A", pid=10)
    node = a.node("talker")
    pub = a.publisher(node, "/chatter")
    a.publish(pub, 1000)
    b = HostKit("B", pid=20)
    b.node("listener")
    bundle = bundle_of(a, b)

    paths = write_bundle(bundle, tmp_path / "out")
    assert sorted(p.name for p in paths) == ["A.jsonl", "B.jsonl"]
    loaded = load_bundle(paths)
    assert loaded.hosts == ["A", "B"]
    assert [t.events for t in loaded.traces] == [t.events for t in bundle.traces]


def test_from_events_rejects_foreign_host():
    event = make_event(1, "B", 1, 1, "executor_wait_begin")
    with pytest.raises(SchemaViolation):
        TraceBundle.from_events({"A": [event]})


def test_unknown_host_lookup():
    with pytest.raises(KeyError):
        TraceBundle(()).trace("nowhere")
