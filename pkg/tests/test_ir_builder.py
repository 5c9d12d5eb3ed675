from msgflow.analysis.ir import DiagnosticCode, ExecutorState, IrDatabase
from msgflow.analysis.ir_builder import build_ir, fold_executor, fold_publication
from msgflow.trace.events import make_event
from msgflow.trace.identity import ObjectKey

from tracekit import HostKit, bundle_of


def _codes(db):
    return [d.code for d in db.diagnostics]


def _talker_listener():
    kit = HostKit("A", pid=100)
    talker = kit.node("talker")
    listener = kit.node("listener", "/ns")
    timer = kit.timer(talker, 10_000_000)
    pub = kit.publisher(talker, "/chatter")
    sub = kit.subscription(listener, "/chatter")
    return kit, timer, pub, sub


def test_objects_correlated_across_layers():
    kit, timer, pub, sub = _talker_listener()
    db = build_ir(bundle_of(kit))

    rec = db.publishers[ObjectKey("A", 100, pub)]
    assert rec.complete
    assert rec.topic == "/chatter"
    assert rec.writer_handle == kit.writer[pub]
    assert db.node_name_of(rec.key) == "/talker"
    assert db.node_name_of(ObjectKey("A", 100, sub)) == "/ns/listener"
    assert db.timers[ObjectKey("A", 100, timer)].period_ns == 10_000_000
    assert db.subscriptions[ObjectKey("A", 100, sub)].callback_ref == kit.callback_ref[sub]
    assert db.diagnostics == ()


def test_timer_publication_and_reception():
    kit, timer, pub, sub = _talker_listener()
    kit.callback(timer, 1000, 2000)
    src = kit.publish(pub, 1100)
    kit.receive(sub, 1300, src, 1310, 1500, tid=101)
    db = build_ir(bundle_of(kit))

    (p,) = db.publication_instances
    assert p.uid == kit.pub_uid(pub, src)
    assert (p.rclcpp_ts, p.rcl_ts, p.rmw_ts, p.dds_ts) == (1100, 1101, 1102, 1103)
    assert p.pub_ts == 1100
    assert p.layer_durations() == {"rclcpp->rcl": 1, "rcl->rmw": 1, "rmw->dds": 1}

    timer_cb, sub_cb = sorted(db.callback_instances, key=lambda c: c.start)
    assert timer_cb.owner_kind == "timer"
    assert timer_cb.uid == kit.cb_uid(timer, 1000)
    assert sub_cb.is_subscription
    assert sub_cb.topic == "/chatter"
    assert sub_cb.take_ts == 1300
    assert sub_cb.taken_source_timestamp == src
    assert sub_cb.duration == 190
    assert db.stats["runtime_events"] == db.stats["folded_events"] + db.stats["diagnostic_events"]


def test_publication_without_dds_write():
    kit, timer, pub, sub = _talker_listener()
    kit.emit(1000, "publish_rclcpp", publisher_handle=pub, message_ref=1)
    kit.emit(1001, "publish_rcl", publisher_handle=pub, message_ref=1)
    db = build_ir(bundle_of(kit))
    assert db.publication_instances == ()
    assert _codes(db) == [DiagnosticCode.INCOMPLETE_PUBLICATION]
    assert db.diagnostics[0].event_count == 2
    assert db.stats["runtime_events"] == db.stats["folded_events"] + db.stats["diagnostic_events"]


def test_fold_publication_layer_order_violation():
    key = ObjectKey("A", 1, 5)
    events = [
        make_event(10, "A", 1, 1, "publish_rcl", publisher_handle=5, message_ref=9),
        make_event(11, "A", 1, 1, "publish_rclcpp", publisher_handle=5, message_ref=9),
        make_event(12, "A", 1, 1, "dds_write", writer_handle=7, message_ref=9, source_timestamp=12),
    ]
    instance, diagnostics = fold_publication(events, key, "/t")
    assert instance is not None
    assert instance.rclcpp_ts is None
    assert instance.pub_ts == 10
    assert [d.code for d in diagnostics] == [DiagnosticCode.LAYER_ORDER_VIOLATION]


def test_fold_publication_incomplete():
    events = [make_event(10, "A", 1, 1, "publish_rclcpp", publisher_handle=5, message_ref=9)]
    instance, diagnostics = fold_publication(events, ObjectKey("A", 1, 5), "/t")
    assert instance is None
    assert [d.code for d in diagnostics] == [DiagnosticCode.INCOMPLETE_PUBLICATION]


def test_layer_order_violation_in_trace():
    kit, timer, pub, sub = _talker_listener()
    kit.emit(1000, "publish_rcl", publisher_handle=pub, message_ref=1)
    kit.emit(1001, "publish_rclcpp", publisher_handle=pub, message_ref=1)
    kit.emit(1002, "dds_write", writer_handle=kit.writer[pub], message_ref=1, source_timestamp=1002)
    db = build_ir(bundle_of(kit))
    (p,) = db.publication_instances
    assert p.rclcpp_ts is None
    assert (p.rcl_ts, p.dds_ts) == (1000, 1002)
    assert _codes(db) == [DiagnosticCode.LAYER_ORDER_VIOLATION]
    assert db.stats["runtime_events"] == db.stats["folded_events"] + db.stats["diagnostic_events"]


def test_repeated_layer_reopens_window():
    kit, timer, pub, sub = _talker_listener()
    kit.emit(1000, "publish_rclcpp", publisher_handle=pub, message_ref=1)
    kit.emit(1001, "publish_rcl", publisher_handle=pub, message_ref=1)
    kit.emit(2000, "publish_rclcpp", publisher_handle=pub, message_ref=1)
    kit.emit(2001, "dds_write", writer_handle=kit.writer[pub], message_ref=1, source_timestamp=2001)
    db = build_ir(bundle_of(kit))
    (p,) = db.publication_instances
    assert (p.rclcpp_ts, p.rcl_ts, p.dds_ts) == (2000, None, 2001)
    assert _codes(db) == [DiagnosticCode.PUBLICATION_WINDOW_REOPENED]
    assert db.diagnostics[0].event_count == 2
    assert db.stats["runtime_events"] == db.stats["folded_events"] + db.stats["diagnostic_events"]


def test_callback_without_take_is_dropped():
    kit, timer, pub, sub = _talker_listener()
    kit.callback(sub, 1000, 1200)
    db = build_ir(bundle_of(kit))
    assert db.callback_instances == ()
    assert _codes(db) == [DiagnosticCode.CALLBACK_WITHOUT_TAKE]


def test_untaken_message():
    kit, timer, pub, sub = _talker_listener()
    kit.take(sub, 1000, 55, taken=False)
    db = build_ir(bundle_of(kit))
    assert _codes(db) == [DiagnosticCode.UNTAKEN_MESSAGE]


def test_take_not_followed_by_callback():
    kit, timer, pub, sub = _talker_listener()
    kit.take(sub, 1000, 55)
    kit.receive(sub, 1100, 56, 1110, 1200)
    db = build_ir(bundle_of(kit))
    assert _codes(db) == [DiagnosticCode.UNCONSUMED_TAKE]
    (cb,) = db.callback_instances
    assert cb.taken_source_timestamp == 56


def test_unmatched_callback_end():
    kit, timer, pub, sub = _talker_listener()
    kit.emit(1000, "callback_end", callback_ref=kit.callback_ref[timer])
    db = build_ir(bundle_of(kit))
    assert _codes(db) == [DiagnosticCode.UNMATCHED_CALLBACK]


def test_nested_callbacks_on_one_thread():
    kit, timer, pub, sub = _talker_listener()
    kit.callback(timer, 1000, 3000)
    kit.receive(sub, 1500, 77, 1600, 2000)
    db = build_ir(bundle_of(kit))
    assert len(db.callback_instances) == 2
    assert all(d.code is not DiagnosticCode.UNMATCHED_CALLBACK for d in db.diagnostics)


def test_publisher_without_data_writer():
    kit = HostKit("A")
    node = kit.node("n")
    pub = kit.publisher(node, "/t", with_dds=False)
    db = build_ir(bundle_of(kit))
    assert not db.publishers[ObjectKey("A", 100, pub)].complete
    assert DiagnosticCode.INCOMPLETE_PUBLISHER in _codes(db)


def test_non_positive_timer_period():
    kit = HostKit("A")
    node = kit.node("n")
    kit.timer(node, 0)
    db = build_ir(bundle_of(kit))
    assert db.timers == {}
    assert DiagnosticCode.INVALID_TIMER in _codes(db)


def test_duplicate_source_timestamp_on_one_publisher_keeps_both():
    kit, timer, pub, sub = _talker_listener()
    kit.publish(pub, 1000, source_timestamp=42)
    kit.publish(pub, 2000, source_timestamp=42)
    db = build_ir(bundle_of(kit))
    uids = [p.uid for p in db.publication_instances]
    assert uids == [kit.pub_uid(pub, 42), kit.pub_uid(pub, 42) + "#2"]


def test_annotation_resolution():
    kit, timer, pub, sub = _talker_listener()
    kit.annotate("periodic_async", [sub], [pub])
    kit.annotate("partial_sync", [0xdead], [pub])
    db = build_ir(bundle_of(kit))
    (ann,) = db.annotations
    assert ann.link_type == "periodic_async"
    assert ann.inputs == (ObjectKey("A", 100, sub),)
    assert ann.outputs == (ObjectKey("A", 100, pub),)
    assert _codes(db).count(DiagnosticCode.UNRESOLVED_ANNOTATION) == 2


def test_fold_executor_three_states():
    events = [
        make_event(0, "A", 1, 1, "executor_wait_begin"),
        make_event(10, "A", 1, 1, "executor_wait_end"),
        make_event(12, "A", 1, 1, "executor_execute_begin", target_handle=5),
        make_event(20, "A", 1, 1, "executor_execute_end"),
    ]
    intervals, diagnostics = fold_executor(events)
    assert diagnostics == []
    assert [(i.state, i.start, i.end) for i in intervals] == [
        (ExecutorState.WAITING, 0, 10),
        (ExecutorState.OVERHEAD, 10, 12),
        (ExecutorState.EXECUTING, 12, 20),
    ]
    assert intervals[2].target == ObjectKey("A", 1, 5)


def test_fold_executor_wakeup_without_work_is_overhead():
    events = [
        make_event(0, "A", 1, 1, "executor_wait_begin"),
        make_event(10, "A", 1, 1, "executor_wait_end"),
        make_event(15, "A", 1, 1, "executor_wait_begin"),
        make_event(30, "A", 1, 1, "executor_wait_end"),
    ]
    intervals, _ = fold_executor(events)
    assert [(i.state, i.start, i.end) for i in intervals] == [
        (ExecutorState.WAITING, 0, 10),
        (ExecutorState.OVERHEAD, 10, 15),
        (ExecutorState.WAITING, 15, 30),
    ]


def test_fold_executor_truncated_wait():
    events = [make_event(100, "A", 1, 1, "executor_wait_begin")]
    intervals, diagnostics = fold_executor(events, last_ts=250)
    assert [(i.state, i.start, i.end) for i in intervals] == [(ExecutorState.WAITING, 100, 250)]
    assert [d.code for d in diagnostics] == [DiagnosticCode.TRUNCATED_INTERVAL]


def test_fold_executor_unmatched_end():
    events = [make_event(5, "A", 1, 1, "executor_execute_end")]
    intervals, diagnostics = fold_executor(events)
    assert intervals == []
    assert [d.code for d in diagnostics] == [DiagnosticCode.UNMATCHED_EXECUTOR_EVENT]


def test_empty_bundle_gives_empty_database():
    db = build_ir(bundle_of())
    assert isinstance(db, IrDatabase)
    assert db.time_span() == (0, 0)
    assert db.publication_instances == ()


def test_database_dict_form_is_stable():
    kit, timer, pub, sub = _talker_listener()
    kit.callback(timer, 1000, 2000)
    src = kit.publish(pub, 1100)
    kit.receive(sub, 1300, src, 1310, 1500, tid=101)
    db = build_ir(bundle_of(kit))
    again = IrDatabase.from_dict(db.to_dict())
    assert again.to_dict() == db.to_dict()
