from msgflow.analysis.ir import DiagnosticCode
from msgflow.analysis.ir_builder import build_ir
from msgflow.analysis.links import (
    LinkSet,
    infer_all,
    infer_direct,
    infer_partial_sync,
    infer_periodic_async,
    innermost_enclosing,
    match_transport,
)

from tracekit import HostKit, bundle_of


def _codes(diagnostics):
    return [d.code for d in diagnostics]


# =============================================================================
# Transport
# =============================================================================

def test_one_publication_many_receivers():
    a, b = HostKit("A", pid=10), HostKit("B", pid=20)
    pub = a.publisher(a.node("talker"), "/t")
    listener = b.node("listener")
    s1 = b.subscription(listener, "/t")
    s2 = b.subscription(b.node("logger"), "/t")
    src = a.publish(pub, 100)
    b.receive(s2, 250, src, 260, 300, tid=21)
    b.receive(s1, 200, src, 210, 400)

    db = build_ir(bundle_of(a, b))
    links, diagnostics = match_transport(db)
    assert diagnostics == []
    (link,) = links
    assert link.source == a.pub_uid(pub, src)
    assert [d.callback for d in link.destinations] == [b.cb_uid(s1, 210), b.cb_uid(s2, 260, tid=21)]
    assert [d.latency for d in link.destinations] == [97, 147]


def test_colliding_source_timestamps_produce_no_link():
    a = HostKit("A")
    node = a.node("n")
    p1 = a.publisher(node, "/t")
    p2 = a.publisher(a.node("m"), "/t")
    sub = a.subscription(a.node("rx"), "/t")
    a.publish(p1, 100, source_timestamp=500)
    a.publish(p2, 110, tid=101, source_timestamp=500)
    a.receive(sub, 600, 500, 610, 700, tid=102)

    links, diagnostics = match_transport(build_ir(bundle_of(a)))
    assert links == []
    assert _codes(diagnostics) == [DiagnosticCode.TIMESTAMP_COLLISION]


def test_orphan_reception():
    a = HostKit("A")
    sub = a.subscription(a.node("rx"), "/t")
    a.receive(sub, 600, 12345, 610, 700)
    links, diagnostics = match_transport(build_ir(bundle_of(a)))
    assert links == []
    assert _codes(diagnostics) == [DiagnosticCode.ORPHAN_RECEPTION]


def test_same_timestamp_on_different_topics_is_not_a_collision():
    a = HostKit("A")
    p1 = a.publisher(a.node("n"), "/x")
    p2 = a.publisher(a.node("m"), "/y")
    rx = a.node("rx")
    sx, sy = a.subscription(rx, "/x"), a.subscription(rx, "/y")
    a.publish(p1, 100, source_timestamp=500)
    a.publish(p2, 110, tid=101, source_timestamp=500)
    a.receive(sx, 600, 500, 610, 700, tid=102)
    a.receive(sy, 800, 500, 810, 900, tid=102)
    links, diagnostics = match_transport(build_ir(bundle_of(a)))
    assert len(links) == 2
    assert diagnostics == []


# =============================================================================
# Containment and direct links
# =============================================================================

def _relay():
    kit = HostKit("A")
    node = kit.node("relay")
    timer = kit.timer(node, 1_000_000)
    sub = kit.subscription(node, "/in")
    out = kit.publisher(node, "/out")
    return kit, timer, sub, out


def test_innermost_enclosing_callback():
    kit, timer, sub, out = _relay()
    kit.callback(timer, 1000, 3000)
    kit.receive(sub, 1400, 9, 1500, 2000)
    inner = kit.publish(out, 1600)
    outer = kit.publish(out, 2500)
    kit.publish(out, 5000)
    db = build_ir(bundle_of(kit))

    enclosing = innermost_enclosing(db)
    assert enclosing[kit.pub_uid(out, inner)].uid == kit.cb_uid(sub, 1500)
    assert enclosing[kit.pub_uid(out, outer)].uid == kit.cb_uid(timer, 1000)
    assert len(enclosing) == 2


def test_publication_on_other_thread_not_enclosed():
    kit, timer, sub, out = _relay()
    kit.callback(timer, 1000, 3000)
    kit.publish(out, 1600, tid=999)
    assert innermost_enclosing(build_ir(bundle_of(kit))) == {}


def test_direct_links_only_from_subscription_callbacks():
    kit, timer, sub, out = _relay()
    kit.callback(timer, 100, 300)
    kit.publish(out, 150)
    kit.receive(sub, 1400, 9, 1500, 2000)
    first = kit.publish(out, 1600)
    second = kit.publish(out, 1800)
    db = build_ir(bundle_of(kit))

    (link,) = infer_direct(db)
    assert link.input == kit.cb_uid(sub, 1500)
    assert link.outputs == (kit.pub_uid(out, first), kit.pub_uid(out, second))


# =============================================================================
# Indirect links
# =============================================================================

def _fusion(link_type: str, with_timer: bool):
    kit = HostKit("A")
    node = kit.node("fusion")
    sa = kit.subscription(node, "/a")
    sb = kit.subscription(node, "/b")
    out = kit.publisher(node, "/c")
    timer = kit.timer(node, 10_000_000) if with_timer else None
    kit.annotate(link_type, [sa, sb], [out])
    return kit, sa, sb, out, timer


def test_periodic_async_uses_latest_completed_inputs():
    kit, sa, sb, out, timer = _fusion("periodic_async", with_timer=True)
    kit.receive(sa, 100, 1, 110, 200)
    kit.receive(sb, 300, 2, 310, 400)
    kit.receive(sa, 450, 3, 460, 650)  # still running when the timer fires
    kit.callback(timer, 500, 700, tid=101)
    first = kit.publish(out, 600, tid=101)
    kit.callback(timer, 1000, 1200, tid=101)
    second = kit.publish(out, 1100, tid=101)
    db = build_ir(bundle_of(kit))

    links, diagnostics = infer_periodic_async(db)
    assert diagnostics == []
    assert [(l.output, l.inputs) for l in links] == [
        (kit.pub_uid(out, first), (kit.cb_uid(sa, 110), kit.cb_uid(sb, 310))),
        (kit.pub_uid(out, second), (kit.cb_uid(sa, 460), kit.cb_uid(sb, 310))),
    ]
    assert {l.annotation for l in links} == {0}


def test_periodic_async_empty_cache():
    kit, sa, sb, out, timer = _fusion("periodic_async", with_timer=True)
    kit.receive(sa, 100, 1, 110, 200)
    kit.callback(timer, 500, 700)
    src = kit.publish(out, 600)
    links, diagnostics = infer_periodic_async(build_ir(bundle_of(kit)))
    (link,) = links
    assert link.output == kit.pub_uid(out, src)
    assert link.inputs == (kit.cb_uid(sa, 110),)
    assert _codes(diagnostics) == [DiagnosticCode.EMPTY_CACHE]


def test_periodic_async_output_outside_timer():
    kit, sa, sb, out, timer = _fusion("periodic_async", with_timer=True)
    kit.receive(sa, 100, 1, 110, 200)
    kit.publish(out, 150)
    links, diagnostics = infer_periodic_async(build_ir(bundle_of(kit)))
    assert links == []
    assert _codes(diagnostics) == [DiagnosticCode.ANNOTATION_MISUSE]


def test_partial_sync_consumes_slots():
    kit, sa, sb, out, _ = _fusion("partial_sync", with_timer=False)
    kit.receive(sa, 100, 1, 110, 200)
    kit.receive(sb, 300, 2, 310, 400)
    first = kit.publish(out, 350)
    kit.receive(sb, 500, 3, 510, 600)
    second = kit.publish(out, 550)
    db = build_ir(bundle_of(kit))

    links, diagnostics = infer_partial_sync(db)
    assert [(l.output, l.inputs) for l in links] == [
        (kit.pub_uid(out, first), (kit.cb_uid(sa, 110), kit.cb_uid(sb, 310))),
        (kit.pub_uid(out, second), (kit.cb_uid(sb, 510),)),
    ]
    assert _codes(diagnostics) == [DiagnosticCode.EMPTY_CACHE]


def test_partial_sync_interleaved_inputs():
    kit, sa, sb, out, _ = _fusion("partial_sync", with_timer=False)
    kit.receive(sa, 100, 1, 110, 300)
    kit.receive(sb, 150, 2, 200, 400, tid=101)
    kit.publish(out, 350, tid=101)
    links, diagnostics = infer_partial_sync(build_ir(bundle_of(kit)))
    assert len(links) == 1
    assert DiagnosticCode.CACHE_INTERLEAVING in _codes(diagnostics)


def test_partial_sync_output_from_non_input_callback():
    kit, sa, sb, out, _ = _fusion("partial_sync", with_timer=False)
    timer = kit.timer(kit.node("other"), 1_000_000)
    kit.callback(timer, 100, 200)
    kit.publish(out, 150)
    links, diagnostics = infer_partial_sync(build_ir(bundle_of(kit)))
    assert links == []
    assert _codes(diagnostics) == [DiagnosticCode.ANNOTATION_MISUSE]


def test_infer_all_summary_and_dict_form():
    kit, sa, sb, out, _ = _fusion("partial_sync", with_timer=False)
    feed = kit.publisher(kit.node("feed"), "/a")
    src = kit.publish(feed, 50, tid=7)
    kit.receive(sa, 100, src, 110, 200)
    kit.receive(sb, 300, 2, 310, 400)
    kit.publish(out, 350)
    links = infer_all(build_ir(bundle_of(kit)))

    summary = links.summary()
    assert summary["transport"] == 1
    assert summary["direct"] == 1
    assert summary["partial_sync"] == 1
    assert summary["orphans"] == 1
    assert LinkSet.from_dict(links.to_dict()).to_dict() == links.to_dict()
