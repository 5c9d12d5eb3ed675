import orjson
import pytest

from msgflow.analysis.flow import (
    FlowBuilder,
    FlowEdge,
    FlowEdgeKind,
    FlowGraph,
    SeedSelector,
    apply_tf_rules,
    build_flow,
    check_integrity,
    end_to_end_latency,
    export_flow,
    indirect_subject,
    path_latency,
    resolve_object,
    transport_subject,
)
from msgflow.analysis.ir_builder import build_ir
from msgflow.analysis.links import infer_all
from msgflow.core.errors import FlowGraphError, SeedNotFound

from tracekit import HostKit, bundle_of

K = FlowEdgeKind


class Pipeline:
    """timer -> /a -> relay -> /b -> sink, one thread per node."""

    def __init__(self):
        kit = self.kit = HostKit("A")
        src, relay, sink = kit.node("src"), kit.node("relay"), kit.node("sink")
        self.timer = kit.timer(src, 10_000_000)
        self.pa = kit.publisher(src, "/a")
        self.sa = kit.subscription(relay, "/a")
        self.pb = kit.publisher(relay, "/b")
        self.sb = kit.subscription(sink, "/b")

        kit.callback(self.timer, 1000, 1500)
        self.src_a = kit.publish(self.pa, 1100)
        kit.receive(self.sa, 1200, self.src_a, 1210, 1800, tid=101)
        self.src_b = kit.publish(self.pb, 1300, tid=101)
        kit.receive(self.sb, 1400, self.src_b, 1410, 1600, tid=102)

        self.db = build_ir(bundle_of(kit))
        self.links = infer_all(self.db)

    def flow(self, seed, direction="both"):
        return build_flow(self.db, self.links, seed, direction)

    @property
    def all_edges(self):
        kit = self.kit
        timer_cb = kit.cb_uid(self.timer, 1000)
        relay_cb = kit.cb_uid(self.sa, 1210, tid=101)
        sink_cb = kit.cb_uid(self.sb, 1410, tid=102)
        pub_a = kit.pub_uid(self.pa, self.src_a)
        pub_b = kit.pub_uid(self.pb, self.src_b)
        return sorted([
            (K.TIMER_CALLBACK.value, timer_cb),
            (K.MESSAGE_PUBLICATION.value, pub_a),
            (K.TRANSPORT_LINK.value, transport_subject(pub_a, relay_cb)),
            (K.TAKE.value, relay_cb),
            (K.SUBSCRIPTION_CALLBACK.value, relay_cb),
            (K.MESSAGE_PUBLICATION.value, pub_b),
            (K.TRANSPORT_LINK.value, transport_subject(pub_b, sink_cb)),
            (K.TAKE.value, sink_cb),
            (K.SUBSCRIPTION_CALLBACK.value, sink_cb),
        ])


@pytest.fixture
def pipeline():
    return Pipeline()


def test_publication_seed_both_directions(pipeline):
    graph = pipeline.flow(SeedSelector.publication("/a", pipeline.src_a))
    assert graph.edge_keys() == pipeline.all_edges
    assert graph.seed_edge == (K.MESSAGE_PUBLICATION, pipeline.kit.pub_uid(pipeline.pa, pipeline.src_a))
    assert graph.roots == [(K.TIMER_CALLBACK, pipeline.kit.cb_uid(pipeline.timer, 1000))]
    assert graph.leaves == [(K.SUBSCRIPTION_CALLBACK, pipeline.kit.cb_uid(pipeline.sb, 1410, tid=102))]
    check_integrity(graph)


def test_backward_from_sink_reaches_everything(pipeline):
    graph = pipeline.flow(SeedSelector.callback("/sink/b", 0), "backward")
    assert graph.edge_keys() == pipeline.all_edges


def test_forward_from_relay(pipeline):
    graph = pipeline.flow(SeedSelector.callback("/relay/a", 0), "forward")
    assert [k for k, _ in graph.edge_keys()] == sorted([
        "subscription_callback", "message_publication", "transport_link", "take", "subscription_callback",
    ])


def test_callback_at_seed(pipeline):
    graph = pipeline.flow(SeedSelector.callback_at("/src:timer", 1200), "forward")
    assert graph.seed_edge == (K.TIMER_CALLBACK, pipeline.kit.cb_uid(pipeline.timer, 1000))
    assert len(graph.edges) == 9


def test_edge_timestamps(pipeline):
    graph = pipeline.flow(SeedSelector.publication("/a", pipeline.src_a))
    by_kind = {}
    for edge in graph.edges.values():
        by_kind.setdefault(edge.kind, []).append((edge.start_ts, edge.end_ts))
    assert sorted(by_kind[K.MESSAGE_PUBLICATION]) == [(1100, 1103), (1300, 1303)]
    assert sorted(by_kind[K.TRANSPORT_LINK]) == [(1103, 1200), (1303, 1400)]
    assert sorted(by_kind[K.TAKE]) == [(1200, 1210), (1400, 1410)]


def test_end_to_end_latency(pipeline):
    graph = pipeline.flow(SeedSelector.publication("/a", pipeline.src_a))
    (row,) = end_to_end_latency(graph)
    assert row.latency == 600
    assert len(row.path) == 9
    assert row.breakdown["transport_link"] == 194
    assert path_latency(graph, row.path) == 600


def test_unknown_publication_lists_nearby(pipeline):
    with pytest.raises(SeedNotFound) as info:
        pipeline.flow(SeedSelector.publication("/a", pipeline.src_a + 5))
    assert info.value.candidates == [f"publication:/a@{pipeline.src_a}"]


def test_callback_index_out_of_range(pipeline):
    with pytest.raises(SeedNotFound):
        pipeline.flow(SeedSelector.callback("/relay/a", 3))


def test_unknown_object(pipeline):
    with pytest.raises(SeedNotFound) as info:
        resolve_object(pipeline.db, "/nowhere/a")
    assert "/relay/a" in info.value.candidates


def test_object_key_reference(pipeline):
    key = resolve_object(pipeline.db, pipeline.kit.key(pipeline.sa))
    assert key.handle == pipeline.sa


def test_unknown_direction(pipeline):
    with pytest.raises(ValueError):
        pipeline.flow(SeedSelector.publication("/a", pipeline.src_a), "sideways")


@pytest.mark.parametrize("text", [
    "publication:/a/b@123",
    "callback:/fusion/points#4",
    "callback_at:ecu1:1000:4096@99",
])
def test_seed_selector_text_form(text):
    assert str(SeedSelector.parse(text)) == text


def test_exports(pipeline):
    graph = pipeline.flow(SeedSelector.publication("/a", pipeline.src_a))

    doc = orjson.loads(export_flow(graph, "json"))
    assert doc["flow_version"] == 1
    assert len(doc["edges"]) == 9
    assert doc["latencies"][0]["latency"] == 600
    assert doc["edges"][doc["seed_edge"]]["kind"] == "message_publication"

    dot = export_flow(graph, "dot").decode()
    assert dot.startswith("digraph flow {")
    assert dot.count("kind=") == 9

    svg = export_flow(graph, "svg-timeline").decode()
    assert svg.count("<rect ") == 9

    html = export_flow(graph, "html").decode()
    assert "msgflow-flow" in html

    with pytest.raises(ValueError):
        export_flow(graph, "png")


def test_vertices_join_consecutive_edges(pipeline):
    graph = pipeline.flow(SeedSelector.publication("/a", pipeline.src_a))
    ends, vertices = graph.vertices()
    for a, b in graph.successions():
        assert ends[a][1] == ends[b][0]
    assert len(vertices) == 10


# =============================================================================
# Integrity
# =============================================================================

def _graph(*edges, successions=()):
    graph = FlowGraph(SeedSelector.publication("/x", 0), edges[0].key, "both")
    for e in edges:
        graph.edges[e.key] = e
    for a, b in successions:
        graph.add_succession(a.key, b.key)
    return graph


def test_negative_weight_rejected():
    with pytest.raises(FlowGraphError, match="negative"):
        check_integrity(_graph(FlowEdge(K.TAKE, "cb", 10, 5)))


def test_grammar_violation_rejected():
    transport = FlowEdge(K.TRANSPORT_LINK, "p->c", 0, 5)
    publication = FlowEdge(K.MESSAGE_PUBLICATION, "p2", 5, 6)
    with pytest.raises(FlowGraphError, match="cannot be followed"):
        check_integrity(_graph(transport, publication, successions=[(transport, publication)]))


def test_cycle_rejected():
    cb = FlowEdge(K.SUBSCRIPTION_CALLBACK, "c", 0, 5)
    pub = FlowEdge(K.MESSAGE_PUBLICATION, "p", 1, 2)
    transport = FlowEdge(K.TRANSPORT_LINK, "p->c", 2, 3)
    graph = _graph(cb, pub, transport, successions=[(cb, pub), (pub, transport), (transport, cb)])
    with pytest.raises(FlowGraphError, match="cycle"):
        check_integrity(graph)


# =============================================================================
# /tf and indirect links
# =============================================================================

def test_tf_self_reception_pruned_and_tf_callbacks_terminal():
    kit = HostKit("A")
    bc, other = kit.node("bc"), kit.node("other")
    timer = kit.timer(bc, 1_000_000)
    tf_pub = kit.publisher(bc, "/tf")
    bc_sub = kit.subscription(bc, "/tf")
    other_sub = kit.subscription(other, "/tf")
    x_pub = kit.publisher(other, "/x")

    kit.callback(timer, 1000, 1200)
    src = kit.publish(tf_pub, 1050)
    kit.receive(bc_sub, 1100, src, 1110, 1150, tid=101)
    kit.receive(other_sub, 1120, src, 1130, 1180, tid=102)
    kit.publish(x_pub, 1140, tid=102)

    db = build_ir(bundle_of(kit))
    graph = build_flow(db, infer_all(db), SeedSelector.callback("/bc:timer", 0), "forward")
    kinds = [k for k, _ in graph.edge_keys()]
    assert sorted(kinds) == sorted([
        "timer_callback", "message_publication", "transport_link", "take", "subscription_callback",
    ])
    assert (K.SUBSCRIPTION_CALLBACK, kit.cb_uid(other_sub, 1130, tid=102)) in graph.edges
    assert (K.SUBSCRIPTION_CALLBACK, kit.cb_uid(bc_sub, 1110, tid=101)) not in graph.edges


def test_apply_tf_rules_drops_only_same_node_tf_reception():
    kit = HostKit("A")
    bc, other = kit.node("bc"), kit.node("other")
    tf_pub = kit.publisher(bc, "/tf")
    chatter = kit.publisher(bc, "/chatter")
    bc_tf, other_tf = kit.subscription(bc, "/tf"), kit.subscription(other, "/tf")
    bc_chatter = kit.subscription(bc, "/chatter")

    tf_src = kit.publish(tf_pub, 1000)
    kit.receive(bc_tf, 1100, tf_src, 1110, 1150, tid=101)
    kit.receive(other_tf, 1120, tf_src, 1130, 1180, tid=102)
    chatter_src = kit.publish(chatter, 2000)
    kit.receive(bc_chatter, 2100, chatter_src, 2110, 2150, tid=101)

    db = build_ir(bundle_of(kit))
    builder = FlowBuilder(db, infer_all(db))
    cbs = {cb.uid: cb for cb in db.callback_instances}
    bc_cb, other_cb = cbs[kit.cb_uid(bc_tf, 1110, tid=101)], cbs[kit.cb_uid(other_tf, 1130, tid=102)]
    tf_instance = db.publication_by_uid[kit.pub_uid(tf_pub, tf_src)]
    chatter_instance = db.publication_by_uid[kit.pub_uid(chatter, chatter_src)]
    chatter_cb = cbs[kit.cb_uid(bc_chatter, 2110, tid=101)]

    assert apply_tf_rules(builder, tf_instance, [bc_cb, other_cb]) == [other_cb]
    assert apply_tf_rules(builder, chatter_instance, [chatter_cb]) == [chatter_cb]
    assert apply_tf_rules(builder, tf_instance, []) == []


def test_partial_sync_flow_excludes_enclosing_input():
    kit = HostKit("A")
    fusion = kit.node("fusion")
    feeder = kit.node("feeder")
    pa, pb = kit.publisher(feeder, "/a"), kit.publisher(feeder, "/b")
    sa, sb = kit.subscription(fusion, "/a"), kit.subscription(fusion, "/b")
    out = kit.publisher(fusion, "/c")
    kit.annotate("partial_sync", [sa, sb], [out])

    src_a = kit.publish(pa, 50, tid=7)
    kit.receive(sa, 100, src_a, 110, 200)
    src_b = kit.publish(pb, 250, tid=8)
    kit.receive(sb, 300, src_b, 310, 400)
    src_c = kit.publish(out, 350)

    db = build_ir(bundle_of(kit))
    graph = build_flow(db, infer_all(db), SeedSelector.publication("/c", src_c), "backward")
    out_uid = kit.pub_uid(out, src_c)
    sa_cb, sb_cb = kit.cb_uid(sa, 110), kit.cb_uid(sb, 310)

    keys = graph.edge_keys()
    assert ("partial_sync_link", indirect_subject(out_uid, sa_cb)) in keys
    assert ("partial_sync_link", indirect_subject(out_uid, sb_cb)) not in keys
    assert ("subscription_callback", sb_cb) in keys
    assert ("message_publication", kit.pub_uid(pa, src_a)) in keys
    assert len(keys) == 10
    check_integrity(graph)
    assert {r[1] for r in graph.roots} == {kit.pub_uid(pa, src_a), kit.pub_uid(pb, src_b)}
