import pytest
from hypothesis import given, strategies as st

from msgflow.analysis.clock import (
    ClockMapping,
    SyncPair,
    apply_offsets,
    collect_sync_pairs,
    estimate_offsets,
    estimate_pair_offsets,
    identity_mappings,
)
from msgflow.analysis.ir_builder import build_ir
from msgflow.core.errors import Disconnected, InfeasibleOffsets

from tracekit import HostKit, bundle_of


def _ping_pong(b_lead: int = 1000, delay: int = 200):
    """A publishes /ping to B, B answers /pong; B's clock runs b_lead ahead."""
    a = HostKit("A", pid=10)
    b = HostKit("B", pid=20)
    a_node, b_node = a.node("a"), b.node("b")
    ping = a.publisher(a_node, "/ping")
    pong_sub = a.subscription(a_node, "/pong")
    ping_sub = b.subscription(b_node, "/ping")
    pong = b.publisher(b_node, "/pong")

    src = a.publish(ping, 997)  # dds at 1000 on A
    b.receive(ping_sub, 1000 + delay + b_lead, src, 1300 + b_lead, 1500 + b_lead)
    src = b.publish(pong, 3997 + b_lead)  # dds at ref 4000
    a.receive(pong_sub, 4000 + delay, src, 4300, 4500)
    return bundle_of(a, b)


def test_sync_pairs_use_dds_and_take():
    db = build_ir(_ping_pong())
    assert collect_sync_pairs(db) == [
        SyncPair("A", "B", 1000, 2200),
        SyncPair("B", "A", 5000, 4200),
    ]


def test_symmetric_delays_give_exact_offsets():
    db = build_ir(_ping_pong(b_lead=1000))
    mappings = estimate_offsets(collect_sync_pairs(db))
    assert mappings == [ClockMapping("A", 0, "A"), ClockMapping("B", -1000, "A")]


def test_reference_host_choice():
    db = build_ir(_ping_pong(b_lead=1000))
    mappings = estimate_offsets(collect_sync_pairs(db), reference="B")
    assert {m.host: m.offset for m in mappings} == {"A": 1000, "B": 0}
    assert all(m.reference == "B" for m in mappings)


def test_min_delay_makes_bounds_contradict():
    pairs = collect_sync_pairs(build_ir(_ping_pong(b_lead=1000, delay=200)))
    with pytest.raises(InfeasibleOffsets) as info:
        estimate_offsets(pairs, min_one_way_delay_ns=300)
    assert (info.value.lower, info.value.upper) == (1100, 900)


def test_one_direction_uses_single_bound():
    estimates = estimate_pair_offsets([SyncPair("A", "B", 100, 700), SyncPair("A", "B", 200, 650)])
    est = estimates[("A", "B")]
    assert est.upper == 450
    assert est.lower is None
    assert est.lead == 450
    assert not est.bidirectional


def test_disconnected_host():
    with pytest.raises(Disconnected) as info:
        estimate_offsets([SyncPair("A", "B", 0, 10)], hosts=["A", "B", "C"])
    assert info.value.unreachable == ["C"]


def test_composes_along_chain():
    pairs = [
        SyncPair("A", "B", 0, 1100), SyncPair("B", "A", 2100, 1100),
        SyncPair("B", "C", 5000, 5600), SyncPair("C", "B", 7000, 6600),
    ]
    offsets = {m.host: m.offset for m in estimate_offsets(pairs)}
    # A-B interval [1000, 1100], B-C interval [400, 600]
    assert offsets == {"A": 0, "B": -1050, "C": -1550}


def test_no_hosts():
    assert estimate_offsets([]) == []
    assert identity_mappings([]) == []


def test_identity_mappings():
    assert identity_mappings(["B", "A", "B"]) == [ClockMapping("A", 0, "A"), ClockMapping("B", 0, "A")]


def test_apply_offsets_keeps_identifiers():
    db = build_ir(_ping_pong(b_lead=1000))
    shifted = apply_offsets(db, [ClockMapping("A", 0, "A"), ClockMapping("B", -1000, "A")])

    before = {p.uid: p for p in db.publication_instances}
    for p in shifted.publication_instances:
        assert p.source_timestamp == before[p.uid].source_timestamp
        delta = -1000 if p.host == "B" else 0
        assert p.dds_ts == before[p.uid].dds_ts + delta

    cb_b = next(c for c in shifted.callback_instances if c.host == "B")
    assert cb_b.take_ts == 1200
    assert cb_b.uid.endswith(":2300")


def test_apply_zero_offsets_is_identity():
    db = build_ir(_ping_pong())
    assert apply_offsets(db, identity_mappings(db.hosts)) is db


@given(
    lead=st.integers(min_value=-10**9, max_value=10**9),
    delays=st.lists(st.tuples(st.integers(0, 10**6), st.integers(0, 10**6)), min_size=1, max_size=8),
    min_delay=st.integers(0, 1000),
)
def test_true_lead_within_feasible_bounds(lead, delays, min_delay):
    pairs = []
    for i, (there, back) in enumerate(delays):
        send = i * 10**7
        pairs.append(SyncPair("A", "B", send, send + min_delay + there + lead))
        pairs.append(SyncPair("B", "A", send + lead, send + min_delay + back))
    est = estimate_pair_offsets(pairs, min_one_way_delay_ns=min_delay)[("A", "B")]
    assert est.lower <= lead <= est.upper
    assert est.lower <= est.lead <= est.upper


@given(lead=st.integers(min_value=-10**9, max_value=10**9), delay=st.integers(0, 10**6))
def test_equal_minimum_delays_recover_lead_exactly(lead, delay):
    pairs = [SyncPair("A", "B", 0, delay + lead), SyncPair("B", "A", 500 + lead, 500 + delay)]
    est = estimate_pair_offsets(pairs)[("A", "B")]
    assert est.lead == lead
