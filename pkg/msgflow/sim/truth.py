"""
Ground truth of a simulated run.

Everything here is derived from the simulator's own records of what caused
what; nothing is recovered from the emitted traces. Flows are expanded with
the same successor rules the analysis uses (including the /tf rules), but
over the recorded causality and in reference time.
"""

import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field
from graphlib import TopologicalSorter
from typing import Any, Dict, List, Optional, Set, Tuple

from ..core.config import GROUND_TRUTH_VERSION, TF_TOPIC
from ..core.errors import DocumentVersionError
from ..analysis.flow import FlowEdgeKind as K
from ..analysis.flow import SeedSelector, indirect_subject, transport_subject
from .scenario import FlowSeedConfig, ScenarioConfig
from .simulator import SimCallback, SimPublication, SimRecord

logger = logging.getLogger(__name__)

EdgeKey = Tuple[K, str]
INDIRECT_KINDS = {"periodic_async": K.PERIODIC_ASYNC_LINK, "partial_sync": K.PARTIAL_SYNC_LINK}


@dataclass
class GroundTruth:
    scenario: str
    seed: int
    true_offsets: Dict[str, int]
    transport: List[Tuple[str, str]] = field(default_factory=list)  # (publication, callback)
    direct: List[Tuple[str, str]] = field(default_factory=list)  # (callback, publication)
    indirect: List[Tuple[str, Tuple[str, ...], str]] = field(default_factory=list)  # (type, inputs, output)
    collisions: List[Dict[str, Any]] = field(default_factory=list)
    flows: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ground_truth_version": GROUND_TRUTH_VERSION,
            "scenario": self.scenario,
            "seed": self.seed,
            "true_offsets": dict(sorted(self.true_offsets.items())),
            "transport": [list(p) for p in self.transport],
            "direct": [list(p) for p in self.direct],
            "indirect": [
                {"link_type": t, "inputs": list(inputs), "output": output}
                for t, inputs, output in self.indirect
            ],
            "collisions": self.collisions,
            "flows": self.flows,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "GroundTruth":
        version = d.get("ground_truth_version")
        if version != GROUND_TRUTH_VERSION:
            raise DocumentVersionError("ground truth", version, GROUND_TRUTH_VERSION)
        return cls(
            scenario=d["scenario"],
            seed=d["seed"],
            true_offsets={k: int(v) for k, v in d["true_offsets"].items()},
            transport=[tuple(p) for p in d.get("transport", [])],
            direct=[tuple(p) for p in d.get("direct", [])],
            indirect=[(i["link_type"], tuple(i["inputs"]), i["output"]) for i in d.get("indirect", [])],
            collisions=list(d.get("collisions", [])),
            flows=dict(d.get("flows", {})),
        )


# =============================================================================
# Flow expansion over recorded causality
# =============================================================================

class _TruthFlows:
    def __init__(self, record: SimRecord, colliding: Set[str]):
        self.record = record
        self.colliding = colliding
        self.indirect_by_output: Dict[str, List[Tuple[str, str]]] = defaultdict(list)
        self.indirect_by_input: Dict[str, List[Tuple[str, str]]] = defaultdict(list)
        for link in record.indirect:
            for uid in link.inputs:
                self.indirect_by_output[link.output].append((link.link_type, uid))
                self.indirect_by_input[uid].append((link.link_type, link.output))
        self.indirect_type = {
            indirect_subject(link.output, uid): link.link_type
            for link in record.indirect for uid in link.inputs
        }

    def _cb(self, uid: str) -> SimCallback:
        return self.record.callbacks[uid]

    def _pub(self, uid: str) -> SimPublication:
        return self.record.publications[uid]

    @staticmethod
    def _is_tf(cb: SimCallback) -> bool:
        return cb.kind == "subscription" and cb.topic == TF_TOPIC

    def _pruned(self, pub: SimPublication, cb: SimCallback) -> bool:
        return pub.topic == TF_TOPIC and pub.node == cb.node

    @staticmethod
    def _cb_key(cb: SimCallback) -> EdgeKey:
        return (K.SUBSCRIPTION_CALLBACK if cb.kind == "subscription" else K.TIMER_CALLBACK, cb.uid)

    def successors(self, key: EdgeKey) -> List[EdgeKey]:
        kind, subject = key
        out: List[EdgeKey] = []
        if kind in (K.TIMER_CALLBACK, K.SUBSCRIPTION_CALLBACK):
            cb = self._cb(subject)
            if self._is_tf(cb):
                return out
            out.extend((K.MESSAGE_PUBLICATION, uid) for uid in cb.publications)
            for link_type, output in self.indirect_by_input.get(cb.uid, ()):
                if self._pub(output).callback != cb.uid:
                    out.append((INDIRECT_KINDS[link_type], indirect_subject(output, cb.uid)))
        elif kind is K.TAKE:
            out.append(self._cb_key(self._cb(subject)))
        elif kind is K.MESSAGE_PUBLICATION:
            if subject in self.colliding:
                return out
            pub = self._pub(subject)
            for uid in self.record.deliveries.get(subject, ()):
                if not self._pruned(pub, self._cb(uid)):
                    out.append((K.TRANSPORT_LINK, transport_subject(subject, uid)))
        elif kind is K.TRANSPORT_LINK:
            out.append((K.TAKE, subject.split("->", 1)[1]))
        else:
            out.append((K.MESSAGE_PUBLICATION, subject.split("=>", 1)[1]))
        return out

    def predecessors(self, key: EdgeKey) -> List[EdgeKey]:
        kind, subject = key
        out: List[EdgeKey] = []
        if kind is K.SUBSCRIPTION_CALLBACK:
            out.append((K.TAKE, subject))
        elif kind is K.TAKE:
            cb = self._cb(subject)
            if cb.message not in self.colliding and not self._pruned(self._pub(cb.message), cb):
                out.append((K.TRANSPORT_LINK, transport_subject(cb.message, cb.uid)))
        elif kind is K.MESSAGE_PUBLICATION:
            pub = self._pub(subject)
            enclosing = self._cb(pub.callback)
            if not self._is_tf(enclosing):
                out.append(self._cb_key(enclosing))
            for link_type, uid in self.indirect_by_output.get(subject, ()):
                if uid != pub.callback and not self._is_tf(self._cb(uid)):
                    out.append((INDIRECT_KINDS[link_type], indirect_subject(subject, uid)))
        elif kind is K.TRANSPORT_LINK:
            out.append((K.MESSAGE_PUBLICATION, subject.split("->", 1)[0]))
        elif kind in (K.PERIODIC_ASYNC_LINK, K.PARTIAL_SYNC_LINK):
            out.append(self._cb_key(self._cb(subject.split("=>", 1)[0])))
        return out

    def span(self, key: EdgeKey) -> Tuple[int, int]:
        kind, subject = key
        if kind in (K.TIMER_CALLBACK, K.SUBSCRIPTION_CALLBACK):
            cb = self._cb(subject)
            return cb.start, cb.end
        if kind is K.TAKE:
            cb = self._cb(subject)
            return cb.take, cb.start
        if kind is K.MESSAGE_PUBLICATION:
            pub = self._pub(subject)
            return pub.start, pub.dds
        if kind is K.TRANSPORT_LINK:
            pub_uid, cb_uid = subject.split("->", 1)
            return self._pub(pub_uid).dds, self._cb(cb_uid).take
        cb_uid, pub_uid = subject.split("=>", 1)
        return self._cb(cb_uid).end, self._pub(pub_uid).start

    def _closure(self, start: EdgeKey, forward: bool) -> List[EdgeKey]:
        step = self.successors if forward else self.predecessors
        seen, order, queue = {start}, [start], deque([start])
        while queue:
            for nxt in step(queue.popleft()):
                if nxt not in seen:
                    seen.add(nxt)
                    order.append(nxt)
                    queue.append(nxt)
        return order

    def flow(self, seed_edge: EdgeKey) -> Dict[str, Any]:
        keys = set(self._closure(seed_edge, forward=False)) | set(self._closure(seed_edge, forward=True))
        preds: Dict[EdgeKey, Set[EdgeKey]] = {k: set() for k in keys}
        has_successor: Set[EdgeKey] = set()
        for k in keys:
            for s in self.successors(k):
                if s in keys:
                    preds[s].add(k)
                    has_successor.add(k)

        earliest: Dict[EdgeKey, int] = {}
        for k in TopologicalSorter(preds).static_order():
            earliest[k] = min((earliest[p] for p in preds[k]), default=self.span(k)[0])

        latencies = {
            f"{k[0].value}|{k[1]}": self.span(k)[1] - earliest[k]
            for k in sorted(keys - has_successor, key=lambda k: (k[0].value, k[1]))
        }
        return {
            "direction": "both",
            "seed_edge": [seed_edge[0].value, seed_edge[1]],
            "edges": sorted([k.value, s] for k, s in keys),
            "latencies": latencies,
        }


def _resolve_seed(
    config: ScenarioConfig,
    record: SimRecord,
    seed: FlowSeedConfig,
    colliding: Set[str],
) -> Optional[Tuple[SeedSelector, EdgeKey]]:
    if seed.kind == "publication":
        pubs = sorted((p for p in record.publications.values() if p.topic == seed.topic),
                      key=lambda p: (p.dds, p.uid))
        if seed.index >= len(pubs):
            logger.warning(f"Flow seed {seed}: only {len(pubs)} publications on {seed.topic}")
            return None
        pub = pubs[seed.index]
        if pub.uid in colliding:
            logger.warning(f"Flow seed {seed}: publication {pub.uid} collides with another publication")
            return None
        return SeedSelector.publication(pub.topic, pub.source_timestamp), (K.MESSAGE_PUBLICATION, pub.uid)

    fqn = config.node(seed.node).fqn
    if seed.timer:
        owner = record.timers[fqn][0]
    else:
        owner = record.subscriptions[(fqn, seed.topic)]
    callbacks = sorted((c for c in record.callbacks.values() if c.owner == owner), key=lambda c: (c.start, c.uid))
    if seed.index >= len(callbacks):
        logger.warning(f"Flow seed {seed}: object {owner} ran only {len(callbacks)} callbacks")
        return None
    cb = callbacks[seed.index]
    return SeedSelector.callback(str(owner), seed.index), _TruthFlows._cb_key(cb)


def build_ground_truth(config: ScenarioConfig, record: SimRecord) -> GroundTruth:
    """Collect true links, collisions and seeded flows of one run."""
    groups: Dict[Tuple[str, int], List[SimPublication]] = defaultdict(list)
    for pub in record.publications.values():
        groups[(pub.topic, pub.source_timestamp)].append(pub)

    colliding: Set[str] = set()
    collisions = []
    for (topic, source_ts), pubs in sorted(groups.items()):
        if len(pubs) > 1:
            colliding.update(p.uid for p in pubs)
            collisions.append({
                "topic": topic,
                "source_timestamp": source_ts,
                "publications": sorted(p.uid for p in pubs),
            })

    transport = sorted(
        (pub_uid, cb_uid)
        for pub_uid, callbacks in record.deliveries.items() if pub_uid not in colliding
        for cb_uid in callbacks
    )
    direct = sorted(
        (cb.uid, uid)
        for cb in record.callbacks.values() if cb.kind == "subscription"
        for uid in cb.publications
    )
    indirect = sorted((link.link_type, link.inputs, link.output) for link in record.indirect)

    truth = GroundTruth(
        scenario=config.name,
        seed=config.seed,
        true_offsets={h.host_id: h.clock_offset_ns for h in config.hosts},
        transport=transport,
        direct=direct,
        indirect=indirect,
        collisions=collisions,
    )

    flows = _TruthFlows(record, colliding)
    for seed in config.flow_seeds:
        resolved = _resolve_seed(config, record, seed, colliding)
        if resolved is None:
            continue
        selector, edge = resolved
        truth.flows[str(selector)] = flows.flow(edge)

    logger.info(f"Ground truth for {config.name}: {len(transport)} transport, {len(direct)} direct, "
                f"{len(indirect)} indirect, {len(collisions)} collisions, {len(truth.flows)} flows")
    return truth
