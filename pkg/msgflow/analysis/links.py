"""
Link inference over IR instances.

Three families:
    transport  publication -> receiving subscription callbacks, by (topic, source timestamp)
    direct     subscription callback -> publications made inside it on the same thread
    indirect   annotated many-to-many links (periodic_async, partial_sync)
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .ir import (
    CallbackInstance,
    Diagnostic,
    DiagnosticCode,
    IrDatabase,
    LinkAnnotation,
    PublicationInstance,
    latest_ending_before,
)

logger = logging.getLogger(__name__)

PERIODIC_ASYNC = "periodic_async"
PARTIAL_SYNC = "partial_sync"


# =============================================================================
# Link types
# =============================================================================

@dataclass(frozen=True)
class TransportDestination:
    callback: str
    latency: int  # take_ts - dds_ts


@dataclass(frozen=True)
class TransportLink:
    source: str
    topic: str
    source_timestamp: int
    destinations: Tuple[TransportDestination, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "source": self.source,
            "topic": self.topic,
            "source_timestamp": self.source_timestamp,
            "destinations": [{"callback": d.callback, "latency": d.latency} for d in self.destinations],
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "TransportLink":
        return cls(
            d["source"], d["topic"], d["source_timestamp"],
            tuple(TransportDestination(x["callback"], x["latency"]) for x in d["destinations"]),
        )


@dataclass(frozen=True)
class DirectLink:
    input: str
    outputs: Tuple[str, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {"input": self.input, "outputs": list(self.outputs)}

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "DirectLink":
        return cls(d["input"], tuple(d["outputs"]))


@dataclass(frozen=True)
class IndirectLink:
    link_type: str
    inputs: Tuple[str, ...]  # annotation input order; empty slots omitted
    output: str
    annotation: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "link_type": self.link_type,
            "inputs": list(self.inputs),
            "output": self.output,
            "annotation": self.annotation,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "IndirectLink":
        return cls(d["link_type"], tuple(d["inputs"]), d["output"], d["annotation"])


class LinkSet:
    """All inferred links plus the lookups the flow graph expands through."""

    def __init__(
        self,
        transport: Sequence[TransportLink] = (),
        direct: Sequence[DirectLink] = (),
        indirect: Sequence[IndirectLink] = (),
        diagnostics: Sequence[Diagnostic] = (),
    ):
        self.transport = tuple(transport)
        self.direct = tuple(direct)
        self.indirect = tuple(indirect)
        self.diagnostics = tuple(diagnostics)

        self.transport_by_source: Dict[str, TransportLink] = {t.source: t for t in self.transport}
        self.transport_by_destination: Dict[str, TransportLink] = {}
        for t in self.transport:
            for d in t.destinations:
                self.transport_by_destination[d.callback] = t
        self.direct_by_input: Dict[str, DirectLink] = {d.input: d for d in self.direct}
        self.indirect_by_output: Dict[str, List[IndirectLink]] = defaultdict(list)
        self.indirect_by_input: Dict[str, List[IndirectLink]] = defaultdict(list)
        for link in self.indirect:
            self.indirect_by_output[link.output].append(link)
            for uid in link.inputs:
                self.indirect_by_input[uid].append(link)

    def __len__(self) -> int:
        return len(self.transport) + len(self.direct) + len(self.indirect)

    def summary(self) -> Dict[str, int]:
        codes = [d.code for d in self.diagnostics]
        return {
            "transport": len(self.transport),
            "transport_destinations": sum(len(t.destinations) for t in self.transport),
            "direct": len(self.direct),
            "periodic_async": sum(1 for l in self.indirect if l.link_type == PERIODIC_ASYNC),
            "partial_sync": sum(1 for l in self.indirect if l.link_type == PARTIAL_SYNC),
            "collisions": codes.count(DiagnosticCode.TIMESTAMP_COLLISION),
            "orphans": codes.count(DiagnosticCode.ORPHAN_RECEPTION),
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "transport": [t.to_dict() for t in self.transport],
            "direct": [d.to_dict() for d in self.direct],
            "indirect": [i.to_dict() for i in self.indirect],
            "diagnostics": [d.to_dict() for d in self.diagnostics],
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "LinkSet":
        return cls(
            [TransportLink.from_dict(x) for x in d["transport"]],
            [DirectLink.from_dict(x) for x in d["direct"]],
            [IndirectLink.from_dict(x) for x in d["indirect"]],
            [Diagnostic.from_dict(x) for x in d["diagnostics"]],
        )


# =============================================================================
# Containment
# =============================================================================

def innermost_enclosing(db: IrDatabase) -> Dict[str, CallbackInstance]:
    """
    Map publication uid -> innermost callback instance enclosing it on its thread.

    A callback encloses a publication when start < pub_ts < end on the same
    (host, pid, tid).
    """
    enclosing: Dict[str, CallbackInstance] = {}
    callbacks_by_thread = db.thread_callbacks()

    for thread, pubs in db.thread_publications().items():
        callbacks = sorted(callbacks_by_thread.get(thread, ()), key=lambda c: (c.start, -c.end, c.uid))
        if not callbacks:
            continue
        i = 0
        stack: List[CallbackInstance] = []
        for p in pubs:
            t = p.pub_ts
            while i < len(callbacks) and callbacks[i].start < t:
                c = callbacks[i]
                i += 1
                while stack and stack[-1].end <= c.start:
                    stack.pop()
                stack.append(c)
            while stack and stack[-1].end <= t:
                stack.pop()
            if stack:
                enclosing[p.uid] = stack[-1]
    return enclosing


# =============================================================================
# Transport
# =============================================================================

def match_transport(db: IrDatabase) -> Tuple[List[TransportLink], List[Diagnostic]]:
    """Group received messages under the unique publication with equal (topic, source timestamp)."""
    receptions: Dict[Tuple[str, int], List[CallbackInstance]] = defaultdict(list)
    for cb in db.callback_instances:
        if cb.is_subscription and cb.take_ts is not None:
            receptions[(cb.topic, cb.taken_source_timestamp)].append(cb)

    links: List[Tuple[PublicationInstance, TransportLink]] = []
    diagnostics: List[Diagnostic] = []
    for (topic, src_ts), callbacks in sorted(receptions.items()):
        candidates = db.query_publication(topic, src_ts)
        if not candidates:
            for cb in callbacks:
                diagnostics.append(Diagnostic(
                    DiagnosticCode.ORPHAN_RECEPTION,
                    f"{cb.uid} took a message on {topic} (source timestamp {src_ts}) with no matching publication",
                    cb.host, cb.take_ts, 0,
                ))
            continue
        if len(candidates) > 1:
            diagnostics.append(Diagnostic(
                DiagnosticCode.TIMESTAMP_COLLISION,
                f"{len(candidates)} publications on {topic} share source timestamp {src_ts}: "
                + ", ".join(p.uid for p in candidates),
                candidates[0].host, candidates[0].dds_ts, 0,
            ))
            continue
        pub = candidates[0]
        destinations = tuple(
            TransportDestination(cb.uid, cb.take_ts - pub.dds_ts)
            for cb in sorted(callbacks, key=lambda c: (c.take_ts, c.uid))
        )
        links.append((pub, TransportLink(pub.uid, topic, src_ts, destinations)))

    links.sort(key=lambda x: (x[0].dds_ts, x[0].uid))
    return [link for _, link in links], diagnostics


# =============================================================================
# Direct
# =============================================================================

def infer_direct(db: IrDatabase, enclosing: Optional[Dict[str, CallbackInstance]] = None) -> List[DirectLink]:
    """Publications made inside a subscription callback (innermost) on the same thread."""
    if enclosing is None:
        enclosing = innermost_enclosing(db)

    outputs: Dict[str, List[PublicationInstance]] = defaultdict(list)
    for uid, cb in enclosing.items():
        if cb.is_subscription:
            outputs[cb.uid].append(db.publication_by_uid[uid])

    links = []
    for cb in db.callback_instances:
        pubs = outputs.get(cb.uid)
        if pubs:
            pubs.sort(key=lambda p: (p.pub_ts, p.uid))
            links.append(DirectLink(cb.uid, tuple(p.uid for p in pubs)))
    return links


# =============================================================================
# Indirect
# =============================================================================

def _annotated_publications(db: IrDatabase, annotation: LinkAnnotation) -> List[PublicationInstance]:
    pubs = [p for key in annotation.outputs for p in db.publications_of(key)]
    pubs.sort(key=lambda p: (p.pub_ts, p.uid))
    return pubs


def infer_periodic_async(
    db: IrDatabase,
    enclosing: Optional[Dict[str, CallbackInstance]] = None,
) -> Tuple[List[IndirectLink], List[Diagnostic]]:
    """
    Link each annotated output published from a timer callback to the latest
    completed callback of every annotated input subscription.
    """
    if enclosing is None:
        enclosing = innermost_enclosing(db)
    links: List[IndirectLink] = []
    diagnostics: List[Diagnostic] = []

    for ann in db.annotations:
        if ann.link_type != PERIODIC_ASYNC:
            continue
        caches = []
        for sub in ann.inputs:
            callbacks = sorted(db.callbacks_of(sub), key=lambda c: (c.end, c.start, c.uid))
            caches.append((callbacks, [c.end for c in callbacks]))

        for pub in _annotated_publications(db, ann):
            timer_cb = enclosing.get(pub.uid)
            if timer_cb is None or timer_cb.owner_kind != "timer":
                where = "outside any callback" if timer_cb is None else f"inside {timer_cb.uid}"
                diagnostics.append(Diagnostic(
                    DiagnosticCode.ANNOTATION_MISUSE,
                    f"periodic_async output {pub.uid} published {where}, not in a timer callback",
                    pub.host, pub.pub_ts, 0,
                ))
                continue
            inputs = [latest_ending_before(cbs, ends, timer_cb.start) for cbs, ends in caches]
            present = tuple(c.uid for c in inputs if c is not None)
            if len(present) < len(inputs):
                diagnostics.append(Diagnostic(
                    DiagnosticCode.EMPTY_CACHE,
                    f"periodic_async output {pub.uid}: {len(inputs) - len(present)} of {len(inputs)} "
                    f"input caches empty",
                    pub.host, pub.pub_ts, 0,
                ))
            links.append(IndirectLink(PERIODIC_ASYNC, present, pub.uid, ann.index))

    return links, diagnostics


def infer_partial_sync(
    db: IrDatabase,
    enclosing: Optional[Dict[str, CallbackInstance]] = None,
) -> Tuple[List[IndirectLink], List[Diagnostic]]:
    """
    Replay the per-annotation input caches in callback start order; an
    annotated output published inside an input callback consumes the caches.
    """
    if enclosing is None:
        enclosing = innermost_enclosing(db)
    links: List[IndirectLink] = []
    diagnostics: List[Diagnostic] = []

    for ann in db.annotations:
        if ann.link_type != PARTIAL_SYNC:
            continue
        inputs = set(ann.inputs)
        callbacks = sorted(
            (c for sub in ann.inputs for c in db.callbacks_of(sub)),
            key=lambda c: (c.start, c.uid),
        )

        outputs_in: Dict[str, List[PublicationInstance]] = defaultdict(list)
        for pub in _annotated_publications(db, ann):
            cb = enclosing.get(pub.uid)
            if cb is None or cb.owner not in inputs:
                diagnostics.append(Diagnostic(
                    DiagnosticCode.ANNOTATION_MISUSE,
                    f"partial_sync output {pub.uid} published outside the annotation's input callbacks",
                    pub.host, pub.pub_ts, 0,
                ))
                continue
            outputs_in[cb.uid].append(pub)

        slots: Dict[Any, Optional[CallbackInstance]] = {sub: None for sub in ann.inputs}
        busy_until: Optional[int] = None
        for cb in callbacks:
            if busy_until is not None and cb.start < busy_until:
                diagnostics.append(Diagnostic(
                    DiagnosticCode.CACHE_INTERLEAVING,
                    f"partial_sync input {cb.uid} overlaps another input callback of annotation {ann.index}",
                    cb.host, cb.start, 0,
                ))
            busy_until = cb.end if busy_until is None else max(busy_until, cb.end)

            slots[cb.owner] = cb
            outs = outputs_in.get(cb.uid)
            if not outs:
                continue
            current = tuple(slots[s].uid for s in ann.inputs if slots[s] is not None)
            if len(current) < len(ann.inputs):
                diagnostics.append(Diagnostic(
                    DiagnosticCode.EMPTY_CACHE,
                    f"partial_sync output in {cb.uid} published with "
                    f"{len(ann.inputs) - len(current)} empty input slot(s)",
                    cb.host, cb.start, 0,
                ))
            for pub in outs:
                links.append(IndirectLink(PARTIAL_SYNC, current, pub.uid, ann.index))
            slots = {sub: None for sub in ann.inputs}

    return links, diagnostics


def infer_all(db: IrDatabase) -> LinkSet:
    """Run every inference over one database."""
    enclosing = innermost_enclosing(db)
    transport, diagnostics = match_transport(db)
    direct = infer_direct(db, enclosing)
    periodic, periodic_diags = infer_periodic_async(db, enclosing)
    partial, partial_diags = infer_partial_sync(db, enclosing)

    links = LinkSet(transport, direct, periodic + partial, diagnostics + periodic_diags + partial_diags)
    logger.info(f"Inferred links: {links.summary()}")
    return links
