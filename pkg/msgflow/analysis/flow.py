"""
Message flow graphs.

A flow graph is a DAG of typed, time-stamped edges (callbacks, publications,
transport links, takes and indirect links) discovered from a seed edge by
following the successor relation forward and its inverse backward.
"""

import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field
from enum import Enum
from graphlib import CycleError, TopologicalSorter
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple

from ..core.config import FLOW_VERSION, TF_TOPIC
from ..core.errors import FlowGraphError, SeedNotFound
from ..trace.identity import ObjectKey
from .ir import CallbackInstance, Diagnostic, IrDatabase, PublicationInstance
from .links import LinkSet, PARTIAL_SYNC, PERIODIC_ASYNC, IndirectLink, innermost_enclosing

logger = logging.getLogger(__name__)


class FlowEdgeKind(str, Enum):
    TIMER_CALLBACK = "timer_callback"
    SUBSCRIPTION_CALLBACK = "subscription_callback"
    MESSAGE_PUBLICATION = "message_publication"
    TRANSPORT_LINK = "transport_link"
    PERIODIC_ASYNC_LINK = "periodic_async_link"
    PARTIAL_SYNC_LINK = "partial_sync_link"
    TAKE = "take"


K = FlowEdgeKind
INDIRECT_KINDS = {PERIODIC_ASYNC: K.PERIODIC_ASYNC_LINK, PARTIAL_SYNC: K.PARTIAL_SYNC_LINK}

# Allowed (predecessor kind -> successor kinds)
ALLOWED_SUCCESSORS: Dict[FlowEdgeKind, frozenset] = {
    K.TIMER_CALLBACK: frozenset({K.MESSAGE_PUBLICATION}),
    K.SUBSCRIPTION_CALLBACK: frozenset({K.MESSAGE_PUBLICATION, K.PERIODIC_ASYNC_LINK, K.PARTIAL_SYNC_LINK}),
    K.MESSAGE_PUBLICATION: frozenset({K.TRANSPORT_LINK}),
    K.TRANSPORT_LINK: frozenset({K.TAKE, K.SUBSCRIPTION_CALLBACK}),
    K.TAKE: frozenset({K.SUBSCRIPTION_CALLBACK}),
    K.PERIODIC_ASYNC_LINK: frozenset({K.MESSAGE_PUBLICATION}),
    K.PARTIAL_SYNC_LINK: frozenset({K.MESSAGE_PUBLICATION}),
}

EdgeKey = Tuple[FlowEdgeKind, str]


def transport_subject(publication: str, callback: str) -> str:
    return f"{publication}->{callback}"


def indirect_subject(output: str, input_callback: str) -> str:
    return f"{input_callback}=>{output}"


@dataclass(frozen=True)
class FlowEdge:
    kind: FlowEdgeKind
    subject: str
    start_ts: int
    end_ts: int
    label: str = ""
    lane: str = ""

    @property
    def key(self) -> EdgeKey:
        return (self.kind, self.subject)

    @property
    def weight(self) -> int:
        return self.end_ts - self.start_ts


# =============================================================================
# Seeds
# =============================================================================

@dataclass(frozen=True)
class SeedSelector:
    """One of publication(topic, source_ts), callback(object, k) or callback_at(object, ts)."""

    kind: str
    topic: Optional[str] = None
    source_timestamp: Optional[int] = None
    object: Optional[str] = None
    index: Optional[int] = None
    timestamp: Optional[int] = None

    @classmethod
    def publication(cls, topic: str, source_timestamp: int) -> "SeedSelector":
        return cls("publication", topic=topic, source_timestamp=source_timestamp)

    @classmethod
    def callback(cls, obj: str, index: int = 0) -> "SeedSelector":
        return cls("callback", object=str(obj), index=index)

    @classmethod
    def callback_at(cls, obj: str, timestamp: int) -> "SeedSelector":
        return cls("callback_at", object=str(obj), timestamp=timestamp)

    def __str__(self) -> str:
        if self.kind == "publication":
            return f"publication:{self.topic}@{self.source_timestamp}"
        if self.kind == "callback":
            return f"callback:{self.object}#{self.index}"
        return f"callback_at:{self.object}@{self.timestamp}"

    @classmethod
    def parse(cls, text: str) -> "SeedSelector":
        kind, _, rest = text.partition(":")
        if kind == "publication":
            topic, _, ts = rest.rpartition("@")
            return cls.publication(topic, int(ts))
        if kind == "callback":
            obj, _, index = rest.rpartition("#")
            return cls.callback(obj, int(index))
        if kind == "callback_at":
            obj, _, ts = rest.rpartition("@")
            return cls.callback_at(obj, int(ts))
        raise ValueError(f"unknown seed selector {text!r}")

    def to_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def resolve_object(db: IrDatabase, text: str) -> ObjectKey:
    """
    Resolve an object reference for callback seeds.

    Accepts an object key ``host:pid:handle``, ``<node>/<topic>`` for a
    subscription (e.g. ``/fusion/points``) or ``<node>:timer`` for a node's timer.

    Raises:
        SeedNotFound: no or several objects match
    """
    try:
        key = ObjectKey.parse(text)
        if key in db.subscriptions or key in db.timers:
            return key
    except ValueError:
        pass

    matches: List[ObjectKey] = []
    if text.endswith(":timer"):
        node = text[: -len(":timer")]
        matches = [t.key for t in db.timers.values() if db.node_name_of(t.key) == node]
    else:
        for sub in db.subscriptions.values():
            fqn = db.node_name_of(sub.key)
            if fqn.rstrip("/") + sub.topic == text:
                matches.append(sub.key)

    if len(matches) == 1:
        return matches[0]
    known = [f"{db.node_name_of(s.key).rstrip('/')}{s.topic}" for s in db.subscriptions.values()]
    known += [f"{db.node_name_of(t.key)}:timer" for t in db.timers.values()]
    if not matches:
        raise SeedNotFound(f"no subscription or timer matches {text!r}", sorted(set(known))[:20])
    raise SeedNotFound(f"{text!r} is ambiguous", [str(k) for k in matches])


# =============================================================================
# Graph
# =============================================================================

@dataclass
class LatencyRow:
    leaf: EdgeKey
    latency: int
    path: List[EdgeKey]
    breakdown: Dict[str, int]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "leaf": {"kind": self.leaf[0].value, "subject": self.leaf[1]},
            "latency": self.latency,
            "path": [{"kind": k.value, "subject": s} for k, s in self.path],
            "breakdown": self.breakdown,
        }


@dataclass
class FlowGraph:
    seed: SeedSelector
    seed_edge: EdgeKey
    direction: str
    edges: Dict[EdgeKey, FlowEdge] = field(default_factory=dict)
    successors: Dict[EdgeKey, Set[EdgeKey]] = field(default_factory=lambda: defaultdict(set))
    predecessors: Dict[EdgeKey, Set[EdgeKey]] = field(default_factory=lambda: defaultdict(set))
    publication_layers: Dict[str, Dict[str, int]] = field(default_factory=dict)

    def add_succession(self, a: EdgeKey, b: EdgeKey) -> None:
        self.successors[a].add(b)
        self.predecessors[b].add(a)

    @property
    def roots(self) -> List[EdgeKey]:
        return [k for k in self.edges if not self.predecessors.get(k)]

    @property
    def leaves(self) -> List[EdgeKey]:
        return [k for k in self.edges if not self.successors.get(k)]

    def successions(self) -> List[Tuple[EdgeKey, EdgeKey]]:
        order = {k: i for i, k in enumerate(self.edges)}
        pairs = [(a, b) for a, bs in self.successors.items() for b in bs]
        return sorted(pairs, key=lambda p: (order[p[0]], order[p[1]]))

    def edge_keys(self) -> List[Tuple[str, str]]:
        """Sorted (kind, subject) pairs, the comparison form used against ground truth."""
        return sorted((k.value, s) for k, s in self.edges)

    def topological_order(self) -> List[EdgeKey]:
        sorter = TopologicalSorter({k: self.predecessors.get(k, set()) for k in self.edges})
        try:
            return list(sorter.static_order())
        except CycleError as e:
            raise FlowGraphError(f"flow graph contains a cycle: {e.args[1]}") from None

    def vertices(self) -> Tuple[Dict[EdgeKey, Tuple[str, str]], List[str]]:
        """
        Junction vertices for rendering.

        Each edge has a tail and a head; the head of an edge and the tails of
        its successors are merged into one vertex. Vertices are named
        ``v<counter>`` in discovery order.
        """
        parent: Dict[Tuple[str, EdgeKey], Tuple[str, EdgeKey]] = {}

        def find(x):
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.successions():
            ra, rb = find(("head", a)), find(("tail", b))
            if ra != rb:
                parent[rb] = ra

        names: Dict[Any, str] = {}
        ends: Dict[EdgeKey, Tuple[str, str]] = {}
        for k in self.edges:
            pair = []
            for side in ("tail", "head"):
                root = find((side, k))
                if root not in names:
                    names[root] = f"v{len(names)}"
                pair.append(names[root])
            ends[k] = (pair[0], pair[1])
        return ends, list(names.values())


def check_integrity(graph: FlowGraph) -> None:
    """
    Verify non-negative weights, the edge grammar and acyclicity.

    Raises:
        FlowGraphError: first violation found
    """
    for edge in graph.edges.values():
        if edge.weight < 0:
            raise FlowGraphError(f"{edge.kind.value} edge {edge.subject} has negative weight {edge.weight}")
    for a, b in graph.successions():
        if b[0] not in ALLOWED_SUCCESSORS[a[0]]:
            raise FlowGraphError(f"{a[0].value} edge {a[1]} cannot be followed by {b[0].value} edge {b[1]}")
    graph.topological_order()


# =============================================================================
# Construction
# =============================================================================

class FlowBuilder:
    """
    Successor relation over one analyzed database.

    The lookups are built once; many graphs can be built from one builder.
    """

    def __init__(self, db: IrDatabase, links: LinkSet, enclosing: Optional[Dict[str, CallbackInstance]] = None):
        self.db = db
        self.links = links
        self.enclosing = enclosing if enclosing is not None else innermost_enclosing(db)
        self.contained: Dict[str, List[PublicationInstance]] = defaultdict(list)
        for uid in sorted(self.enclosing, key=lambda u: (db.publication_by_uid[u].pub_ts, u)):
            self.contained[self.enclosing[uid].uid].append(db.publication_by_uid[uid])
        self.indirect_by_key: Dict[str, IndirectLink] = {}
        for link in links.indirect:
            for uid in link.inputs:
                self.indirect_by_key[indirect_subject(link.output, uid)] = link

    # -------------------------------------------------------------------------
    # /tf rules
    # -------------------------------------------------------------------------

    def is_tf_callback(self, cb: CallbackInstance) -> bool:
        return cb.is_subscription and cb.topic == TF_TOPIC

    def is_pruned(self, pub: PublicationInstance, cb: CallbackInstance) -> bool:
        """A /tf message received by the node that published it."""
        if pub.topic != TF_TOPIC:
            return False
        pub_node = self.db.publishers[pub.publisher].node if pub.publisher in self.db.publishers else None
        sub_node = self.db.subscriptions[cb.owner].node if cb.owner in self.db.subscriptions else None
        return pub_node is not None and pub_node == sub_node

    # -------------------------------------------------------------------------
    # Edges
    # -------------------------------------------------------------------------

    def callback_edge(self, cb: CallbackInstance) -> FlowEdge:
        kind = K.SUBSCRIPTION_CALLBACK if cb.is_subscription else K.TIMER_CALLBACK
        label = self.db.describe_object(cb.owner)
        return FlowEdge(kind, cb.uid, cb.start, cb.end, label, self.db.node_name_of(cb.owner))

    def take_edge(self, cb: CallbackInstance) -> FlowEdge:
        return FlowEdge(K.TAKE, cb.uid, cb.take_ts, cb.start, f"take {cb.topic}", self.db.node_name_of(cb.owner))

    def publication_edge(self, pub: PublicationInstance) -> FlowEdge:
        return FlowEdge(K.MESSAGE_PUBLICATION, pub.uid, pub.pub_ts, pub.dds_ts,
                        f"publish {pub.topic}", self.db.node_name_of(pub.publisher))

    def transport_edge(self, pub: PublicationInstance, cb: CallbackInstance) -> FlowEdge:
        end = cb.take_ts if cb.take_ts is not None else cb.start
        return FlowEdge(K.TRANSPORT_LINK, transport_subject(pub.uid, cb.uid), pub.dds_ts, end,
                        pub.topic, f"{pub.topic} transport")

    def indirect_edge(self, link: IndirectLink, cb: CallbackInstance) -> FlowEdge:
        pub = self.db.publication_by_uid[link.output]
        return FlowEdge(INDIRECT_KINDS[link.link_type], indirect_subject(link.output, cb.uid), cb.end, pub.pub_ts,
                        f"{link.link_type} -> {pub.topic}", self.db.node_name_of(pub.publisher))

    def edge_for(self, key: EdgeKey) -> FlowEdge:
        kind, subject = key
        db = self.db
        if kind in (K.TIMER_CALLBACK, K.SUBSCRIPTION_CALLBACK):
            return self.callback_edge(db.callback_by_uid[subject])
        if kind is K.TAKE:
            return self.take_edge(db.callback_by_uid[subject])
        if kind is K.MESSAGE_PUBLICATION:
            return self.publication_edge(db.publication_by_uid[subject])
        if kind is K.TRANSPORT_LINK:
            pub_uid, cb_uid = subject.split("->", 1)
            return self.transport_edge(db.publication_by_uid[pub_uid], db.callback_by_uid[cb_uid])
        cb_uid = subject.split("=>", 1)[0]
        return self.indirect_edge(self.indirect_by_key[subject], db.callback_by_uid[cb_uid])

    # -------------------------------------------------------------------------
    # Successor relation
    # -------------------------------------------------------------------------

    def _callback_key(self, cb: CallbackInstance) -> EdgeKey:
        return (K.SUBSCRIPTION_CALLBACK if cb.is_subscription else K.TIMER_CALLBACK, cb.uid)

    def _reception_key(self, cb: CallbackInstance) -> EdgeKey:
        return (K.TAKE, cb.uid) if cb.take_ts is not None else self._callback_key(cb)

    def _indirect_inputs(self, pub: PublicationInstance) -> Iterable[Tuple[IndirectLink, CallbackInstance]]:
        enclosing = self.enclosing.get(pub.uid)
        for link in self.links.indirect_by_output.get(pub.uid, ()):
            for uid in link.inputs:
                cb = self.db.callback_by_uid.get(uid)
                if cb is None or self.is_tf_callback(cb):
                    continue
                if enclosing is not None and enclosing.uid == uid:
                    continue
                yield link, cb

    def successors(self, key: EdgeKey) -> List[EdgeKey]:
        kind, subject = key
        db = self.db
        out: List[EdgeKey] = []

        if kind in (K.TIMER_CALLBACK, K.SUBSCRIPTION_CALLBACK):
            cb = db.callback_by_uid[subject]
            if self.is_tf_callback(cb):
                return out
            out.extend((K.MESSAGE_PUBLICATION, p.uid) for p in self.contained.get(cb.uid, ()))
            if cb.is_subscription:
                for link in self.links.indirect_by_input.get(cb.uid, ()):
                    enclosing = self.enclosing.get(link.output)
                    if enclosing is not None and enclosing.uid == cb.uid:
                        continue
                    out.append((INDIRECT_KINDS[link.link_type], indirect_subject(link.output, cb.uid)))

        elif kind is K.TAKE:
            cb = db.callback_by_uid[subject]
            out.append(self._callback_key(cb))

        elif kind is K.MESSAGE_PUBLICATION:
            pub = db.publication_by_uid[subject]
            link = self.links.transport_by_source.get(pub.uid)
            if link is not None:
                dests = [db.callback_by_uid[d.callback] for d in link.destinations]
                out.extend((K.TRANSPORT_LINK, transport_subject(pub.uid, cb.uid))
                           for cb in apply_tf_rules(self, pub, dests))

        elif kind is K.TRANSPORT_LINK:
            cb = db.callback_by_uid[subject.split("->", 1)[1]]
            out.append(self._reception_key(cb))

        else:
            out.append((K.MESSAGE_PUBLICATION, self.indirect_by_key[subject].output))

        return out

    def predecessors(self, key: EdgeKey) -> List[EdgeKey]:
        kind, subject = key
        db = self.db
        out: List[EdgeKey] = []

        if kind is K.SUBSCRIPTION_CALLBACK:
            cb = db.callback_by_uid[subject]
            if cb.take_ts is not None:
                out.append((K.TAKE, cb.uid))
            else:
                out.extend(self._transport_into(cb))

        elif kind is K.TAKE:
            out.extend(self._transport_into(db.callback_by_uid[subject]))

        elif kind is K.MESSAGE_PUBLICATION:
            pub = db.publication_by_uid[subject]
            enclosing = self.enclosing.get(pub.uid)
            if enclosing is not None and not self.is_tf_callback(enclosing):
                out.append(self._callback_key(enclosing))
            for link, cb in self._indirect_inputs(pub):
                out.append((INDIRECT_KINDS[link.link_type], indirect_subject(link.output, cb.uid)))

        elif kind is K.TRANSPORT_LINK:
            out.append((K.MESSAGE_PUBLICATION, subject.split("->", 1)[0]))

        elif kind in (K.PERIODIC_ASYNC_LINK, K.PARTIAL_SYNC_LINK):
            cb = db.callback_by_uid[subject.split("=>", 1)[0]]
            out.append(self._callback_key(cb))

        return out

    def _transport_into(self, cb: CallbackInstance) -> List[EdgeKey]:
        link = self.links.transport_by_destination.get(cb.uid)
        if link is None:
            return []
        pub = self.db.publication_by_uid[link.source]
        if not apply_tf_rules(self, pub, [cb]):
            return []
        return [(K.TRANSPORT_LINK, transport_subject(pub.uid, cb.uid))]

    # -------------------------------------------------------------------------
    # Seeds and closure
    # -------------------------------------------------------------------------

    def resolve_seed(self, seed: SeedSelector) -> EdgeKey:
        db = self.db
        if seed.kind == "publication":
            matches = db.query_publication(seed.topic, seed.source_timestamp)
            if len(matches) == 1:
                return (K.MESSAGE_PUBLICATION, matches[0].uid)
            if matches:
                raise SeedNotFound(f"{seed} matches {len(matches)} publications", [p.uid for p in matches])
            nearby = sorted(db.publications_by_topic.get(seed.topic, ()),
                            key=lambda p: abs(p.source_timestamp - seed.source_timestamp))[:5]
            raise SeedNotFound(f"no publication for {seed}",
                               [f"publication:{p.topic}@{p.source_timestamp}" for p in nearby])

        key = resolve_object(db, seed.object)
        callbacks = sorted(db.callbacks_of(key), key=lambda c: (c.start, c.uid))
        if seed.kind == "callback":
            if 0 <= seed.index < len(callbacks):
                return self._callback_key(callbacks[seed.index])
            raise SeedNotFound(f"{seed}: object has {len(callbacks)} callback instances",
                               [f"callback:{seed.object}#{i}" for i in range(min(len(callbacks), 5))])

        matches = [c for c in callbacks if c.start <= seed.timestamp <= c.end]
        if len(matches) == 1:
            return self._callback_key(matches[0])
        if matches:
            raise SeedNotFound(f"{seed} is ambiguous", [c.uid for c in matches])
        nearby = sorted(callbacks, key=lambda c: min(abs(c.start - seed.timestamp), abs(c.end - seed.timestamp)))[:5]
        raise SeedNotFound(f"no callback instance of {seed.object} covers {seed.timestamp}",
                           [f"callback_at:{seed.object}@{c.start}" for c in nearby])

    def closure(self, start: EdgeKey, forward: bool) -> List[EdgeKey]:
        step = self.successors if forward else self.predecessors
        seen = {start}
        order = [start]
        queue = deque([start])
        while queue:
            for nxt in step(queue.popleft()):
                if nxt not in seen:
                    seen.add(nxt)
                    order.append(nxt)
                    queue.append(nxt)
        return order

    def build(self, seed: SeedSelector, direction: str = "both") -> FlowGraph:
        if direction not in ("forward", "backward", "both"):
            raise ValueError(f"unknown direction {direction!r}")
        seed_edge = self.resolve_seed(seed)

        keys: List[EdgeKey] = []
        if direction in ("backward", "both"):
            keys.extend(reversed(self.closure(seed_edge, forward=False)))
        if direction in ("forward", "both"):
            keys.extend(k for k in self.closure(seed_edge, forward=True) if k != seed_edge or direction == "forward")

        graph = FlowGraph(seed, seed_edge, direction)
        for k in keys:
            graph.edges[k] = self.edge_for(k)
        for k in graph.edges:
            for s in self.successors(k):
                if s in graph.edges:
                    graph.add_succession(k, s)
        for k in graph.edges:
            if k[0] is K.MESSAGE_PUBLICATION:
                graph.publication_layers[k[1]] = self.db.publication_by_uid[k[1]].layer_durations()

        logger.info(f"Flow from {seed} ({direction}): {len(graph.edges)} edges, "
                    f"{len(graph.roots)} roots, {len(graph.leaves)} leaves")
        return graph


def build_flow(db: IrDatabase, links: LinkSet, seed: SeedSelector, direction: str = "both") -> FlowGraph:
    """
    Build the message flow graph around a seed.

    Raises:
        SeedNotFound: the selector does not resolve to exactly one instance
    """
    return FlowBuilder(db, links).build(seed, direction)


def apply_tf_rules(builder: FlowBuilder, pub: PublicationInstance, destinations: Iterable[CallbackInstance]) -> List[CallbackInstance]:
    """Transport destinations that survive /tf self-reception pruning."""
    return [cb for cb in destinations if not builder.is_pruned(pub, cb)]


# =============================================================================
# Latency
# =============================================================================

def end_to_end_latency(graph: FlowGraph) -> List[LatencyRow]:
    """
    Latency per leaf: leaf end minus the earliest start among roots reaching it.

    Rows are sorted by leaf end time.
    """
    earliest: Dict[EdgeKey, Tuple[int, Optional[EdgeKey]]] = {}
    for key in graph.topological_order():
        preds = graph.predecessors.get(key)
        if not preds:
            earliest[key] = (graph.edges[key].start_ts, None)
        else:
            best = min(sorted(preds, key=lambda k: (k[0].value, k[1])), key=lambda p: earliest[p][0])
            earliest[key] = (earliest[best][0], best)

    rows = []
    for leaf in graph.leaves:
        path = [leaf]
        while earliest[path[-1]][1] is not None:
            path.append(earliest[path[-1]][1])
        path.reverse()
        breakdown: Dict[str, int] = defaultdict(int)
        for k in path:
            breakdown[k[0].value] += graph.edges[k].weight
        leaf_edge = graph.edges[leaf]
        rows.append(LatencyRow(leaf, leaf_edge.end_ts - earliest[leaf][0], path, dict(breakdown)))

    rows.sort(key=lambda r: (graph.edges[r.leaf].end_ts, r.leaf[0].value, r.leaf[1]))
    return rows


def path_latency(graph: FlowGraph, path: List[EdgeKey]) -> int:
    """Sum of edge weights plus the gaps between consecutive edges."""
    total = 0
    for i, k in enumerate(path):
        total += graph.edges[k].weight
        if i:
            total += graph.edges[k].start_ts - graph.edges[path[i - 1]].end_ts
    return total


# =============================================================================
# Serialization
# =============================================================================

def flow_to_dict(graph: FlowGraph, diagnostics: Iterable[Diagnostic] = ()) -> Dict[str, Any]:
    ends, vertices = graph.vertices()
    ids = {k: i for i, k in enumerate(graph.edges)}
    return {
        "flow_version": FLOW_VERSION,
        "seed": graph.seed.to_dict(),
        "seed_edge": ids[graph.seed_edge],
        "direction": graph.direction,
        "vertices": vertices,
        "edges": [
            {
                "id": ids[k],
                "kind": e.kind.value,
                "subject": e.subject,
                "start_ts": e.start_ts,
                "end_ts": e.end_ts,
                "weight": e.weight,
                "label": e.label,
                "from": ends[k][0],
                "to": ends[k][1],
            }
            for k, e in graph.edges.items()
        ],
        "successions": [[ids[a], ids[b]] for a, b in graph.successions()],
        "roots": [ids[k] for k in graph.roots],
        "leaves": [ids[k] for k in graph.leaves],
        "latencies": [r.to_dict() for r in end_to_end_latency(graph)],
        "publication_layers": graph.publication_layers,
        "diagnostics": [d.to_dict() for d in diagnostics],
    }


def export_flow(graph: FlowGraph, fmt: str, diagnostics: Iterable[Diagnostic] = (), px_per_ms: float = 10.0) -> bytes:
    """
    Render a checked flow graph as dot, json, svg-timeline or html.

    Raises:
        FlowGraphError: the graph fails its integrity check
    """
    check_integrity(graph)
    if fmt == "json":
        from ..core.utils import dumps_document
        return dumps_document(flow_to_dict(graph, diagnostics))
    if fmt == "dot":
        from ..ui.dot import flow_to_dot
        return flow_to_dot(graph).encode()
    if fmt == "svg-timeline":
        from ..ui.svg import flow_to_svg
        return flow_to_svg(graph, px_per_ms=px_per_ms).encode()
    if fmt == "html":
        from ..ui.charts import flow_gantt_html
        return flow_gantt_html(graph).encode()
    raise ValueError(f"unknown flow format {fmt!r}")
