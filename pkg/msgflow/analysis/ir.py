"""
Intermediate execution representation.

Objects (nodes, publishers, subscriptions, timers) are keyed by ObjectKey;
instances (publications, callback instances, executor state intervals) are
time-ordered and carry stable uids. The database is immutable once built and
serializes to a versioned JSON document.
"""

import bisect
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from ..core.config import IR_VERSION
from ..core.errors import DocumentVersionError
from ..trace.identity import ObjectKey


# =============================================================================
# Diagnostics
# =============================================================================

class DiagnosticCode(str, Enum):
    INCOMPLETE_PUBLISHER = "IncompletePublisher"
    GID_MISMATCH = "GidMismatch"
    UNRESOLVED_HANDLE = "UnresolvedHandle"
    UNREGISTERED_CALLBACK = "UnregisteredCallback"
    INVALID_TIMER = "InvalidTimer"
    UNRESOLVED_ANNOTATION = "UnresolvedAnnotation"
    LAYER_ORDER_VIOLATION = "LayerOrderViolation"
    PUBLICATION_WINDOW_REOPENED = "PublicationWindowReopened"
    INCOMPLETE_PUBLICATION = "IncompletePublication"
    UNTAKEN_MESSAGE = "UntakenMessage"
    UNCONSUMED_TAKE = "UnconsumedTake"
    CALLBACK_WITHOUT_TAKE = "CallbackWithoutTake"
    UNMATCHED_CALLBACK = "UnmatchedCallback"
    UNMATCHED_EXECUTOR_EVENT = "UnmatchedExecutorEvent"
    TRUNCATED_INTERVAL = "TruncatedInterval"
    ORPHAN_RECEPTION = "OrphanReception"
    TIMESTAMP_COLLISION = "TimestampCollision"
    EMPTY_CACHE = "EmptyCache"
    ANNOTATION_MISUSE = "AnnotationMisuse"
    CACHE_INTERLEAVING = "CacheInterleaving"


@dataclass(frozen=True)
class Diagnostic:
    """A recoverable analysis problem.

    ``event_count`` is the number of runtime trace events that were set aside
    because of this problem (0 when the events were still folded).
    """

    code: DiagnosticCode
    message: str
    host: Optional[str] = None
    timestamp: Optional[int] = None
    event_count: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "code": self.code.value,
            "message": self.message,
            "host": self.host,
            "timestamp": self.timestamp,
            "event_count": self.event_count,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Diagnostic":
        return cls(
            DiagnosticCode(data["code"]),
            data["message"],
            data.get("host"),
            data.get("timestamp"),
            data.get("event_count", 0),
        )


def _key(text: Optional[str]) -> Optional[ObjectKey]:
    return ObjectKey.parse(text) if text is not None else None


def _text(key: Optional[ObjectKey]) -> Optional[str]:
    return str(key) if key is not None else None


# =============================================================================
# Objects
# =============================================================================

@dataclass(frozen=True)
class NodeRec:
    key: ObjectKey
    name: str
    namespace: str

    @property
    def fqn(self) -> str:
        return self.namespace.rstrip("/") + "/" + self.name.lstrip("/")

    def to_dict(self) -> Dict[str, Any]:
        return {"key": str(self.key), "name": self.name, "namespace": self.namespace}

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "NodeRec":
        return cls(ObjectKey.parse(d["key"]), d["name"], d["namespace"])


@dataclass(frozen=True)
class PublisherRec:
    key: ObjectKey
    node: Optional[ObjectKey]
    topic: str
    gid: Optional[str]
    rcl_handle: Optional[int]
    rmw_handle: Optional[int]
    writer_handle: Optional[int]
    complete: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "key": str(self.key),
            "node": _text(self.node),
            "topic": self.topic,
            "gid": self.gid,
            "layer_handles": {"rcl": self.rcl_handle, "rmw": self.rmw_handle, "dds_writer": self.writer_handle},
            "complete": self.complete,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "PublisherRec":
        handles = d["layer_handles"]
        return cls(
            ObjectKey.parse(d["key"]), _key(d["node"]), d["topic"], d["gid"],
            handles["rcl"], handles["rmw"], handles["dds_writer"], d["complete"],
        )


@dataclass(frozen=True)
class SubscriptionRec:
    key: ObjectKey
    node: Optional[ObjectKey]
    topic: str
    rmw_handle: int
    gid: Optional[str]
    callback_ref: Optional[int]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "key": str(self.key),
            "node": _text(self.node),
            "topic": self.topic,
            "rmw_handle": self.rmw_handle,
            "gid": self.gid,
            "callback_ref": self.callback_ref,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "SubscriptionRec":
        return cls(
            ObjectKey.parse(d["key"]), _key(d["node"]), d["topic"],
            d["rmw_handle"], d["gid"], d["callback_ref"],
        )


@dataclass(frozen=True)
class TimerRec:
    key: ObjectKey
    node: Optional[ObjectKey]
    period_ns: int
    callback_ref: Optional[int]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "key": str(self.key),
            "node": _text(self.node),
            "period_ns": self.period_ns,
            "callback_ref": self.callback_ref,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "TimerRec":
        return cls(ObjectKey.parse(d["key"]), _key(d["node"]), d["period_ns"], d["callback_ref"])


@dataclass(frozen=True)
class LinkAnnotation:
    index: int
    link_type: str
    host: str
    pid: int
    inputs: Tuple[ObjectKey, ...]
    outputs: Tuple[ObjectKey, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "link_type": self.link_type,
            "host": self.host,
            "pid": self.pid,
            "inputs": [str(k) for k in self.inputs],
            "outputs": [str(k) for k in self.outputs],
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "LinkAnnotation":
        return cls(
            d["index"], d["link_type"], d["host"], d["pid"],
            tuple(ObjectKey.parse(k) for k in d["inputs"]),
            tuple(ObjectKey.parse(k) for k in d["outputs"]),
        )


# =============================================================================
# Instances
# =============================================================================

@dataclass(frozen=True, slots=True)
class PublicationInstance:
    uid: str
    publisher: ObjectKey
    topic: str
    host: str
    pid: int
    tid: int
    rclcpp_ts: Optional[int]
    rcl_ts: Optional[int]
    rmw_ts: Optional[int]
    dds_ts: int
    source_timestamp: int

    @property
    def pub_ts(self) -> int:
        """Earliest available layer timestamp (the user-level call when traced)."""
        for ts in (self.rclcpp_ts, self.rcl_ts, self.rmw_ts):
            if ts is not None:
                return ts
        return self.dds_ts

    def layer_durations(self) -> Dict[str, int]:
        """Time spent between consecutive present layers, keyed 'rclcpp->rcl' etc."""
        layers = [
            (name, ts) for name, ts in
            (("rclcpp", self.rclcpp_ts), ("rcl", self.rcl_ts), ("rmw", self.rmw_ts), ("dds", self.dds_ts))
            if ts is not None
        ]
        return {f"{a}->{b}": tb - ta for (a, ta), (b, tb) in zip(layers, layers[1:])}

    def shifted(self, offset: int) -> "PublicationInstance":
        def s(ts: Optional[int]) -> Optional[int]:
            return None if ts is None else ts + offset
        return PublicationInstance(
            self.uid, self.publisher, self.topic, self.host, self.pid, self.tid,
            s(self.rclcpp_ts), s(self.rcl_ts), s(self.rmw_ts), self.dds_ts + offset,
            self.source_timestamp,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "uid": self.uid,
            "publisher": str(self.publisher),
            "topic": self.topic,
            "host": self.host,
            "pid": self.pid,
            "tid": self.tid,
            "layer_timestamps": {
                "rclcpp_ts": self.rclcpp_ts,
                "rcl_ts": self.rcl_ts,
                "rmw_ts": self.rmw_ts,
                "dds_ts": self.dds_ts,
            },
            "source_timestamp": self.source_timestamp,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "PublicationInstance":
        layers = d["layer_timestamps"]
        return cls(
            d["uid"], ObjectKey.parse(d["publisher"]), d["topic"], d["host"], d["pid"], d["tid"],
            layers["rclcpp_ts"], layers["rcl_ts"], layers["rmw_ts"], layers["dds_ts"],
            d["source_timestamp"],
        )


@dataclass(frozen=True, slots=True)
class CallbackInstance:
    uid: str
    owner: ObjectKey
    owner_kind: str  # "subscription" | "timer"
    host: str
    pid: int
    tid: int
    start: int
    end: int
    topic: Optional[str] = None
    taken_source_timestamp: Optional[int] = None
    take_ts: Optional[int] = None

    @property
    def is_subscription(self) -> bool:
        return self.owner_kind == "subscription"

    @property
    def duration(self) -> int:
        return self.end - self.start

    def shifted(self, offset: int) -> "CallbackInstance":
        return CallbackInstance(
            self.uid, self.owner, self.owner_kind, self.host, self.pid, self.tid,
            self.start + offset, self.end + offset, self.topic, self.taken_source_timestamp,
            None if self.take_ts is None else self.take_ts + offset,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "uid": self.uid,
            "owner": str(self.owner),
            "owner_kind": self.owner_kind,
            "host": self.host,
            "pid": self.pid,
            "tid": self.tid,
            "start": self.start,
            "end": self.end,
            "topic": self.topic,
            "taken_source_timestamp": self.taken_source_timestamp,
            "take_ts": self.take_ts,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "CallbackInstance":
        return cls(
            d["uid"], ObjectKey.parse(d["owner"]), d["owner_kind"], d["host"], d["pid"], d["tid"],
            d["start"], d["end"], d.get("topic"), d.get("taken_source_timestamp"), d.get("take_ts"),
        )


class ExecutorState(str, Enum):
    WAITING = "waiting"
    OVERHEAD = "overhead"
    EXECUTING = "executing"


@dataclass(frozen=True, slots=True)
class ExecutorStateInterval:
    host: str
    pid: int
    tid: int
    state: ExecutorState
    start: int
    end: int
    target: Optional[ObjectKey] = None

    @property
    def lane(self) -> Tuple[str, int, int]:
        return (self.host, self.pid, self.tid)

    def shifted(self, offset: int) -> "ExecutorStateInterval":
        return ExecutorStateInterval(
            self.host, self.pid, self.tid, self.state,
            self.start + offset, self.end + offset, self.target,
        )

    def clipped(self, t0: int, t1: int) -> Optional["ExecutorStateInterval"]:
        start, end = max(self.start, t0), min(self.end, t1)
        if start >= end:
            return None
        return ExecutorStateInterval(self.host, self.pid, self.tid, self.state, start, end, self.target)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "host": self.host,
            "pid": self.pid,
            "tid": self.tid,
            "state": self.state.value,
            "start": self.start,
            "end": self.end,
            "target": _text(self.target),
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ExecutorStateInterval":
        return cls(
            d["host"], d["pid"], d["tid"], ExecutorState(d["state"]),
            d["start"], d["end"], _key(d.get("target")),
        )


# =============================================================================
# Database
# =============================================================================

def _publication_order(p: PublicationInstance):
    return (p.dds_ts, p.host, p.pid, p.tid, p.uid)


def _callback_order(c: CallbackInstance):
    return (c.start, c.host, c.pid, c.tid, c.uid)


def _interval_order(i: ExecutorStateInterval):
    return (i.host, i.pid, i.tid, i.start, i.end)


class IrDatabase:
    """
    Correlated objects and instances of one distributed trace.

    Instance lists are kept sorted; lookup indexes are derived from them on
    construction and are never mutated afterwards.
    """

    def __init__(
        self,
        nodes: Optional[Dict[ObjectKey, NodeRec]] = None,
        publishers: Optional[Dict[ObjectKey, PublisherRec]] = None,
        subscriptions: Optional[Dict[ObjectKey, SubscriptionRec]] = None,
        timers: Optional[Dict[ObjectKey, TimerRec]] = None,
        publication_instances: Iterable[PublicationInstance] = (),
        callback_instances: Iterable[CallbackInstance] = (),
        executor_intervals: Iterable[ExecutorStateInterval] = (),
        annotations: Sequence[LinkAnnotation] = (),
        diagnostics: Sequence[Diagnostic] = (),
        hosts: Sequence[str] = (),
        stats: Optional[Dict[str, int]] = None,
    ):
        self.nodes = dict(sorted((nodes or {}).items()))
        self.publishers = dict(sorted((publishers or {}).items()))
        self.subscriptions = dict(sorted((subscriptions or {}).items()))
        self.timers = dict(sorted((timers or {}).items()))
        self.publication_instances: Tuple[PublicationInstance, ...] = tuple(
            sorted(publication_instances, key=_publication_order))
        self.callback_instances: Tuple[CallbackInstance, ...] = tuple(
            sorted(callback_instances, key=_callback_order))
        self.executor_intervals: Tuple[ExecutorStateInterval, ...] = tuple(
            sorted(executor_intervals, key=_interval_order))
        self.annotations: Tuple[LinkAnnotation, ...] = tuple(annotations)
        self.diagnostics: Tuple[Diagnostic, ...] = tuple(diagnostics)
        self.hosts: Tuple[str, ...] = tuple(sorted(set(hosts) | self._instance_hosts()))
        self.stats: Dict[str, int] = dict(stats or {})
        self._build_indexes()

    def _instance_hosts(self) -> set:
        hosts = {k.host for k in self.nodes}
        hosts.update(p.host for p in self.publication_instances)
        hosts.update(c.host for c in self.callback_instances)
        return hosts

    def _build_indexes(self) -> None:
        self.publication_by_uid: Dict[str, PublicationInstance] = {}
        self.callback_by_uid: Dict[str, CallbackInstance] = {}
        self.publications_by_topic: Dict[str, List[PublicationInstance]] = defaultdict(list)
        self.publications_by_key: Dict[Tuple[str, int], List[PublicationInstance]] = defaultdict(list)
        self.instances_by_object: Dict[ObjectKey, List[Any]] = defaultdict(list)

        for p in self.publication_instances:
            self.publication_by_uid[p.uid] = p
            self.publications_by_topic[p.topic].append(p)
            self.publications_by_key[(p.topic, p.source_timestamp)].append(p)
            self.instances_by_object[p.publisher].append(p)
        for c in self.callback_instances:
            self.callback_by_uid[c.uid] = c
            self.instances_by_object[c.owner].append(c)

    # -------------------------------------------------------------------------
    # Queries
    # -------------------------------------------------------------------------

    def query_publication(self, topic: str, source_ts: int) -> List[PublicationInstance]:
        return list(self.publications_by_key.get((topic, source_ts), ()))

    def callbacks_of(self, owner: ObjectKey) -> List[CallbackInstance]:
        return [i for i in self.instances_by_object.get(owner, ()) if isinstance(i, CallbackInstance)]

    def publications_of(self, publisher: ObjectKey) -> List[PublicationInstance]:
        return [i for i in self.instances_by_object.get(publisher, ()) if isinstance(i, PublicationInstance)]

    def node_of(self, key: ObjectKey) -> Optional[NodeRec]:
        obj = self.publishers.get(key) or self.subscriptions.get(key) or self.timers.get(key)
        if obj is None or obj.node is None:
            return None
        return self.nodes.get(obj.node)

    def node_name_of(self, key: ObjectKey) -> str:
        node = self.node_of(key)
        return node.fqn if node else f"<pid {key.pid}>"

    def describe_object(self, key: ObjectKey) -> str:
        """Human label: node name plus topic or timer period."""
        node = self.node_name_of(key)
        if key in self.subscriptions:
            return f"{node} {self.subscriptions[key].topic}"
        if key in self.publishers:
            return f"{node} {self.publishers[key].topic}"
        if key in self.timers:
            return f"{node} timer {self.timers[key].period_ns / 1e6:g} ms"
        return f"{node} {key}"

    def time_span(self) -> Tuple[int, int]:
        """Smallest [t0, t1] covering all instances and intervals; (0, 0) if empty."""
        starts, ends = [], []
        if self.publication_instances:
            starts.append(min(p.pub_ts for p in self.publication_instances))
            ends.append(max(p.dds_ts for p in self.publication_instances))
        if self.callback_instances:
            starts.append(min(c.take_ts if c.take_ts is not None else c.start for c in self.callback_instances))
            ends.append(max(c.end for c in self.callback_instances))
        if self.executor_intervals:
            starts.append(min(i.start for i in self.executor_intervals))
            ends.append(max(i.end for i in self.executor_intervals))
        if not starts:
            return (0, 0)
        return (min(starts), max(ends))

    def thread_callbacks(self) -> Dict[Tuple[str, int, int], List[CallbackInstance]]:
        by_thread: Dict[Tuple[str, int, int], List[CallbackInstance]] = defaultdict(list)
        for c in self.callback_instances:
            by_thread[(c.host, c.pid, c.tid)].append(c)
        return by_thread

    def thread_publications(self) -> Dict[Tuple[str, int, int], List[PublicationInstance]]:
        by_thread: Dict[Tuple[str, int, int], List[PublicationInstance]] = defaultdict(list)
        for p in sorted(self.publication_instances, key=lambda p: (p.pub_ts, p.uid)):
            by_thread[(p.host, p.pid, p.tid)].append(p)
        return by_thread

    def replace(self, **changes: Any) -> "IrDatabase":
        """New database with some collections replaced."""
        current = dict(
            nodes=self.nodes,
            publishers=self.publishers,
            subscriptions=self.subscriptions,
            timers=self.timers,
            publication_instances=self.publication_instances,
            callback_instances=self.callback_instances,
            executor_intervals=self.executor_intervals,
            annotations=self.annotations,
            diagnostics=self.diagnostics,
            hosts=self.hosts,
            stats=self.stats,
        )
        current.update(changes)
        return IrDatabase(**current)

    # -------------------------------------------------------------------------
    # Serialization
    # -------------------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ir_version": IR_VERSION,
            "hosts": list(self.hosts),
            "nodes": [n.to_dict() for n in self.nodes.values()],
            "publishers": [p.to_dict() for p in self.publishers.values()],
            "subscriptions": [s.to_dict() for s in self.subscriptions.values()],
            "timers": [t.to_dict() for t in self.timers.values()],
            "publication_instances": [p.to_dict() for p in self.publication_instances],
            "callback_instances": [c.to_dict() for c in self.callback_instances],
            "executor_intervals": [i.to_dict() for i in self.executor_intervals],
            "annotations": [a.to_dict() for a in self.annotations],
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "stats": self.stats,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "IrDatabase":
        if d.get("ir_version") != IR_VERSION:
            raise DocumentVersionError("ir", d.get("ir_version"), IR_VERSION)
        nodes = [NodeRec.from_dict(x) for x in d["nodes"]]
        pubs = [PublisherRec.from_dict(x) for x in d["publishers"]]
        subs = [SubscriptionRec.from_dict(x) for x in d["subscriptions"]]
        timers = [TimerRec.from_dict(x) for x in d["timers"]]
        return cls(
            nodes={n.key: n for n in nodes},
            publishers={p.key: p for p in pubs},
            subscriptions={s.key: s for s in subs},
            timers={t.key: t for t in timers},
            publication_instances=[PublicationInstance.from_dict(x) for x in d["publication_instances"]],
            callback_instances=[CallbackInstance.from_dict(x) for x in d["callback_instances"]],
            executor_intervals=[ExecutorStateInterval.from_dict(x) for x in d["executor_intervals"]],
            annotations=[LinkAnnotation.from_dict(x) for x in d["annotations"]],
            diagnostics=[Diagnostic.from_dict(x) for x in d["diagnostics"]],
            hosts=d.get("hosts", ()),
            stats=d.get("stats"),
        )


def query_publication(db: IrDatabase, topic: str, source_ts: int) -> List[PublicationInstance]:
    """All publication instances on ``topic`` with the given source timestamp."""
    return db.query_publication(topic, source_ts)


def latest_ending_before(callbacks: Sequence[CallbackInstance], ends: Sequence[int], t: int) -> Optional[CallbackInstance]:
    """Latest callback with end <= t, given callbacks sorted by end and their ends."""
    i = bisect.bisect_right(ends, t)
    return callbacks[i - 1] if i else None
