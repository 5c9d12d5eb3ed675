"""
IR builder.

Correlates per-layer initialization events into objects, then folds runtime
events into publication instances, callback instances and executor state
intervals. Anything that cannot be correlated becomes a Diagnostic; every
runtime event is either folded or counted by a diagnostic.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from ..trace.bundle import HostTrace, TraceBundle
from ..trace.events import EXECUTOR_KINDS, INIT_KINDS, PUBLISH_KINDS, EventKind, TraceEvent
from ..trace.identity import ObjectKey, callback_uid, publication_uid
from .ir import (
    CallbackInstance,
    Diagnostic,
    DiagnosticCode,
    ExecutorState,
    ExecutorStateInterval,
    IrDatabase,
    LinkAnnotation,
    NodeRec,
    PublicationInstance,
    PublisherRec,
    SubscriptionRec,
    TimerRec,
)

logger = logging.getLogger(__name__)

LAYER_INDEX = {
    EventKind.PUBLISH_RCLCPP: 0,
    EventKind.PUBLISH_RCL: 1,
    EventKind.PUBLISH_RMW: 2,
    EventKind.DDS_WRITE: 3,
}
LAYER_NAMES = ("rclcpp", "rcl", "rmw", "dds")


# =============================================================================
# Publication folding
# =============================================================================

@dataclass
class _PublicationWindow:
    publisher: ObjectKey
    topic: str
    host: str
    pid: int
    tid: int
    message_ref: int
    layers: Dict[int, int] = field(default_factory=dict)
    event_count: int = 0
    opened_at: int = 0

    def add(self, layer: int, ts: int) -> None:
        if not self.layers:
            self.opened_at = ts
        self.layers[layer] = ts
        self.event_count += 1

    def to_instance(self, source_timestamp: int) -> PublicationInstance:
        return PublicationInstance(
            uid=publication_uid(self.host, self.pid, self.publisher.handle, source_timestamp),
            publisher=self.publisher,
            topic=self.topic,
            host=self.host,
            pid=self.pid,
            tid=self.tid,
            rclcpp_ts=self.layers.get(0),
            rcl_ts=self.layers.get(1),
            rmw_ts=self.layers.get(2),
            dds_ts=self.layers[3],
            source_timestamp=source_timestamp,
        )


@dataclass
class _PendingPublication:
    """Layer events buffered until their dds_write arrives."""

    publisher: ObjectKey
    events: List[TraceEvent] = field(default_factory=list)
    layers: Set[int] = field(default_factory=set)


_UNFINISHED_REASONS = {
    DiagnosticCode.INCOMPLETE_PUBLICATION: "never reached dds_write",
    DiagnosticCode.PUBLICATION_WINDOW_REOPENED: "closed by a new publication with the same message_ref",
}


def fold_publication(
    events: Sequence[TraceEvent],
    publisher: ObjectKey,
    topic: str,
    unfinished: DiagnosticCode = DiagnosticCode.INCOMPLETE_PUBLICATION,
) -> Tuple[Optional[PublicationInstance], List[Diagnostic]]:
    """
    Fold the layer events of one publication call into an instance.

    Args:
        events: publish_* / dds_write events sharing (pid, tid, message_ref),
            up to and including the closing dds_write
        publisher: key of the publisher the events belong to
        topic: topic of that publisher
        unfinished: code recorded when no dds_write closes the window

    Returns:
        (instance or None when no dds_write closed the window, diagnostics)
    """
    diagnostics: List[Diagnostic] = []
    window: Optional[_PublicationWindow] = None

    for event in events:
        layer = LAYER_INDEX[event.kind]
        if window is None:
            window = _PublicationWindow(
                publisher, topic, event.host, event.pid, event.tid, event["message_ref"])
        elif layer <= max(window.layers):
            diagnostics.append(_layer_order_diagnostic(event, window))
            continue
        window.add(layer, event.timestamp)
        if event.kind is EventKind.DDS_WRITE:
            return window.to_instance(event["source_timestamp"]), diagnostics

    if window is not None:
        diagnostics.append(Diagnostic(
            unfinished,
            f"publication on {topic} (message_ref {window.message_ref}, thread {window.tid}) "
            f"{_UNFINISHED_REASONS[unfinished]}",
            window.host, window.opened_at, window.event_count,
        ))
    return None, diagnostics


def _layer_order_diagnostic(event: TraceEvent, window: _PublicationWindow) -> Diagnostic:
    seen = LAYER_NAMES[max(window.layers)]
    return Diagnostic(
        DiagnosticCode.LAYER_ORDER_VIOLATION,
        f"{event.kind.value} after {seen} layer for message_ref {window.message_ref} "
        f"on thread {event.tid}",
        event.host, event.timestamp, 1,
    )


# =============================================================================
# Executor folding
# =============================================================================

class _ExecutorLane:
    """Three-state machine over one thread's executor events."""

    def __init__(self, host: str, pid: int, tid: int):
        self.host = host
        self.pid = pid
        self.tid = tid
        self.state: Optional[ExecutorState] = None
        self.since = 0
        self.target: Optional[ObjectKey] = None
        self.intervals: List[ExecutorStateInterval] = []
        self.diagnostics: List[Diagnostic] = []
        self.folded = 0

    def _close(self, end: int) -> None:
        if self.state is not None and end > self.since:
            target = self.target if self.state is ExecutorState.EXECUTING else None
            self.intervals.append(ExecutorStateInterval(
                self.host, self.pid, self.tid, self.state, self.since, end, target))
        self.state = None
        self.target = None

    def _open(self, state: ExecutorState, ts: int, target: Optional[ObjectKey] = None) -> None:
        self.state = state
        self.since = ts
        self.target = target

    def _unmatched(self, event: TraceEvent, what: str, event_count: int) -> None:
        self.diagnostics.append(Diagnostic(
            DiagnosticCode.UNMATCHED_EXECUTOR_EVENT,
            f"{what} on thread {self.tid} of pid {self.pid}",
            self.host, event.timestamp, event_count,
        ))

    def feed(self, event: TraceEvent) -> None:
        ts = event.timestamp
        kind = event.kind

        if kind is EventKind.EXECUTOR_WAIT_BEGIN:
            if self.state is ExecutorState.WAITING:
                self._unmatched(event, "executor_wait_begin while already waiting", 0)
            elif self.state is ExecutorState.EXECUTING:
                self._unmatched(event, "executor_wait_begin while executing", 0)
            self._close(ts)
            self._open(ExecutorState.WAITING, ts)
            self.folded += 1

        elif kind is EventKind.EXECUTOR_WAIT_END:
            if self.state is ExecutorState.WAITING:
                self._close(ts)
                self._open(ExecutorState.OVERHEAD, ts)
                self.folded += 1
            else:
                self._unmatched(event, "executor_wait_end without executor_wait_begin", 1)

        elif kind is EventKind.EXECUTOR_EXECUTE_BEGIN:
            if self.state is ExecutorState.WAITING:
                self._unmatched(event, "executor_execute_begin while waiting", 0)
            elif self.state is ExecutorState.EXECUTING:
                self._unmatched(event, "executor_execute_begin while executing", 0)
            self._close(ts)
            target = ObjectKey(self.host, self.pid, event["target_handle"])
            self._open(ExecutorState.EXECUTING, ts, target)
            self.folded += 1

        elif kind is EventKind.EXECUTOR_EXECUTE_END:
            if self.state is ExecutorState.EXECUTING:
                self._close(ts)
                self.folded += 1
            else:
                self._unmatched(event, "executor_execute_end without executor_execute_begin", 1)

    def finish(self, last_ts: int) -> None:
        """Close the lane at the thread's last event."""
        if self.state in (ExecutorState.WAITING, ExecutorState.EXECUTING):
            self.diagnostics.append(Diagnostic(
                DiagnosticCode.TRUNCATED_INTERVAL,
                f"{self.state.value} interval on thread {self.tid} of pid {self.pid} "
                f"still open at trace end",
                self.host, self.since, 0,
            ))
            self._close(max(last_ts, self.since))
        else:
            # Overhead after the last wake-up carries no information
            self.state = None


def fold_executor(
    events: Iterable[TraceEvent],
    last_ts: Optional[int] = None,
) -> Tuple[List[ExecutorStateInterval], List[Diagnostic]]:
    """
    Fold one thread's executor events into state intervals.

    Args:
        events: time-ordered events of one (host, pid, tid); non-executor kinds ignored
        last_ts: timestamp of the thread's last event of any kind, used to close
            truncated intervals (defaults to the last executor event)

    Returns:
        (intervals, diagnostics)
    """
    lane: Optional[_ExecutorLane] = None
    last = None
    for event in events:
        if event.kind not in EXECUTOR_KINDS:
            continue
        if lane is None:
            lane = _ExecutorLane(event.host, event.pid, event.tid)
        lane.feed(event)
        last = event.timestamp
    if lane is None:
        return [], []
    lane.finish(last_ts if last_ts is not None else last)
    return lane.intervals, lane.diagnostics


# =============================================================================
# Per-host builder
# =============================================================================

@dataclass
class _PendingTake:
    subscription: ObjectKey
    ts: int
    source_timestamp: int


@dataclass
class _OpenCallback:
    owner: ObjectKey
    owner_kind: str
    callback_ref: int
    start: int
    take: Optional[_PendingTake]


class _HostBuilder:
    """Builds objects and instances for one host trace."""

    def __init__(self, trace: HostTrace):
        self.host = trace.host
        self.trace = trace
        self.diagnostics: List[Diagnostic] = []

        self.nodes: Dict[ObjectKey, NodeRec] = {}
        self.publishers: Dict[ObjectKey, PublisherRec] = {}
        self.subscriptions: Dict[ObjectKey, SubscriptionRec] = {}
        self.timers: Dict[ObjectKey, TimerRec] = {}
        self.annotations: List[Tuple[int, str, int, List[int], List[int]]] = []

        # Runtime handle resolution, keyed (pid, handle)
        self.publisher_by_rcl: Dict[Tuple[int, int], ObjectKey] = {}
        self.publisher_by_rmw: Dict[Tuple[int, int], ObjectKey] = {}
        self.publisher_by_writer: Dict[Tuple[int, int], ObjectKey] = {}
        self.subscription_by_rmw: Dict[Tuple[int, int], ObjectKey] = {}
        self.callback_owner: Dict[Tuple[int, int], Tuple[ObjectKey, str]] = {}

        self.publications: List[PublicationInstance] = []
        self.callbacks: List[CallbackInstance] = []
        self.intervals: List[ExecutorStateInterval] = []
        self.runtime_events = 0
        self.folded_events = 0

    def _diag(self, code: DiagnosticCode, message: str, ts: Optional[int] = None, count: int = 0) -> None:
        self.diagnostics.append(Diagnostic(code, message, self.host, ts, count))

    # -------------------------------------------------------------------------
    # Initialization
    # -------------------------------------------------------------------------

    def correlate_objects(self) -> None:
        node_init: Dict[Tuple[int, int], TraceEvent] = {}
        pub_rcl: List[TraceEvent] = []
        pub_rmw: Dict[Tuple[int, int], str] = {}
        pub_dds: Dict[int, List[TraceEvent]] = defaultdict(list)
        sub_rcl: List[TraceEvent] = []
        sub_rmw: Dict[Tuple[int, int], str] = {}
        registrations: List[TraceEvent] = []
        timer_init: List[TraceEvent] = []
        timer_links: Dict[Tuple[int, int], int] = {}
        annotation_events: List[TraceEvent] = []

        for e in self.trace.events:
            if e.kind not in INIT_KINDS:
                continue
            k = e.kind
            if k is EventKind.NODE_INIT:
                node_init[(e.pid, e["node_handle"])] = e
            elif k is EventKind.PUB_INIT_RCL:
                pub_rcl.append(e)
            elif k is EventKind.PUB_INIT_RMW:
                pub_rmw[(e.pid, e["rmw_publisher_handle"])] = e["gid"]
            elif k is EventKind.PUB_INIT_DDS:
                pub_dds[e.pid].append(e)
            elif k is EventKind.SUB_INIT_RCL:
                sub_rcl.append(e)
            elif k is EventKind.SUB_INIT_RMW:
                sub_rmw[(e.pid, e["rmw_subscription_handle"])] = e["gid"]
            elif k is EventKind.CALLBACK_REGISTER:
                registrations.append(e)
            elif k is EventKind.TIMER_INIT:
                timer_init.append(e)
            elif k is EventKind.TIMER_NODE_LINK:
                timer_links[(e.pid, e["timer_handle"])] = e["node_handle"]
            elif k is EventKind.MESSAGE_LINK_ANNOTATION:
                annotation_events.append(e)

        for (pid, handle), e in node_init.items():
            key = ObjectKey(self.host, pid, handle)
            self.nodes[key] = NodeRec(key, e["node_name"], e["node_namespace"])

        self._correlate_publishers(pub_rcl, pub_rmw, pub_dds)
        self._correlate_subscriptions(sub_rcl, sub_rmw)
        self._correlate_timers(timer_init, timer_links)
        self._register_callbacks(registrations)

        for e in annotation_events:
            self.annotations.append((e.timestamp, e["link_type"], e.pid,
                                     e["subscription_handles"], e["publisher_handles"]))

    def _node_key(self, pid: int, handle: int, what: str, ts: int) -> Optional[ObjectKey]:
        key = ObjectKey(self.host, pid, handle)
        if key in self.nodes:
            return key
        self._diag(DiagnosticCode.UNRESOLVED_HANDLE, f"{what} refers to unknown node handle {handle} in pid {pid}", ts)
        return None

    def _correlate_publishers(
        self,
        pub_rcl: List[TraceEvent],
        pub_rmw: Dict[Tuple[int, int], str],
        pub_dds: Dict[int, List[TraceEvent]],
    ) -> None:
        writers_by_gid: Dict[Tuple[int, str], TraceEvent] = {}
        for pid, writers in pub_dds.items():
            for w in writers:
                gid_key = (pid, w["gid"])
                if gid_key in writers_by_gid:
                    self._diag(DiagnosticCode.GID_MISMATCH,
                               f"gid {w['gid']} used by more than one data writer in pid {pid}", w.timestamp)
                    continue
                writers_by_gid[gid_key] = w

        claimed_writers = set()
        claimed_rmw = set()
        for e in pub_rcl:
            pid = e.pid
            key = ObjectKey(self.host, pid, e["publisher_handle"])
            rmw_handle = e["rmw_publisher_handle"]
            topic = e["topic_name"]
            gid = pub_rmw.get((pid, rmw_handle))
            writer = writers_by_gid.get((pid, gid)) if gid is not None else None
            if gid is not None:
                claimed_rmw.add((pid, rmw_handle))

            if writer is not None:
                claimed_writers.add((pid, writer["writer_handle"]))
                if writer["topic_name"] != topic:
                    self._diag(DiagnosticCode.GID_MISMATCH,
                               f"publisher {key} on {topic} matched data writer on {writer['topic_name']}",
                               writer.timestamp)

            complete = gid is not None and writer is not None
            if not complete:
                missing = "pub_init_rmw" if gid is None else "pub_init_dds"
                self._diag(DiagnosticCode.INCOMPLETE_PUBLISHER,
                           f"publisher {key} on {topic}: no matching {missing}", e.timestamp)

            rec = PublisherRec(
                key=key,
                node=self._node_key(pid, e["node_handle"], f"publisher {key}", e.timestamp),
                topic=topic,
                gid=gid,
                rcl_handle=e["publisher_handle"],
                rmw_handle=rmw_handle,
                writer_handle=writer["writer_handle"] if writer is not None else None,
                complete=complete,
            )
            self.publishers[key] = rec
            self.publisher_by_rcl[(pid, e["publisher_handle"])] = key
            self.publisher_by_rmw[(pid, rmw_handle)] = key
            if writer is not None:
                self.publisher_by_writer[(pid, writer["writer_handle"])] = key

        # Writers no rcl publisher claimed still publish; keep them flagged
        for (pid, gid), w in sorted(writers_by_gid.items()):
            handle = w["writer_handle"]
            if (pid, handle) in claimed_writers:
                continue
            key = ObjectKey(self.host, pid, handle)
            self._diag(DiagnosticCode.INCOMPLETE_PUBLISHER,
                       f"data writer {key} on {w['topic_name']} has no rcl publisher", w.timestamp)
            self.publishers[key] = PublisherRec(
                key, None, w["topic_name"], gid, None, None, handle, False)
            self.publisher_by_writer[(pid, handle)] = key

        for (pid, rmw_handle) in sorted(set(pub_rmw) - claimed_rmw):
            self._diag(DiagnosticCode.INCOMPLETE_PUBLISHER,
                       f"rmw publisher {rmw_handle} in pid {pid} has no rcl publisher")

    def _correlate_subscriptions(self, sub_rcl: List[TraceEvent], sub_rmw: Dict[Tuple[int, int], str]) -> None:
        for e in sub_rcl:
            pid = e.pid
            key = ObjectKey(self.host, pid, e["subscription_handle"])
            rmw_handle = e["rmw_subscription_handle"]
            gid = sub_rmw.get((pid, rmw_handle))
            if gid is None:
                self._diag(DiagnosticCode.UNRESOLVED_HANDLE,
                           f"subscription {key} on {e['topic_name']}: no matching sub_init_rmw", e.timestamp)
            self.subscriptions[key] = SubscriptionRec(
                key=key,
                node=self._node_key(pid, e["node_handle"], f"subscription {key}", e.timestamp),
                topic=e["topic_name"],
                rmw_handle=rmw_handle,
                gid=gid,
                callback_ref=None,
            )
            self.subscription_by_rmw[(pid, rmw_handle)] = key

    def _correlate_timers(self, timer_init: List[TraceEvent], timer_links: Dict[Tuple[int, int], int]) -> None:
        for e in timer_init:
            key = ObjectKey(self.host, e.pid, e["timer_handle"])
            if e["period_ns"] <= 0:
                self._diag(DiagnosticCode.INVALID_TIMER,
                           f"timer {key} has non-positive period {e['period_ns']}", e.timestamp)
                continue
            node_handle = timer_links.get((e.pid, e["timer_handle"]))
            node = None
            if node_handle is not None:
                node = self._node_key(e.pid, node_handle, f"timer {key}", e.timestamp)
            self.timers[key] = TimerRec(key, node, e["period_ns"], None)

    def _register_callbacks(self, registrations: List[TraceEvent]) -> None:
        for e in registrations:
            owner = ObjectKey(self.host, e.pid, e["owner_handle"])
            ref = e["callback_ref"]
            if owner in self.subscriptions:
                sub = self.subscriptions[owner]
                self.subscriptions[owner] = SubscriptionRec(
                    sub.key, sub.node, sub.topic, sub.rmw_handle, sub.gid, ref)
                self.callback_owner[(e.pid, ref)] = (owner, "subscription")
            elif owner in self.timers:
                timer = self.timers[owner]
                self.timers[owner] = TimerRec(timer.key, timer.node, timer.period_ns, ref)
                self.callback_owner[(e.pid, ref)] = (owner, "timer")
            else:
                self._diag(DiagnosticCode.UNRESOLVED_HANDLE,
                           f"callback_register for unknown owner {owner}", e.timestamp)

        for sub in self.subscriptions.values():
            if sub.callback_ref is None:
                self._diag(DiagnosticCode.UNREGISTERED_CALLBACK,
                           f"subscription {sub.key} on {sub.topic} has no registered callback")
        for timer in self.timers.values():
            if timer.callback_ref is None:
                self._diag(DiagnosticCode.UNREGISTERED_CALLBACK, f"timer {timer.key} has no registered callback")

    def resolve_annotations(self, first_index: int) -> List[LinkAnnotation]:
        resolved = []
        for ts, link_type, pid, sub_handles, pub_handles in self.annotations:
            inputs, outputs = [], []
            for h in sub_handles:
                key = ObjectKey(self.host, pid, h)
                if key in self.subscriptions:
                    inputs.append(key)
                else:
                    self._diag(DiagnosticCode.UNRESOLVED_ANNOTATION,
                               f"{link_type} annotation in pid {pid}: unknown subscription handle {h}", ts)
            for h in pub_handles:
                key = self.publisher_by_rcl.get((pid, h))
                if key is not None:
                    outputs.append(key)
                else:
                    self._diag(DiagnosticCode.UNRESOLVED_ANNOTATION,
                               f"{link_type} annotation in pid {pid}: unknown publisher handle {h}", ts)
            if not inputs or not outputs:
                self._diag(DiagnosticCode.UNRESOLVED_ANNOTATION,
                           f"{link_type} annotation in pid {pid} dropped: no resolvable inputs or outputs", ts)
                continue
            resolved.append(LinkAnnotation(
                first_index + len(resolved), link_type, self.host, pid, tuple(inputs), tuple(outputs)))
        return resolved

    # -------------------------------------------------------------------------
    # Runtime
    # -------------------------------------------------------------------------

    def _resolve_publisher(self, e: TraceEvent) -> Optional[ObjectKey]:
        if e.kind is EventKind.PUBLISH_RMW:
            return self.publisher_by_rmw.get((e.pid, e["rmw_publisher_handle"]))
        if e.kind is EventKind.DDS_WRITE:
            return self.publisher_by_writer.get((e.pid, e["writer_handle"]))
        return self.publisher_by_rcl.get((e.pid, e["publisher_handle"]))

    def fold_runtime(self) -> None:
        windows: Dict[Tuple[int, int, int], _PendingPublication] = {}
        pending_takes: Dict[Tuple[int, int], _PendingTake] = {}
        open_callbacks: Dict[Tuple[int, int], List[_OpenCallback]] = defaultdict(list)
        lanes: Dict[Tuple[int, int], _ExecutorLane] = {}
        last_ts: Dict[Tuple[int, int], int] = {}
        pub_uids: Dict[str, int] = defaultdict(int)

        for e in self.trace.events:
            kind = e.kind
            if kind in INIT_KINDS:
                continue
            self.runtime_events += 1
            thread = (e.pid, e.tid)
            last_ts[thread] = e.timestamp

            if kind in PUBLISH_KINDS:
                self._fold_publish_event(e, windows, pub_uids)
            elif kind is EventKind.RMW_TAKE:
                self._fold_take(e, pending_takes)
            elif kind is EventKind.CALLBACK_START:
                self._fold_callback_start(e, pending_takes, open_callbacks[thread])
            elif kind is EventKind.CALLBACK_END:
                self._fold_callback_end(e, open_callbacks[thread])
            elif kind in EXECUTOR_KINDS:
                lane = lanes.get(thread)
                if lane is None:
                    lane = lanes[thread] = _ExecutorLane(self.host, e.pid, e.tid)
                lane.feed(e)

        for pending in list(windows.values()):
            self._fold_pending(pending, DiagnosticCode.INCOMPLETE_PUBLICATION, pub_uids)
        for take in pending_takes.values():
            self._diag(DiagnosticCode.UNCONSUMED_TAKE,
                       f"take on subscription {take.subscription} was not followed by its callback", take.ts, 1)
        for stack in open_callbacks.values():
            for cb in stack:
                self._diag(DiagnosticCode.UNMATCHED_CALLBACK,
                           f"callback of {cb.owner} started at {cb.start} never ended",
                           cb.start, 1 + (1 if cb.take else 0))
        for thread, lane in sorted(lanes.items()):
            lane.finish(last_ts[thread])
            self.intervals.extend(lane.intervals)
            self.diagnostics.extend(lane.diagnostics)
            self.folded_events += lane.folded

    def _fold_publish_event(
        self,
        e: TraceEvent,
        windows: Dict[Tuple[int, int, int], _PendingPublication],
        pub_uids: Dict[str, int],
    ) -> None:
        publisher = self._resolve_publisher(e)
        if publisher is None:
            self._diag(DiagnosticCode.UNRESOLVED_HANDLE, f"{e.kind.value} by unknown publisher in pid {e.pid}",
                       e.timestamp, 1)
            return

        wkey = (e.pid, e.tid, e["message_ref"])
        layer = LAYER_INDEX[e.kind]
        pending = windows.get(wkey)
        if pending is not None and (layer in pending.layers or pending.publisher != publisher):
            self._fold_pending(windows.pop(wkey), DiagnosticCode.PUBLICATION_WINDOW_REOPENED, pub_uids)
            pending = None
        if pending is None:
            pending = windows[wkey] = _PendingPublication(publisher)
        pending.events.append(e)
        pending.layers.add(layer)
        if e.kind is EventKind.DDS_WRITE:
            self._fold_pending(windows.pop(wkey), DiagnosticCode.INCOMPLETE_PUBLICATION, pub_uids)

    def _fold_pending(self, pending: _PendingPublication, unfinished: DiagnosticCode, pub_uids: Dict[str, int]) -> None:
        instance, diagnostics = fold_publication(
            pending.events, pending.publisher, self.publishers[pending.publisher].topic, unfinished)
        self.diagnostics.extend(diagnostics)
        if instance is None:
            return
        pub_uids[instance.uid] += 1
        if pub_uids[instance.uid] > 1:
            instance = _with_uid(instance, f"{instance.uid}#{pub_uids[instance.uid]}")
        self.publications.append(instance)
        self.folded_events += len(pending.events) - sum(d.event_count for d in diagnostics)

    def _fold_take(self, e: TraceEvent, pending_takes: Dict[Tuple[int, int], _PendingTake]) -> None:
        subscription = self.subscription_by_rmw.get((e.pid, e["rmw_subscription_handle"]))
        if subscription is None:
            self._diag(DiagnosticCode.UNRESOLVED_HANDLE,
                       f"rmw_take on unknown subscription {e['rmw_subscription_handle']} in pid {e.pid}",
                       e.timestamp, 1)
            return
        if not e["taken"]:
            self._diag(DiagnosticCode.UNTAKEN_MESSAGE, f"rmw_take on {subscription} returned no message",
                       e.timestamp, 1)
            return
        thread = (e.pid, e.tid)
        previous = pending_takes.get(thread)
        if previous is not None:
            self._diag(DiagnosticCode.UNCONSUMED_TAKE,
                       f"take on subscription {previous.subscription} was not followed by its callback",
                       previous.ts, 1)
        pending_takes[thread] = _PendingTake(subscription, e.timestamp, e["source_timestamp"])

    def _fold_callback_start(
        self,
        e: TraceEvent,
        pending_takes: Dict[Tuple[int, int], _PendingTake],
        stack: List[_OpenCallback],
    ) -> None:
        ref = e["callback_ref"]
        resolved = self.callback_owner.get((e.pid, ref))
        if resolved is None:
            self._diag(DiagnosticCode.UNRESOLVED_HANDLE, f"callback_start for unregistered callback {ref}",
                       e.timestamp, 1)
            return
        owner, owner_kind = resolved
        take = None
        if owner_kind == "subscription":
            thread = (e.pid, e.tid)
            pending = pending_takes.get(thread)
            if pending is not None and pending.subscription == owner:
                take = pending
                del pending_takes[thread]
        stack.append(_OpenCallback(owner, owner_kind, ref, e.timestamp, take))

    def _fold_callback_end(self, e: TraceEvent, stack: List[_OpenCallback]) -> None:
        ref = e["callback_ref"]
        position = next((i for i in range(len(stack) - 1, -1, -1) if stack[i].callback_ref == ref), None)
        if position is None:
            self._diag(DiagnosticCode.UNMATCHED_CALLBACK, f"callback_end for callback {ref} without start",
                       e.timestamp, 1)
            return
        for dangling in stack[position + 1:]:
            self._diag(DiagnosticCode.UNMATCHED_CALLBACK,
                       f"callback of {dangling.owner} started at {dangling.start} never ended",
                       dangling.start, 1 + (1 if dangling.take else 0))
        cb = stack[position]
        del stack[position:]

        if cb.owner_kind == "subscription" and cb.take is None:
            self._diag(DiagnosticCode.CALLBACK_WITHOUT_TAKE,
                       f"subscription callback of {cb.owner} at {cb.start} has no preceding take",
                       cb.start, 2)
            return

        topic = self.subscriptions[cb.owner].topic if cb.owner_kind == "subscription" else None
        self.callbacks.append(CallbackInstance(
            uid=callback_uid(self.host, e.pid, e.tid, cb.owner.handle, cb.start),
            owner=cb.owner,
            owner_kind=cb.owner_kind,
            host=self.host,
            pid=e.pid,
            tid=e.tid,
            start=cb.start,
            end=e.timestamp,
            topic=topic,
            taken_source_timestamp=cb.take.source_timestamp if cb.take else None,
            take_ts=cb.take.ts if cb.take else None,
        ))
        self.folded_events += 2 + (1 if cb.take else 0)


def _with_uid(p: PublicationInstance, uid: str) -> PublicationInstance:
    return PublicationInstance(uid, p.publisher, p.topic, p.host, p.pid, p.tid,
                               p.rclcpp_ts, p.rcl_ts, p.rmw_ts, p.dds_ts, p.source_timestamp)


# =============================================================================
# Entry point
# =============================================================================

def build_ir(bundle: TraceBundle) -> IrDatabase:
    """
    Build the intermediate representation of a trace bundle.

    Hosts are processed independently in host order, so the result depends only
    on the bundle.

    Args:
        bundle: validated trace bundle

    Returns:
        Immutable IrDatabase with diagnostics and conservation counters in ``stats``
    """
    nodes, publishers, subscriptions, timers = {}, {}, {}, {}
    publications, callbacks, intervals = [], [], []
    annotations: List[LinkAnnotation] = []
    diagnostics: List[Diagnostic] = []
    runtime_events = folded_events = 0

    for trace in bundle.traces:
        builder = _HostBuilder(trace)
        builder.correlate_objects()
        annotations.extend(builder.resolve_annotations(len(annotations)))
        builder.fold_runtime()

        nodes.update(builder.nodes)
        publishers.update(builder.publishers)
        subscriptions.update(builder.subscriptions)
        timers.update(builder.timers)
        publications.extend(builder.publications)
        callbacks.extend(builder.callbacks)
        intervals.extend(builder.intervals)
        diagnostics.extend(builder.diagnostics)
        runtime_events += builder.runtime_events
        folded_events += builder.folded_events

        logger.info(
            f"Host {trace.host}: {len(builder.publications)} publications, "
            f"{len(builder.callbacks)} callback instances, {len(builder.intervals)} executor intervals"
        )

    diagnostic_events = sum(d.event_count for d in diagnostics)
    if runtime_events != folded_events + diagnostic_events:
        logger.warning(
            f"Event conservation mismatch: {runtime_events} runtime events, "
            f"{folded_events} folded, {diagnostic_events} in diagnostics"
        )

    return IrDatabase(
        nodes=nodes,
        publishers=publishers,
        subscriptions=subscriptions,
        timers=timers,
        publication_instances=publications,
        callback_instances=callbacks,
        executor_intervals=intervals,
        annotations=annotations,
        diagnostics=diagnostics,
        hosts=bundle.hosts,
        stats={
            "runtime_events": runtime_events,
            "folded_events": folded_events,
            "diagnostic_events": diagnostic_events,
        },
    )
