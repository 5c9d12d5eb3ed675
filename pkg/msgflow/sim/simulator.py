"""
Discrete-event simulator of distributed publish-subscribe computation graphs.

Time advances through a heap of (time, sequence, action, payload) entries in
reference time; each host's events are stamped with its local clock
(reference time + clock offset). Executors prefer expired timers to pending
messages, FIFO within each class; every node is one mutually exclusive
callback group. All randomness comes from one numpy Generator seeded from
the scenario, so a run is bit-identical for a fixed seed.
"""

import heapq
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Deque, Dict, List, Optional, Tuple

import numpy as np

from ..trace.bundle import TraceBundle
from ..trace.events import EventKind, TraceEvent
from ..trace.identity import ObjectKey, callback_uid, publication_uid
from .scenario import INIT_LEAD_NS, AnnotationConfig, Behavior, NodeConfig, ProcessConfig, ScenarioConfig

logger = logging.getLogger(__name__)

HANDLE_BASE = 0x1000
HANDLE_STEP = 0x10
MESSAGE_REF_BASE = 0x7000
MESSAGE_REF_SLOTS = 8
INIT_STEP_NS = 1_000


# =============================================================================
# Causal bookkeeping (reference time)
# =============================================================================

@dataclass
class SimPublication:
    uid: str
    topic: str
    publisher: ObjectKey
    node: str
    host: str
    pid: int
    tid: int
    start: int
    dds: int
    source_timestamp: int
    callback: Optional[str]


@dataclass
class SimCallback:
    uid: str
    owner: ObjectKey
    kind: str  # "timer" | "subscription"
    node: str
    topic: Optional[str]
    host: str
    pid: int
    tid: int
    start: int
    end: int
    take: Optional[int]
    message: Optional[str]
    publications: List[str] = field(default_factory=list)


@dataclass
class SimIndirect:
    link_type: str
    inputs: Tuple[str, ...]
    output: str


@dataclass
class SimRecord:
    """What actually happened during a run, independent of any trace analysis."""

    publications: Dict[str, SimPublication] = field(default_factory=dict)
    callbacks: Dict[str, SimCallback] = field(default_factory=dict)
    deliveries: Dict[str, List[str]] = field(default_factory=dict)
    indirect: List[SimIndirect] = field(default_factory=list)
    subscriptions: Dict[Tuple[str, str], ObjectKey] = field(default_factory=dict)
    timers: Dict[str, List[ObjectKey]] = field(default_factory=dict)


# =============================================================================
# Runtime objects
# =============================================================================

@dataclass
class _Publisher:
    key: ObjectKey
    topic: str
    rmw_handle: int
    writer_handle: int
    gid: str


@dataclass
class _Subscription:
    key: ObjectKey
    topic: str
    rmw_handle: int
    callback_ref: int
    gid: str
    behavior: Behavior
    node: "_Node"


@dataclass
class _Timer:
    key: ObjectKey
    period_ns: int
    phase_ns: int
    callback_ref: int
    behavior: Behavior
    node: "_Node"
    pending: bool = False


@dataclass
class _Node:
    config: NodeConfig
    key: ObjectKey
    process: "_Process"
    publishers: Dict[str, _Publisher] = field(default_factory=dict)
    subscriptions: List[_Subscription] = field(default_factory=list)
    timers: List[_Timer] = field(default_factory=list)
    annotations: List[Tuple[AnnotationConfig, Dict[str, Optional[str]]]] = field(default_factory=list)
    busy: bool = False


@dataclass
class _Worker:
    tid: int
    busy: bool = False
    waiting: bool = False


@dataclass
class _Message:
    publication: str
    source_timestamp: int


class _Process:
    def __init__(self, config: ProcessConfig, clock_offset_ns: int):
        self.config = config
        self.host = config.host
        self.pid = config.pid
        self.clock_offset_ns = clock_offset_ns
        self.workers = [_Worker(config.pid + i) for i in range(config.threads)]
        self.ready_timers: Deque[_Timer] = deque()
        self.ready_messages: Deque[Tuple[_Subscription, _Message]] = deque()
        self._next_handle = HANDLE_BASE
        self._next_ref = 0

    def handle(self) -> int:
        h = self._next_handle
        self._next_handle += HANDLE_STEP
        return h

    def message_ref(self) -> int:
        ref = MESSAGE_REF_BASE + (self._next_ref % MESSAGE_REF_SLOTS) * 0x40
        self._next_ref += 1
        return ref

    def local(self, ref_ts: int) -> int:
        return ref_ts + self.clock_offset_ns


# =============================================================================
# Simulation
# =============================================================================

class Simulation:
    """One run of a scenario."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.timing = config.timing
        self.rng = np.random.default_rng(config.seed)
        self.events: Dict[str, List[TraceEvent]] = {h.host_id: [] for h in config.hosts}
        self.record = SimRecord()
        self._heap: List[Tuple[int, int, str, Any]] = []
        self._seq = 0

        offsets = {h.host_id: h.clock_offset_ns for h in config.hosts}
        self.processes: Dict[str, _Process] = {
            p.name: _Process(p, offsets[p.host]) for p in config.processes
        }
        self.nodes: List[_Node] = []
        self.subscribers: Dict[str, List[_Subscription]] = {}
        self._host_index = {h.host_id: i for i, h in enumerate(config.hosts)}

    # -------------------------------------------------------------------------
    # Emission
    # -------------------------------------------------------------------------

    def _emit(self, proc: _Process, tid: int, ref_ts: int, kind: EventKind, **payload: Any) -> int:
        local = proc.local(ref_ts)
        self.events[proc.host].append(TraceEvent(local, proc.host, proc.pid, tid, kind, payload))
        return local

    def _schedule(self, ts: int, action: str, payload: Any) -> None:
        heapq.heappush(self._heap, (ts, self._seq, action, payload))
        self._seq += 1

    def _gid(self, proc: _Process, handle: int) -> str:
        return f"{self._host_index[proc.host]:04x}{proc.pid:08x}{handle:08x}"

    # -------------------------------------------------------------------------
    # Initialization
    # -------------------------------------------------------------------------

    def _create_objects(self) -> None:
        config = self.config
        init_clock: Dict[str, int] = {name: config.epoch_ns - INIT_LEAD_NS for name in self.processes}

        def emit_init(proc: _Process, kind: EventKind, **payload: Any) -> None:
            self._emit(proc, proc.pid, init_clock[proc.config.name], kind, **payload)
            init_clock[proc.config.name] += INIT_STEP_NS

        for node_cfg in config.nodes:
            proc = self.processes[node_cfg.process]
            node = _Node(node_cfg, ObjectKey(proc.host, proc.pid, proc.handle()), proc)
            self.nodes.append(node)
            emit_init(proc, EventKind.NODE_INIT, node_handle=node.key.handle,
                      node_name=node_cfg.name, node_namespace=node_cfg.namespace)

            for topic in node_cfg.publishers:
                rcl, rmw, writer = proc.handle(), proc.handle(), proc.handle()
                pub = _Publisher(ObjectKey(proc.host, proc.pid, rcl), topic, rmw, writer, self._gid(proc, writer))
                node.publishers[topic] = pub
                emit_init(proc, EventKind.PUB_INIT_DDS, writer_handle=writer, gid=pub.gid, topic_name=topic)
                emit_init(proc, EventKind.PUB_INIT_RMW, rmw_publisher_handle=rmw, gid=pub.gid)
                emit_init(proc, EventKind.PUB_INIT_RCL, publisher_handle=rcl, node_handle=node.key.handle,
                          rmw_publisher_handle=rmw, topic_name=topic)

            for sub_cfg in node_cfg.subscriptions:
                handle, rmw, ref = proc.handle(), proc.handle(), proc.handle()
                sub = _Subscription(ObjectKey(proc.host, proc.pid, handle), sub_cfg.topic, rmw, ref,
                                    self._gid(proc, rmw), sub_cfg.behavior, node)
                node.subscriptions.append(sub)
                self.subscribers.setdefault(sub.topic, []).append(sub)
                self.record.subscriptions[(node_cfg.fqn, sub.topic)] = sub.key
                emit_init(proc, EventKind.SUB_INIT_RMW, rmw_subscription_handle=rmw, gid=sub.gid)
                emit_init(proc, EventKind.SUB_INIT_RCL, subscription_handle=handle, node_handle=node.key.handle,
                          rmw_subscription_handle=rmw, topic_name=sub.topic)
                emit_init(proc, EventKind.CALLBACK_REGISTER, callback_ref=ref, owner_handle=handle)

            for timer_cfg in node_cfg.timers:
                handle, ref = proc.handle(), proc.handle()
                timer = _Timer(ObjectKey(proc.host, proc.pid, handle), timer_cfg.period_ns, timer_cfg.phase_ns,
                               ref, timer_cfg.behavior, node)
                node.timers.append(timer)
                self.record.timers.setdefault(node_cfg.fqn, []).append(timer.key)
                emit_init(proc, EventKind.TIMER_INIT, timer_handle=handle, period_ns=timer.period_ns)
                emit_init(proc, EventKind.TIMER_NODE_LINK, timer_handle=handle, node_handle=node.key.handle)
                emit_init(proc, EventKind.CALLBACK_REGISTER, callback_ref=ref, owner_handle=handle)

        for ann in config.annotations:
            node = next(n for n in self.nodes if ann.node in (n.config.name, n.config.fqn))
            node.annotations.append((ann, {topic: None for topic in ann.inputs}))
            subs = {s.topic: s for s in node.subscriptions}
            emit_init(node.process, EventKind.MESSAGE_LINK_ANNOTATION, link_type=ann.link_type,
                      subscription_handles=[subs[t].key.handle for t in ann.inputs],
                      publisher_handles=[node.publishers[t].key.handle for t in ann.outputs])

    # -------------------------------------------------------------------------
    # Executor
    # -------------------------------------------------------------------------

    def _pick(self, proc: _Process):
        for i, timer in enumerate(proc.ready_timers):
            if not timer.node.busy:
                del proc.ready_timers[i]
                timer.pending = False
                return timer
        for i, (sub, message) in enumerate(proc.ready_messages):
            if not sub.node.busy:
                del proc.ready_messages[i]
                return (sub, message)
        return None

    def _dispatch(self, proc: _Process, now: int) -> None:
        for worker in proc.workers:
            if worker.busy:
                continue
            item = self._pick(proc)
            if item is None:
                if not worker.waiting:
                    self._emit(proc, worker.tid, now, EventKind.EXECUTOR_WAIT_BEGIN)
                    worker.waiting = True
                continue
            if worker.waiting:
                self._emit(proc, worker.tid, now, EventKind.EXECUTOR_WAIT_END)
                worker.waiting = False
            self._execute(proc, worker, item, now + self.timing.select_overhead_ns)

    def _execute(self, proc: _Process, worker: _Worker, item: Any, begin: int) -> None:
        timing = self.timing
        tid = worker.tid
        worker.busy = True

        if isinstance(item, _Timer):
            owner, node, behavior, sub, message = item, item.node, item.behavior, None, None
        else:
            sub, message = item
            owner, node, behavior = sub, sub.node, sub.behavior
        node.busy = True

        self._emit(proc, tid, begin, EventKind.EXECUTOR_EXECUTE_BEGIN, target_handle=owner.key.handle)
        t = begin + timing.dispatch_ns
        take = None
        if sub is not None:
            self._emit(proc, tid, t, EventKind.RMW_TAKE, rmw_subscription_handle=sub.rmw_handle,
                       message_ref=proc.message_ref(), source_timestamp=message.source_timestamp, taken=True)
            take = t
            t += timing.take_ns
        start = t
        local_start = self._emit(proc, tid, start, EventKind.CALLBACK_START, callback_ref=owner.callback_ref)

        cb = SimCallback(
            uid=callback_uid(proc.host, proc.pid, tid, owner.key.handle, local_start),
            owner=owner.key,
            kind="subscription" if sub is not None else "timer",
            node=node.config.fqn,
            topic=sub.topic if sub is not None else None,
            host=proc.host, pid=proc.pid, tid=tid,
            start=start, end=start, take=take,
            message=message.publication if message is not None else None,
        )
        self.record.callbacks[cb.uid] = cb
        if message is not None:
            self.record.deliveries.setdefault(message.publication, []).append(cb.uid)

        topics, links = self._callback_outputs(node, sub, cb, behavior)

        exec_ns = behavior.exec_time.sample(self.rng)
        offset = behavior.publish_offset_ns if behavior.publish_offset_ns is not None else max(1, exec_ns // 2)
        p = start + offset
        for topic in topics:
            pub = self._publish(proc, tid, node.publishers[topic], p, cb, behavior)
            for link_type, inputs in links.get(topic, ()):
                self.record.indirect.append(SimIndirect(link_type, inputs, pub.uid))
            p = pub.dds + timing.layer_step_ns

        end = max(start + exec_ns, p)
        cb.end = end
        self._emit(proc, tid, end, EventKind.CALLBACK_END, callback_ref=owner.callback_ref)
        done = end + timing.dispatch_ns
        self._emit(proc, tid, done, EventKind.EXECUTOR_EXECUTE_END)
        self._schedule(done, "done", (proc, worker, node, cb))

    def _callback_outputs(
        self,
        node: _Node,
        sub: Optional[_Subscription],
        cb: SimCallback,
        behavior: Behavior,
    ) -> Tuple[List[str], Dict[str, List[Tuple[str, Tuple[str, ...]]]]]:
        """Topics to publish and the indirect links each output carries."""
        topics = list(behavior.publish)
        links: Dict[str, List[Tuple[str, Tuple[str, ...]]]] = {}

        for ann, cache in node.annotations:
            if ann.link_type == "periodic_async":
                if sub is None:
                    inputs = tuple(cache[t] for t in ann.inputs if cache[t] is not None)
                    for topic in ann.outputs:
                        if topic in topics:
                            links.setdefault(topic, []).append((ann.link_type, inputs))
                elif sub.topic in cache:
                    cache[sub.topic] = cb.uid
                continue

            # partial_sync: fill this slot, fire once every slot holds a message
            if sub is None or sub.topic not in cache:
                continue
            cache[sub.topic] = cb.uid
            if all(cache[t] is not None for t in ann.inputs):
                inputs = tuple(cache[t] for t in ann.inputs)
                for topic in ann.outputs:
                    if topic not in topics:
                        topics.append(topic)
                    links.setdefault(topic, []).append((ann.link_type, inputs))
                for t in ann.inputs:
                    cache[t] = None
        return topics, links

    def _publish(
        self, proc: _Process, tid: int, pub: _Publisher, at: int, cb: SimCallback, behavior: Behavior,
    ) -> SimPublication:
        step = self.timing.layer_step_ns
        ref = proc.message_ref()
        self._emit(proc, tid, at, EventKind.PUBLISH_RCLCPP, publisher_handle=pub.key.handle, message_ref=ref)
        self._emit(proc, tid, at + step, EventKind.PUBLISH_RCL, publisher_handle=pub.key.handle, message_ref=ref)
        self._emit(proc, tid, at + 2 * step, EventKind.PUBLISH_RMW, rmw_publisher_handle=pub.rmw_handle,
                   message_ref=ref)
        dds = at + 3 * step
        source_ts = behavior.source_timestamp(proc.local(dds))
        self._emit(proc, tid, dds, EventKind.DDS_WRITE, writer_handle=pub.writer_handle, message_ref=ref,
                   source_timestamp=source_ts)

        record = SimPublication(
            uid=publication_uid(proc.host, proc.pid, pub.key.handle, source_ts),
            topic=pub.topic, publisher=pub.key, node=cb.node,
            host=proc.host, pid=proc.pid, tid=tid,
            start=at, dds=dds, source_timestamp=source_ts, callback=cb.uid,
        )
        self.record.publications[record.uid] = record
        cb.publications.append(record.uid)

        message = _Message(record.uid, source_ts)
        for sub in self.subscribers.get(pub.topic, ()):
            delay = self.config.network.delay(proc.host, sub.node.process.host).sample(self.rng)
            self._schedule(dds + delay, "arrive", (sub, message))
        return record

    # -------------------------------------------------------------------------
    # Main loop
    # -------------------------------------------------------------------------

    def run(self) -> Tuple[TraceBundle, SimRecord]:
        config = self.config
        if config.duration_ns == 0:
            return TraceBundle.from_events(self.events), self.record

        self._create_objects()
        epoch, stop = config.epoch_ns, config.epoch_ns + config.duration_ns

        for proc in self.processes.values():
            self._dispatch(proc, epoch)
        for node in self.nodes:
            for timer in node.timers:
                if timer.phase_ns < config.duration_ns:
                    self._schedule(epoch + timer.phase_ns, "fire", timer)

        last = epoch
        while self._heap:
            now, _, action, payload = heapq.heappop(self._heap)
            last = max(last, now)
            if action == "fire":
                timer = payload
                if now + timer.period_ns < stop:
                    self._schedule(now + timer.period_ns, "fire", timer)
                if not timer.pending:
                    timer.pending = True
                    timer.node.process.ready_timers.append(timer)
                self._dispatch(timer.node.process, now)
            elif action == "arrive":
                sub, message = payload
                sub.node.process.ready_messages.append((sub, message))
                self._dispatch(sub.node.process, now)
            elif action == "done":
                proc, worker, node, _ = payload
                worker.busy = False
                node.busy = False
                self._dispatch(proc, now)

        end = max(stop, last)
        for proc in self.processes.values():
            for worker in proc.workers:
                if worker.waiting:
                    self._emit(proc, worker.tid, end, EventKind.EXECUTOR_WAIT_END)
                    worker.waiting = False

        bundle = TraceBundle.from_events(self.events)
        logger.info(f"Simulated {config.name} (seed {config.seed}): {bundle.event_count} events, "
                    f"{len(self.record.publications)} publications, {len(self.record.callbacks)} callbacks")
        return bundle, self.record


def simulate(config: ScenarioConfig):
    """
    Run a scenario.

    Returns:
        (TraceBundle, GroundTruth)
    """
    from .truth import build_ground_truth

    bundle, record = Simulation(config).run()
    return bundle, build_ground_truth(config, record)
