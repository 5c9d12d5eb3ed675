"""
Hand-built traces for unit tests.

A HostKit records init events for nodes, publishers, subscriptions and timers
and offers shorthands for the runtime event groups the analysis folds.
"""

from collections import defaultdict
from typing import Dict, List, Optional, Sequence

from msgflow.trace.bundle import TraceBundle
from msgflow.trace.events import TraceEvent, make_event


class HostKit:
    def __init__(self, host: str, pid: int = 100):
        self.host = host
        self.pid = pid
        self.events: List[TraceEvent] = []
        self._next_handle = 0x1000
        self._init_ts = 1
        self.rmw: Dict[int, int] = {}
        self.writer: Dict[int, int] = {}
        self.callback_ref: Dict[int, int] = {}
        self._message_refs: Dict[int, int] = defaultdict(lambda: 0x7000)

    def _handle(self) -> int:
        self._next_handle += 0x10
        return self._next_handle

    def _init(self, kind: str, **payload) -> None:
        self.events.append(make_event(self._init_ts, self.host, self.pid, self.pid, kind, **payload))
        self._init_ts += 1

    def emit(self, ts: int, kind: str, tid: Optional[int] = None, **payload) -> None:
        self.events.append(make_event(ts, self.host, self.pid, tid or self.pid, kind, **payload))

    # -------------------------------------------------------------------------
    # Objects
    # -------------------------------------------------------------------------

    def node(self, name: str, namespace: str = "/") -> int:
        handle = self._handle()
        self._init("node_init", node_handle=handle, node_name=name, node_namespace=namespace)
        return handle

    def publisher(self, node: int, topic: str, with_dds: bool = True) -> int:
        handle = self._handle()
        rmw, writer = handle + 1, handle + 2
        gid = f"{self.pid:04x}{handle:08x}"
        self._init("pub_init_rcl", publisher_handle=handle, node_handle=node,
                   rmw_publisher_handle=rmw, topic_name=topic)
        self._init("pub_init_rmw", rmw_publisher_handle=rmw, gid=gid)
        if with_dds:
            self._init("pub_init_dds", writer_handle=writer, gid=gid, topic_name=topic)
        self.rmw[handle] = rmw
        self.writer[handle] = writer
        return handle

    def subscription(self, node: int, topic: str) -> int:
        handle = self._handle()
        rmw, ref = handle + 1, handle + 2
        self._init("sub_init_rcl", subscription_handle=handle, node_handle=node,
                   rmw_subscription_handle=rmw, topic_name=topic)
        self._init("sub_init_rmw", rmw_subscription_handle=rmw, gid=f"ff{handle:08x}")
        self._init("callback_register", callback_ref=ref, owner_handle=handle)
        self.rmw[handle] = rmw
        self.callback_ref[handle] = ref
        return handle

    def timer(self, node: int, period_ns: int) -> int:
        handle = self._handle()
        ref = handle + 2
        self._init("timer_init", timer_handle=handle, period_ns=period_ns)
        self._init("timer_node_link", timer_handle=handle, node_handle=node)
        self._init("callback_register", callback_ref=ref, owner_handle=handle)
        self.callback_ref[handle] = ref
        return handle

    def annotate(self, link_type: str, subscriptions: Sequence[int], publishers: Sequence[int]) -> None:
        self._init("message_link_annotation", link_type=link_type,
                   subscription_handles=list(subscriptions), publisher_handles=list(publishers))

    # -------------------------------------------------------------------------
    # Runtime
    # -------------------------------------------------------------------------

    def publish(self, publisher: int, ts: int, tid: Optional[int] = None,
                source_timestamp: Optional[int] = None, step: int = 1) -> int:
        """Four publish layers starting at ts; returns the source timestamp."""
        self._message_refs[tid or self.pid] += 1
        ref = self._message_refs[tid or self.pid]
        dds = ts + 3 * step
        src = dds if source_timestamp is None else source_timestamp
        self.emit(ts, "publish_rclcpp", tid, publisher_handle=publisher, message_ref=ref)
        self.emit(ts + step, "publish_rcl", tid, publisher_handle=publisher, message_ref=ref)
        self.emit(ts + 2 * step, "publish_rmw", tid, rmw_publisher_handle=self.rmw[publisher], message_ref=ref)
        self.emit(dds, "dds_write", tid, writer_handle=self.writer[publisher], message_ref=ref,
                  source_timestamp=src)
        return src

    def take(self, subscription: int, ts: int, source_timestamp: int,
             tid: Optional[int] = None, taken: bool = True) -> None:
        self.emit(ts, "rmw_take", tid, rmw_subscription_handle=self.rmw[subscription],
                  message_ref=0x9000, source_timestamp=source_timestamp, taken=taken)

    def callback(self, owner: int, start: int, end: int, tid: Optional[int] = None) -> None:
        self.emit(start, "callback_start", tid, callback_ref=self.callback_ref[owner])
        self.emit(end, "callback_end", tid, callback_ref=self.callback_ref[owner])

    def receive(self, subscription: int, take_ts: int, source_timestamp: int,
                start: int, end: int, tid: Optional[int] = None) -> None:
        self.take(subscription, take_ts, source_timestamp, tid)
        self.callback(subscription, start, end, tid)

    def executor_cycle(self, wait_begin: int, wait_end: int, execute_begin: int,
                       execute_end: int, target: int, tid: Optional[int] = None) -> None:
        self.emit(wait_begin, "executor_wait_begin", tid)
        self.emit(wait_end, "executor_wait_end", tid)
        self.emit(execute_begin, "executor_execute_begin", tid, target_handle=target)
        self.emit(execute_end, "executor_execute_end", tid)

    def key(self, handle: int) -> str:
        return f"{self.host}:{self.pid}:{handle}"

    def pub_uid(self, publisher: int, source_timestamp: int) -> str:
        return f"pub:{self.host}:{self.pid}:{publisher}:{source_timestamp}"

    def cb_uid(self, owner: int, start: int, tid: Optional[int] = None) -> str:
        return f"cb:{self.host}:{self.pid}:{tid or self.pid}:{owner}:{start}"


def bundle_of(*kits: HostKit) -> TraceBundle:
    """One host trace per distinct host; kits sharing a host are merged."""
    events: Dict[str, List[TraceEvent]] = defaultdict(list)
    for kit in kits:
        events[kit.host].extend(kit.events)
    return TraceBundle.from_events(dict(events))
