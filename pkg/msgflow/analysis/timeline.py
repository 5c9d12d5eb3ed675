"""
Executor state timelines and utilization.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..core.config import TIMELINE_VERSION
from .ir import ExecutorState, ExecutorStateInterval, IrDatabase

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimelineLane:
    host: str
    pid: int
    tid: int
    intervals: Tuple[ExecutorStateInterval, ...]

    @property
    def key(self) -> Tuple[str, int, int]:
        return (self.host, self.pid, self.tid)

    @property
    def label(self) -> str:
        return f"{self.host} pid {self.pid} tid {self.tid}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "host": self.host,
            "pid": self.pid,
            "tid": self.tid,
            "intervals": [
                {"state": i.state.value, "start": i.start, "end": i.end,
                 "target": str(i.target) if i.target else None}
                for i in self.intervals
            ],
        }


@dataclass(frozen=True)
class ExecutorUtilization:
    host: str
    pid: int
    tid: Optional[int]  # None for a per-process aggregate
    fraction_waiting: float
    fraction_overhead: float
    fraction_executing: float

    @property
    def fraction_covered(self) -> float:
        return self.fraction_waiting + self.fraction_overhead + self.fraction_executing

    def to_dict(self) -> Dict[str, Any]:
        return {
            "host": self.host,
            "pid": self.pid,
            "tid": self.tid,
            "waiting": self.fraction_waiting,
            "overhead": self.fraction_overhead,
            "executing": self.fraction_executing,
        }


def build_timeline(db: IrDatabase, window: Optional[Tuple[int, int]] = None) -> List[TimelineLane]:
    """
    One lane per thread with executor intervals, clipped to ``window``.

    Lanes left without intervals after clipping are omitted.

    Args:
        db: analyzed database
        window: [t0, t1]; defaults to the database's time span
    """
    t0, t1 = window if window is not None else db.time_span()
    if t0 > t1:
        raise ValueError(f"window start {t0} after end {t1}")

    by_lane: Dict[Tuple[str, int, int], List[ExecutorStateInterval]] = defaultdict(list)
    for interval in db.executor_intervals:
        clipped = interval.clipped(t0, t1)
        if clipped is not None:
            by_lane[interval.lane].append(clipped)

    lanes = [
        TimelineLane(host, pid, tid, tuple(sorted(intervals, key=lambda i: i.start)))
        for (host, pid, tid), intervals in sorted(by_lane.items())
    ]
    logger.info(f"Timeline over [{t0}, {t1}]: {len(lanes)} lanes")
    return lanes


def _fractions(intervals: Sequence[ExecutorStateInterval], span: int, threads: int = 1) -> Dict[ExecutorState, float]:
    totals = {state: 0 for state in ExecutorState}
    for i in intervals:
        totals[i.state] += i.end - i.start
    denominator = span * threads
    return {state: (total / denominator if denominator else 0.0) for state, total in totals.items()}


def utilization(lanes: Sequence[TimelineLane], window: Tuple[int, int]) -> List[ExecutorUtilization]:
    """Per-lane fractions of the window spent in each state."""
    t0, t1 = window
    span = t1 - t0
    if span <= 0:
        raise ValueError("utilization needs a non-degenerate window")
    rows = []
    for lane in lanes:
        clipped = [c for c in (i.clipped(t0, t1) for i in lane.intervals) if c is not None]
        f = _fractions(clipped, span)
        rows.append(ExecutorUtilization(
            lane.host, lane.pid, lane.tid,
            f[ExecutorState.WAITING], f[ExecutorState.OVERHEAD], f[ExecutorState.EXECUTING],
        ))
    return rows


def process_utilization(lanes: Sequence[TimelineLane], window: Tuple[int, int]) -> List[ExecutorUtilization]:
    """Utilization per process, averaged over its threads."""
    t0, t1 = window
    span = t1 - t0
    if span <= 0:
        raise ValueError("utilization needs a non-degenerate window")
    grouped: Dict[Tuple[str, int], List[TimelineLane]] = defaultdict(list)
    for lane in lanes:
        grouped[(lane.host, lane.pid)].append(lane)
    rows = []
    for (host, pid), members in sorted(grouped.items()):
        intervals = [c for lane in members for c in (i.clipped(t0, t1) for i in lane.intervals) if c is not None]
        f = _fractions(intervals, span, len(members))
        rows.append(ExecutorUtilization(
            host, pid, None,
            f[ExecutorState.WAITING], f[ExecutorState.OVERHEAD], f[ExecutorState.EXECUTING],
        ))
    return rows


def concurrent_execution(lanes: Sequence[TimelineLane]) -> List[Tuple[int, int, Tuple[int, ...]]]:
    """
    Spans where two or more threads of one process execute at the same time.

    Returns:
        (start, end, tids) per overlap, sorted by start
    """
    by_process: Dict[Tuple[str, int], List[Tuple[int, int, int]]] = defaultdict(list)
    for lane in lanes:
        for i in lane.intervals:
            if i.state is ExecutorState.EXECUTING:
                by_process[(lane.host, lane.pid)].append((i.start, i.end, lane.tid))

    overlaps = []
    for spans in by_process.values():
        points = sorted([(s, 1, tid) for s, _, tid in spans] + [(e, -1, tid) for _, e, tid in spans],
                        key=lambda p: (p[0], p[1]))
        active: Dict[int, int] = defaultdict(int)
        since = None
        for ts, delta, tid in points:
            running = [t for t, n in active.items() if n > 0]
            if len(running) >= 2 and since is not None and ts > since:
                overlaps.append((since, ts, tuple(sorted(running))))
            active[tid] += delta
            since = ts
    overlaps.sort()
    return overlaps


def timeline_to_dict(
    lanes: Sequence[TimelineLane],
    window: Tuple[int, int],
) -> Dict[str, Any]:
    rows = utilization(lanes, window) if window[1] > window[0] else []
    processes = process_utilization(lanes, window) if window[1] > window[0] else []
    return {
        "timeline_version": TIMELINE_VERSION,
        "window": list(window),
        "lanes": [lane.to_dict() for lane in lanes],
        "utilization": [r.to_dict() for r in rows],
        "process_utilization": [r.to_dict() for r in processes],
    }


def export_timeline(
    lanes: Sequence[TimelineLane],
    fmt: str,
    window: Optional[Tuple[int, int]] = None,
    px_per_ms: float = 10.0,
    lane_height_px: int = 12,
) -> bytes:
    """Render lanes as json, svg or html."""
    if window is None:
        starts = [i.start for lane in lanes for i in lane.intervals]
        ends = [i.end for lane in lanes for i in lane.intervals]
        window = (min(starts), max(ends)) if starts else (0, 0)
    if fmt == "json":
        from ..core.utils import dumps_document
        return dumps_document(timeline_to_dict(lanes, window))
    if fmt == "svg":
        from ..ui.svg import timeline_to_svg
        return timeline_to_svg(lanes, window, px_per_ms=px_per_ms, lane_height_px=lane_height_px).encode()
    if fmt == "html":
        from ..ui.charts import timeline_html
        return timeline_html(lanes).encode()
    raise ValueError(f"unknown timeline format {fmt!r}")
