"""
Clock synchronization from matched cross-host messages.

Each matched message A->B bounds the lead of B's clock over A's from above
(the message cannot arrive before it was sent plus the minimum one-way delay);
messages B->A bound it from below. Pairwise estimates are composed along a
breadth-first spanning tree rooted at the reference host.
"""

import logging
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from ..core.errors import Disconnected, InfeasibleOffsets
from .ir import IrDatabase

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class SyncPair:
    from_host: str
    to_host: str
    send_ts: int  # dds_write, sender's clock
    recv_ts: int  # rmw_take, receiver's clock


@dataclass(frozen=True)
class ClockMapping:
    """``offset`` is added to the host's local timestamps to reach the reference clock."""

    host: str
    offset: int
    reference: str

    def to_dict(self) -> Dict[str, Any]:
        return {"host": self.host, "offset": self.offset, "reference": self.reference}

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ClockMapping":
        return cls(d["host"], d["offset"], d["reference"])


@dataclass(frozen=True)
class PairEstimate:
    """Estimated lead of ``second``'s clock over ``first``'s, with its feasible bounds."""

    first: str
    second: str
    lead: int
    lower: Optional[int]
    upper: Optional[int]

    @property
    def bidirectional(self) -> bool:
        return self.lower is not None and self.upper is not None


def collect_sync_pairs(db: IrDatabase) -> List[SyncPair]:
    """One pair per cross-host message matched unambiguously by (topic, source timestamp)."""
    pairs = []
    for cb in db.callback_instances:
        if not cb.is_subscription or cb.take_ts is None:
            continue
        candidates = db.query_publication(cb.topic, cb.taken_source_timestamp)
        if len(candidates) != 1:
            continue
        pub = candidates[0]
        if pub.host == cb.host:
            continue
        pairs.append(SyncPair(pub.host, cb.host, pub.dds_ts, cb.take_ts))
    pairs.sort()
    return pairs


def estimate_pair_offsets(
    pairs: Iterable[SyncPair],
    min_one_way_delay_ns: int = 0,
) -> Dict[Tuple[str, str], PairEstimate]:
    """
    Estimate the clock lead for every connected host pair.

    Keys are (first, second) with first < second.

    Raises:
        InfeasibleOffsets: lower bound exceeds upper bound for some pair
    """
    upper: Dict[Tuple[str, str], int] = {}
    lower: Dict[Tuple[str, str], int] = {}

    for p in pairs:
        if p.from_host < p.to_host:
            key = (p.from_host, p.to_host)
            bound = p.recv_ts - p.send_ts - min_one_way_delay_ns
            upper[key] = min(upper.get(key, bound), bound)
        else:
            key = (p.to_host, p.from_host)
            bound = min_one_way_delay_ns - (p.recv_ts - p.send_ts)
            lower[key] = max(lower.get(key, bound), bound)

    estimates = {}
    for key in sorted(set(upper) | set(lower)):
        lo, hi = lower.get(key), upper.get(key)
        if lo is not None and hi is not None:
            if lo > hi:
                raise InfeasibleOffsets(key[0], key[1], lo, hi)
            lead = (lo + hi) // 2
        else:
            lead = hi if hi is not None else lo
        estimates[key] = PairEstimate(key[0], key[1], lead, lo, hi)
    return estimates


def estimate_offsets(
    pairs: Sequence[SyncPair],
    reference: Optional[str] = None,
    hosts: Optional[Iterable[str]] = None,
    min_one_way_delay_ns: int = 0,
) -> List[ClockMapping]:
    """
    Estimate one clock mapping per host.

    Args:
        pairs: matched cross-host send/receive pairs
        reference: reference host (lexicographically smallest host by default)
        hosts: hosts that need a mapping (defaults to hosts seen in pairs)
        min_one_way_delay_ns: lower bound on any one-way network delay

    Returns:
        Mappings sorted by host; the reference maps with offset 0

    Raises:
        Disconnected: a host has no path of cross-host traffic to the reference
        InfeasibleOffsets: contradictory causality bounds
    """
    all_hosts = set(hosts or ())
    for p in pairs:
        all_hosts.update((p.from_host, p.to_host))
    if reference is None:
        if not all_hosts:
            return []
        reference = min(all_hosts)
    all_hosts.add(reference)

    estimates = estimate_pair_offsets(pairs, min_one_way_delay_ns)
    neighbors: Dict[str, List[Tuple[str, int]]] = defaultdict(list)
    for (a, b), est in estimates.items():
        neighbors[a].append((b, est.lead))
        neighbors[b].append((a, -est.lead))

    lead = {reference: 0}
    queue = deque([reference])
    while queue:
        host = queue.popleft()
        for other, delta in sorted(neighbors[host]):
            if other not in lead:
                lead[other] = lead[host] + delta
                queue.append(other)

    unreachable = sorted(all_hosts - set(lead))
    if unreachable:
        raise Disconnected(reference, unreachable)

    mappings = [ClockMapping(h, -lead[h], reference) for h in sorted(all_hosts)]
    logger.info(f"Estimated clock offsets relative to {reference}: "
                + ", ".join(f"{m.host}={m.offset}" for m in mappings))
    return mappings


def identity_mappings(hosts: Iterable[str], reference: Optional[str] = None) -> List[ClockMapping]:
    """Zero offsets, for traces already synchronized by other means."""
    hosts = sorted(set(hosts))
    if not hosts:
        return []
    reference = reference or hosts[0]
    return [ClockMapping(h, 0, reference) for h in hosts]


def apply_offsets(db: IrDatabase, mappings: Iterable[ClockMapping]) -> IrDatabase:
    """
    Shift every timestamp of each host by its mapping's offset.

    Source timestamps and uids are identifiers and are left untouched. Hosts
    without a mapping are not shifted.
    """
    offsets = {m.host: m.offset for m in mappings}
    if not any(offsets.values()):
        return db

    return db.replace(
        publication_instances=[p.shifted(offsets.get(p.host, 0)) for p in db.publication_instances],
        callback_instances=[c.shifted(offsets.get(c.host, 0)) for c in db.callback_instances],
        executor_intervals=[i.shifted(offsets.get(i.host, 0)) for i in db.executor_intervals],
    )
