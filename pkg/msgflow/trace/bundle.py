"""
Trace bundles: one time-ordered event sequence per host.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from ..core.errors import DuplicateHost, ParseError, SchemaViolation
from .events import TraceEvent, parse_event, serialize_event

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass(frozen=True)
class HostTrace:
    """Events of one host, sorted by timestamp (input order breaks ties)."""

    host: str
    events: Tuple[TraceEvent, ...]
    source: Optional[str] = None

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class TraceBundle:
    traces: Tuple[HostTrace, ...]

    @classmethod
    def from_events(cls, events_by_host: Dict[str, Sequence[TraceEvent]]) -> "TraceBundle":
        traces = []
        for host in sorted(events_by_host):
            events = sorted(events_by_host[host], key=lambda e: e.timestamp)
            for event in events:
                if event.host != host:
                    raise SchemaViolation(f"event host {event.host!r} in trace of host {host!r}")
            traces.append(HostTrace(host, tuple(events)))
        return cls(tuple(traces))

    @property
    def hosts(self) -> List[str]:
        return [t.host for t in self.traces]

    @property
    def event_count(self) -> int:
        return sum(len(t) for t in self.traces)

    def trace(self, host: str) -> HostTrace:
        for t in self.traces:
            if t.host == host:
                return t
        raise KeyError(host)

    def iter_events(self) -> Iterator[TraceEvent]:
        for t in self.traces:
            yield from t.events


def read_trace_file(path: PathLike) -> HostTrace:
    """
    Parse one host's trace file.

    The host id comes from the records; an empty file is named after its stem.

    Raises:
        ParseError: with file/line context
    """
    path = Path(path)
    events: List[TraceEvent] = []
    host: Optional[str] = None

    with open(path, "rb") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                event = parse_event(line)
            except ParseError as e:
                raise e.with_context(str(path), lineno) from None
            if host is None:
                host = event.host
            elif event.host != host:
                raise SchemaViolation(
                    f"host {event.host!r} differs from the file's host {host!r}",
                    path=str(path), line=lineno,
                )
            events.append(event)

    # Stable: equal timestamps keep file order
    events.sort(key=lambda e: e.timestamp)
    logger.info(f"Loaded {len(events)} events for host {host or path.stem} from {path}")
    return HostTrace(host or path.stem, tuple(events), str(path))


def load_bundle(paths: Iterable[PathLike], max_workers: int = 4) -> TraceBundle:
    """
    Load one trace file per host into a bundle.

    Files are parsed concurrently; errors are reported for the first failing
    file in argument order.

    Raises:
        ParseError: malformed records, with file/line context
        DuplicateHost: two files declare the same host
    """
    paths = [Path(p) for p in paths]
    if not paths:
        return TraceBundle(())

    with ThreadPoolExecutor(max_workers=max(1, min(max_workers, len(paths)))) as pool:
        futures = [pool.submit(read_trace_file, p) for p in paths]
        traces = [f.result() for f in futures]

    seen: Dict[str, List[str]] = {}
    for t in traces:
        seen.setdefault(t.host, []).append(t.source or "")
    for host, sources in seen.items():
        if len(sources) > 1:
            raise DuplicateHost(host, sources)

    return TraceBundle(tuple(sorted(traces, key=lambda t: t.host)))


def write_bundle(bundle: TraceBundle, out_dir: PathLike) -> List[Path]:
    """Write ``<host>.jsonl`` per host; the inverse of load_bundle."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for t in bundle.traces:
        path = out_dir / f"{t.host}.jsonl"
        with open(path, "w", encoding="utf-8") as f:
            for event in t.events:
                f.write(serialize_event(event))
                f.write("\n")
        written.append(path)
    logger.info(f"Wrote {bundle.event_count} events for {len(written)} hosts to {out_dir}")
    return written
