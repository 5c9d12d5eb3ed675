"""
SVG timelines: executor lanes and flow edges on a shared time axis.

Only state and edge bars are drawn as rects; lane labels and separators use
text and line elements.
"""

from typing import Dict, List, Sequence, Tuple
from xml.sax.saxutils import escape

from ..core.config import EDGE_COLORS, STATE_COLORS
from ..analysis.flow import FlowGraph
from ..analysis.timeline import TimelineLane

NS_PER_MS = 1_000_000
LABEL_WIDTH = 220
MARGIN = 10


def _x(ts: int, t0: int, px_per_ms: float) -> float:
    return round(LABEL_WIDTH + (ts - t0) * px_per_ms / NS_PER_MS, 3)


def _header(width: float, height: float) -> List[str]:
    return [
        f"<svg xmlns='http://www.w3.org/2000/svg' width='{int(width)}' height='{int(height)}' "
        f"viewBox='0 0 {int(width)} {int(height)}' font-family='Helvetica' font-size='10'>",
    ]


def timeline_to_svg(
    lanes: Sequence[TimelineLane],
    window: Tuple[int, int],
    px_per_ms: float = 10.0,
    lane_height_px: int = 12,
) -> str:
    """One horizontal lane per thread; rects coloured by executor state."""
    t0, t1 = window
    width = LABEL_WIDTH + max(0, t1 - t0) * px_per_ms / NS_PER_MS + MARGIN
    height = 2 * MARGIN + len(lanes) * (lane_height_px + 4)
    out = _header(width, height)
    out.append("<g class='lanes'>")
    for row, lane in enumerate(lanes):
        y = MARGIN + row * (lane_height_px + 4)
        out.append(f"<g class='lane' data-host='{escape(lane.host)}' data-pid='{lane.pid}' data-tid='{lane.tid}'>")
        out.append(f"<text x='2' y='{y + lane_height_px - 2}'>{escape(lane.label)}</text>")
        for i in lane.intervals:
            x0, x1 = _x(i.start, t0, px_per_ms), _x(i.end, t0, px_per_ms)
            out.append(
                f"<rect class='{i.state.value}' x='{x0}' y='{y}' width='{max(x1 - x0, 0.1):.3f}' "
                f"height='{lane_height_px}' fill='{STATE_COLORS[i.state.value]}'>"
                f"<title>{i.state.value} {i.start}-{i.end}</title></rect>"
            )
        out.append(f"<line x1='{LABEL_WIDTH}' y1='{y + lane_height_px + 2}' x2='{int(width)}' "
                   f"y2='{y + lane_height_px + 2}' stroke='#dddddd'/>")
        out.append("</g>")
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def flow_to_svg(graph: FlowGraph, px_per_ms: float = 10.0, lane_height_px: int = 14) -> str:
    """Flow edges drawn as bars on one lane per node (transport edges on their topic's lane)."""
    order = graph.topological_order()
    lanes: Dict[str, int] = {}
    for key in order:
        lane = graph.edges[key].lane or graph.edges[key].kind.value
        lanes.setdefault(lane, len(lanes))

    if graph.edges:
        t0 = min(e.start_ts for e in graph.edges.values())
        t1 = max(e.end_ts for e in graph.edges.values())
    else:
        t0 = t1 = 0
    width = LABEL_WIDTH + (t1 - t0) * px_per_ms / NS_PER_MS + MARGIN
    height = 2 * MARGIN + len(lanes) * (lane_height_px + 6)

    out = _header(width, height)
    out.append("<g class='lanes'>")
    for name, row in lanes.items():
        y = MARGIN + row * (lane_height_px + 6)
        out.append(f"<text x='2' y='{y + lane_height_px - 3}'>{escape(name)}</text>")
    out.append("</g>")
    out.append("<g class='edges'>")
    for key in order:
        e = graph.edges[key]
        y = MARGIN + lanes[e.lane or e.kind.value] * (lane_height_px + 6)
        x0, x1 = _x(e.start_ts, t0, px_per_ms), _x(e.end_ts, t0, px_per_ms)
        out.append(
            f"<rect class='{e.kind.value}' x='{x0}' y='{y}' width='{max(x1 - x0, 0.5):.3f}' "
            f"height='{lane_height_px}' fill='{EDGE_COLORS[e.kind.value]}'>"
            f"<title>{escape(e.label)} ({e.weight} ns)</title></rect>"
        )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
