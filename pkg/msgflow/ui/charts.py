"""
Plotly reports for executor timelines and message flows.
"""

from typing import Dict, List, Sequence

import pandas as pd
import plotly.graph_objects as go
from plotly.subplots import make_subplots

from ..core.config import EDGE_COLORS, STATE_COLORS
from ..analysis.flow import FlowGraph, end_to_end_latency
from ..analysis.timeline import TimelineLane

NS_PER_MS = 1_000_000


def _to_html(fig: go.Figure, div_id: str) -> str:
    # Fixed div id keeps repeated renders identical
    return fig.to_html(include_plotlyjs=True, full_html=True, div_id=div_id)


def timeline_frame(lanes: Sequence[TimelineLane]) -> pd.DataFrame:
    """One row per interval: lane label, state, start/duration in ms."""
    rows = [
        {
            'lane': lane.label,
            'state': i.state.value,
            'start_ms': i.start / NS_PER_MS,
            'duration_ms': (i.end - i.start) / NS_PER_MS,
            'target': str(i.target) if i.target else '',
        }
        for lane in lanes for i in lane.intervals
    ]
    return pd.DataFrame(rows, columns=['lane', 'state', 'start_ms', 'duration_ms', 'target'])


def plot_timeline(lanes: Sequence[TimelineLane]) -> go.Figure:
    """
    Executor state bars, one row per thread.

    Args:
        lanes: timeline lanes

    Returns:
        Plotly figure with one trace per executor state
    """
    df = timeline_frame(lanes)
    fig = go.Figure()
    for state, color in STATE_COLORS.items():
        state_df = df[df['state'] == state]
        fig.add_trace(go.Bar(
            y=state_df['lane'],
            x=state_df['duration_ms'],
            base=state_df['start_ms'],
            orientation='h',
            name=state,
            marker_color=color,
            customdata=state_df['target'],
            hovertemplate='%{y}<br>%{base:.3f} ms + %{x:.3f} ms<br>%{customdata}<extra>' + state + '</extra>',
        ))

    fig.update_layout(
        barmode='overlay',
        height=max(200, 40 * len(lanes) + 120),
        xaxis_title='time (ms)',
        yaxis={'autorange': 'reversed'},
        showlegend=True,
    )
    return fig


def timeline_html(lanes: Sequence[TimelineLane]) -> str:
    return _to_html(plot_timeline(lanes), 'msgflow-timeline')


def flow_frame(graph: FlowGraph) -> pd.DataFrame:
    """One row per flow edge in topological order."""
    rows = []
    for key in graph.topological_order():
        e = graph.edges[key]
        rows.append({
            'lane': e.lane or e.kind.value,
            'kind': e.kind.value,
            'label': e.label,
            'start_ms': e.start_ts / NS_PER_MS,
            'duration_ms': e.weight / NS_PER_MS,
        })
    return pd.DataFrame(rows, columns=['lane', 'kind', 'label', 'start_ms', 'duration_ms'])


def plot_flow(graph: FlowGraph) -> go.Figure:
    """
    Flow edges as a Gantt chart by lane, with the latency breakdown per leaf below.

    Args:
        graph: checked flow graph

    Returns:
        Plotly figure with two rows
    """
    df = flow_frame(graph)
    rows = end_to_end_latency(graph)

    fig = make_subplots(
        rows=2, cols=1,
        subplot_titles=('Message flow', 'End-to-end latency by leaf'),
        vertical_spacing=0.15,
        row_heights=[0.7, 0.3],
    )

    for kind, color in EDGE_COLORS.items():
        kind_df = df[df['kind'] == kind]
        if kind_df.empty:
            continue
        fig.add_trace(
            go.Bar(
                y=kind_df['lane'],
                x=kind_df['duration_ms'],
                base=kind_df['start_ms'],
                orientation='h',
                name=kind,
                marker_color=color,
                customdata=kind_df['label'],
                hovertemplate='%{customdata}<br>%{base:.3f} ms + %{x:.3f} ms<extra></extra>',
            ),
            row=1, col=1,
        )

    leaves = [f"leaf {i}" for i in range(len(rows))]
    breakdown: Dict[str, List[float]] = {kind: [] for kind in EDGE_COLORS}
    for r in rows:
        for kind in EDGE_COLORS:
            breakdown[kind].append(r.breakdown.get(kind, 0) / NS_PER_MS)
    stacked = [0.0] * len(rows)
    for kind, values in breakdown.items():
        if any(values):
            fig.add_trace(
                go.Bar(x=leaves, y=values, base=list(stacked), name=f"{kind} (latency)",
                       marker_color=EDGE_COLORS[kind], showlegend=False),
                row=2, col=1,
            )
            stacked = [s + v for s, v in zip(stacked, values)]

    fig.update_layout(barmode='overlay', height=max(400, 30 * df['lane'].nunique() + 300), showlegend=True)
    fig.update_yaxes(autorange='reversed', row=1, col=1)
    fig.update_xaxes(title_text='time (ms)', row=1, col=1)
    fig.update_yaxes(title_text='ms', row=2, col=1)
    return fig


def flow_gantt_html(graph: FlowGraph) -> str:
    return _to_html(plot_flow(graph), 'msgflow-flow')
