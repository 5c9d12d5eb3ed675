"""
Rendering: DOT graphs, SVG timelines and plotly HTML reports.
"""

from .dot import flow_to_dot
from .svg import flow_to_svg, timeline_to_svg
from .charts import flow_gantt_html, plot_flow, plot_timeline, timeline_html

__all__ = [
    'flow_to_dot',
    'flow_to_svg',
    'timeline_to_svg',
    'flow_gantt_html',
    'plot_flow',
    'plot_timeline',
    'timeline_html',
]
