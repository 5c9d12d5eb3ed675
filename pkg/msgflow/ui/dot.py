"""
Graphviz DOT rendering of flow graphs.
"""

from ..core.config import EDGE_COLORS
from ..analysis.flow import FlowGraph


def _quote(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\"", "'")


def flow_to_dot(graph: FlowGraph) -> str:
    """
    One digraph; vertices are junctions ``v<n>``, each flow edge is a DOT edge
    carrying ``kind=<edge kind>``.
    """
    ends, vertices = graph.vertices()
    lines = [
        "digraph flow {",
        "  rankdir=LR;",
        "  node [shape=point,width=0.08];",
        f"  label=\"{_quote(str(graph.seed))} ({graph.direction})\";",
    ]
    for v in vertices:
        lines.append(f"  {v};")
    for key, edge in graph.edges.items():
        tail, head = ends[key]
        label = f"{_quote(edge.label)}\\n{edge.weight} ns" if edge.label else f"{edge.weight} ns"
        style = ",penwidth=2" if key == graph.seed_edge else ""
        lines.append(
            f"  {tail} -> {head} [kind=\"{edge.kind.value}\", class=\"{edge.kind.value}\", "
            f"color=\"{EDGE_COLORS[edge.kind.value]}\", label=\"{label}\", "
            f"start_ts={edge.start_ts}, end_ts={edge.end_ts}{style}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
