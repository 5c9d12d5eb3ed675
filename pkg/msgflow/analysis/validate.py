"""
Comparison of an analysis document against simulator ground truth.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Set, Tuple

from ..core.errors import SeedNotFound
from ..sim.truth import GroundTruth
from .document import AnalysisDocument
from .flow import FlowBuilder, SeedSelector, end_to_end_latency

logger = logging.getLogger(__name__)

# Listed entries per family are capped; counts are always exact
MAX_LISTED = 50


@dataclass
class SetDiff:
    missing: List[Any] = field(default_factory=list)
    spurious: List[Any] = field(default_factory=list)

    @classmethod
    def between(cls, expected: Set[Any], actual: Set[Any]) -> "SetDiff":
        return cls(sorted(expected - actual), sorted(actual - expected))

    @property
    def empty(self) -> bool:
        return not self.missing and not self.spurious

    def to_dict(self) -> Dict[str, Any]:
        return {
            "missing_count": len(self.missing),
            "spurious_count": len(self.spurious),
            "missing": [list(x) if isinstance(x, tuple) else x for x in self.missing[:MAX_LISTED]],
            "spurious": [list(x) if isinstance(x, tuple) else x for x in self.spurious[:MAX_LISTED]],
        }


@dataclass
class FlowDiff:
    edges: SetDiff
    latencies: Dict[str, Tuple[int, int]] = field(default_factory=dict)  # leaf -> (expected, actual)
    latencies_checked: bool = False
    error: str = ""

    @property
    def empty(self) -> bool:
        return self.edges.empty and not self.latencies and not self.error

    def to_dict(self) -> Dict[str, Any]:
        d = self.edges.to_dict()
        d["latencies_checked"] = self.latencies_checked
        d["latency_mismatches"] = {k: list(v) for k, v in sorted(self.latencies.items())}
        if self.error:
            d["error"] = self.error
        return d


@dataclass
class ValidationReport:
    transport: SetDiff
    direct: SetDiff
    indirect: SetDiff
    flows: Dict[str, FlowDiff]
    offsets_exact: bool

    @property
    def ok(self) -> bool:
        return (self.transport.empty and self.direct.empty and self.indirect.empty
                and all(f.empty for f in self.flows.values()))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ok": self.ok,
            "offsets_exact": self.offsets_exact,
            "transport": self.transport.to_dict(),
            "direct": self.direct.to_dict(),
            "indirect": self.indirect.to_dict(),
            "flows": {seed: f.to_dict() for seed, f in sorted(self.flows.items())},
        }


def _offsets_exact(doc: AnalysisDocument, truth: GroundTruth) -> bool:
    """Estimated offsets equal the injected ones relative to the document's reference host."""
    if not doc.clock:
        return True
    reference = doc.clock[0].reference
    true_ref = truth.true_offsets.get(reference, 0)
    return all(m.offset == -(truth.true_offsets.get(m.host, 0) - true_ref) for m in doc.clock)


def validate(doc: AnalysisDocument, truth: GroundTruth) -> ValidationReport:
    """Set differences per link family and per ground-truth flow."""
    links = doc.links

    transport = {(t.source, d.callback) for t in links.transport for d in t.destinations}
    direct = {(l.input, out) for l in links.direct for out in l.outputs}
    indirect = {(l.link_type, l.output, tuple(sorted(l.inputs))) for l in links.indirect}
    expected_indirect = {(t, output, tuple(sorted(inputs))) for t, inputs, output in truth.indirect}

    exact = _offsets_exact(doc, truth)
    builder = FlowBuilder(doc.ir, links)
    flows: Dict[str, FlowDiff] = {}
    for seed_text, expected in sorted(truth.flows.items()):
        expected_edges = {tuple(e) for e in expected["edges"]}
        try:
            graph = builder.build(SeedSelector.parse(seed_text), expected.get("direction", "both"))
        except SeedNotFound as e:
            flows[seed_text] = FlowDiff(SetDiff(sorted(expected_edges), []), error=str(e))
            continue

        diff = FlowDiff(SetDiff.between(expected_edges, set(graph.edge_keys())), latencies_checked=exact)
        if exact and diff.edges.empty:
            actual = {f"{r.leaf[0].value}|{r.leaf[1]}": r.latency for r in end_to_end_latency(graph)}
            for leaf, ns in expected["latencies"].items():
                if actual.get(leaf) != ns:
                    diff.latencies[leaf] = (ns, actual.get(leaf, -1))
        flows[seed_text] = diff

    report = ValidationReport(
        transport=SetDiff.between(set(truth.transport), transport),
        direct=SetDiff.between(set(truth.direct), direct),
        indirect=SetDiff.between(expected_indirect, indirect),
        flows=flows,
        offsets_exact=exact,
    )
    logger.info(f"Validation against {truth.scenario} (seed {truth.seed}): "
                f"{'ok' if report.ok else 'differences found'}")
    return report
