"""
Analysis documents: the self-contained result of analyzing one trace bundle.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from ..core.config import DOCUMENT_VERSION, AnalysisConfig, SyncMode
from ..core.errors import DocumentVersionError
from ..core.utils import read_document, write_document
from ..trace.bundle import TraceBundle
from .clock import ClockMapping, apply_offsets, collect_sync_pairs, estimate_offsets, identity_mappings
from .ir import Diagnostic, IrDatabase
from .ir_builder import build_ir
from .links import LinkSet, infer_all

logger = logging.getLogger(__name__)


@dataclass
class AnalysisDocument:
    """Clock-corrected database, inferred links and clock mappings."""

    ir: IrDatabase
    links: LinkSet
    clock: List[ClockMapping]
    sync_mode: str = SyncMode.PAIRS.value

    @property
    def diagnostics(self) -> List[Diagnostic]:
        return list(self.ir.diagnostics) + list(self.links.diagnostics)

    def offsets(self) -> Dict[str, int]:
        return {m.host: m.offset for m in self.clock}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "document_version": DOCUMENT_VERSION,
            "sync_mode": self.sync_mode,
            "clock": [m.to_dict() for m in self.clock],
            "ir": self.ir.to_dict(),
            "links": self.links.to_dict(),
            "link_summary": self.links.summary(),
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "AnalysisDocument":
        version = d.get("document_version")
        if version != DOCUMENT_VERSION:
            raise DocumentVersionError("analysis document", version, DOCUMENT_VERSION)
        return cls(
            ir=IrDatabase.from_dict(d["ir"]),
            links=LinkSet.from_dict(d["links"]),
            clock=[ClockMapping.from_dict(m) for m in d["clock"]],
            sync_mode=d.get("sync_mode", SyncMode.PAIRS.value),
        )

    def save(self, path: Union[str, Path]) -> None:
        write_document(path, self.to_dict())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "AnalysisDocument":
        return cls.from_dict(read_document(path))


def analyze_bundle(bundle: TraceBundle, config: Optional[AnalysisConfig] = None) -> AnalysisDocument:
    """
    Run the full pipeline: build the IR, synchronize clocks, infer links.

    Args:
        bundle: loaded traces
        config: analysis settings (defaults from the environment)

    Returns:
        AnalysisDocument

    Raises:
        Disconnected, InfeasibleOffsets: clock synchronization failed
    """
    config = config or AnalysisConfig.from_environment()

    raw = build_ir(bundle)
    hosts = list(raw.hosts) or bundle.hosts

    if config.sync_mode is SyncMode.ASSUME_SYNCHRONIZED:
        mappings = identity_mappings(hosts, config.reference_host)
    else:
        pairs = collect_sync_pairs(raw)
        logger.info(f"Collected {len(pairs)} cross-host sync pairs")
        mappings = estimate_offsets(pairs, config.reference_host, hosts, config.min_one_way_delay_ns)

    db = apply_offsets(raw, mappings)
    links = infer_all(db)
    return AnalysisDocument(db, links, mappings, config.sync_mode.value)
