"""
Trace analysis: IR construction, clock sync, link inference, flows and timelines.
"""

from .ir import (
    CallbackInstance,
    Diagnostic,
    DiagnosticCode,
    ExecutorState,
    ExecutorStateInterval,
    IrDatabase,
    PublicationInstance,
    query_publication,
)
from .ir_builder import build_ir, fold_executor, fold_publication
from .clock import (
    ClockMapping,
    SyncPair,
    apply_offsets,
    collect_sync_pairs,
    estimate_offsets,
    estimate_pair_offsets,
    identity_mappings,
)
from .links import (
    DirectLink,
    IndirectLink,
    LinkSet,
    TransportLink,
    infer_all,
    infer_direct,
    infer_partial_sync,
    infer_periodic_async,
    match_transport,
)
from .flow import (
    FlowEdge,
    FlowEdgeKind,
    FlowGraph,
    SeedSelector,
    apply_tf_rules,
    build_flow,
    check_integrity,
    end_to_end_latency,
    export_flow,
)
from .timeline import TimelineLane, ExecutorUtilization, build_timeline, export_timeline, utilization
from .metrics import MetricsEngine, format_table
from .document import AnalysisDocument, analyze_bundle

__all__ = [
    'CallbackInstance',
    'Diagnostic',
    'DiagnosticCode',
    'ExecutorState',
    'ExecutorStateInterval',
    'IrDatabase',
    'PublicationInstance',
    'query_publication',
    'build_ir',
    'fold_executor',
    'fold_publication',
    'ClockMapping',
    'SyncPair',
    'apply_offsets',
    'collect_sync_pairs',
    'estimate_offsets',
    'estimate_pair_offsets',
    'identity_mappings',
    'DirectLink',
    'IndirectLink',
    'LinkSet',
    'TransportLink',
    'infer_all',
    'infer_direct',
    'infer_partial_sync',
    'infer_periodic_async',
    'match_transport',
    'FlowEdge',
    'FlowEdgeKind',
    'FlowGraph',
    'SeedSelector',
    'apply_tf_rules',
    'build_flow',
    'check_integrity',
    'end_to_end_latency',
    'export_flow',
    'TimelineLane',
    'ExecutorUtilization',
    'build_timeline',
    'export_timeline',
    'utilization',
    'MetricsEngine',
    'format_table',
    'AnalysisDocument',
    'analyze_bundle',
]
