"""
msgflow - message flow analysis for distributed publish-subscribe traces.

This package provides a single import point for the analysis pipeline.

Usage:
    from msgflow import (
        # Traces
        load_bundle,
        write_bundle,

        # Analysis
        analyze_bundle,
        build_flow,
        build_timeline,
        SeedSelector,

        # Simulation
        load_scenario,
        simulate,
    )
"""

__version__ = "1.0.0"

# =============================================================================
# Core Configuration & Errors
# =============================================================================
from .core.config import AnalysisConfig, SyncMode
from .core.errors import (
    MsgflowError,
    ParseError,
    SyncError,
    SeedNotFound,
    InvalidConfig,
)

# =============================================================================
# Traces
# =============================================================================
from .trace import EventKind, TraceEvent, TraceBundle, load_bundle, write_bundle

# =============================================================================
# Analysis
# =============================================================================
from .analysis import (
    IrDatabase,
    LinkSet,
    ClockMapping,
    FlowGraph,
    SeedSelector,
    AnalysisDocument,
    analyze_bundle,
    build_ir,
    infer_all,
    build_flow,
    end_to_end_latency,
    build_timeline,
    utilization,
    MetricsEngine,
)

# =============================================================================
# Simulation
# =============================================================================
from .sim import ScenarioConfig, GroundTruth, builtin_scenarios, load_scenario, simulate

__all__ = [
    '__version__',
    'AnalysisConfig',
    'SyncMode',
    'MsgflowError',
    'ParseError',
    'SyncError',
    'SeedNotFound',
    'InvalidConfig',
    'EventKind',
    'TraceEvent',
    'TraceBundle',
    'load_bundle',
    'write_bundle',
    'IrDatabase',
    'LinkSet',
    'ClockMapping',
    'FlowGraph',
    'SeedSelector',
    'AnalysisDocument',
    'analyze_bundle',
    'build_ir',
    'infer_all',
    'build_flow',
    'end_to_end_latency',
    'build_timeline',
    'utilization',
    'MetricsEngine',
    'ScenarioConfig',
    'GroundTruth',
    'builtin_scenarios',
    'load_scenario',
    'simulate',
]
