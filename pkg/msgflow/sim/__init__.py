"""
Trace generator: scenario configs, the executor simulation and its ground truth.
"""

from .scenario import (
    AnnotationConfig,
    Behavior,
    DelayModel,
    FlowSeedConfig,
    HostConfig,
    NetworkConfig,
    NodeConfig,
    ProcessConfig,
    ScenarioConfig,
    SubscriptionConfig,
    TimerConfig,
    TimingConfig,
    load_scenario,
)
from .simulator import Simulation, SimRecord, simulate
from .truth import GroundTruth, build_ground_truth
from .builtin import builtin_names, builtin_scenarios

__all__ = [
    'AnnotationConfig',
    'Behavior',
    'DelayModel',
    'FlowSeedConfig',
    'HostConfig',
    'NetworkConfig',
    'NodeConfig',
    'ProcessConfig',
    'ScenarioConfig',
    'SubscriptionConfig',
    'TimerConfig',
    'TimingConfig',
    'load_scenario',
    'Simulation',
    'SimRecord',
    'simulate',
    'GroundTruth',
    'build_ground_truth',
    'builtin_names',
    'builtin_scenarios',
]
