import os
from typing import Dict, Tuple

import hypothesis
import pytest

from msgflow.analysis.document import AnalysisDocument, analyze_bundle
from msgflow.core.config import AnalysisConfig
from msgflow.sim import GroundTruth, builtin_scenarios, simulate
from msgflow.trace.bundle import TraceBundle

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None, derandomize=True)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_collection_modifyitems(config, items):
    if os.environ.get("MSGFLOW_RUN_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="set MSGFLOW_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


Run = Tuple[TraceBundle, GroundTruth, AnalysisDocument]


@pytest.fixture(scope="session")
def scenario_run():
    """Simulate and analyze a builtin scenario once per (name, seed)."""
    cache: Dict[Tuple[str, int], Run] = {}
    scenarios = builtin_scenarios()

    def run(name: str, seed: int = 0) -> Run:
        if (name, seed) not in cache:
            bundle, truth = simulate(scenarios[name].with_seed(seed))
            cache[(name, seed)] = (bundle, truth, analyze_bundle(bundle, AnalysisConfig()))
        return cache[(name, seed)]

    return run
