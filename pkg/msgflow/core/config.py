"""
Analysis configuration and constants.
"""

from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Any, Dict, Optional
import os


# Schema versions embedded in every JSON artifact
TRACE_FORMAT = "jsonl"
IR_VERSION = 1
DOCUMENT_VERSION = 1
GROUND_TRUTH_VERSION = 1
SCENARIO_VERSION = 1
FLOW_VERSION = 1
TIMELINE_VERSION = 1

# Transforms topic; see flow-graph pruning rules
TF_TOPIC = "/tf"

# Executor state colours (svg and html reports)
STATE_COLORS = {
    "executing": "#2e9e44",
    "waiting": "#f29b1d",
    "overhead": "#d62d20",
}

EDGE_COLORS = {
    "timer_callback": "#8e44ad",
    "subscription_callback": "#2e9e44",
    "message_publication": "#1f77b4",
    "transport_link": "#7f7f7f",
    "take": "#bcbd22",
    "periodic_async_link": "#e377c2",
    "partial_sync_link": "#ff7f0e",
}


class SyncMode(str, Enum):
    PAIRS = "pairs"
    ASSUME_SYNCHRONIZED = "assume-synchronized"


@dataclass
class AnalysisConfig:
    """Analysis pipeline settings."""

    # Clock synchronization
    sync_mode: SyncMode = SyncMode.PAIRS
    reference_host: Optional[str] = None
    min_one_way_delay_ns: int = 0

    # Cache Settings
    cache_dir: Optional[str] = None

    # Rendering
    px_per_ms: float = 10.0
    lane_height_px: int = 12

    @classmethod
    def from_environment(cls) -> "AnalysisConfig":
        """Load configuration from MSGFLOW_* environment variables."""
        config = cls()
        env = os.environ
        if env.get("MSGFLOW_SYNC_MODE"):
            config.sync_mode = SyncMode(env["MSGFLOW_SYNC_MODE"])
        if env.get("MSGFLOW_REFERENCE_HOST"):
            config.reference_host = env["MSGFLOW_REFERENCE_HOST"]
        if env.get("MSGFLOW_MIN_ONE_WAY_DELAY_NS"):
            config.min_one_way_delay_ns = int(env["MSGFLOW_MIN_ONE_WAY_DELAY_NS"])
        if env.get("MSGFLOW_CACHE_DIR"):
            config.cache_dir = env["MSGFLOW_CACHE_DIR"]
        if env.get("MSGFLOW_PX_PER_MS"):
            config.px_per_ms = float(env["MSGFLOW_PX_PER_MS"])
        return config

    @classmethod
    def load(cls, overrides: Optional[Dict[str, Any]] = None) -> "AnalysisConfig":
        """Load configuration from the environment, then apply explicit overrides.

        Overrides whose value is None are ignored so CLI flags that were not
        given fall through to the environment or the defaults.
        """
        config = cls.from_environment()
        if not overrides:
            return config

        known = {f.name for f in fields(cls)}
        changes = {k: v for k, v in overrides.items() if k in known and v is not None}
        if "sync_mode" in changes:
            changes["sync_mode"] = SyncMode(changes["sync_mode"])
        return replace(config, **changes)

    def cache_key_fields(self) -> Dict[str, Any]:
        """Settings that change analysis output (render settings excluded)."""
        return {
            "sync_mode": self.sync_mode.value,
            "reference_host": self.reference_host,
            "min_one_way_delay_ns": self.min_one_way_delay_ns,
        }
