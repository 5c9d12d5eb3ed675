"""
Scenario configuration for the trace simulator.

A scenario is a JSON document describing hosts, processes (with their
executors), nodes, link annotations, the network delay model and the run
length. ``ScenarioConfig.from_dict`` validates it and reports the dotted path
of the first offending field.
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..core.config import SCENARIO_VERSION
from ..core.errors import InvalidConfig
from ..core.utils import read_document

logger = logging.getLogger(__name__)

EXECUTOR_KINDS = ("single", "multi")
LINK_TYPES = ("periodic_async", "partial_sync")
INIT_LEAD_NS = 1_000_000


# =============================================================================
# Field helpers
# =============================================================================

def _require(d: Dict[str, Any], key: str, path: str) -> Any:
    if not isinstance(d, dict):
        raise InvalidConfig(path, "expected an object")
    if key not in d:
        raise InvalidConfig(f"{path}.{key}" if path else key, "missing field")
    return d[key]


def _int(value: Any, path: str, minimum: Optional[int] = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise InvalidConfig(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise InvalidConfig(path, f"must be >= {minimum}")
    return value


def _str(value: Any, path: str) -> str:
    if not isinstance(value, str) or not value:
        raise InvalidConfig(path, f"expected a non-empty string, got {value!r}")
    return value


def _list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise InvalidConfig(path, "expected an array")
    return value


# =============================================================================
# Sections
# =============================================================================

@dataclass(frozen=True)
class DelayModel:
    """Constant or uniform duration in nanoseconds."""

    kind: str = "constant"
    min_ns: int = 0
    max_ns: int = 0

    @classmethod
    def constant(cls, ns: int) -> "DelayModel":
        return cls("constant", ns, ns)

    @classmethod
    def uniform(cls, min_ns: int, max_ns: int) -> "DelayModel":
        return cls("uniform", min_ns, max_ns)

    def sample(self, rng: np.random.Generator) -> int:
        if self.kind == "constant" or self.min_ns == self.max_ns:
            return self.min_ns
        return int(rng.integers(self.min_ns, self.max_ns + 1))

    @classmethod
    def from_dict(cls, value: Any, path: str) -> "DelayModel":
        """Accepts ``ns``, ``{"constant": ns}`` or ``{"uniform": [min_ns, max_ns]}``."""
        if isinstance(value, int) and not isinstance(value, bool):
            return cls.constant(_int(value, path, 0))
        if isinstance(value, dict) and "constant" in value:
            return cls.constant(_int(value["constant"], f"{path}.constant", 0))
        if isinstance(value, dict) and "uniform" in value:
            bounds = _list(value["uniform"], f"{path}.uniform")
            if len(bounds) != 2:
                raise InvalidConfig(f"{path}.uniform", "expected [min_ns, max_ns]")
            lo = _int(bounds[0], f"{path}.uniform[0]", 0)
            hi = _int(bounds[1], f"{path}.uniform[1]", 0)
            if lo > hi:
                raise InvalidConfig(f"{path}.uniform", f"min {lo} > max {hi}")
            return cls.uniform(lo, hi)
        raise InvalidConfig(path, "expected ns, {\"constant\": ns} or {\"uniform\": [min, max]}")

    def to_dict(self) -> Any:
        if self.kind == "constant":
            return {"constant": self.min_ns}
        return {"uniform": [self.min_ns, self.max_ns]}


@dataclass(frozen=True)
class Behavior:
    """
    What a callback does: run for ``exec_time`` and publish on ``publish`` topics.

    ``source_timestamp_quantum_ns`` rounds the source timestamp of each write
    down to a multiple of the quantum (a sensor stamping its frame period).
    Writers sharing a quantum and a publish window then carry equal source
    timestamps regardless of executor timing.
    """

    exec_time: DelayModel = DelayModel.constant(1_000_000)
    publish: Tuple[str, ...] = ()
    publish_offset_ns: Optional[int] = None
    source_timestamp_quantum_ns: Optional[int] = None

    @classmethod
    def from_dict(cls, d: Optional[Dict[str, Any]], path: str) -> "Behavior":
        if d is None:
            return cls()
        if not isinstance(d, dict):
            raise InvalidConfig(path, "expected an object")
        exec_time = DelayModel.from_dict(d.get("exec_time_ns", 1_000_000), f"{path}.exec_time_ns")
        publish = tuple(_str(t, f"{path}.publish[{i}]") for i, t in enumerate(_list(d.get("publish", []), f"{path}.publish")))
        offset = d.get("publish_offset_ns")
        if offset is not None:
            offset = _int(offset, f"{path}.publish_offset_ns", 1)
        quantum = d.get("source_timestamp_quantum_ns")
        if quantum is not None:
            quantum = _int(quantum, f"{path}.source_timestamp_quantum_ns", 1)
        return cls(exec_time, publish, offset, quantum)

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {"exec_time_ns": self.exec_time.to_dict(), "publish": list(self.publish)}
        if self.publish_offset_ns is not None:
            d["publish_offset_ns"] = self.publish_offset_ns
        if self.source_timestamp_quantum_ns is not None:
            d["source_timestamp_quantum_ns"] = self.source_timestamp_quantum_ns
        return d

    def source_timestamp(self, local_ts: int) -> int:
        if self.source_timestamp_quantum_ns is None:
            return local_ts
        return local_ts - local_ts % self.source_timestamp_quantum_ns


@dataclass(frozen=True)
class TimerConfig:
    period_ns: int
    phase_ns: int = 0
    behavior: Behavior = Behavior()


@dataclass(frozen=True)
class SubscriptionConfig:
    topic: str
    behavior: Behavior = Behavior()


@dataclass(frozen=True)
class NodeConfig:
    name: str
    process: str
    namespace: str = "/"
    timers: Tuple[TimerConfig, ...] = ()
    subscriptions: Tuple[SubscriptionConfig, ...] = ()
    publishers: Tuple[str, ...] = ()

    @property
    def fqn(self) -> str:
        return self.namespace.rstrip("/") + "/" + self.name.lstrip("/")


@dataclass(frozen=True)
class AnnotationConfig:
    node: str
    link_type: str
    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]


@dataclass(frozen=True)
class HostConfig:
    host_id: str
    clock_offset_ns: int = 0


@dataclass(frozen=True)
class ProcessConfig:
    name: str
    host: str
    pid: int
    executor: str = "single"
    threads: int = 1


@dataclass(frozen=True)
class NetworkConfig:
    """Delay models: ``local`` within a host, ``default`` across hosts, ``links`` per (from, to)."""

    local: DelayModel = DelayModel.constant(50_000)
    default: DelayModel = DelayModel.constant(200_000)
    links: Tuple[Tuple[str, str, DelayModel], ...] = ()

    def delay(self, from_host: str, to_host: str) -> DelayModel:
        for a, b, model in self.links:
            if a == from_host and b == to_host:
                return model
        return self.local if from_host == to_host else self.default


@dataclass(frozen=True)
class TimingConfig:
    """Fixed executor and middleware costs."""

    select_overhead_ns: int = 20_000
    dispatch_ns: int = 2_000
    take_ns: int = 3_000
    layer_step_ns: int = 1_500


@dataclass(frozen=True)
class FlowSeedConfig:
    """Ground-truth flow seed: the ``index``-th publication on a topic, or callback of a node's object."""

    kind: str  # "publication" | "callback"
    index: int = 0
    topic: Optional[str] = None
    node: Optional[str] = None
    timer: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    hosts: Tuple[HostConfig, ...]
    processes: Tuple[ProcessConfig, ...]
    nodes: Tuple[NodeConfig, ...]
    annotations: Tuple[AnnotationConfig, ...] = ()
    network: NetworkConfig = NetworkConfig()
    timing: TimingConfig = TimingConfig()
    duration_ns: int = 100_000_000
    seed: int = 0
    epoch_ns: int = 1_000_000_000
    flow_seeds: Tuple[FlowSeedConfig, ...] = ()

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=seed)

    def with_overrides(self, **changes: Any) -> "ScenarioConfig":
        return replace(self, **changes)

    def host(self, host_id: str) -> HostConfig:
        return next(h for h in self.hosts if h.host_id == host_id)

    def process(self, name: str) -> ProcessConfig:
        return next(p for p in self.processes if p.name == name)

    # -------------------------------------------------------------------------
    # Parsing
    # -------------------------------------------------------------------------

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ScenarioConfig":
        """
        Build and validate a scenario from its JSON form.

        Raises:
            InvalidConfig: with the dotted path of the offending field
        """
        if not isinstance(d, dict):
            raise InvalidConfig("<root>", "expected an object")
        version = d.get("scenario_version", SCENARIO_VERSION)
        if version != SCENARIO_VERSION:
            raise InvalidConfig("scenario_version", f"unsupported version {version!r}")

        hosts = tuple(
            HostConfig(_str(_require(h, "host_id", f"hosts[{i}]"), f"hosts[{i}].host_id"),
                       _int(h.get("clock_offset_ns", 0), f"hosts[{i}].clock_offset_ns"))
            for i, h in enumerate(_list(_require(d, "hosts", ""), "hosts"))
        )

        processes = []
        for i, p in enumerate(_list(_require(d, "processes", ""), "processes")):
            path = f"processes[{i}]"
            executor = p.get("executor", {}) if isinstance(p, dict) else {}
            if not isinstance(executor, dict):
                raise InvalidConfig(f"{path}.executor", "expected an object")
            processes.append(ProcessConfig(
                name=_str(_require(p, "name", path), f"{path}.name"),
                host=_str(_require(p, "host", path), f"{path}.host"),
                pid=_int(_require(p, "pid", path), f"{path}.pid", 1),
                executor=executor.get("kind", "single"),
                threads=_int(executor.get("threads", 1), f"{path}.executor.threads", 1),
            ))

        nodes = []
        for i, n in enumerate(_list(_require(d, "nodes", ""), "nodes")):
            path = f"nodes[{i}]"
            timers = tuple(
                TimerConfig(
                    period_ns=_int(_require(t, "period_ns", f"{path}.timers[{j}]"), f"{path}.timers[{j}].period_ns", 1),
                    phase_ns=_int(t.get("phase_ns", 0), f"{path}.timers[{j}].phase_ns", 0),
                    behavior=Behavior.from_dict(t.get("behavior"), f"{path}.timers[{j}].behavior"),
                )
                for j, t in enumerate(_list(n.get("timers", []) if isinstance(n, dict) else [], f"{path}.timers"))
            )
            subs = tuple(
                SubscriptionConfig(
                    topic=_str(_require(s, "topic", f"{path}.subscriptions[{j}]"), f"{path}.subscriptions[{j}].topic"),
                    behavior=Behavior.from_dict(s.get("behavior"), f"{path}.subscriptions[{j}].behavior"),
                )
                for j, s in enumerate(_list(n.get("subscriptions", []) if isinstance(n, dict) else [],
                                            f"{path}.subscriptions"))
            )
            publishers = tuple(
                _str(t, f"{path}.publishers[{j}]")
                for j, t in enumerate(_list(n.get("publishers", []) if isinstance(n, dict) else [], f"{path}.publishers"))
            )
            nodes.append(NodeConfig(
                name=_str(_require(n, "name", path), f"{path}.name"),
                process=_str(_require(n, "process", path), f"{path}.process"),
                namespace=n.get("namespace", "/"),
                timers=timers,
                subscriptions=subs,
                publishers=publishers,
            ))

        annotations = []
        for i, a in enumerate(_list(d.get("annotations", []), "annotations")):
            path = f"annotations[{i}]"
            annotations.append(AnnotationConfig(
                node=_str(_require(a, "node", path), f"{path}.node"),
                link_type=_require(a, "link_type", path),
                inputs=tuple(_str(t, f"{path}.inputs[{j}]") for j, t in enumerate(_list(_require(a, "inputs", path), f"{path}.inputs"))),
                outputs=tuple(_str(t, f"{path}.outputs[{j}]") for j, t in enumerate(_list(_require(a, "outputs", path), f"{path}.outputs"))),
            ))

        net = d.get("network", {})
        if not isinstance(net, dict):
            raise InvalidConfig("network", "expected an object")
        defaults = NetworkConfig()
        network = NetworkConfig(
            local=DelayModel.from_dict(net["local"], "network.local") if "local" in net else defaults.local,
            default=DelayModel.from_dict(net["default"], "network.default") if "default" in net else defaults.default,
            links=tuple(
                (_str(_require(l, "from", f"network.links[{i}]"), f"network.links[{i}].from"),
                 _str(_require(l, "to", f"network.links[{i}]"), f"network.links[{i}].to"),
                 DelayModel.from_dict(_require(l, "delay_ns", f"network.links[{i}]"), f"network.links[{i}].delay_ns"))
                for i, l in enumerate(_list(net.get("links", []), "network.links"))
            ),
        )

        timing_d = d.get("timing", {})
        if not isinstance(timing_d, dict):
            raise InvalidConfig("timing", "expected an object")
        timing_defaults = asdict(TimingConfig())
        unknown = set(timing_d) - set(timing_defaults)
        if unknown:
            raise InvalidConfig(f"timing.{sorted(unknown)[0]}", "unknown field")
        timing = TimingConfig(**{
            k: _int(timing_d.get(k, v), f"timing.{k}", 0) for k, v in timing_defaults.items()
        })

        flow_seeds = []
        for i, s in enumerate(_list(d.get("flow_seeds", []), "flow_seeds")):
            path = f"flow_seeds[{i}]"
            kind = _require(s, "kind", path)
            if kind not in ("publication", "callback"):
                raise InvalidConfig(f"{path}.kind", "expected 'publication' or 'callback'")
            flow_seeds.append(FlowSeedConfig(
                kind=kind,
                index=_int(s.get("index", 0), f"{path}.index", 0),
                topic=s.get("topic"),
                node=s.get("node"),
                timer=bool(s.get("timer", False)),
            ))

        config = cls(
            name=d.get("name", "scenario"),
            hosts=hosts,
            processes=tuple(processes),
            nodes=tuple(nodes),
            annotations=tuple(annotations),
            network=network,
            timing=timing,
            duration_ns=_int(d.get("duration_ns", 100_000_000), "duration_ns", 0),
            seed=_int(d.get("seed", 0), "seed", 0),
            epoch_ns=_int(d.get("epoch_ns", 1_000_000_000), "epoch_ns", 0),
            flow_seeds=tuple(flow_seeds),
        )
        config.validate()
        return config

    def validate(self) -> None:
        """Cross-field checks; raises InvalidConfig."""
        host_ids = [h.host_id for h in self.hosts]
        if not host_ids:
            raise InvalidConfig("hosts", "at least one host is required")
        for i, h in enumerate(host_ids):
            if host_ids.index(h) != i:
                raise InvalidConfig(f"hosts[{i}].host_id", f"duplicate host {h!r}")
            if self.epoch_ns + self.hosts[i].clock_offset_ns - INIT_LEAD_NS < 0:
                raise InvalidConfig(f"hosts[{i}].clock_offset_ns",
                                    "offset would make local timestamps negative for this epoch_ns")

        names, pids = set(), set()
        for i, p in enumerate(self.processes):
            path = f"processes[{i}]"
            if p.name in names:
                raise InvalidConfig(f"{path}.name", f"duplicate process {p.name!r}")
            names.add(p.name)
            if p.host not in host_ids:
                raise InvalidConfig(f"{path}.host", f"unknown host {p.host!r}")
            if (p.host, p.pid) in pids:
                raise InvalidConfig(f"{path}.pid", f"pid {p.pid} used twice on host {p.host!r}")
            pids.add((p.host, p.pid))
            if p.executor not in EXECUTOR_KINDS:
                raise InvalidConfig(f"{path}.executor.kind", f"expected one of {', '.join(EXECUTOR_KINDS)}")
            if p.executor == "multi" and p.threads < 2:
                raise InvalidConfig(f"{path}.executor.threads", "multi executor needs at least 2 threads")
            if p.executor == "single" and p.threads != 1:
                raise InvalidConfig(f"{path}.executor.threads", "single executor has exactly 1 thread")

        fqns = set()
        published = set()
        for i, n in enumerate(self.nodes):
            if n.process not in names:
                raise InvalidConfig(f"nodes[{i}].process", f"unknown process {n.process!r}")
            if n.fqn in fqns:
                raise InvalidConfig(f"nodes[{i}].name", f"duplicate node {n.fqn!r}")
            fqns.add(n.fqn)
            published.update(n.publishers)
            behaviors = [(f"timers[{j}]", t.behavior) for j, t in enumerate(n.timers)]
            behaviors += [(f"subscriptions[{j}]", s.behavior) for j, s in enumerate(n.subscriptions)]
            for where, behavior in behaviors:
                for k, topic in enumerate(behavior.publish):
                    if topic not in n.publishers:
                        raise InvalidConfig(f"nodes[{i}].{where}.behavior.publish[{k}]",
                                            f"node has no publisher on {topic!r}")

        for i, n in enumerate(self.nodes):
            for j, s in enumerate(n.subscriptions):
                if s.topic not in published:
                    logger.warning(f"nodes[{i}].subscriptions[{j}]: nobody publishes {s.topic}")

        for i, a in enumerate(self.annotations):
            path = f"annotations[{i}]"
            node = next((n for n in self.nodes if n.name == a.node or n.fqn == a.node), None)
            if node is None:
                raise InvalidConfig(f"{path}.node", f"unknown node {a.node!r}")
            if a.link_type not in LINK_TYPES:
                raise InvalidConfig(f"{path}.link_type", f"expected one of {', '.join(LINK_TYPES)}")
            if not a.inputs or not a.outputs:
                raise InvalidConfig(path, "inputs and outputs must be non-empty")
            sub_topics = {s.topic for s in node.subscriptions}
            for j, t in enumerate(a.inputs):
                if t not in sub_topics:
                    raise InvalidConfig(f"{path}.inputs[{j}]", f"node {a.node!r} does not subscribe to {t!r}")
            for j, t in enumerate(a.outputs):
                if t not in node.publishers:
                    raise InvalidConfig(f"{path}.outputs[{j}]", f"node {a.node!r} does not publish {t!r}")

        for i, s in enumerate(self.flow_seeds):
            if s.kind == "publication" and not s.topic:
                raise InvalidConfig(f"flow_seeds[{i}].topic", "publication seed needs a topic")
            if s.kind == "callback" and (not s.node or (not s.timer and not s.topic)):
                raise InvalidConfig(f"flow_seeds[{i}]", "callback seed needs a node and a topic or timer=true")

    def node(self, name: str) -> NodeConfig:
        return next(n for n in self.nodes if n.name == name or n.fqn == name)

    # -------------------------------------------------------------------------
    # Serialization
    # -------------------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario_version": SCENARIO_VERSION,
            "name": self.name,
            "hosts": [{"host_id": h.host_id, "clock_offset_ns": h.clock_offset_ns} for h in self.hosts],
            "processes": [
                {"name": p.name, "host": p.host, "pid": p.pid,
                 "executor": {"kind": p.executor, "threads": p.threads}}
                for p in self.processes
            ],
            "nodes": [
                {
                    "name": n.name,
                    "namespace": n.namespace,
                    "process": n.process,
                    "timers": [{"period_ns": t.period_ns, "phase_ns": t.phase_ns, "behavior": t.behavior.to_dict()}
                               for t in n.timers],
                    "subscriptions": [{"topic": s.topic, "behavior": s.behavior.to_dict()} for s in n.subscriptions],
                    "publishers": list(n.publishers),
                }
                for n in self.nodes
            ],
            "annotations": [
                {"node": a.node, "link_type": a.link_type, "inputs": list(a.inputs), "outputs": list(a.outputs)}
                for a in self.annotations
            ],
            "network": {
                "local": self.network.local.to_dict(),
                "default": self.network.default.to_dict(),
                "links": [{"from": a, "to": b, "delay_ns": m.to_dict()} for a, b, m in self.network.links],
            },
            "timing": asdict(self.timing),
            "duration_ns": self.duration_ns,
            "seed": self.seed,
            "epoch_ns": self.epoch_ns,
            "flow_seeds": [
                {k: v for k, v in asdict(s).items() if v not in (None, False)} | {"index": s.index}
                for s in self.flow_seeds
            ],
        }


def load_scenario(name_or_path: Union[str, Path]) -> ScenarioConfig:
    """Resolve a builtin scenario name or read a scenario JSON file."""
    from .builtin import builtin_scenarios

    scenarios = builtin_scenarios()
    if str(name_or_path) in scenarios:
        return scenarios[str(name_or_path)]
    path = Path(name_or_path)
    if not path.exists():
        raise InvalidConfig("scenario", f"{name_or_path!r} is neither a builtin scenario nor a file "
                                        f"(builtins: {', '.join(scenarios)})")
    return ScenarioConfig.from_dict(read_document(path))
