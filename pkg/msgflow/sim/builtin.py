"""
Builtin scenarios, written in the same JSON form as scenario files.
"""

from typing import Any, Dict, List

from .scenario import ScenarioConfig

MS = 1_000_000
US = 1_000


def _node(name: str, process: str, timers: List[Dict[str, Any]] = (), subscriptions: List[Dict[str, Any]] = (),
          publishers: List[str] = (), namespace: str = "/") -> Dict[str, Any]:
    return {
        "name": name,
        "namespace": namespace,
        "process": process,
        "timers": list(timers),
        "subscriptions": list(subscriptions),
        "publishers": list(publishers),
    }


def _timer(period_ns: int, publish: List[str] = (), exec_ns: Any = 1 * MS, phase_ns: int = 0) -> Dict[str, Any]:
    return {"period_ns": period_ns, "phase_ns": phase_ns,
            "behavior": {"exec_time_ns": exec_ns, "publish": list(publish)}}


def _sub(topic: str, publish: List[str] = (), exec_ns: Any = 1 * MS) -> Dict[str, Any]:
    return {"topic": topic, "behavior": {"exec_time_ns": exec_ns, "publish": list(publish)}}


def _process(name: str, host: str, pid: int, threads: int = 1) -> Dict[str, Any]:
    return {"name": name, "host": host, "pid": pid,
            "executor": {"kind": "multi" if threads > 1 else "single", "threads": threads}}


def transport_distributed() -> Dict[str, Any]:
    return {
        "name": "transport_distributed",
        "hosts": [{"host_id": "A", "clock_offset_ns": 0}, {"host_id": "B", "clock_offset_ns": 1 * MS}],
        "processes": [_process("talker_proc", "A", 100), _process("listener_proc", "B", 200)],
        "nodes": [
            _node("talker", "talker_proc", timers=[_timer(5 * MS, ["/topic_a"], exec_ns=500 * US)],
                  subscriptions=[_sub("/ack", exec_ns=200 * US)], publishers=["/topic_a"]),
            _node("listener", "listener_proc", subscriptions=[_sub("/topic_a", ["/ack"], exec_ns=800 * US)],
                  publishers=["/ack"]),
        ],
        "network": {"local": {"constant": 50 * US}, "default": {"constant": 200 * US}},
        "duration_ns": 100 * MS,
        "flow_seeds": [{"kind": "publication", "topic": "/topic_a", "index": 2}],
    }


def pipeline_direct() -> Dict[str, Any]:
    return {
        "name": "pipeline_direct",
        "hosts": [{"host_id": "h0"}],
        "processes": [_process("source_proc", "h0", 100), _process("relay_proc", "h0", 200),
                      _process("sink_proc", "h0", 300)],
        "nodes": [
            _node("source", "source_proc", timers=[_timer(10 * MS, ["/a"])], publishers=["/a"]),
            _node("relay", "relay_proc", subscriptions=[_sub("/a", ["/b"], exec_ns=2 * MS)], publishers=["/b"]),
            _node("sink", "sink_proc", subscriptions=[_sub("/b", exec_ns=500 * US)]),
        ],
        "duration_ns": 100 * MS,
        "flow_seeds": [{"kind": "callback", "node": "source", "timer": True, "index": 3}],
    }


def periodic_async_2to1() -> Dict[str, Any]:
    return {
        "name": "periodic_async_2to1",
        "hosts": [{"host_id": "h0"}],
        "processes": [_process("sources", "h0", 100), _process("fusion_proc", "h0", 200),
                      _process("sink_proc", "h0", 300)],
        "nodes": [
            _node("src_a", "sources", timers=[_timer(10 * MS, ["/topic_a"], exec_ns=300 * US)],
                  publishers=["/topic_a"]),
            _node("src_b", "sources", timers=[_timer(24 * MS, ["/topic_b"], exec_ns=300 * US, phase_ns=1 * MS)],
                  publishers=["/topic_b"]),
            _node("fusion", "fusion_proc",
                  timers=[_timer(8 * MS, ["/topic_c"], exec_ns=1 * MS, phase_ns=2 * MS)],
                  subscriptions=[_sub("/topic_a", exec_ns=200 * US), _sub("/topic_b", exec_ns=200 * US)],
                  publishers=["/topic_c"]),
            _node("sink", "sink_proc", subscriptions=[_sub("/topic_c", exec_ns=300 * US)]),
        ],
        "annotations": [{"node": "fusion", "link_type": "periodic_async",
                         "inputs": ["/topic_a", "/topic_b"], "outputs": ["/topic_c"]}],
        "duration_ns": 100 * MS,
        "flow_seeds": [{"kind": "publication", "topic": "/topic_c", "index": 5}],
    }


def partial_sync_2to1() -> Dict[str, Any]:
    return {
        "name": "partial_sync_2to1",
        "hosts": [{"host_id": "h0"}],
        "processes": [_process("sources", "h0", 100), _process("fusion_proc", "h0", 200),
                      _process("sink_proc", "h0", 300)],
        "nodes": [
            _node("src_a", "sources", timers=[_timer(10 * MS, ["/topic_a"], exec_ns=300 * US, phase_ns=1 * MS)],
                  publishers=["/topic_a"]),
            _node("src_b", "sources", timers=[_timer(5 * MS, ["/topic_b"], exec_ns=300 * US)],
                  publishers=["/topic_b"]),
            _node("fusion", "fusion_proc",
                  subscriptions=[_sub("/topic_a", exec_ns=600 * US), _sub("/topic_b", exec_ns=600 * US)],
                  publishers=["/topic_c"]),
            _node("sink", "sink_proc", subscriptions=[_sub("/topic_c", exec_ns=300 * US)]),
        ],
        "annotations": [{"node": "fusion", "link_type": "partial_sync",
                         "inputs": ["/topic_a", "/topic_b"], "outputs": ["/topic_c"]}],
        "duration_ns": 100 * MS,
        "flow_seeds": [{"kind": "publication", "topic": "/topic_c", "index": 3}],
    }


def reference_mini() -> Dict[str, Any]:
    """Two-ECU lidar/planning graph mixing every link type."""
    return {
        "name": "reference_mini",
        "hosts": [{"host_id": "ecu1", "clock_offset_ns": 0},
                  {"host_id": "ecu2", "clock_offset_ns": 2_500 * US}],
        "processes": [
            _process("sensors", "ecu1", 1000),
            _process("vehicle", "ecu1", 2000),
            _process("perception", "ecu2", 3000),
            _process("planning", "ecu2", 4000),
        ],
        "nodes": [
            _node("front_lidar", "sensors", namespace="/sensing",
                  timers=[_timer(100 * MS, ["/front/points"], exec_ns={"uniform": [2 * MS, 4 * MS]})],
                  publishers=["/front/points"]),
            _node("rear_lidar", "sensors", namespace="/sensing",
                  timers=[_timer(100 * MS, ["/rear/points"], exec_ns={"uniform": [2 * MS, 4 * MS]},
                                 phase_ns=5 * MS)],
                  publishers=["/rear/points"]),
            _node("imu", "sensors", namespace="/sensing",
                  timers=[_timer(10 * MS, ["/imu"], exec_ns=200 * US)], publishers=["/imu"]),
            _node("vehicle_interface", "vehicle",
                  subscriptions=[_sub("/control", ["/vehicle/status"], exec_ns=500 * US)],
                  publishers=["/vehicle/status"]),
            _node("fusion", "perception", namespace="/perception",
                  subscriptions=[_sub("/front/points", exec_ns={"uniform": [3 * MS, 6 * MS]}),
                                 _sub("/rear/points", exec_ns={"uniform": [3 * MS, 6 * MS]})],
                  publishers=["/points_fused"]),
            _node("filter", "perception", namespace="/perception",
                  subscriptions=[_sub("/points_fused", ["/points_filtered"], exec_ns={"uniform": [5 * MS, 9 * MS]})],
                  publishers=["/points_filtered"]),
            _node("planner", "planning", namespace="/planning",
                  timers=[_timer(40 * MS, ["/trajectory"], exec_ns={"uniform": [4 * MS, 8 * MS]}, phase_ns=10 * MS)],
                  subscriptions=[_sub("/points_filtered", exec_ns=1 * MS), _sub("/pose", exec_ns=300 * US)],
                  publishers=["/trajectory"]),
            _node("localizer", "planning", namespace="/planning",
                  subscriptions=[_sub("/imu", ["/pose"], exec_ns=400 * US)], publishers=["/pose"]),
            _node("controller", "planning", namespace="/planning",
                  subscriptions=[_sub("/trajectory", ["/control"], exec_ns=1 * MS)], publishers=["/control"]),
        ],
        "annotations": [
            {"node": "fusion", "link_type": "partial_sync",
             "inputs": ["/front/points", "/rear/points"], "outputs": ["/points_fused"]},
            {"node": "planner", "link_type": "periodic_async",
             "inputs": ["/points_filtered", "/pose"], "outputs": ["/trajectory"]},
        ],
        "network": {"local": {"constant": 60 * US}, "default": {"constant": 300 * US}},
        "duration_ns": 400 * MS,
        "flow_seeds": [
            {"kind": "callback", "node": "front_lidar", "timer": True, "index": 0},
            {"kind": "publication", "topic": "/front/points", "index": 1},
            {"kind": "callback", "node": "vehicle_interface", "topic": "/control", "index": 3},
        ],
    }


def _multithread_compare(threads: int) -> Dict[str, Any]:
    suffix = "multi" if threads > 1 else "single"
    return {
        "name": f"multithread_compare_{suffix}",
        "hosts": [{"host_id": "h0"}],
        "processes": [_process("lidar_proc", "h0", 100), _process("perception", "h0", 200, threads),
                      _process("merger_proc", "h0", 300)],
        "nodes": [
            _node("lidar", "lidar_proc", timers=[_timer(50 * MS, ["/points"], exec_ns=1 * MS)],
                  publishers=["/points"]),
            _node("ray_filter", "perception", subscriptions=[_sub("/points", ["/points_ray"], exec_ns=8 * MS)],
                  publishers=["/points_ray"]),
            _node("voxel", "perception", subscriptions=[_sub("/points", ["/points_voxel"], exec_ns=8 * MS)],
                  publishers=["/points_voxel"]),
            _node("merger", "merger_proc",
                  subscriptions=[_sub("/points_ray", exec_ns=500 * US), _sub("/points_voxel", exec_ns=500 * US)]),
        ],
        "duration_ns": 200 * MS,
        "flow_seeds": [{"kind": "publication", "topic": "/points", "index": 1}],
    }


def tf_selfloop() -> Dict[str, Any]:
    return {
        "name": "tf_selfloop",
        "hosts": [{"host_id": "h0"}],
        "processes": [_process("tf_proc", "h0", 100), _process("consumer_proc", "h0", 200)],
        "nodes": [
            _node("tf_broadcaster", "tf_proc", timers=[_timer(20 * MS, ["/tf"], exec_ns=300 * US)],
                  subscriptions=[_sub("/tf", exec_ns=100 * US)], publishers=["/tf"]),
            _node("consumer", "consumer_proc", subscriptions=[_sub("/tf", ["/pose"], exec_ns=400 * US)],
                  publishers=["/pose"]),
            _node("pose_sink", "consumer_proc", subscriptions=[_sub("/pose", exec_ns=200 * US)]),
        ],
        "duration_ns": 100 * MS,
        "flow_seeds": [{"kind": "callback", "node": "tf_broadcaster", "timer": True, "index": 0}],
    }


def _camera(name: str, process: str, exec_ns: Any) -> Dict[str, Any]:
    timer = _timer(10 * MS, ["/image"], exec_ns=exec_ns)
    timer["behavior"]["source_timestamp_quantum_ns"] = 10 * MS
    return _node(name, process, timers=[timer], publishers=["/image"])


def collision() -> Dict[str, Any]:
    """Two cameras stamping /image with their 10 ms frame period collide on every frame."""
    return {
        "name": "collision",
        "hosts": [{"host_id": "h0"}],
        "processes": [_process("left_proc", "h0", 100), _process("right_proc", "h0", 200),
                      _process("imu_proc", "h0", 300), _process("viewer_proc", "h0", 400)],
        "nodes": [
            _camera("cam_left", "left_proc", 500 * US),
            _camera("cam_right", "right_proc", {"uniform": [300 * US, 900 * US]}),
            _node("imu", "imu_proc", timers=[_timer(7 * MS, ["/imu_c"], exec_ns=100 * US)], publishers=["/imu_c"]),
            _node("viewer", "viewer_proc",
                  subscriptions=[_sub("/image", exec_ns=300 * US), _sub("/imu_c", exec_ns=100 * US)]),
        ],
        "duration_ns": 50 * MS,
    }


_BUILDERS = {
    "transport_distributed": transport_distributed,
    "pipeline_direct": pipeline_direct,
    "periodic_async_2to1": periodic_async_2to1,
    "partial_sync_2to1": partial_sync_2to1,
    "reference_mini": reference_mini,
    "multithread_compare_single": lambda: _multithread_compare(1),
    "multithread_compare_multi": lambda: _multithread_compare(2),
    "tf_selfloop": tf_selfloop,
    "collision": collision,
}


def builtin_scenarios() -> Dict[str, ScenarioConfig]:
    """All builtin scenarios by name."""
    return {name: ScenarioConfig.from_dict(build()) for name, build in _BUILDERS.items()}


def builtin_names() -> List[str]:
    return list(_BUILDERS)
