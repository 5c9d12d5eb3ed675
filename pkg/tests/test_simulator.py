import pytest

from msgflow.analysis.ir import DiagnosticCode
from msgflow.analysis.ir_builder import build_ir
from msgflow.analysis.timeline import build_timeline, concurrent_execution
from msgflow.core.errors import InvalidConfig
from msgflow.core.utils import write_document
from msgflow.sim import ScenarioConfig, Simulation, builtin_names, builtin_scenarios, load_scenario, simulate
from msgflow.trace.events import parse_event, serialize_event

MS = 1_000_000


def _serialized(bundle):
    return [serialize_event(e) for e in bundle.iter_events()]


def test_builtin_names_are_loadable():
    assert set(builtin_names()) == set(builtin_scenarios())
    assert load_scenario("pipeline_direct").name == "pipeline_direct"


def test_same_seed_same_traces():
    config = load_scenario("reference_mini").with_overrides(duration_ns=120 * MS)
    a, truth_a = simulate(config)
    b, truth_b = simulate(config)
    assert _serialized(a) == _serialized(b)
    assert truth_a.to_dict() == truth_b.to_dict()


def test_seed_changes_sampled_durations():
    config = load_scenario("reference_mini").with_overrides(duration_ns=120 * MS)
    a, _ = simulate(config.with_seed(1))
    b, _ = simulate(config.with_seed(2))
    assert _serialized(a) != _serialized(b)


def test_emitted_records_pass_the_parser(scenario_run):
    bundle, _, _ = scenario_run("reference_mini")
    for event in bundle.iter_events():
        assert parse_event(serialize_event(event)) == event


def test_zero_duration_is_empty():
    bundle, truth = simulate(load_scenario("transport_distributed").with_overrides(duration_ns=0))
    assert bundle.event_count == 0
    assert bundle.hosts == ["A", "B"]
    assert truth.transport == []
    assert truth.flows == {}


def test_local_clocks_carry_host_offsets(scenario_run):
    bundle, truth, _ = scenario_run("transport_distributed")
    first = {t.host: t.events[0].timestamp for t in bundle.traces}
    assert first["B"] - first["A"] == 1 * MS
    assert truth.true_offsets == {"A": 0, "B": 1 * MS}


def test_recorded_instances_match_the_folded_trace(scenario_run):
    bundle, _, doc = scenario_run("reference_mini")
    _, record = Simulation(load_scenario("reference_mini")).run()
    db = build_ir(bundle)
    assert set(record.callbacks) == {c.uid for c in db.callback_instances}
    assert set(record.publications) == {p.uid for p in db.publication_instances}
    assert db.stats["runtime_events"] == db.stats["folded_events"] + db.stats["diagnostic_events"]


def test_clean_scenarios_fold_without_diagnostics(scenario_run):
    for name in ("pipeline_direct", "transport_distributed", "partial_sync_2to1"):
        _, _, doc = scenario_run(name)
        assert list(doc.ir.diagnostics) == []


def test_collision_scenario_reports_collisions(scenario_run):
    _, truth, doc = scenario_run("collision")
    assert truth.collisions
    collided = [d for d in doc.links.diagnostics if d.code is DiagnosticCode.TIMESTAMP_COLLISION]
    assert len(collided) == len(truth.collisions)


@pytest.mark.parametrize("seed", range(5))
def test_every_camera_frame_collides(seed):
    _, truth = simulate(load_scenario("collision").with_overrides(seed=seed))
    image = [c for c in truth.collisions if c["topic"] == "/image"]
    assert [c["source_timestamp"] for c in image] == [1_000_000_000 + k * 10 * MS for k in range(5)]
    assert all(len(c["publications"]) == 2 for c in image)


def test_quantized_source_timestamps_round_trip(tmp_path):
    config = load_scenario("collision")
    behavior = config.nodes[0].timers[0].behavior
    assert behavior.source_timestamp_quantum_ns == 10 * MS
    assert behavior.source_timestamp(1_012_345_678) == 1_010_000_000
    path = tmp_path / "scenario.json"
    write_document(path, config.to_dict())
    assert load_scenario(path) == config


def test_multithreaded_executor_runs_callbacks_concurrently(scenario_run):
    _, _, single = scenario_run("multithread_compare_single")
    _, _, multi = scenario_run("multithread_compare_multi")
    assert concurrent_execution(build_timeline(single.ir)) == []
    overlaps = concurrent_execution(build_timeline(multi.ir))
    assert overlaps
    assert {len(tids) for _, _, tids in overlaps} == {2}


def test_seed_resolution_in_truth(scenario_run):
    _, truth, _ = scenario_run("pipeline_direct")
    (seed,) = truth.flows
    assert seed.startswith("callback:h0:100:")
    assert seed.endswith("#3")


def test_scenario_file(tmp_path):
    config = load_scenario("partial_sync_2to1")
    path = tmp_path / "scenario.json"
    write_document(path, config.to_dict())
    assert load_scenario(path) == config


def test_unknown_scenario():
    with pytest.raises(InvalidConfig, match="neither a builtin"):
        load_scenario("no_such_scenario")


@pytest.mark.parametrize("mutate, field_path", [
    (lambda d: d["hosts"].append(dict(d["hosts"][0])), "hosts[1].host_id"),
    (lambda d: d["processes"][0].update(host="Z"), "processes[0].host"),
    (lambda d: d["nodes"][0]["timers"][0].update(period_ns=0), "nodes[0].timers[0].period_ns"),
    (lambda d: d["nodes"][0]["timers"][0]["behavior"].update(publish=["/nope"]),
     "nodes[0].timers[0].behavior.publish[0]"),
    (lambda d: d["annotations"][0].update(link_type="exact"), "annotations[0].link_type"),
    (lambda d: d["annotations"][0].update(inputs=["/zzz"]), "annotations[0].inputs[0]"),
    (lambda d: d["processes"][0]["executor"].update(kind="multi", threads=1), "processes[0].executor.threads"),
    (lambda d: d.update(timing={"warp_ns": 1}), "timing.warp_ns"),
])
def test_invalid_scenarios_name_the_field(mutate, field_path):
    d = load_scenario("periodic_async_2to1").to_dict()
    mutate(d)
    with pytest.raises(InvalidConfig) as info:
        ScenarioConfig.from_dict(d)
    assert info.value.field_path == field_path
