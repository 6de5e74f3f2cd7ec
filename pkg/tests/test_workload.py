"""Request stream generation and stream file round-trips.

The Poisson arrival process is checked against its analytic count
statistics (a 3 sigma band around rate * duration) rather than against
frozen samples, so the check survives RNG implementation details while
still catching a wrong mean or a misplaced unit conversion.
"""

import dataclasses
import json
import math

import pytest

from slicesim.catalog import builtin_catalog
from slicesim.errors import ValidationError
from slicesim.workload import (AutonomousScenario, CloudScenario, CloudTenant,
                               EventType, Request, autonomous_default,
                               cloud_default, dump_scenario, gen_autonomous,
                               gen_cloud, generate, load_scenario,
                               read_stream, scenario_fingerprint,
                               write_stream)

CATALOG = builtin_catalog()
CLOCK = 1_000_000


def one_tenant(app_id="camera_pipeline", rate_hz=200.0, duration_s=2.0):
    return CloudScenario(tenants=(CloudTenant("t0", app_id, rate_hz),),
                         duration_s=duration_s)


def arrivals_by_tenant(requests):
    out: dict = {}
    for r in requests:
        out.setdefault(r.tenant_id, []).append(r.arrival)
    return out


class TestCloudGeneration:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_poisson_count_within_three_sigma(self, seed):
        scenario = one_tenant(rate_hz=200.0, duration_s=2.0)
        requests = gen_cloud(scenario, CATALOG, CLOCK, seed)
        expected = 200.0 * 2.0
        sigma = math.sqrt(expected)
        assert expected - 3 * sigma <= len(requests) <= expected + 3 * sigma

    def test_mean_gap_matches_rate(self):
        requests = gen_cloud(one_tenant(), CATALOG, CLOCK, seed=0)
        gaps = [b.arrival - a.arrival
                for a, b in zip(requests, requests[1:])]
        mean = sum(gaps) / len(gaps)
        assert 4000 <= mean <= 6000  # 1e6 / 200 = 5000 cycles nominal

    def test_arrivals_fit_duration_and_sort(self):
        requests = gen_cloud(one_tenant(), CATALOG, CLOCK, seed=0)
        assert all(0 <= r.arrival < 2 * CLOCK for r in requests)
        assert all(a.arrival <= b.arrival
                   for a, b in zip(requests, requests[1:]))
        assert [r.request_id for r in requests] == list(range(len(requests)))

    def test_residual_network_expands_to_chain(self):
        scenario = one_tenant(app_id="resnet18", rate_hz=50.0,
                              duration_s=1.0)
        requests = gen_cloud(scenario, CATALOG, CLOCK, seed=0)
        chain = requests[:4]
        assert [r.task_id for r in chain] == [
            "conv2_x", "conv3_x", "conv4_x", "conv5_x"]
        assert len({r.arrival for r in chain}) == 1
        assert chain[0].depends_on == ()
        for prev, r in zip(chain, chain[1:]):
            assert r.depends_on == (prev.request_id,)
        assert chain[0].work == 462_422_016
        assert chain[1].work == 411_041_792

    def test_same_seed_reproduces_stream(self):
        a = gen_cloud(cloud_default(), CATALOG, CLOCK, seed=7)
        b = gen_cloud(cloud_default(), CATALOG, CLOCK, seed=7)
        assert a == b

    def test_tenant_seed_perturbs_only_that_tenant(self):
        base = cloud_default()
        reseeded = CloudScenario(
            tenants=tuple(
                dataclasses.replace(t, seed=99) if i == 1 else t
                for i, t in enumerate(base.tenants)),
            duration_s=base.duration_s)
        before = arrivals_by_tenant(gen_cloud(base, CATALOG, CLOCK, seed=0))
        after = arrivals_by_tenant(gen_cloud(reseeded, CATALOG, CLOCK,
                                             seed=0))
        changed = base.tenants[1].tenant_id
        assert before[changed] != after[changed]
        for tenant_id in before:
            if tenant_id != changed:
                assert before[tenant_id] == after[tenant_id]

    def test_identical_tenants_draw_distinct_streams(self):
        scenario = CloudScenario(tenants=(
            CloudTenant("t0", "harris", 100.0),
            CloudTenant("t1", "harris", 100.0),
        ), duration_s=1.0)
        arrivals = arrivals_by_tenant(
            gen_cloud(scenario, CATALOG, CLOCK, seed=0))
        assert arrivals["t0"] != arrivals["t1"]

    def test_unknown_app_rejected_before_generation(self):
        with pytest.raises(ValidationError, match="no application"):
            gen_cloud(one_tenant(app_id="bert"), CATALOG, CLOCK, seed=0)


class TestAutonomousGeneration:
    FRAME_CLOCK = 500_000_000

    def test_one_request_per_frame(self):
        scenario = AutonomousScenario(duration_frames=300, events=())
        requests = gen_autonomous(scenario, CATALOG, self.FRAME_CLOCK, 0)
        assert len(requests) == 300
        assert {r.task_id for r in requests} == {"camera_pipeline"}
        assert [r.frame for r in requests] == list(range(300))

    def test_frame_boundaries_round_to_cycles(self):
        scenario = AutonomousScenario(duration_frames=4, events=())
        assert scenario.frame_start(1, self.FRAME_CLOCK) == 16_666_667
        requests = gen_autonomous(scenario, CATALOG, self.FRAME_CLOCK, 0)
        assert [r.arrival for r in requests] == [
            0, 16_666_667, 33_333_333, 50_000_000]

    def test_event_occurrences(self):
        scenario = autonomous_default()
        requests = gen_autonomous(scenario, CATALOG, self.FRAME_CLOCK, 0)
        detections = [r for r in requests if r.tenant_id == "detect"]
        assert detections, "default scenario should fire events"
        frames = sorted({r.frame for r in detections})
        # Triggered by frame f, arrives at the f+1 boundary.
        for r in detections:
            assert r.arrival == scenario.frame_start(r.frame,
                                                     self.FRAME_CLOCK)
            assert r.frame < scenario.duration_frames
        gaps = [b - a for a, b in zip(frames, frames[1:])]
        assert gaps and all(6 <= g <= 12 for g in gaps)

    def test_event_dispatches_independent_chains(self):
        requests = gen_autonomous(autonomous_default(), CATALOG,
                                  self.FRAME_CLOCK, 0)
        by_frame: dict = {}
        for r in requests:
            if r.tenant_id == "detect":
                by_frame.setdefault(r.frame, []).append(r)
        for batch in by_frame.values():
            assert len(batch) == 6  # two detector chains of three stages
            roots = [r for r in batch if not r.depends_on]
            assert len(roots) == 2
            for r in batch:
                for dep in r.depends_on:
                    assert requests[dep] in batch

    def test_same_seed_reproduces_stream(self):
        a = gen_autonomous(autonomous_default(), CATALOG, self.FRAME_CLOCK, 3)
        b = gen_autonomous(autonomous_default(), CATALOG, self.FRAME_CLOCK, 3)
        assert a == b

    def test_event_seed_override(self):
        base = autonomous_default()
        pinned = dataclasses.replace(
            base, events=(dataclasses.replace(base.events[0], seed=5),))
        with_global_0 = gen_autonomous(pinned, CATALOG, self.FRAME_CLOCK, 0)
        with_global_9 = gen_autonomous(pinned, CATALOG, self.FRAME_CLOCK, 9)
        assert with_global_0 == with_global_9


class TestDispatcher:
    def test_routes_by_type(self):
        assert generate(one_tenant(), CATALOG, CLOCK, 0) == gen_cloud(
            one_tenant(), CATALOG, CLOCK, 0)

    def test_rejects_unknown_scenario(self):
        with pytest.raises(ValidationError, match="unknown scenario"):
            generate(object(), CATALOG, CLOCK, 0)


class TestStreamFiles:
    def stream(self):
        return gen_cloud(cloud_default(), CATALOG, CLOCK, seed=0)

    def test_round_trip(self, tmp_path):
        path = tmp_path / "stream.jsonl"
        original = self.stream()
        write_stream(original, str(path))
        assert read_stream(str(path), CATALOG) == original

    def test_writes_are_deterministic(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_stream(self.stream(), str(a))
        write_stream(self.stream(), str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_corrupt_line_names_the_line(self, tmp_path):
        path = tmp_path / "stream.jsonl"
        write_stream(self.stream()[:3], str(path))
        lines = path.read_text().splitlines()
        lines[1] = lines[1][:-10]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValidationError, match=r":2: not valid JSON"):
            read_stream(str(path), CATALOG)

    def test_missing_fields_rejected(self, tmp_path):
        path = tmp_path / "stream.jsonl"
        row = {"request_id": 0, "app_id": "harris"}
        path.write_text(json.dumps(row) + "\n")
        with pytest.raises(ValidationError, match="missing fields"):
            read_stream(str(path), CATALOG)

    def test_barrier_tasks_cannot_be_requested(self, tmp_path):
        path = tmp_path / "stream.jsonl"
        row = dict(request_id=0, tenant_id="x", app_id="resnet18",
                   task_id="conv1_x", arrival=0, depends_on=[], work=1,
                   frame=None)
        path.write_text(json.dumps(row) + "\n")
        with pytest.raises(ValidationError, match="barrier"):
            read_stream(str(path), CATALOG)

    def test_ids_must_be_dense_from_zero(self, tmp_path):
        path = tmp_path / "stream.jsonl"
        rows = [dict(request_id=i, tenant_id="x", app_id="harris",
                     task_id="harris", arrival=0, depends_on=[],
                     work=1, frame=None) for i in (0, 2)]
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        with pytest.raises(ValidationError, match="dense"):
            read_stream(str(path), CATALOG)

    def test_dangling_dependency_rejected(self, tmp_path):
        path = tmp_path / "stream.jsonl"
        row = dict(request_id=0, tenant_id="x", app_id="harris",
                   task_id="harris", arrival=0, depends_on=[4], work=1,
                   frame=None)
        path.write_text(json.dumps(row) + "\n")
        with pytest.raises(ValidationError, match="unknown request"):
            read_stream(str(path), CATALOG)

    def test_unknown_task_rejected(self, tmp_path):
        path = tmp_path / "stream.jsonl"
        row = dict(request_id=0, tenant_id="x", app_id="harris",
                   task_id="sobel", arrival=0, depends_on=[], work=1,
                   frame=None)
        path.write_text(json.dumps(row) + "\n")
        with pytest.raises(ValidationError, match="no task"):
            read_stream(str(path), CATALOG)

    def test_blank_lines_are_skipped(self, tmp_path):
        path = tmp_path / "stream.jsonl"
        original = self.stream()[:2]
        write_stream(original, str(path))
        path.write_text(path.read_text().replace("\n", "\n\n", 1))
        assert read_stream(str(path), CATALOG) == original


class TestScenarioFiles:
    def test_builtin_names(self):
        assert load_scenario("cloud-default") == cloud_default()
        assert load_scenario("autonomous-default") == autonomous_default()

    @pytest.mark.parametrize("scenario", [cloud_default(),
                                          autonomous_default()])
    def test_dump_load_round_trip(self, tmp_path, scenario):
        path = tmp_path / "scenario.yaml"
        path.write_text(dump_scenario(scenario))
        assert load_scenario(str(path)) == scenario

    def test_fingerprint_is_stable_and_distinct(self):
        a = scenario_fingerprint(cloud_default())
        assert a == scenario_fingerprint(cloud_default())
        assert len(a) == 16
        assert a != scenario_fingerprint(autonomous_default())

    def test_fingerprint_sees_rate_changes(self):
        base = cloud_default()
        tweaked = CloudScenario(
            tenants=(dataclasses.replace(base.tenants[0], rate_hz=19.0),)
            + base.tenants[1:],
            duration_s=base.duration_s)
        assert scenario_fingerprint(base) != scenario_fingerprint(tweaked)

    def test_missing_file(self):
        with pytest.raises(ValidationError, match="cannot read"):
            load_scenario("/nonexistent/scenario.yaml")

    def test_non_mapping_file(self, tmp_path):
        path = tmp_path / "scenario.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ValidationError, match="mapping"):
            load_scenario(str(path))

    def test_unknown_kind(self, tmp_path):
        path = tmp_path / "scenario.yaml"
        path.write_text("kind: batch\n")
        with pytest.raises(ValidationError, match="cloud"):
            load_scenario(str(path))

    def test_missing_field_is_named(self, tmp_path):
        path = tmp_path / "scenario.yaml"
        path.write_text(
            "kind: cloud\ntenants:\n- tenant_id: t0\n  app_id: harris\n")
        with pytest.raises(ValidationError, match="missing field"):
            load_scenario(str(path))


class TestValidation:
    def test_nonpositive_rate(self):
        with pytest.raises(ValidationError, match="non-positive rate"):
            CloudTenant("t0", "harris", 0.0)

    def test_no_tenants(self):
        with pytest.raises(ValidationError, match="no tenants"):
            CloudScenario(tenants=())

    def test_duplicate_tenants(self):
        with pytest.raises(ValidationError, match="duplicate tenant"):
            CloudScenario(tenants=(CloudTenant("t0", "harris", 1.0),
                                   CloudTenant("t0", "harris", 1.0)))

    def test_nonpositive_duration(self):
        with pytest.raises(ValidationError, match="duration"):
            CloudScenario(tenants=(CloudTenant("t0", "harris", 1.0),),
                          duration_s=0.0)

    def test_event_without_apps(self):
        with pytest.raises(ValidationError, match="no apps"):
            EventType("detect", ())

    def test_event_bad_gap_range(self):
        with pytest.raises(ValidationError, match="gap range"):
            EventType("detect", ("mobilenet",), min_gap_frames=0)
        with pytest.raises(ValidationError, match="gap range"):
            EventType("detect", ("mobilenet",), min_gap_frames=5,
                      max_gap_frames=4)

    def test_zero_frames(self):
        with pytest.raises(ValidationError, match="at least one frame"):
            AutonomousScenario(duration_frames=0)

    def test_duplicate_event_names(self):
        event = EventType("detect", ("mobilenet",))
        with pytest.raises(ValidationError, match="duplicate event"):
            AutonomousScenario(events=(event, event))

    def test_nonpositive_frame_rate(self):
        with pytest.raises(ValidationError, match="frame rate"):
            AutonomousScenario(frame_rate_hz=0.0)

    def test_requests_compare_by_value(self):
        a = Request(0, "t", "harris", "harris", 5)
        b = Request(0, "t", "harris", "harris", 5)
        assert a == b and a is not b
