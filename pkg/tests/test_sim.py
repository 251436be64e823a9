import dataclasses
import json
from pathlib import Path

import numpy as np
import pytest

from pvoplan import ConfigError, ObstacleGeometry, SampleSet
from pvoplan.sim import ScenarioConfig, consistency_report, estimate_eta, run_scenario
from pvoplan.sim.cli import main as cli_main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def load(name) -> ScenarioConfig:
    return ScenarioConfig.from_file(SCENARIOS / f"{name}.json")


def small_one_obstacle() -> ScenarioConfig:
    cfg = load("one_obstacle")
    return dataclasses.replace(cfg, horizon_steps=8)


class TestScenarioConfig:
    def test_loads_shipped_scenarios(self):
        for path in SCENARIOS.glob("*.json"):
            cfg = ScenarioConfig.from_file(path)
            assert cfg.dt > 0 and cfg.horizon_steps >= 1

    def test_missing_field_names_path(self):
        data = json.loads((SCENARIOS / "one_obstacle.json").read_text())
        del data["robot"]["radius"]
        with pytest.raises(ConfigError, match=r"robot\.radius"):
            ScenarioConfig.from_dict(data)

    def test_bad_noise_weight_names_component(self):
        data = json.loads((SCENARIOS / "one_obstacle.json").read_text())
        data["obstacles"][0]["state_noise"]["dims"][0][0]["weight"] = -0.5
        with pytest.raises(ConfigError, match=r"obstacles\[0\]\.state_noise"):
            ScenarioConfig.from_dict(data)

    def test_sample_count_invariants(self):
        data = json.loads((SCENARIOS / "one_obstacle.json").read_text())
        data["samples"]["n_r"] = data["samples"]["n"] + 1
        with pytest.raises(ConfigError, match="n_r"):
            ScenarioConfig.from_dict(data)

    def test_json_syntax_error_reports_line(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{\n  "dt": 0.5,\n  oops\n}\n')
        with pytest.raises(ConfigError, match="bad.json:3"):
            ScenarioConfig.from_file(bad)

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            ScenarioConfig.from_file("/nonexistent/path.json")

    def test_obstacle_waypoint_interpolation(self):
        cfg = load("one_obstacle")
        ob = cfg.obstacles[0]
        s0 = ob.mean_state(0.0)
        s1 = ob.mean_state(1.0)
        np.testing.assert_allclose(s0[[0, 2]], ob.waypoints[0])
        speed = np.hypot(s1[1], s1[3])
        assert speed == pytest.approx(ob.speed)

    def test_obstacle_rests_at_final_waypoint(self):
        cfg = load("one_obstacle")
        ob = cfg.obstacles[0]
        s = ob.mean_state(1e6)
        np.testing.assert_allclose(s[[0, 2]], ob.waypoints[-1])
        assert s[1] == 0.0 and s[3] == 0.0


GEOM = ObstacleGeometry(0.3, 0.4)


class TestEstimateEta:
    def test_all_pairs_safe(self):
        rng = np.random.default_rng(0)
        w = SampleSet.uniform(
            np.hstack(
                [
                    np.array([0, 1.0, 0, 0]) + rng.normal(0, 0.02, (20, 4)),
                    rng.normal(0, 0.02, (20, 2)),
                ]
            )
        )
        obs = SampleSet.uniform(
            np.array([3.0, 0.0, 5.0, 0.5]) + rng.normal(0, 0.02, (20, 4))
        )
        assert estimate_eta(w, obs, [0, 0], GEOM, 0.5) == pytest.approx(1.0)

    def test_far_receding_lateral_obstacle(self):
        rng = np.random.default_rng(1)
        w = SampleSet.uniform(
            np.hstack(
                [
                    np.array([0, 1.0, 0, 0]) + rng.normal(0, 0.05, (30, 4)),
                    rng.normal(0, 0.03, (30, 2)),
                ]
            )
        )
        obs = SampleSet.uniform(
            np.array([20.0, 1.0, 18.0, 0.8]) + rng.normal(0, 0.05, (30, 4))
        )
        assert estimate_eta(w, obs, [0, 0], GEOM, 0.5) == pytest.approx(1.0)

    def test_hand_built_two_by_two(self):
        # robot samples: one on a collision course, one clear; crafted so
        # exactly one of the four pairs violates f <= 0
        w = SampleSet.uniform(
            [
                [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],  # dead-on course
                [0.0, 1.0, 3.0, 0.0, 0.0, 0.0],  # offset 3 m above
            ]
        )
        obs = SampleSet.uniform(
            [
                [5.0, 0.0, 0.0, 0.0],  # in the robot's lane
                [5.0, 0.0, 9.0, 0.0],  # far above both
            ]
        )
        eta = estimate_eta(w, obs, [0, 0], GEOM, 0.5)
        assert eta == pytest.approx(0.75)


class TestRunScenario:
    def test_obstacle_free_time_to_goal(self):
        cfg = load("obstacle_free")
        log = run_scenario(cfg)
        s = log.summary()
        expected = 8.4 / cfg.robot.desired_speed
        assert s["reached_goal"]
        assert abs(s["time_to_goal"] - expected) <= cfg.dt + 1e-9
        assert not s["collision"]

    def test_reproducibility_byte_identical_csv(self, tmp_path):
        cfg = small_one_obstacle()
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        run_scenario(cfg).to_csv(a, include_timing=False)
        run_scenario(cfg).to_csv(b, include_timing=False)
        assert a.read_bytes() == b.read_bytes()

    def test_summary_recomputable_from_records(self):
        log = run_scenario(small_one_obstacle())
        s = log.summary()
        assert s["steps"] == len(log.records)
        assert s["cumulative_tracking_cost"] == sum(
            r.tracking_cost for r in log.records
        )
        assert s["cumulative_control_cost"] == sum(r.control_cost for r in log.records)
        assert s["cumulative_control_l2"] == sum(
            np.sqrt(r.control_cost) for r in log.records
        )
        assert s["min_eta"] == min(r.eta for r in log.records)

    def test_collision_flag_soundness(self):
        # rho = 0 ignores the obstacle entirely: the robot plows head-on and
        # the flag must match the recorded true clearances
        data = json.loads((SCENARIOS / "one_obstacle.json").read_text())
        data["planner"]["rho"] = 0.0
        data["horizon_steps"] = 24
        cfg = ScenarioConfig.from_dict(data, "plow")
        log = run_scenario(cfg)
        clearances = [r.min_clearance for r in log.records]
        assert log.collision == bool(min(clearances) < 0.0)
        assert log.collision

    def test_collision_flag_negative_case(self):
        log = run_scenario(load("obstacle_free"))
        assert not log.collision
        log = run_scenario(small_one_obstacle())
        clearances = [r.min_clearance for r in log.records]
        assert log.collision == bool(min(clearances) < 0.0)

    def test_failure_recorded_not_raised(self):
        # boxed-in deterministic planner: terminal failure record, no crash
        data = json.loads((SCENARIOS / "one_obstacle.json").read_text())
        data["planner"]["method"] = "deterministic"
        data["planner"]["grid"] = {"ax": [0.0, 0.0], "ay": [0.0, 0.0], "nx": 1, "ny": 1}
        data["horizon_steps"] = 24
        cfg = ScenarioConfig.from_dict(data, "pinned")
        log = run_scenario(cfg)
        assert log.status == "no_feasible_control"
        assert log.records[-1].status == "no_feasible_control"
        assert np.isnan(log.records[-1].ux)

    def test_methods_all_run(self):
        cfg = small_one_obstacle()
        for method in ("rkhs", "gmm_kld", "ev_gauss", "linearized_gaussian", "deterministic"):
            log = run_scenario(cfg.with_updates(method=method))
            assert log.records, method

    def test_csv_column_layout(self, tmp_path):
        log = run_scenario(small_one_obstacle())
        path = tmp_path / "run.csv"
        log.to_csv(path)
        header = path.read_text().splitlines()[0].split(",")
        assert header[0] == "step"
        assert header[-1] == "decision_time_s"
        assert "eta" in header and "dist0" in header


class TestConsistencyReport:
    def test_row_count_and_zero_at_full_subsample(self):
        cfg = load("one_obstacle")
        rows = consistency_report(cfg, [5, 50], [1, 2], seeds=[0, 1])
        assert len(rows) == 4
        full = [r for r in rows if r["n"] == 50]
        assert all(r["mean_error"] == pytest.approx(0.0, abs=1e-12) for r in full)

    def test_n_above_l_rejected(self):
        cfg = load("one_obstacle")
        with pytest.raises(ValueError):
            consistency_report(cfg, [51], [1], seeds=[0])


class TestCli:
    def test_run_writes_outputs_and_exits_zero(self, tmp_path):
        data = json.loads((SCENARIOS / "one_obstacle.json").read_text())
        data["horizon_steps"] = 4
        scen = tmp_path / "short.json"
        scen.write_text(json.dumps(data))
        code = cli_main(
            ["run", "--scenario", str(scen), "--out", str(tmp_path), "--seed", "3"]
        )
        assert code == 0
        csvs = list(tmp_path.glob("*.csv"))
        summaries = list(tmp_path.glob("*.summary.json"))
        assert len(csvs) == 1 and len(summaries) == 1
        summary = json.loads(summaries[0].read_text())
        assert summary["seed"] == 3

    def test_config_error_exit_code(self, tmp_path):
        scen = tmp_path / "broken.json"
        scen.write_text("{}")
        code = cli_main(["run", "--scenario", str(scen), "--out", str(tmp_path)])
        assert code == 2

    def test_infeasible_exit_code(self, tmp_path):
        data = json.loads((SCENARIOS / "one_obstacle.json").read_text())
        data["planner"]["method"] = "deterministic"
        data["planner"]["grid"] = {"ax": [0.0, 0.0], "ay": [0.0, 0.0], "nx": 1, "ny": 1}
        data["horizon_steps"] = 24
        scen = tmp_path / "pinned.json"
        scen.write_text(json.dumps(data))
        code = cli_main(["run", "--scenario", str(scen), "--out", str(tmp_path)])
        assert code == 3

    def test_flag_overrides_land_in_summary(self, tmp_path):
        data = json.loads((SCENARIOS / "one_obstacle.json").read_text())
        data["horizon_steps"] = 3
        scen = tmp_path / "short.json"
        scen.write_text(json.dumps(data))
        code = cli_main(
            [
                "run",
                "--scenario",
                str(scen),
                "--out",
                str(tmp_path),
                "--method",
                "ev_gauss",
                "--eta",
                "0.6",
                "--rho",
                "2.0",
            ]
        )
        assert code == 0
        summary = json.loads(next(tmp_path.glob("*.summary.json")).read_text())
        assert summary["method"] == "ev_gauss"
        assert summary["eta_config"] == 0.6
        assert summary["rho"] == 2.0

    def test_consistency_verb_writes_csv(self, tmp_path):
        code = cli_main(
            [
                "consistency",
                "--scenario",
                str(SCENARIOS / "one_obstacle.json"),
                "--out",
                str(tmp_path),
                "--n-values",
                "5,10",
                "--degrees",
                "1",
                "--n-seeds",
                "2",
            ]
        )
        assert code == 0
        lines = (tmp_path / "consistency.csv").read_text().splitlines()
        assert lines[0] == "n,d,mean_error,n_seeds"
        assert len(lines) == 3
