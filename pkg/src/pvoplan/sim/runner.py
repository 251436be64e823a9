"""Closed-loop scenario execution, Monte-Carlo validation and trajectory logging.

Each step draws fresh perception/ego-motion sample sets around the true
state, rebuilds the target constraint distribution, selects a control, and
advances a separately-seeded "true" world realization that defines
collisions. All randomness is derived from the scenario seed through named
SeedSequence streams, so a run is fully reproducible; wall-clock decision
time is the only non-deterministic output column.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..desired import build_desired_multi
from ..embedding import reduced_set_weights, warmup
from ..errors import DesiredDistributionInfeasible, NoFeasibleControl
from ..planner import goal_tracking_target, select_control
from ..uncertainty import SampleSet, concat_w, sample_noise, step_matrices
from ..vo import ObstacleGeometry, cross_f_values, propagate_w_samples
from .config import GOAL_RADIUS, ScenarioConfig

_PLAN_STREAM = 0
_WORLD_STREAM = 1
_KL_STREAM = 2


def _stream_seed(base: int, stream: int, step: int, sub: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=base, spawn_key=(stream, step, sub))


def _segment_goal_distance(p0, p1, goal) -> float:
    """Min distance from the segment p0 -> p1 to the goal point."""
    p0 = np.asarray(p0, dtype=float)
    d = np.asarray(p1, dtype=float) - p0
    to_goal = np.asarray(goal, dtype=float) - p0
    dd = float(d @ d)
    t = 0.0 if dd == 0.0 else float(np.clip(to_goal @ d / dd, 0.0, 1.0))
    return float(np.linalg.norm(to_goal - t * d))


def estimate_eta(w_set: SampleSet, obs_set: SampleSet, control, geom: ObstacleGeometry, dt: float) -> float:
    """Weighted fraction of cross pairs satisfying f <= 0 at the given control."""
    u = np.asarray(control, dtype=float).ravel()
    states = propagate_w_samples(w_set.samples, u, dt)
    f = cross_f_values(states, obs_set.samples, geom.combined_sq)
    weights = np.multiply.outer(w_set.weights, obs_set.weights)
    return float(weights[f <= 0.0].sum())


@dataclass
class StepRecord:
    step: int
    time: float
    ux: float
    uy: float
    tracking_cost: float
    control_cost: float
    dist_costs: tuple
    eta: float
    mean_state: np.ndarray
    true_x: float
    true_y: float
    obs_means: tuple
    min_clearance: float
    status: str
    decision_time_s: float


@dataclass
class TrajectoryLog:
    scenario: str
    method: str
    degree: int
    rho: float
    eta_cfg: float
    seed: int
    n_obstacles: int
    dt: float
    records: list
    reached_goal: bool
    time_to_goal: float | None
    collision: bool
    status: str

    def summary(self) -> dict:
        recs = self.records
        tracking = sum(r.tracking_cost for r in recs if np.isfinite(r.tracking_cost))
        control = sum(r.control_cost for r in recs if np.isfinite(r.control_cost))
        control_l2 = sum(
            float(np.sqrt(r.control_cost)) for r in recs if np.isfinite(r.control_cost)
        )
        etas = [r.eta for r in recs if np.isfinite(r.eta)]
        times = [r.decision_time_s for r in recs if np.isfinite(r.decision_time_s)]
        return {
            "scenario": self.scenario,
            "method": self.method,
            "degree": self.degree,
            "rho": self.rho,
            "eta_config": self.eta_cfg,
            "seed": self.seed,
            "n_obstacles": self.n_obstacles,
            "status": self.status,
            "steps": len(recs),
            "reached_goal": self.reached_goal,
            "time_to_goal": self.time_to_goal,
            "cumulative_tracking_cost": tracking,
            "cumulative_control_cost": control,
            "cumulative_control_l2": control_l2,
            "total_cost": tracking + control,
            "min_eta": min(etas) if etas else float("nan"),
            "collision": self.collision,
            "mean_decision_s": float(np.mean(times)) if times else float("nan"),
            "std_decision_s": float(np.std(times)) if times else float("nan"),
        }

    def csv_header(self) -> list:
        cols = ["step", "time", "ux", "uy", "tracking_cost", "control_cost"]
        cols += [f"dist{j}" for j in range(self.n_obstacles)]
        cols += ["eta", "mean_x", "mean_vx", "mean_y", "mean_vy", "true_x", "true_y"]
        for j in range(self.n_obstacles):
            cols += [f"obs{j}_x", f"obs{j}_vx", f"obs{j}_y", f"obs{j}_vy"]
        cols += ["min_clearance", "status", "decision_time_s"]
        return cols

    def to_csv(self, path, include_timing: bool = True) -> None:
        """One row per step; ``decision_time_s`` is always the last column so
        byte-level comparisons can drop it."""
        header = self.csv_header()
        if not include_timing:
            header = header[:-1]
        lines = [",".join(header)]
        for r in self.records:
            row = [str(r.step), _fmt(r.time), _fmt(r.ux), _fmt(r.uy)]
            row += [_fmt(r.tracking_cost), _fmt(r.control_cost)]
            row += [_fmt(v) for v in r.dist_costs]
            row += [_fmt(r.eta)]
            row += [_fmt(v) for v in r.mean_state]
            row += [_fmt(r.true_x), _fmt(r.true_y)]
            for om in r.obs_means:
                row += [_fmt(v) for v in om]
            row += [_fmt(r.min_clearance), r.status]
            if include_timing:
                row += [_fmt(r.decision_time_s)]
            lines.append(",".join(row))
        Path(path).write_text("\n".join(lines) + "\n")

    def write_summary(self, path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def run_scenario(cfg: ScenarioConfig) -> TrajectoryLog:
    """Execute one closed-loop run; deterministic given the scenario seed.

    Infeasibility in the target construction or in a hard-filter planner is
    recorded as a terminal failure row rather than raised.
    """
    planner_cfg = cfg.planner
    method = planner_cfg.method
    dt = cfg.dt
    A, B = step_matrices(dt)
    geoms = cfg.geometries()
    n_obs = len(cfg.obstacles)
    samples = cfg.samples
    goal = cfg.robot.goal
    grid = planner_cfg.control_grid

    if method == "rkhs":
        warmup([planner_cfg.kernel.degree])

    true_state = cfg.robot.initial_state.copy()
    records = []
    status = "ok"
    collision = False
    reached = False
    time_to_goal = None

    for k in range(cfg.horizon_steps):
        t = k * dt
        if np.hypot(true_state[0] - goal[0], true_state[2] - goal[1]) <= GOAL_RADIUS:
            reached = True
            time_to_goal = t
            break

        state_noise = sample_noise(
            cfg.robot.state_noise, samples.full_n, _stream_seed(cfg.seed, _PLAN_STREAM, k, 0)
        )
        control_noise = sample_noise(
            cfg.robot.control_noise, samples.full_n, _stream_seed(cfg.seed, _PLAN_STREAM, k, 1)
        )
        state_set = SampleSet.uniform(true_state[None, :] + state_noise.samples)
        w_full = concat_w(state_set, control_noise)
        obs_full = []
        for j, ob in enumerate(cfg.obstacles):
            draws = sample_noise(
                ob.state_noise, samples.full_n, _stream_seed(cfg.seed, _PLAN_STREAM, k, 2 + j)
            )
            obs_full.append(SampleSet.uniform(ob.mean_state(t + dt)[None, :] + draws.samples))

        t0 = time.perf_counter()

        w_n = w_full.take(samples.n) if samples.n < samples.full_n else w_full
        obs_n = [
            o.take(samples.n) if samples.n < samples.full_n else o for o in obs_full
        ]
        lam = phi = None
        if method == "rkhs" and samples.n < samples.full_n:
            spec = planner_cfg.kernel
            w_n = SampleSet(w_n.samples, reduced_set_weights(w_full, w_n, spec).weights)
            obs_n = [
                SampleSet(o_n.samples, reduced_set_weights(o_f, o_n, spec).weights)
                for o_n, o_f in zip(obs_n, obs_full)
            ]

        mean_now = w_n.mean()
        target = goal_tracking_target(mean_now[:4], goal, cfg.robot.desired_speed, dt)

        desired = [] if n_obs == 0 else None
        try:
            if method in ("rkhs", "gmm_kld") and n_obs > 0 and planner_cfg.rho > 0.0:
                if method == "rkhs" and samples.n < samples.full_n:
                    spec = planner_cfg.kernel
                    lam = reduced_set_weights(w_full, w_full.take(samples.n_r), spec).weights
                    phi = [
                        reduced_set_weights(o_f, o_f.take(samples.n_o), spec).weights
                        for o_f in obs_full
                    ]
                desired = build_desired_multi(
                    w_n,
                    obs_n,
                    samples.n_r,
                    samples.n_o,
                    grid,
                    target,
                    geoms,
                    dt,
                    w_weights=lam,
                    obs_weights=phi,
                )
            decision = select_control(
                w_n, obs_n, desired, target, planner_cfg, geoms, dt, seed=cfg.seed + k
            )
        except (DesiredDistributionInfeasible, NoFeasibleControl) as exc:
            elapsed = time.perf_counter() - t0
            status = (
                "infeasible_desired"
                if isinstance(exc, DesiredDistributionInfeasible)
                else "no_feasible_control"
            )
            records.append(
                StepRecord(
                    step=k,
                    time=t,
                    ux=float("nan"),
                    uy=float("nan"),
                    tracking_cost=float("nan"),
                    control_cost=float("nan"),
                    dist_costs=(float("nan"),) * n_obs,
                    eta=float("nan"),
                    mean_state=mean_now[:4],
                    true_x=float(true_state[0]),
                    true_y=float(true_state[2]),
                    obs_means=tuple(o.mean() for o in obs_full),
                    min_clearance=float("nan"),
                    status=status,
                    decision_time_s=elapsed,
                )
            )
            break
        elapsed = time.perf_counter() - t0

        u = decision.control.as_array()
        eta = min(
            estimate_eta(w_full, obs_full[j], u, geoms[j], dt) for j in range(n_obs)
        ) if n_obs else 1.0

        mean_next = A @ mean_now[:4] + B @ (u + mean_now[4:])

        true_delta = sample_noise(
            cfg.robot.control_noise, 1, _stream_seed(cfg.seed, _WORLD_STREAM, k, 0)
        ).samples[0]
        prev_pos = (true_state[0], true_state[2])
        true_state = A @ true_state + B @ (u + true_delta)
        crossed_goal = (
            _segment_goal_distance(prev_pos, (true_state[0], true_state[2]), goal)
            <= GOAL_RADIUS
        )
        clearances = []
        obs_true = []
        for j, ob in enumerate(cfg.obstacles):
            draw = sample_noise(
                ob.state_noise, 1, _stream_seed(cfg.seed, _WORLD_STREAM, k, 1 + j)
            ).samples[0]
            o_state = ob.mean_state(t + dt) + draw
            obs_true.append(o_state)
            d = np.hypot(true_state[0] - o_state[0], true_state[2] - o_state[2])
            clearances.append(d - geoms[j].combined)
        min_clearance = min(clearances) if clearances else float("inf")
        if min_clearance < 0.0:
            collision = True

        records.append(
            StepRecord(
                step=k,
                time=t,
                ux=float(u[0]),
                uy=float(u[1]),
                tracking_cost=decision.tracking_cost,
                control_cost=decision.control_cost,
                dist_costs=decision.per_obstacle_dist,
                eta=eta,
                mean_state=mean_next,
                true_x=float(true_state[0]),
                true_y=float(true_state[2]),
                obs_means=tuple(o.mean() for o in obs_full),
                min_clearance=float(min_clearance),
                status="ok",
                decision_time_s=elapsed,
            )
        )
        if crossed_goal:
            reached = True
            time_to_goal = (k + 1) * dt
            break
    else:
        if np.hypot(true_state[0] - goal[0], true_state[2] - goal[1]) <= GOAL_RADIUS:
            reached = True
            time_to_goal = cfg.horizon_steps * dt

    return TrajectoryLog(
        scenario=cfg.name,
        method=method,
        degree=planner_cfg.kernel.degree,
        rho=planner_cfg.rho,
        eta_cfg=planner_cfg.eta,
        seed=cfg.seed,
        n_obstacles=n_obs,
        dt=dt,
        records=records,
        reached_goal=reached,
        time_to_goal=time_to_goal,
        collision=collision,
        status=status,
    )
