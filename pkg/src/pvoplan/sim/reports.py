"""Batch experiment drivers: method comparisons, timing tables, consistency curves."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from ..embedding import KernelSpec, consistency_error, warmup
from ..uncertainty import SampleSet, concat_w, sample_noise
from .config import ScenarioConfig
from .runner import run_scenario

_CONSISTENCY_STREAM = 3


def worker_count(n_jobs: int) -> int:
    cap = os.environ.get("PVO_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n_jobs, limit))


def run_matrix(jobs: list) -> list:
    """Run scenario configs concurrently; returns summaries in input order."""
    if not jobs:
        return []
    with ThreadPoolExecutor(max_workers=worker_count(len(jobs))) as pool:
        logs = list(pool.map(run_scenario, jobs))
    return [log.summary() for log in logs]


def compare(scenarios: list, methods: list, degrees: list, seeds: list) -> list:
    """Cross product of scenarios x methods (x degrees for rkhs) x seeds."""
    jobs = []
    for cfg in scenarios:
        for method in methods:
            ds = degrees if method == "rkhs" else [None]
            for d in ds:
                for seed in seeds:
                    jobs.append(cfg.with_updates(method=method, degree=d, seed=seed))
    return run_matrix(jobs)


def benchmark_timing(scenarios: list, methods: list, degrees=(1, 2, 3)) -> list:
    """Per-decision wall-clock statistics per (scenario, method, degree).

    The JIT path is warmed up before any timed run so compilation never
    lands in the statistics.
    """
    for m in methods:
        if m not in ("rkhs", "gmm_kld"):
            raise ValueError(f"timing supports rkhs and gmm_kld, got {m!r}")
    warmup(degrees)
    rows = []
    for cfg in scenarios:
        for method in methods:
            ds = list(degrees) if method == "rkhs" else [None]
            for d in ds:
                log = run_scenario(cfg.with_updates(method=method, degree=d))
                times = [r.decision_time_s for r in log.records if np.isfinite(r.decision_time_s)]
                rows.append(
                    {
                        "scenario": cfg.name,
                        "n_obstacles": len(cfg.obstacles),
                        "method": method,
                        "degree": d if d is not None else "",
                        "mean_decision_s": float(np.mean(times)),
                        "std_decision_s": float(np.std(times)),
                        "n_decisions": len(times),
                    }
                )
    return rows


def consistency_sets(cfg: ScenarioConfig, size: int):
    """Step-zero uncertainty sample sets of the requested size (w and first obstacle)."""
    if not cfg.obstacles:
        raise ValueError("consistency report needs at least one obstacle")
    seed = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(_CONSISTENCY_STREAM, 0, 0))
    child = seed.spawn(3)
    states = sample_noise(cfg.robot.state_noise, size, child[0])
    deltas = sample_noise(cfg.robot.control_noise, size, child[1])
    w_set = concat_w(
        SampleSet.uniform(cfg.robot.initial_state[None, :] + states.samples), deltas
    )
    ob = cfg.obstacles[0]
    draws = sample_noise(ob.state_noise, size, child[2])
    obs_set = SampleSet.uniform(ob.mean_state(cfg.dt)[None, :] + draws.samples)
    return w_set, obs_set


def consistency_report(cfg: ScenarioConfig, n_values: list, d_values: list, seeds: list) -> list:
    """Seed-averaged embedding consistency error per (n, d), at zero control."""
    truth_l = cfg.samples.truth_l
    if max(n_values) > truth_l:
        raise ValueError(f"max n value {max(n_values)} exceeds configured l={truth_l}")
    w_set, obs_set = consistency_sets(cfg, truth_l)
    geom = cfg.geometry(0)
    u = np.zeros(2)
    rows = []
    for d in d_values:
        spec = KernelSpec(int(d))
        for n in n_values:
            errors = [
                consistency_error(w_set, obs_set, u, int(n), truth_l, spec, geom, cfg.dt, seed=s)
                for s in seeds
            ]
            rows.append(
                {
                    "n": int(n),
                    "d": int(d),
                    "mean_error": float(np.mean(errors)),
                    "n_seeds": len(seeds),
                }
            )
    return rows


def write_csv(rows: list, path, columns=None) -> None:
    path = Path(path)
    if not rows:
        path.write_text("\n")
        return
    cols = columns or list(rows[0].keys())
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(_cell(row.get(c)) for c in cols))
    path.write_text("\n".join(lines) + "\n")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)
