#!/usr/bin/env python3
"""Regenerate the shipped scenario files in scenarios/.

The noise mixtures are multi-modal and non-Gaussian on purpose; scales are
picked so the benchmarks exercise the interesting regime (constraint
distributions straddling zero during the encounter) while staying feasible
for every method at the shipped control bounds. dt and the control lattice
are sized together: one step of max acceleration must rotate the relative
velocity out of the collision cone at first contact, and the lattice spacing
must stay fine enough for goal tracking to engage against the |u|^2 penalty.
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "scenarios"


def g(weight, loc, scale):
    return {"kind": "gaussian", "weight": weight, "loc": loc, "scale": scale}


def u(weight, loc, scale):
    return {"kind": "uniform", "weight": weight, "loc": loc, "scale": scale}


def tri(weight, loc, scale):
    return {"kind": "triangular", "weight": weight, "loc": loc, "scale": scale}


def robot_state_noise(pos=0.05, vel=0.03):
    return {
        "dims": [
            [g(0.5, -1.2 * pos, 0.8 * pos), g(0.5, 1.2 * pos, 0.8 * pos)],
            [g(0.6, 0.0, vel), u(0.4, 0.6 * vel, 1.5 * vel)],
            [g(0.5, -1.2 * pos, 0.8 * pos), g(0.5, 1.2 * pos, 0.8 * pos)],
            [g(0.6, 0.0, vel), tri(0.4, -0.6 * vel, 1.5 * vel)],
        ]
    }


def control_noise(scale=0.06):
    return {
        "dims": [
            [g(0.7, 0.0, scale), tri(0.3, 1.2 * scale, scale)],
            [g(0.7, 0.0, scale), u(0.3, -1.2 * scale, scale)],
        ]
    }


def obstacle_state_noise(pos=0.06, vel=0.04):
    return {
        "dims": [
            [g(0.5, -1.2 * pos, 0.8 * pos), g(0.5, 1.2 * pos, 0.8 * pos)],
            [g(0.6, 0.0, vel), u(0.4, 0.5 * vel, 1.5 * vel)],
            [g(0.5, -1.2 * pos, 0.8 * pos), g(0.5, 1.2 * pos, 0.8 * pos)],
            [g(0.6, 0.0, vel), tri(0.4, -0.5 * vel, 1.5 * vel)],
        ]
    }


def heavy_tail_obstacle_noise():
    """Bimodal with a rare far mode lunging toward the robot's passing side."""
    return {
        "dims": [
            [g(0.8, 0.0, 0.05), g(0.2, -0.25, 0.05)],
            [g(0.85, 0.0, 0.04), g(0.15, -0.35, 0.05)],
            [g(0.8, 0.05, 0.05), g(0.2, -0.45, 0.07)],
            [g(0.85, 0.0, 0.04), g(0.15, -0.3, 0.05)],
        ]
    }


def base(name, obstacles, horizon=40, seed=0, n=25, full=50, degree=2, rho=1.0,
         eta=0.8, bound=1.25, nx=11, goal=(11.0, 0.0), method="rkhs"):
    return {
        "dt": 0.5,
        "horizon_steps": horizon,
        "seed": seed,
        "robot": {
            "initial_state": [0.0, 1.0, 0.0, 0.0],
            "radius": 0.3,
            "goal": list(goal),
            "desired_speed": 1.0,
            "state_noise": robot_state_noise(),
            "control_noise": control_noise(),
        },
        "obstacles": obstacles,
        "samples": {"n": n, "N": full, "n_r": 20, "n_o": 20, "l": 50},
        "planner": {
            "method": method,
            "rho": rho,
            "degree": degree,
            "gmm_k": 3,
            "mc_samples": 1000,
            "gmm_tol": 1e-05,
            "f_scale": 2.0,
            "eta": eta,
            "grid": {"ax": [-bound, bound], "ay": [-bound, bound], "nx": nx, "ny": nx},
        },
    }


def obstacle(waypoints, speed, radius=0.4, noise=None):
    return {
        "waypoints": waypoints,
        "speed": speed,
        "radius": radius,
        "state_noise": noise or obstacle_state_noise(),
    }


def main():
    OUT.mkdir(exist_ok=True)
    scenarios = {}

    scenarios["one_obstacle"] = base(
        "one_obstacle",
        [obstacle([[8.5, 0.0], [-8.0, 0.0]], speed=0.7)],
    )

    scenarios["two_obstacle"] = base(
        "two_obstacle",
        [
            obstacle([[8.5, 0.0], [-8.0, 0.0]], speed=0.7),
            obstacle([[6.0, 3.5], [6.0, -8.0]], speed=0.55),
        ],
        horizon=44,
    )

    scenarios["three_obstacle"] = base(
        "three_obstacle",
        [
            obstacle([[8.5, 0.0], [-8.0, 0.0]], speed=0.65),
            obstacle([[5.5, 3.0], [5.5, -8.0]], speed=0.5),
            obstacle([[7.0, -3.5], [7.0, 8.0]], speed=0.45),
        ],
        horizon=44,
    )

    scenarios["four_obstacle"] = base(
        "four_obstacle",
        [
            obstacle([[8.5, 0.0], [-8.0, 0.0]], speed=0.65),
            obstacle([[5.5, 3.0], [5.5, -8.0]], speed=0.5),
            obstacle([[7.0, -3.5], [7.0, 8.0]], speed=0.45),
            obstacle([[11.0, 1.2], [-6.0, 1.2]], speed=0.7),
        ],
        horizon=44,
    )

    # zero-ish noise, robot already at speed: tracking-only sanity scenario
    free = base("obstacle_free", [], horizon=24, goal=(8.4, 0.0))
    tiny = 1e-08
    free["robot"]["state_noise"] = {"dims": [[g(1.0, 0.0, tiny)] for _ in range(4)]}
    free["robot"]["control_noise"] = {"dims": [[g(1.0, 0.0, tiny)] for _ in range(2)]}
    scenarios["obstacle_free"] = free

    # timing benchmarks: full 50-sample embeddings, no reduced set, 7x7 grid
    scenarios["timing_one_obstacle"] = base(
        "timing_one_obstacle",
        [obstacle([[8.5, 0.0], [-8.0, 0.0]], speed=0.7)],
        horizon=10,
        n=50,
        nx=7,
    )
    scenarios["timing_four_obstacle"] = base(
        "timing_four_obstacle",
        [
            obstacle([[8.5, 0.0], [-8.0, 0.0]], speed=0.65),
            obstacle([[5.5, 3.0], [5.5, -8.0]], speed=0.5),
            obstacle([[7.0, -3.5], [7.0, 8.0]], speed=0.45),
            obstacle([[11.0, 1.2], [-6.0, 1.2]], speed=0.7),
        ],
        horizon=10,
        n=50,
        nx=7,
    )

    # heavy-tailed bimodal perception noise: the Gaussian-surrogate stress case
    scenarios["heavy_tail"] = base(
        "heavy_tail",
        [obstacle([[9.5, 0.2], [-8.0, 0.2]], speed=0.6, noise=heavy_tail_obstacle_noise())],
        eta=0.8,
    )

    for name, cfg in scenarios.items():
        path = OUT / f"{name}.json"
        path.write_text(json.dumps(cfg, indent=2) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
