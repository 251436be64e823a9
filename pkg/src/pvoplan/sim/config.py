"""Scenario configuration: dataclasses plus JSON loading with field-precise errors.

A scenario file is plain JSON. Every validation failure raises ConfigError
with the dotted path of the offending field, so a typo in
``obstacles[1].state_noise.dims[2][0].scale`` is reported as exactly that.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..embedding import KernelSpec
from ..errors import ConfigError
from ..planner import ControlGridSpec, PlannerConfig
from ..uncertainty import MixtureComponent, NoiseModel
from ..vo import ObstacleGeometry

GOAL_RADIUS = 0.2


def _require(mapping, key, path):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path}: expected an object")
    if key not in mapping:
        raise ConfigError(f"{path}.{key}: missing required field")
    return mapping[key]


def _number(value, path, *, positive=False, nonnegative=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    v = float(value)
    if not np.isfinite(v):
        raise ConfigError(f"{path}: must be finite")
    if positive and v <= 0:
        raise ConfigError(f"{path}: must be > 0, got {v}")
    if nonnegative and v < 0:
        raise ConfigError(f"{path}: must be >= 0, got {v}")
    return v


def _integer(value, path, *, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    return value


def _vector(value, length, path):
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise ConfigError(f"{path}: expected a list of {length} numbers")
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _parse_noise(d, path, expected_dim) -> NoiseModel:
    dims = _require(d, "dims", path)
    if not isinstance(dims, list) or len(dims) != expected_dim:
        raise ConfigError(f"{path}.dims: expected {expected_dim} dimension entries")
    parsed = []
    for i, comps in enumerate(dims):
        if not isinstance(comps, list) or not comps:
            raise ConfigError(f"{path}.dims[{i}]: expected a nonempty component list")
        out = []
        for k, comp in enumerate(comps):
            cpath = f"{path}.dims[{i}][{k}]"
            kind = _require(comp, "kind", cpath)
            weight = _number(_require(comp, "weight", cpath), f"{cpath}.weight", nonnegative=True)
            loc = _number(_require(comp, "loc", cpath), f"{cpath}.loc")
            scale = _number(_require(comp, "scale", cpath), f"{cpath}.scale", nonnegative=True)
            try:
                out.append(MixtureComponent(kind, weight, loc, scale))
            except ConfigError as exc:
                raise ConfigError(f"{cpath}: {exc}") from exc
        parsed.append(tuple(out))
    try:
        return NoiseModel(tuple(parsed))
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class RobotSpec:
    initial_state: np.ndarray
    radius: float
    goal: np.ndarray
    desired_speed: float
    state_noise: NoiseModel
    control_noise: NoiseModel


@dataclass(frozen=True)
class ObstacleSpec:
    """Disk obstacle following a waypoint polyline at constant speed."""

    waypoints: np.ndarray
    speed: float
    radius: float
    state_noise: NoiseModel

    def mean_state(self, t: float) -> np.ndarray:
        """Predicted (x, vx, y, vy) at time t; rests at the final waypoint."""
        pts = self.waypoints
        if pts.shape[0] == 1 or self.speed <= 0:
            return np.array([pts[0, 0], 0.0, pts[0, 1], 0.0])
        seg = np.diff(pts, axis=0)
        seg_len = np.linalg.norm(seg, axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        s = self.speed * t
        if s >= cum[-1]:
            return np.array([pts[-1, 0], 0.0, pts[-1, 1], 0.0])
        i = int(np.searchsorted(cum, s, side="right")) - 1
        frac = (s - cum[i]) / seg_len[i]
        p = pts[i] + frac * seg[i]
        v = self.speed * seg[i] / seg_len[i]
        return np.array([p[0], v[0], p[1], v[1]])


@dataclass(frozen=True)
class SampleSpec:
    n: int
    full_n: int
    n_r: int
    n_o: int
    truth_l: int


@dataclass(frozen=True)
class ScenarioConfig:
    dt: float
    horizon_steps: int
    seed: int
    robot: RobotSpec
    obstacles: tuple
    samples: SampleSpec
    planner: PlannerConfig
    name: str = "scenario"

    def geometry(self, j: int) -> ObstacleGeometry:
        return ObstacleGeometry(self.robot.radius, self.obstacles[j].radius)

    def geometries(self) -> list:
        return [self.geometry(j) for j in range(len(self.obstacles))]

    def with_updates(self, *, method=None, degree=None, rho=None, eta=None, seed=None):
        planner = self.planner
        if method is not None:
            planner = dataclasses.replace(planner, method=method)
        if degree is not None:
            planner = dataclasses.replace(planner, kernel=KernelSpec(degree))
        if rho is not None:
            planner = dataclasses.replace(planner, rho=rho)
        if eta is not None:
            planner = dataclasses.replace(planner, eta=eta)
        out = dataclasses.replace(self, planner=planner)
        if seed is not None:
            out = dataclasses.replace(out, seed=seed)
        return out

    @classmethod
    def from_dict(cls, d: dict, name: str = "scenario") -> "ScenarioConfig":
        dt = _number(_require(d, "dt", "scenario"), "dt", positive=True)
        horizon = _integer(_require(d, "horizon_steps", "scenario"), "horizon_steps", minimum=1)
        seed = _integer(d.get("seed", 0), "seed", minimum=0)

        rd = _require(d, "robot", "scenario")
        robot = RobotSpec(
            initial_state=_vector(_require(rd, "initial_state", "robot"), 4, "robot.initial_state"),
            radius=_number(_require(rd, "radius", "robot"), "robot.radius", positive=True),
            goal=_vector(_require(rd, "goal", "robot"), 2, "robot.goal"),
            desired_speed=_number(
                _require(rd, "desired_speed", "robot"), "robot.desired_speed", positive=True
            ),
            state_noise=_parse_noise(_require(rd, "state_noise", "robot"), "robot.state_noise", 4),
            control_noise=_parse_noise(
                _require(rd, "control_noise", "robot"), "robot.control_noise", 2
            ),
        )

        od = _require(d, "obstacles", "scenario")
        if not isinstance(od, list):
            raise ConfigError("obstacles: expected a list")
        obstacles = []
        for j, ob in enumerate(od):
            path = f"obstacles[{j}]"
            wps = _require(ob, "waypoints", path)
            if not isinstance(wps, list) or not wps:
                raise ConfigError(f"{path}.waypoints: expected a nonempty list of [x, y] points")
            pts = np.array([_vector(p, 2, f"{path}.waypoints[{i}]") for i, p in enumerate(wps)])
            if pts.shape[0] > 1 and np.any(np.linalg.norm(np.diff(pts, axis=0), axis=1) <= 0):
                raise ConfigError(f"{path}.waypoints: consecutive duplicate points")
            obstacles.append(
                ObstacleSpec(
                    waypoints=pts,
                    speed=_number(_require(ob, "speed", path), f"{path}.speed", nonnegative=True),
                    radius=_number(_require(ob, "radius", path), f"{path}.radius", positive=True),
                    state_noise=_parse_noise(
                        _require(ob, "state_noise", path), f"{path}.state_noise", 4
                    ),
                )
            )

        sd = _require(d, "samples", "scenario")
        samples = SampleSpec(
            n=_integer(_require(sd, "n", "samples"), "samples.n", minimum=1),
            full_n=_integer(_require(sd, "N", "samples"), "samples.N", minimum=1),
            n_r=_integer(_require(sd, "n_r", "samples"), "samples.n_r", minimum=1),
            n_o=_integer(_require(sd, "n_o", "samples"), "samples.n_o", minimum=1),
            truth_l=_integer(_require(sd, "l", "samples"), "samples.l", minimum=1),
        )
        if samples.n > samples.full_n:
            raise ConfigError(f"samples.n: must satisfy n <= N, got {samples.n} > {samples.full_n}")
        if samples.n_r > samples.n:
            raise ConfigError(
                f"samples.n_r: must satisfy n_r <= n, got {samples.n_r} > {samples.n}"
            )
        if samples.n_o > samples.n:
            raise ConfigError(
                f"samples.n_o: must satisfy n_o <= n, got {samples.n_o} > {samples.n}"
            )

        pd = _require(d, "planner", "planner")
        gd = _require(pd, "grid", "planner")
        ax = _vector(_require(gd, "ax", "planner.grid"), 2, "planner.grid.ax")
        ay = _vector(_require(gd, "ay", "planner.grid"), 2, "planner.grid.ay")
        try:
            grid = ControlGridSpec(
                ax_bounds=(ax[0], ax[1]),
                ay_bounds=(ay[0], ay[1]),
                nx=_integer(gd.get("nx", 7), "planner.grid.nx", minimum=1),
                ny=_integer(gd.get("ny", 7), "planner.grid.ny", minimum=1),
            )
            f_scale = pd.get("f_scale")
            sensing = pd.get("sensing_range")
            planner = PlannerConfig(
                method=_require(pd, "method", "planner"),
                rho=_number(pd.get("rho", 1.0), "planner.rho", nonnegative=True),
                kernel=KernelSpec(_integer(pd.get("degree", 2), "planner.degree", minimum=1)),
                gmm_k=_integer(pd.get("gmm_k", 3), "planner.gmm_k", minimum=1),
                mc_samples=_integer(pd.get("mc_samples", 1000), "planner.mc_samples", minimum=1),
                gmm_max_iter=_integer(pd.get("gmm_max_iter", 200), "planner.gmm_max_iter", minimum=1),
                gmm_tol=_number(pd.get("gmm_tol", 1e-6), "planner.gmm_tol", positive=True),
                eta=_number(pd.get("eta", 0.8), "planner.eta"),
                control_grid=grid,
                f_scale=None if f_scale is None else _number(f_scale, "planner.f_scale", positive=True),
                sensing_range=None
                if sensing is None
                else _number(sensing, "planner.sensing_range", positive=True),
            )
        except ConfigError as exc:
            msg = str(exc)
            raise ConfigError(msg if msg.startswith("planner") else f"planner: {msg}") from exc

        return cls(
            dt=dt,
            horizon_steps=horizon,
            seed=seed,
            robot=robot,
            obstacles=tuple(obstacles),
            samples=samples,
            planner=planner,
            name=name,
        )

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"scenario file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
        try:
            return cls.from_dict(data, name=path.stem)
        except ConfigError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
