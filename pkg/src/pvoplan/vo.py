"""Velocity-obstacle constraint evaluation and its empirical distribution.

The scalar constraint for one robot/obstacle pair is

    f = (r.v)^2 / |v|^2 - |r|^2 + (R + Ro)^2,

with r the relative position and v the relative velocity; f <= 0 means the
current course is collision-free. Since (r.v)^2/|v|^2 - |r|^2 is minus the
squared miss distance, f is bounded above by the squared combined radius.

Under uncertainty f becomes a random variable. ``pvo_samples`` evaluates it
on every cross pair of a robot-uncertainty sample set and an obstacle sample
set, producing the empirical constraint distribution the planner matches
against its target.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateVelocityWarning, ShapeError
from .uncertainty import CONTROL_DIM, STATE_DIM, SampleSet, as_control_array, step_matrices

VEL_EPS = 1e-9
W_DIM = STATE_DIM + CONTROL_DIM


@dataclass(frozen=True)
class ObstacleGeometry:
    """Disk radii (m) for the robot and one obstacle."""

    robot_radius: float
    obstacle_radius: float

    def __post_init__(self):
        if self.robot_radius <= 0 or self.obstacle_radius <= 0:
            raise ConfigError("radii must be strictly positive")

    @property
    def combined(self) -> float:
        return self.robot_radius + self.obstacle_radius

    @property
    def combined_sq(self) -> float:
        return self.combined * self.combined


@dataclass(frozen=True, eq=False)
class ConstraintSampleSet:
    """Scalar f-samples with (possibly signed) product weights."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if values.shape != weights.shape:
            raise ShapeError(f"{values.shape[0]} values vs {weights.shape[0]} weights")
        if values.size == 0:
            raise ShapeError("constraint sample set is empty")
        if not np.all(np.isfinite(values)):
            raise ValueError("constraint values must be finite")
        total = float(weights.sum())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"weights sum to {total!r}, expected 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.values.shape[0]

    def scaled(self, scale: float) -> "ConstraintSampleSet":
        """Values divided by a positive constant (sign-preserving)."""
        if scale <= 0:
            raise ConfigError(f"scale must be positive, got {scale}")
        return ConstraintSampleSet(self.values / scale, self.weights)

    @classmethod
    def uniform(cls, values) -> "ConstraintSampleSet":
        values = np.asarray(values, dtype=float).ravel()
        return cls(values, np.full(values.size, 1.0 / values.size))


@dataclass(frozen=True)
class VOCoefficients:
    """Quadratic-in-control form of the |v|^2-cleared constraint.

    cleared(u) = h1 ux^2 + h2 ux uy + h3 uy^2 + h4 ux + h5 uy + h6 equals
    f(u) * |v(u)|^2 under the convention that the relative position is
    control-independent over the step (clearing |v|^2 otherwise yields a
    quartic). Carries the drift relative velocity c and dt so f itself can
    be reproduced: f(u) = cleared(u) / |c + dt u|^2.
    """

    h1: float
    h2: float
    h3: float
    h4: float
    h5: float
    h6: float
    drift_rel_vel: tuple
    dt: float

    def cleared(self, control) -> float:
        ux, uy = as_control_array(control)
        return (
            self.h1 * ux * ux
            + self.h2 * ux * uy
            + self.h3 * uy * uy
            + self.h4 * ux
            + self.h5 * uy
            + self.h6
        )

    def f_value(self, control) -> float:
        u = as_control_array(control)
        v = np.asarray(self.drift_rel_vel) + self.dt * u
        vv = float(v @ v)
        if vv <= VEL_EPS * VEL_EPS:
            # cleared form degenerates with |v| -> 0; fall back to the limit.
            warnings.warn(
                "relative velocity below epsilon", DegenerateVelocityWarning, stacklevel=2
            )
            return self.cleared(u)
        return self.cleared(u) / vv


def vo_value(rel_pos, rel_vel, geom: ObstacleGeometry) -> float:
    """Deterministic constraint value for one relative position/velocity pair."""
    r = np.asarray(rel_pos, dtype=float).ravel()
    v = np.asarray(rel_vel, dtype=float).ravel()
    if r.shape != (2,) or v.shape != (2,):
        raise ShapeError("rel_pos and rel_vel must be 2-vectors")
    rr = float(r @ r)
    vv = float(v @ v)
    c2 = geom.combined_sq
    if vv <= VEL_EPS * VEL_EPS:
        warnings.warn(
            "relative velocity below epsilon; static-overlap limit used",
            DegenerateVelocityWarning,
            stacklevel=2,
        )
        return -rr + c2
    dot = float(r @ v)
    return dot * dot / vv - rr + c2


def _check_w(w) -> np.ndarray:
    w = np.asarray(w, dtype=float).ravel()
    if w.shape != (W_DIM,):
        raise ShapeError(f"w sample must be 6-dimensional, got shape {w.shape}")
    return w


def _check_obs(obs) -> np.ndarray:
    obs = np.asarray(obs, dtype=float).ravel()
    if obs.shape != (STATE_DIM,):
        raise ShapeError(f"obstacle sample must be 4-dimensional, got shape {obs.shape}")
    return obs


def vo_of_control(
    w,
    obs,
    control,
    geom: ObstacleGeometry,
    dt: float,
    control_affects_position: bool = True,
) -> float:
    """Canonical constraint evaluation: propagate the w sample, then apply vo_value.

    The w sample carries its own perturbation delta; the robot steps under
    u + delta and is compared against the given next-instant obstacle state.
    With control_affects_position=False the position rows of B are zeroed,
    the convention under which the quadratic coefficient form is exact.
    """
    w = _check_w(w)
    obs = _check_obs(obs)
    u = as_control_array(control)
    A, B = step_matrices(dt)
    if not control_affects_position:
        B = B.copy()
        B[0, :] = 0.0
        B[2, :] = 0.0
    state = A @ w[:STATE_DIM] + B @ (u + w[STATE_DIM:])
    rel_pos = (state[0] - obs[0], state[2] - obs[2])
    rel_vel = (state[1] - obs[1], state[3] - obs[3])
    return vo_value(rel_pos, rel_vel, geom)


def vo_coefficients(w, obs, geom: ObstacleGeometry, dt: float) -> VOCoefficients:
    """Coefficients h1..h6 of the cleared quadratic form for one (w, obs) pair.

    Derived with the relative position frozen at its zero-control value
    p0 + dt v0 - p_obs, so the cross-pair geometry is
    r fixed, v(u) = c + dt u with c the zero-control relative velocity.
    """
    w = _check_w(w)
    obs = _check_obs(obs)
    px, vx, py, vy = w[:STATE_DIM]
    dx, dy = w[STATE_DIM:]
    rx = px + dt * vx - obs[0]
    ry = py + dt * vy - obs[2]
    cx = vx + dt * dx - obs[1]
    cy = vy + dt * dy - obs[3]
    rr = rx * rx + ry * ry
    rho2 = rr - geom.combined_sq
    rc = rx * cx + ry * cy
    dt2 = dt * dt
    return VOCoefficients(
        h1=dt2 * (rx * rx - rho2),
        h2=2.0 * dt2 * rx * ry,
        h3=dt2 * (ry * ry - rho2),
        h4=2.0 * dt * (rc * rx - rho2 * cx),
        h5=2.0 * dt * (rc * ry - rho2 * cy),
        h6=rc * rc - rho2 * (cx * cx + cy * cy),
        drift_rel_vel=(cx, cy),
        dt=dt,
    )


def propagate_w_samples(w: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
    """Vectorized one-step propagation of (n, 6) w samples under a shared control."""
    A, B = step_matrices(dt)
    return w[:, :STATE_DIM] @ A.T + (w[:, STATE_DIM:] + u) @ B.T


def batch_cross_f(
    w: np.ndarray, obs: np.ndarray, controls: np.ndarray, combined_sq: float, dt: float
) -> np.ndarray:
    """(n_controls, n_w, n_obs) f values: every control x every cross pair."""
    A, B = step_matrices(dt)
    base = w[:, :STATE_DIM] @ A.T + w[:, STATE_DIM:] @ B.T
    states = base[None, :, :] + (controls @ B.T)[:, None, :]
    rx = states[:, :, 0][:, :, None] - obs[:, 0][None, None, :]
    ry = states[:, :, 2][:, :, None] - obs[:, 2][None, None, :]
    vx = states[:, :, 1][:, :, None] - obs[:, 1][None, None, :]
    vy = states[:, :, 3][:, :, None] - obs[:, 3][None, None, :]
    rr = rx * rx + ry * ry
    vv = vx * vx + vy * vy
    dot = rx * vx + ry * vy
    eps2 = VEL_EPS * VEL_EPS
    base_f = dot * dot / np.maximum(vv, eps2) - rr + combined_sq
    return np.where(vv <= eps2, combined_sq - rr, base_f)


def cross_f_values(states: np.ndarray, obs: np.ndarray, combined_sq: float) -> np.ndarray:
    """(n, m) matrix of f values for every robot-state/obstacle-sample pair."""
    rx = states[:, 0][:, None] - obs[:, 0][None, :]
    ry = states[:, 2][:, None] - obs[:, 2][None, :]
    vx = states[:, 1][:, None] - obs[:, 1][None, :]
    vy = states[:, 3][:, None] - obs[:, 3][None, :]
    rr = rx * rx + ry * ry
    vv = vx * vx + vy * vy
    dot = rx * vx + ry * vy
    eps2 = VEL_EPS * VEL_EPS
    base = dot * dot / np.maximum(vv, eps2) - rr + combined_sq
    limit = combined_sq - rr
    return np.where(vv <= eps2, limit, base)


def pvo_samples(
    w_set: SampleSet,
    obs_set: SampleSet,
    control,
    geom: ObstacleGeometry,
    dt: float,
) -> ConstraintSampleSet:
    """Empirical constraint distribution at a control: all cross-pair f values.

    Pair (p, q) carries weight w_p * w_q; the value matrix is flattened
    row-major (robot sample index varies slowest).
    """
    if w_set.dim != W_DIM:
        raise ShapeError(f"w set must be 6-dimensional, got {w_set.dim}")
    if obs_set.dim != STATE_DIM:
        raise ShapeError(f"obstacle set must be 4-dimensional, got {obs_set.dim}")
    u = as_control_array(control)
    states = propagate_w_samples(w_set.samples, u, dt)
    values = cross_f_values(states, obs_set.samples, geom.combined_sq)
    weights = np.multiply.outer(w_set.weights, obs_set.weights)
    return ConstraintSampleSet(values.ravel(), weights.ravel())
