"""Receding-horizon control selection with pluggable distribution-distance costs.

Every candidate on a finite control lattice is scored as

    total(u) = tracking(u) + |u|^2 + rho * dist(u)

where dist depends on the configured method: squared RKHS distance between
the empirical constraint distribution and its target (rkhs), Monte-Carlo KL
divergence between GMM fits of the two (gmm_kld), or zero with a hard
feasibility filter for the surrogate baselines (linearized_gaussian,
ev_gauss) and the mean-only deterministic baseline. Selection is a
deterministic argmin with stable tie-breaking, so parallel and serial
evaluation return identical decisions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .embedding import KernelSpec, _quad_form, squash_constraint_values
from .errors import ConfigError, NoFeasibleControl, ShapeError
from .gmm import fit_gmm, kl_divergence
from .uncertainty import (
    ControlInput,
    SampleSet,
    as_control_array,
    as_state_array,
    step_matrices,
)
from .vo import ConstraintSampleSet, ObstacleGeometry, batch_cross_f

METHODS = ("rkhs", "gmm_kld", "linearized_gaussian", "ev_gauss", "deterministic")
_FILTER_METHODS = ("linearized_gaussian", "ev_gauss", "deterministic")


@dataclass(frozen=True)
class ControlGridSpec:
    """Near-square lattice over the box of admissible accelerations."""

    ax_bounds: tuple = (-2.0, 2.0)
    ay_bounds: tuple = (-2.0, 2.0)
    nx: int = 7
    ny: int = 7

    def __post_init__(self):
        for lo, hi in (self.ax_bounds, self.ay_bounds):
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise ConfigError(f"bad control bounds ({lo}, {hi})")
        if self.nx < 1 or self.ny < 1:
            raise ConfigError("grid resolution must be >= 1 per axis")

    def controls(self) -> np.ndarray:
        """(nx*ny, 2) lattice in lexicographic (ax, ay) order."""
        ax = np.linspace(self.ax_bounds[0], self.ax_bounds[1], self.nx)
        ay = np.linspace(self.ay_bounds[0], self.ay_bounds[1], self.ny)
        gx, gy = np.meshgrid(ax, ay, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass(frozen=True)
class PlannerConfig:
    method: str = "rkhs"
    rho: float = 1.0
    kernel: KernelSpec = field(default_factory=KernelSpec)
    gmm_k: int = 3
    mc_samples: int = 1000
    gmm_max_iter: int = 200
    gmm_tol: float = 1e-6
    eta: float = 0.8
    control_grid: ControlGridSpec = field(default_factory=ControlGridSpec)
    f_scale: float | None = None
    sensing_range: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.rho < 0:
            raise ConfigError(f"rho must be nonnegative, got {self.rho}")
        if not 0.0 < self.eta < 1.0:
            raise ConfigError(f"eta must lie in (0, 1), got {self.eta}")
        if self.gmm_k < 1:
            raise ConfigError(f"gmm_k must be >= 1, got {self.gmm_k}")
        if self.mc_samples < 1:
            raise ConfigError(f"mc_samples must be >= 1, got {self.mc_samples}")
        if self.f_scale is not None and self.f_scale <= 0:
            raise ConfigError(f"f_scale must be positive, got {self.f_scale}")
        if self.sensing_range is not None and self.sensing_range <= 0:
            raise ConfigError(f"sensing_range must be positive, got {self.sensing_range}")


@dataclass(frozen=True)
class ControlDecision:
    control: object
    tracking_cost: float
    control_cost: float
    dist_cost: float
    total: float
    per_obstacle_dist: tuple


def tracking_control_cost(w_set: SampleSet, control, desired_state, dt: float):
    """(tracking, control) cost pair for one candidate control.

    Tracking is the squared distance between the mean propagated state (mean
    sample, its mean perturbation, no fresh noise) and the desired state;
    control is the squared magnitude of u.
    """
    if len(w_set) == 0 or w_set.dim != 6:
        raise ShapeError("w_set must hold 6-dimensional samples")
    u = as_control_array(control)
    desired = as_state_array(desired_state)
    A, B = step_matrices(dt)
    mw = w_set.mean()
    mean_state = A @ mw[:4] + B @ (u + mw[4:])
    diff = mean_state - desired
    return float(diff @ diff), float(u @ u)


def goal_tracking_target(mean_state, goal_xy, desired_speed: float, dt: float) -> np.ndarray:
    """Next point of a straight constant-speed line from the mean state to goal.

    The commanded speed follows a constant-deceleration braking curve
    sqrt(dist) near the goal, shrinking the turn radius so the goal disc is
    entered rather than orbited, without stalling on final approach.
    """
    s = as_state_array(mean_state)
    goal = np.asarray(goal_xy, dtype=float).ravel()
    pos = np.array([s[0], s[2]])
    to_goal = goal - pos
    dist = float(np.linalg.norm(to_goal))
    if dist < 1e-12:
        return np.array([goal[0], 0.0, goal[1], 0.0])
    direction = to_goal / dist
    speed = min(desired_speed, np.sqrt(0.5 * dist))
    vel = speed * direction
    nxt = pos + vel * dt
    return np.array([nxt[0], vel[0], nxt[1], vel[1]])


def ev_gauss_feasible(f_samples: ConstraintSampleSet, eta: float) -> bool:
    """Distribution-free surrogate test E[f] + eps * std(f) <= 0, eps^2 = eta/(1-eta).

    Weighted sample moments stand in for closed-form Gaussian moments; the
    Cantelli-style guarantee direction is unaffected.
    """
    if len(f_samples) < 2:
        raise ShapeError("need at least 2 constraint samples")
    if not 0.0 < eta < 1.0:
        raise ConfigError(f"eta must lie in (0, 1), got {eta}")
    eps = np.sqrt(eta / (1.0 - eta))
    mean = float(f_samples.weights @ f_samples.values)
    var = float(f_samples.weights @ (f_samples.values - mean) ** 2)
    std = np.sqrt(max(var, 0.0))
    return bool(mean + eps * std <= 0.0)


def _weighted_moments(sample_set: SampleSet):
    mean = sample_set.mean()
    centered = sample_set.samples - mean
    cov = (sample_set.weights[:, None] * centered).T @ centered
    return mean, cov


def _linearized_gaussian_mask(
    w_set: SampleSet,
    obs_set: SampleSet,
    controls: np.ndarray,
    eta: float,
    geom: ObstacleGeometry,
    dt: float,
    fd_step: float = 1e-5,
) -> np.ndarray:
    """Vectorized surrogate test over a control batch; see linearized_gaussian_feasible."""
    if len(w_set) < 2 or len(obs_set) < 2:
        raise ShapeError("need at least 2 samples per set")
    if not 0.0 < eta < 1.0:
        raise ConfigError(f"eta must lie in (0, 1), got {eta}")
    mw, Sw = _weighted_moments(w_set)
    mo, So = _weighted_moments(obs_set)
    z0 = np.concatenate([mw, mo])
    sigma = np.zeros((10, 10))
    sigma[:6, :6] = Sw
    sigma[6:, 6:] = So
    sigma += 1e-9 * np.eye(10)

    def f_of(z):
        return batch_cross_f(
            z[None, :6], z[None, 6:], controls, geom.combined_sq, dt
        )[:, 0, 0]

    grad = np.empty((controls.shape[0], 10))
    for i in range(10):
        zp = z0.copy()
        zm = z0.copy()
        zp[i] += fd_step
        zm[i] -= fd_step
        grad[:, i] = (f_of(zp) - f_of(zm)) / (2.0 * fd_step)
    f0 = f_of(z0)
    var = np.maximum(np.einsum("ci,ij,cj->c", grad, sigma, grad), 0.0)
    z_eta = NormalDist().inv_cdf(eta)
    return f0 + z_eta * np.sqrt(var) <= 0.0


def linearized_gaussian_feasible(
    w_set: SampleSet,
    obs_set: SampleSet,
    control,
    eta: float,
    geom: ObstacleGeometry,
    dt: float,
    fd_step: float = 1e-5,
) -> bool:
    """Gaussian-surrogate test: linearize f at the joint sample mean.

    Fits Gaussian moments to the (w, obstacle) samples, takes a central
    finite-difference gradient of f at the joint mean, and checks
    f(mean) + z_eta * sigma <= 0 with sigma^2 = g' Sigma g (diagonal
    ridge 1e-9 absorbs singular covariances).
    """
    u = as_control_array(control)
    return bool(
        _linearized_gaussian_mask(w_set, obs_set, u[None, :], eta, geom, dt, fd_step)[0]
    )


def _argmin_lex(totals, control_costs, grid, mask=None) -> int:
    """Index of the minimal total; ties broken by control cost then (ax, ay)."""
    idx = np.arange(grid.shape[0]) if mask is None else np.flatnonzero(mask)
    order = np.lexsort(
        (grid[idx, 1], grid[idx, 0], control_costs[idx], totals[idx])
    )
    return int(idx[order[0]])


def _in_sensing_range(w_set, obs_set, sensing_range) -> bool:
    if sensing_range is None:
        return True
    mw = w_set.mean()
    mo = obs_set.mean()
    d = np.hypot(mw[0] - mo[0], mw[2] - mo[2])
    return bool(d <= sensing_range)


def select_control(
    w_set: SampleSet,
    obs_sets: list,
    desired_dists,
    desired_state,
    cfg: PlannerConfig,
    geom,
    dt: float,
    seed=0,
) -> ControlDecision:
    """Evaluate every grid control and return the total-cost argmin.

    ``geom`` may be a single ObstacleGeometry or one per obstacle set. For
    rkhs/gmm_kld a DesiredDistribution per obstacle is required; the
    surrogate and deterministic methods apply their feasibility filter
    instead and raise NoFeasibleControl when nothing passes. Obstacles
    beyond the configured sensing range are ignored.
    """
    obs_sets = list(obs_sets)
    geoms = [geom] * len(obs_sets) if isinstance(geom, ObstacleGeometry) else list(geom)
    if len(geoms) != len(obs_sets):
        raise ShapeError(f"{len(geoms)} geometries for {len(obs_sets)} obstacle sets")
    needs_desired = cfg.method in ("rkhs", "gmm_kld") and cfg.rho > 0.0
    if needs_desired:
        if desired_dists is None or len(desired_dists) != len(obs_sets):
            raise ShapeError("one desired distribution per obstacle is required")

    grid = cfg.control_grid.controls()
    m = grid.shape[0]

    A, B = step_matrices(dt)
    mw = w_set.mean()
    base = A @ mw[:4] + B @ mw[4:]
    desired = as_state_array(desired_state)
    states = base[None, :] + grid @ B.T
    tracking = ((states - desired) ** 2).sum(axis=1)
    control_costs = (grid * grid).sum(axis=1)

    active = [
        j
        for j in range(len(obs_sets))
        if _in_sensing_range(w_set, obs_sets[j], cfg.sensing_range)
    ]

    per_dist = np.zeros((m, len(obs_sets)))
    feasible = np.ones(m, dtype=bool)

    if cfg.method in ("rkhs", "gmm_kld") and not needs_desired:
        pass  # rho == 0: the distance term cannot affect selection
    elif cfg.method == "rkhs":
        spec = cfg.kernel
        for j in active:
            scale = cfg.f_scale if cfg.f_scale is not None else geoms[j].combined_sq
            des_v = np.ascontiguousarray(
                squash_constraint_values(desired_dists[j].constraint_samples.values, scale)
            )
            des_w = np.ascontiguousarray(desired_dists[j].constraint_samples.weights)
            t_des = float(_quad_form(des_v, des_w, des_v, des_w, spec.degree))
            F = squash_constraint_values(
                batch_cross_f(
                    w_set.samples, obs_sets[j].samples, grid, geoms[j].combined_sq, dt
                ),
                scale,
            )
            pair_w = np.ascontiguousarray(
                np.multiply.outer(w_set.weights, obs_sets[j].weights).ravel()
            )
            for i in range(m):
                fv = np.ascontiguousarray(F[i].ravel())
                val = (
                    float(_quad_form(fv, pair_w, fv, pair_w, spec.degree))
                    - 2.0 * float(_quad_form(fv, pair_w, des_v, des_w, spec.degree))
                    + t_des
                )
                per_dist[i, j] = max(val, 0.0)
    elif cfg.method == "gmm_kld":
        for j in active:
            q_des = fit_gmm(
                desired_dists[j].constraint_samples,
                cfg.gmm_k,
                seed=0,
                max_iter=cfg.gmm_max_iter,
                tol=cfg.gmm_tol,
            )
            F = batch_cross_f(
                w_set.samples, obs_sets[j].samples, grid, geoms[j].combined_sq, dt
            )
            pair_w = np.multiply.outer(w_set.weights, obs_sets[j].weights).ravel()
            for i in range(m):
                p_set = ConstraintSampleSet(F[i].ravel(), pair_w)
                p_fit = fit_gmm(
                    p_set, cfg.gmm_k, seed=0, max_iter=cfg.gmm_max_iter, tol=cfg.gmm_tol
                )
                per_dist[i, j] = kl_divergence(
                    p_fit,
                    q_des,
                    cfg.mc_samples,
                    seed=np.random.SeedSequence((_seed_entropy(seed), j, i)),
                )
    elif cfg.method == "ev_gauss":
        eps = np.sqrt(cfg.eta / (1.0 - cfg.eta))
        for j in active:
            F = batch_cross_f(
                w_set.samples, obs_sets[j].samples, grid, geoms[j].combined_sq, dt
            ).reshape(m, -1)
            pair_w = np.multiply.outer(w_set.weights, obs_sets[j].weights).ravel()
            means = F @ pair_w
            var = np.maximum(((F - means[:, None]) ** 2) @ pair_w, 0.0)
            feasible &= means + eps * np.sqrt(var) <= 0.0
    elif cfg.method == "linearized_gaussian":
        for j in active:
            feasible &= _linearized_gaussian_mask(
                w_set, obs_sets[j], grid, cfg.eta, geoms[j], dt
            )
    else:  # deterministic
        mean_w = w_set.mean()[None, :]
        for j in active:
            f = batch_cross_f(
                mean_w, obs_sets[j].mean()[None, :], grid, geoms[j].combined_sq, dt
            )[:, 0, 0]
            feasible &= f <= 0.0

    dist = per_dist.sum(axis=1)
    totals = tracking + control_costs + cfg.rho * dist

    if cfg.method in _FILTER_METHODS:
        if not np.any(feasible):
            raise NoFeasibleControl(
                f"{cfg.method}: no grid control passes the feasibility filter"
            )
        best = _argmin_lex(totals, control_costs, grid, mask=feasible)
    else:
        best = _argmin_lex(totals, control_costs, grid)

    return ControlDecision(
        control=ControlInput.from_array(grid[best]),
        tracking_cost=float(tracking[best]),
        control_cost=float(control_costs[best]),
        dist_cost=float(dist[best]),
        total=float(totals[best]),
        per_obstacle_dist=tuple(float(v) for v in per_dist[best]),
    )


def _seed_entropy(seed) -> int:
    if seed is None:
        return 0
    return int(seed)
