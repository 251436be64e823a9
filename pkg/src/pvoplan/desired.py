"""Construction of the target constraint distribution via scenario optimization.

A small batch of uncertainty samples is promoted to "scenario" status: the
nominal control is the cheapest grid control that keeps the constraint
non-positive on every scenario pair, and the constraint values it induces
form the target empirical distribution whose mass sits entirely at f <= 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DesiredDistributionInfeasible, ShapeError
from .uncertainty import ControlInput, SampleSet
from .vo import ConstraintSampleSet, ObstacleGeometry, cross_f_values, propagate_w_samples


@dataclass(frozen=True, eq=False)
class DesiredDistribution:
    """Target distribution for one obstacle: scenario sets, nominal control
    and the constraint samples they induce (all certified <= 0)."""

    u_nom: ControlInput
    constraint_samples: ConstraintSampleSet
    w_des: SampleSet
    obs_des: SampleSet

    def __post_init__(self):
        worst = float(self.constraint_samples.values.max())
        if worst > 0.0:
            raise ValueError(f"desired constraint samples must be <= 0, max is {worst}")


def _as_grid(control_grid) -> np.ndarray:
    if hasattr(control_grid, "controls"):
        grid = control_grid.controls()
    else:
        grid = np.atleast_2d(
            np.asarray(
                [
                    c.as_array() if isinstance(c, ControlInput) else np.asarray(c, float)
                    for c in control_grid
                ],
                dtype=float,
            )
        )
    if grid.size == 0 or grid.shape[1] != 2:
        raise ShapeError("control grid must be a nonempty list of 2-vectors")
    return grid


def build_desired_multi(
    w_set: SampleSet,
    obs_sets: list,
    n_r: int,
    n_o: int,
    control_grid,
    tracking_target,
    geoms,
    dt: float,
    w_weights=None,
    obs_weights=None,
) -> list[DesiredDistribution]:
    """Shared-nominal-control construction against the union of all obstacles.

    The first n_r w-samples and first n_o samples of each obstacle set form
    the scenario sets. One nominal control is selected over the whole union;
    per-obstacle constraint samples are then evaluated at it. Optional
    ``w_weights`` / ``obs_weights`` (list, one vector per obstacle) attach
    embedding weights to the returned sets; default is uniform.
    """
    from .planner import _argmin_lex, tracking_control_cost  # planner builds on this module

    if not obs_sets:
        raise ShapeError("need at least one obstacle sample set")
    if isinstance(geoms, ObstacleGeometry):
        geoms = [geoms] * len(obs_sets)
    if len(geoms) != len(obs_sets):
        raise ShapeError(f"{len(geoms)} geometries for {len(obs_sets)} obstacle sets")
    if n_r < 1 or n_r > len(w_set):
        raise ShapeError(f"need 1 <= n_r <= {len(w_set)}, got {n_r}")
    for obs in obs_sets:
        if n_o < 1 or n_o > len(obs):
            raise ShapeError(f"need 1 <= n_o <= {len(obs)}, got {n_o}")

    grid = _as_grid(control_grid)
    w_tilde = w_set.samples[:n_r]
    obs_tilde = [obs.samples[:n_o] for obs in obs_sets]

    m = grid.shape[0]
    worst = np.full(m, -np.inf)
    for i in range(m):
        states = propagate_w_samples(w_tilde, grid[i], dt)
        for obs, geom in zip(obs_tilde, geoms):
            fmax = cross_f_values(states, obs, geom.combined_sq).max()
            worst[i] = max(worst[i], fmax)

    feasible = worst <= 0.0
    if not np.any(feasible):
        raise DesiredDistributionInfeasible(
            f"no grid control satisfies all {n_r}x{n_o} scenario constraints "
            f"(best worst-case value {worst.min():.4g})"
        )

    costs = np.array(
        [sum(tracking_control_cost(w_set, u, tracking_target, dt)) for u in grid]
    )
    control_costs = (grid * grid).sum(axis=1)
    best = _argmin_lex(costs, control_costs, grid, mask=feasible)
    u_nom = grid[best]

    alpha = np.asarray(w_weights, float) if w_weights is not None else np.full(n_r, 1.0 / n_r)
    if alpha.shape != (n_r,):
        raise ShapeError(f"w_weights must have shape ({n_r},)")
    states_nom = propagate_w_samples(w_tilde, u_nom, dt)
    out = []
    for j, (obs, geom) in enumerate(zip(obs_tilde, geoms)):
        beta = (
            np.asarray(obs_weights[j], float)
            if obs_weights is not None
            else np.full(n_o, 1.0 / n_o)
        )
        if beta.shape != (n_o,):
            raise ShapeError(f"obs_weights[{j}] must have shape ({n_o},)")
        values = cross_f_values(states_nom, obs, geom.combined_sq).ravel()
        weights = np.multiply.outer(alpha, beta).ravel()
        out.append(
            DesiredDistribution(
                u_nom=ControlInput.from_array(u_nom),
                constraint_samples=ConstraintSampleSet(values, weights),
                w_des=SampleSet(w_tilde, alpha),
                obs_des=SampleSet(obs, beta),
            )
        )
    return out


def build_desired(
    w_set: SampleSet,
    obs_set: SampleSet,
    n_r: int,
    n_o: int,
    control_grid,
    tracking_target,
    geom: ObstacleGeometry,
    dt: float,
    w_weights=None,
    obs_weights=None,
) -> DesiredDistribution:
    """Single-obstacle convenience wrapper around build_desired_multi."""
    return build_desired_multi(
        w_set,
        [obs_set],
        n_r,
        n_o,
        control_grid,
        tracking_target,
        [geom],
        dt,
        w_weights=w_weights,
        obs_weights=[obs_weights] if obs_weights is not None else None,
    )[0]
