"""Non-parametric noise models, sample generation and stochastic state propagation.

The robot state is a 4-vector (x, vx, y, vy) driven by a discrete double
integrator: state' = A state + B (u + delta), where delta is a random
perturbation of the acceleration command drawn from a finite mixture model.
Nothing here assumes a parametric family for the overall uncertainty; every
downstream consumer works on weighted sample sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError

SCALE_FLOOR = 1e-9
WEIGHT_TOL = 1e-12

STATE_DIM = 4
CONTROL_DIM = 2


@dataclass(frozen=True)
class RobotState:
    """Planar second-order state (positions in m, velocities in m/s)."""

    x: float
    vx: float
    y: float
    vy: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise ConfigError("RobotState fields must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.vx, self.y, self.vy], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "RobotState":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (STATE_DIM,):
            raise ShapeError(f"state must have shape (4,), got {arr.shape}")
        return cls(*arr.tolist())


@dataclass(frozen=True)
class ControlInput:
    """Acceleration command (m/s^2)."""

    ax: float
    ay: float

    def as_array(self) -> np.ndarray:
        return np.array([self.ax, self.ay], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "ControlInput":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (CONTROL_DIM,):
            raise ShapeError(f"control must have shape (2,), got {arr.shape}")
        return cls(float(arr[0]), float(arr[1]))


def as_control_array(u) -> np.ndarray:
    if isinstance(u, ControlInput):
        return u.as_array()
    arr = np.asarray(u, dtype=float)
    if arr.shape != (CONTROL_DIM,):
        raise ShapeError(f"control must have shape (2,), got {arr.shape}")
    return arr


def as_state_array(s) -> np.ndarray:
    if isinstance(s, RobotState):
        return s.as_array()
    arr = np.asarray(s, dtype=float)
    if arr.shape != (STATE_DIM,):
        raise ShapeError(f"state must have shape (4,), got {arr.shape}")
    return arr


@dataclass(frozen=True)
class MixtureComponent:
    """One mixture component on a single dimension.

    kind: "gaussian" (loc/scale = mean/std), "uniform" (support
    [loc-scale, loc+scale]) or "triangular" (symmetric, mode loc,
    half-width scale).
    """

    kind: str
    weight: float
    loc: float
    scale: float

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform", "triangular"):
            raise ConfigError(f"unknown mixture component kind {self.kind!r}")
        if not np.isfinite(self.weight) or self.weight < 0:
            raise ConfigError("component weight must be a finite nonnegative number")
        if not np.isfinite(self.loc):
            raise ConfigError("component loc must be finite")
        if not np.isfinite(self.scale) or self.scale < 0:
            raise ConfigError("component scale must be finite and nonnegative")
        # Zero-variance components are clamped up to the floor instead of rejected.
        object.__setattr__(self, "scale", max(float(self.scale), SCALE_FLOOR))


@dataclass(frozen=True)
class NoiseModel:
    """Per-dimension finite mixture; one component list per output dimension."""

    dims: tuple = field(default_factory=tuple)

    def __post_init__(self):
        dims = tuple(tuple(comps) for comps in self.dims)
        if not dims:
            raise ConfigError("noise model needs at least one dimension")
        for i, comps in enumerate(dims):
            if not comps:
                raise ConfigError(f"dimension {i} has no mixture components")
            total = sum(c.weight for c in comps)
            if abs(total - 1.0) > WEIGHT_TOL:
                raise ConfigError(
                    f"dimension {i} component weights sum to {total!r}, expected 1"
                )
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return len(self.dims)

    def mean(self) -> np.ndarray:
        """Analytic mixture mean per dimension (all component kinds are symmetric)."""
        return np.array(
            [sum(c.weight * c.loc for c in comps) for comps in self.dims]
        )

    @classmethod
    def zeros(cls, dim: int) -> "NoiseModel":
        """Near-degenerate model: every dimension a single floor-scale gaussian at 0."""
        comp = MixtureComponent("gaussian", 1.0, 0.0, 0.0)
        return cls(tuple((comp,) for _ in range(dim)))


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Weighted samples standing in for an unknown distribution.

    Weights sum to 1; i.i.d. sets carry uniform 1/n weights while re-weighted
    reduced sets may carry negative entries.
    """

    samples: np.ndarray
    weights: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        weights = np.asarray(self.weights, dtype=float).ravel()
        if samples.shape[0] != weights.shape[0]:
            raise ShapeError(
                f"{samples.shape[0]} samples vs {weights.shape[0]} weights"
            )
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        total = float(weights.sum())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"weights sum to {total!r}, expected 1")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights @ self.samples

    @classmethod
    def uniform(cls, samples, seed: int | None = None) -> "SampleSet":
        samples = np.atleast_2d(np.asarray(samples, dtype=float))
        n = samples.shape[0]
        return cls(samples, np.full(n, 1.0 / n), seed)

    def take(self, count: int) -> "SampleSet":
        """First ``count`` samples, re-weighted uniformly."""
        if count < 1 or count > len(self):
            raise ShapeError(f"cannot take {count} of {len(self)} samples")
        return SampleSet.uniform(self.samples[:count], self.seed)


def step_matrices(dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Discrete double-integrator pair (A, B) for time step dt."""
    if dt <= 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    A = np.array(
        [
            [1.0, dt, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, dt],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
    B = np.array(
        [
            [0.5 * dt * dt, 0.0],
            [dt, 0.0],
            [0.0, 0.5 * dt * dt],
            [0.0, dt],
        ]
    )
    return A, B


def sample_noise(model: NoiseModel, count: int, seed) -> SampleSet:
    """Draw ``count`` i.i.d. vectors from the mixture model.

    Deterministic given (model, count, seed); the draws are made dimension by
    dimension, component masks resolved in declaration order.
    """
    if not isinstance(model, NoiseModel):
        raise ConfigError("model must be a NoiseModel")
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    out = np.empty((count, model.dim))
    for d, comps in enumerate(model.dims):
        probs = np.array([c.weight for c in comps])
        probs = probs / probs.sum()
        idx = rng.choice(len(comps), size=count, p=probs)
        col = np.empty(count)
        for k, comp in enumerate(comps):
            mask = idx == k
            m = int(mask.sum())
            if m == 0:
                continue
            if comp.kind == "gaussian":
                col[mask] = comp.loc + comp.scale * rng.standard_normal(m)
            elif comp.kind == "uniform":
                col[mask] = rng.uniform(comp.loc - comp.scale, comp.loc + comp.scale, m)
            else:  # triangular
                col[mask] = rng.triangular(
                    comp.loc - comp.scale, comp.loc, comp.loc + comp.scale, m
                )
        out[:, d] = col
    return SampleSet(out, np.full(count, 1.0 / count), seed=_seed_as_int(seed))


def _seed_as_int(seed) -> int | None:
    return int(seed) if isinstance(seed, (int, np.integer)) else None


def propagate(
    state_samples: SampleSet,
    control,
    noise: NoiseModel | None,
    dt: float,
    seed=None,
) -> SampleSet:
    """One motion-model step applied to every state sample.

    Each sample i maps to A s_i + B (u + delta_i) with a fresh delta_i drawn
    from ``noise`` (exactly zero when noise is None). Weights pass through
    unchanged.
    """
    if state_samples.dim != STATE_DIM:
        raise ShapeError(f"state samples must be 4-dimensional, got {state_samples.dim}")
    u = as_control_array(control)
    A, B = step_matrices(dt)
    n = len(state_samples)
    if noise is None:
        deltas = np.zeros((n, CONTROL_DIM))
    else:
        if noise.dim != CONTROL_DIM:
            raise ShapeError(f"control noise must be 2-dimensional, got {noise.dim}")
        deltas = sample_noise(noise, n, seed).samples
    new_states = state_samples.samples @ A.T + (u + deltas) @ B.T
    return SampleSet(new_states, state_samples.weights.copy(), state_samples.seed)


def concat_w(state_samples: SampleSet, noise_samples: SampleSet) -> SampleSet:
    """Pair the i-th state with the i-th noise draw into 6-dim w samples.

    The pairing only makes sense for matched i.i.d. draws, so both sets must
    carry identical weight vectors, which pass through unchanged.
    """
    if len(state_samples) != len(noise_samples):
        raise ShapeError(
            f"count mismatch: {len(state_samples)} states vs {len(noise_samples)} noise draws"
        )
    if state_samples.dim != STATE_DIM:
        raise ShapeError(f"state samples must be 4-dimensional, got {state_samples.dim}")
    if noise_samples.dim != CONTROL_DIM:
        raise ShapeError(f"noise samples must be 2-dimensional, got {noise_samples.dim}")
    if not np.array_equal(state_samples.weights, noise_samples.weights):
        raise ShapeError("state and noise weight vectors differ")
    w = np.hstack([state_samples.samples, noise_samples.samples])
    return SampleSet(w, state_samples.weights.copy(), state_samples.seed)
