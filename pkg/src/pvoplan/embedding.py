"""RKHS machinery: polynomial kernel, reduced-set re-weighting, kernel-trick MMD.

A weighted sample set embeds as mu = sum_i w_i k(x_i, .). Distances between
embeddings reduce to weighted contractions of Gram blocks (the kernel trick):

    |mu_a - mu_b|^2 = Ca Kaa Ca' - 2 Ca Kab Cb' + Cb Kbb Cb'.

With the degree-d polynomial kernel (1 + x'y)^d a small distance matches
moments up to order d, which is what makes the squared distance usable as a
tail-similarity surrogate. The hot path contracts Gram entries on the fly in
numba-compiled loops; the Gram blocks are never needed as dense matrices.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ShapeError
from .uncertainty import SampleSet, as_control_array
from .vo import ConstraintSampleSet, ObstacleGeometry, cross_f_values, propagate_w_samples

try:  # pragma: no cover - exercised implicitly by every kernel call
    import numba

    numba.config.THREADING_LAYER = "workqueue"
    if os.environ.get("PVO_THREADS"):
        numba.set_num_threads(
            max(1, min(int(os.environ["PVO_THREADS"]), numba.config.NUMBA_NUM_THREADS))
        )
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

RIDGE = 1e-8
NEG_CLAMP = 1e-10


@dataclass(frozen=True)
class KernelSpec:
    """Polynomial kernel (1 + x'y)^degree; degree doubles as the moment order."""

    degree: int = 2

    def __post_init__(self):
        if not isinstance(self.degree, (int, np.integer)) or self.degree < 1:
            raise ShapeError(f"kernel degree must be a positive integer, got {self.degree}")


@dataclass(frozen=True, eq=False)
class EmbeddingWeights:
    """Re-weighting of a reduced sample set; entries may be negative, sum to 1."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size == 0:
            raise ShapeError("empty weight vector")
        if abs(float(w.sum()) - 1.0) > 1e-9:
            raise NumericalError(f"weights sum to {w.sum()!r}, expected 1")
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.shape[0]


def poly_kernel(x1, x2, spec: KernelSpec) -> float:
    """(1 + x1.x2)^d for two equally sized vectors."""
    a = np.asarray(x1, dtype=float).ravel()
    b = np.asarray(x2, dtype=float).ravel()
    if a.shape != b.shape:
        raise ShapeError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float((1.0 + a @ b) ** spec.degree)


def gram_matrix(x1: np.ndarray, x2: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Dense Gram block for (n, d) x (m, d) vector samples."""
    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    x2 = np.atleast_2d(np.asarray(x2, dtype=float))
    if x1.shape[1] != x2.shape[1]:
        raise ShapeError(f"dimension mismatch: {x1.shape} vs {x2.shape}")
    return (1.0 + x1 @ x2.T) ** spec.degree


if HAVE_NUMBA:

    @numba.njit(cache=True, parallel=True, fastmath=True)
    def _quad_d1(fa, ca, fb, cb):  # pragma: no cover - compiled
        total = 0.0
        for i in numba.prange(fa.shape[0]):
            fi = fa[i]
            acc = 0.0
            for j in range(fb.shape[0]):
                acc += cb[j] * (1.0 + fi * fb[j])
            total += ca[i] * acc
        return total

    @numba.njit(cache=True, parallel=True, fastmath=True)
    def _quad_d2(fa, ca, fb, cb):  # pragma: no cover - compiled
        total = 0.0
        for i in numba.prange(fa.shape[0]):
            fi = fa[i]
            acc = 0.0
            for j in range(fb.shape[0]):
                t = 1.0 + fi * fb[j]
                acc += cb[j] * (t * t)
            total += ca[i] * acc
        return total

    @numba.njit(cache=True, parallel=True, fastmath=True)
    def _quad_d3(fa, ca, fb, cb):  # pragma: no cover - compiled
        total = 0.0
        for i in numba.prange(fa.shape[0]):
            fi = fa[i]
            acc = 0.0
            for j in range(fb.shape[0]):
                t = 1.0 + fi * fb[j]
                acc += cb[j] * (t * t * t)
            total += ca[i] * acc
        return total

    @numba.njit(cache=True, parallel=True, fastmath=True)
    def _quad_dn(fa, ca, fb, cb, d):  # pragma: no cover - compiled
        total = 0.0
        for i in numba.prange(fa.shape[0]):
            fi = fa[i]
            acc = 0.0
            for j in range(fb.shape[0]):
                t = 1.0 + fi * fb[j]
                p = t
                for _ in range(d - 1):
                    p *= t
                acc += cb[j] * p
            total += ca[i] * acc
        return total

    def _quad_form(fa, ca, fb, cb, d: int) -> float:
        if d == 1:
            return _quad_d1(fa, ca, fb, cb)
        if d == 2:
            return _quad_d2(fa, ca, fb, cb)
        if d == 3:
            return _quad_d3(fa, ca, fb, cb)
        return _quad_dn(fa, ca, fb, cb, d)

else:  # pragma: no cover - numba is a hard dependency, kept for safety

    def _quad_form(fa, ca, fb, cb, d: int) -> float:
        total = 0.0
        block = 1024
        for start in range(0, fa.shape[0], block):
            fblk = fa[start : start + block]
            K = (1.0 + np.multiply.outer(fblk, fb)) ** d
            total += ca[start : start + block] @ (K @ cb)
        return float(total)


def warmup(degrees=(1, 2, 3)) -> None:
    """Force JIT compilation of the contraction kernels (call before timing)."""
    f = np.array([0.0, 1.0])
    c = np.array([0.5, 0.5])
    for d in degrees:
        _quad_form(f, c, f, c, int(d))


def squash_constraint_values(values: np.ndarray, scale: float) -> np.ndarray:
    """Bounded, sign-preserving transform applied to f values before embedding.

    tanh(f / scale) keeps near-boundary resolution (slope 1 at f = 0, where
    the chance constraint lives) while saturating deep-safe samples, so
    polynomial Gram contractions stay numerically meaningful no matter how
    far the geometry drifts from the interaction zone.
    """
    return np.tanh(np.asarray(values, dtype=float) / scale)


def embedding_inner(a: ConstraintSampleSet, b: ConstraintSampleSet, spec: KernelSpec) -> float:
    """<mu_a, mu_b> via on-the-fly Gram contraction of the scalar sample sets."""
    return float(
        _quad_form(
            np.ascontiguousarray(a.values),
            np.ascontiguousarray(a.weights),
            np.ascontiguousarray(b.values),
            np.ascontiguousarray(b.weights),
            spec.degree,
        )
    )


def mmd_squared(a: ConstraintSampleSet, b: ConstraintSampleSet, spec: KernelSpec) -> float:
    """Squared MMD between two embedded constraint sample sets.

    Computed as Ca Kaa Ca' - 2 Ca Kab Cb' + Cb Kbb Cb'; tiny negative
    round-off is clamped to zero. The cross term is evaluated in a canonical
    argument orientation so the result is bit-identical under swapping.
    """
    key_a = (len(a), a.values.tobytes(), a.weights.tobytes())
    key_b = (len(b), b.values.tobytes(), b.weights.tobytes())
    x, y = (a, b) if key_a <= key_b else (b, a)
    value = (
        embedding_inner(x, x, spec)
        - 2.0 * embedding_inner(x, y, spec)
        + embedding_inner(y, y, spec)
    )
    return max(value, 0.0)


def reduced_set_weights(full: SampleSet, reduced: SampleSet, spec: KernelSpec) -> EmbeddingWeights:
    """Re-weight a reduced sample set so its embedding tracks the full set's.

    Solves  min_a |(1/N) sum_i k(xhat_i, .) - sum_p a_p k(x_p, .)|^2  subject
    to sum a = 1, via the KKT system on the (ridged) reduced Gram matrix. The
    result never scores worse than uniform weights on that objective; if the
    solve degrades past uniform it falls back to uniform.
    """
    n, N = len(reduced), len(full)
    if n > N:
        raise ShapeError(f"reduced set larger than full set ({n} > {N})")
    if full.dim != reduced.dim:
        raise ShapeError(f"dimension mismatch: {full.dim} vs {reduced.dim}")
    K_nn = gram_matrix(reduced.samples, reduced.samples, spec)
    K_nN = gram_matrix(reduced.samples, full.samples, spec)
    target = K_nN @ np.full(N, 1.0 / N)
    kkt = np.zeros((n + 1, n + 1))
    kkt[:n, :n] = 2.0 * (K_nn + RIDGE * np.eye(n))
    kkt[:n, n] = 1.0
    kkt[n, :n] = 1.0
    rhs = np.concatenate([2.0 * target, [1.0]])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular KKT system in reduced-set solve: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise NumericalError("non-finite solution in reduced-set solve")
    alpha = sol[:n]
    alpha = alpha / alpha.sum()

    def objective(a):
        return a @ K_nn @ a - 2.0 * a @ target

    uniform = np.full(n, 1.0 / n)
    if objective(alpha) > objective(uniform):
        alpha = uniform
    return EmbeddingWeights(alpha)


def consistency_error(
    w_set: SampleSet,
    obs_set: SampleSet,
    control,
    small_n: int,
    large_l: int,
    spec: KernelSpec,
    geom: ObstacleGeometry,
    dt: float,
    seed=None,
) -> float:
    """Squared MMD between an n-subsample embedding of f and the l-sample truth.

    The first ``large_l`` samples of each input set form the ground-truth
    pool (uniform 1/l^2 pair weights); ``small_n`` indices are drawn from
    that pool without replacement for each set. Values pass through the
    planner's embedding transform (squash at the squared combined radius)
    first. Zero when small_n == large_l.
    """
    if small_n < 1 or small_n > large_l:
        raise ShapeError(f"need 1 <= small_n <= large_l, got {small_n} > {large_l}")
    if len(w_set) < large_l or len(obs_set) < large_l:
        raise ShapeError(
            f"sets of {len(w_set)}/{len(obs_set)} samples cannot supply l={large_l}"
        )
    u = as_control_array(control)
    w_pool = w_set.samples[:large_l]
    obs_pool = obs_set.samples[:large_l]
    rng = np.random.default_rng(seed)
    w_idx = rng.choice(large_l, size=small_n, replace=False)
    obs_idx = rng.choice(large_l, size=small_n, replace=False)

    scale = geom.combined_sq

    def f_cross(w, obs):
        states = propagate_w_samples(w, u, dt)
        return squash_constraint_values(
            cross_f_values(states, obs, geom.combined_sq).ravel(), scale
        )

    truth = ConstraintSampleSet.uniform(f_cross(w_pool, obs_pool))
    estimate = ConstraintSampleSet.uniform(f_cross(w_pool[w_idx], obs_pool[obs_idx]))
    return mmd_squared(estimate, truth, spec)
