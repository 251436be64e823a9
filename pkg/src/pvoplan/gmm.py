"""1-D Gaussian mixture fitting and Monte-Carlo KL divergence.

The baseline distribution-matching route: approximate both the empirical
constraint distribution and its target with GMMs, then score controls by the
KL divergence between the fits. KL between two mixtures has no closed form,
so it is estimated by seeded Monte-Carlo sampling from the first argument.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, TailWarning
from .vo import ConstraintSampleSet

VAR_FLOOR = 1e-9
DENSITY_FLOOR = 1e-300
_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True, eq=False)
class GmmModel:
    """Weights, means and variances of a 1-D Gaussian mixture."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    loglik_trace: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        m = np.asarray(self.means, dtype=float).ravel()
        v = np.asarray(self.variances, dtype=float).ravel()
        if not (w.shape == m.shape == v.shape) or w.size == 0:
            raise ShapeError("weights, means and variances must share a nonzero length")
        if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        if np.any(v < VAR_FLOOR * (1 - 1e-12)):
            raise ValueError(f"variances must be >= {VAR_FLOOR}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)
        object.__setattr__(self, "loglik_trace", np.asarray(self.loglik_trace, dtype=float))

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    def component_logpdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        d = x[:, None] - self.means[None, :]
        return (
            -0.5 * d * d / self.variances[None, :]
            - 0.5 * np.log(self.variances[None, :])
            - 0.5 * _LOG_2PI
            + np.log(self.weights[None, :])
        )

    def logpdf(self, x) -> np.ndarray:
        lp = self.component_logpdf(x)
        m = lp.max(axis=1, keepdims=True)
        return m[:, 0] + np.log(np.exp(lp - m).sum(axis=1))

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def sample(self, count: int, seed=None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        comp = rng.choice(self.n_components, size=count, p=self.weights)
        return self.means[comp] + np.sqrt(self.variances[comp]) * rng.standard_normal(count)


def _kmeans_init(x, wts, k, seed):
    """Quantile-spaced centers refined by a few weighted 1-D k-means sweeps."""
    centers = np.quantile(x, (np.arange(k) + 0.5) / k)
    if k > 1 and np.unique(centers).size < k:
        # duplicate quantiles on clumped data; deterministic jitter splits them
        jitter = np.random.default_rng(seed).normal(0.0, 1e-6, size=k)
        centers = centers + jitter * max(1.0, np.abs(centers).max())
    for _ in range(25):
        assign = np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)
        new = centers.copy()
        for j in range(k):
            mask = assign == j
            mass = wts[mask].sum()
            if mass > 0:
                new[j] = (wts[mask] * x[mask]).sum() / mass
        if np.allclose(new, centers):
            break
        centers = new
    assign = np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)
    weights = np.empty(k)
    variances = np.empty(k)
    for j in range(k):
        mask = assign == j
        mass = wts[mask].sum()
        weights[j] = max(mass, 1e-12)
        if mass > 0:
            variances[j] = (wts[mask] * (x[mask] - centers[j]) ** 2).sum() / mass
        else:
            variances[j] = 0.0
    weights = weights / weights.sum()
    variances = np.maximum(variances, VAR_FLOOR)
    return weights, centers, variances


def fit_gmm(
    samples: ConstraintSampleSet,
    k: int,
    seed=None,
    max_iter: int = 200,
    tol: float = 1e-6,
) -> GmmModel:
    """EM fit of a k-component 1-D mixture to weighted scalar samples.

    The weighted log-likelihood is non-decreasing across iterations (recorded
    in ``loglik_trace``); fitting stops once its delta drops below tol.
    Degenerate inputs (fewer distinct values than components) collapse onto
    the variance floor rather than erroring. Sample weights must be
    nonnegative for EM to make sense.
    """
    if k < 1:
        raise ShapeError(f"component count must be >= 1, got {k}")
    if len(samples) < k:
        raise ShapeError(f"{len(samples)} samples cannot support {k} components")
    if np.any(samples.weights < 0):
        raise ValueError("fit_gmm requires nonnegative sample weights")
    x = samples.values
    wts = samples.weights / samples.weights.sum()

    weights, means, variances = _kmeans_init(x, wts, k, seed)
    trace = []
    prev_ll = -np.inf
    for _ in range(max_iter):
        model = GmmModel(weights, means, variances)
        lp = model.component_logpdf(x)
        m = lp.max(axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.exp(lp - m).sum(axis=1))
        ll = float(wts @ lse)
        trace.append(ll)
        resp = np.exp(lp - lse[:, None])
        mass = wts[:, None] * resp
        nk = mass.sum(axis=0)
        nk = np.maximum(nk, 1e-300)
        new_means = (mass * x[:, None]).sum(axis=0) / nk
        new_vars = (mass * (x[:, None] - new_means[None, :]) ** 2).sum(axis=0) / nk
        weights = nk / nk.sum()
        means = new_means
        variances = np.maximum(new_vars, VAR_FLOOR)
        if abs(ll - prev_ll) < tol:
            break
        prev_ll = ll
    return GmmModel(weights, means, variances, np.asarray(trace))


def kl_divergence(p: GmmModel, q: GmmModel, mc_samples: int = 1000, seed=None) -> float:
    """Monte-Carlo estimate of KL(p || q) = E_p[log p(x) - log q(x)].

    Deterministic given the seed. Points where q underflows are floored at
    1e-300 and flagged with a TailWarning.
    """
    if mc_samples < 1:
        raise ShapeError(f"mc_samples must be >= 1, got {mc_samples}")
    x = p.sample(mc_samples, seed)
    log_p = p.logpdf(x)
    q_dens = q.pdf(x)
    under = q_dens < DENSITY_FLOOR
    if np.any(under):
        warnings.warn(
            f"q density underflowed at {int(under.sum())} of {mc_samples} samples",
            TailWarning,
            stacklevel=2,
        )
        q_dens = np.maximum(q_dens, DENSITY_FLOOR)
    return float(np.mean(log_p - np.log(q_dens)))
