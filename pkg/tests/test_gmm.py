import numpy as np
import pytest

from pvoplan import ConstraintSampleSet, TailWarning, fit_gmm, kl_divergence
from pvoplan.gmm import VAR_FLOOR, GmmModel


def gaussian_kl(mu0, var0, mu1, var1):
    """Closed-form KL(N0 || N1) oracle."""
    return 0.5 * (np.log(var1 / var0) + (var0 + (mu0 - mu1) ** 2) / var1 - 1.0)


class TestFitGmm:
    def test_identical_samples_collapse_to_floor(self):
        samples = ConstraintSampleSet.uniform(np.full(20, 3.25))
        model = fit_gmm(samples, k=1, seed=0)
        assert model.means[0] == pytest.approx(3.25)
        assert model.variances[0] == pytest.approx(VAR_FLOOR)

    def test_recovers_well_separated_modes(self):
        rng = np.random.default_rng(0)
        x = np.concatenate([rng.normal(-10, 1, 400), rng.normal(10, 1, 400)])
        model = fit_gmm(ConstraintSampleSet.uniform(x), k=2, seed=0)
        means = np.sort(model.means)
        assert abs(means[0] + 10) < 0.5 and abs(means[1] - 10) < 0.5
        np.testing.assert_allclose(model.weights, 0.5, atol=0.1)

    def test_loglik_nondecreasing(self):
        rng = np.random.default_rng(1)
        x = np.concatenate([rng.normal(-2, 0.5, 100), rng.normal(1, 2.0, 150)])
        model = fit_gmm(ConstraintSampleSet.uniform(x), k=3, seed=0)
        trace = model.loglik_trace
        assert len(trace) >= 2
        assert np.all(np.diff(trace) >= -1e-9)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(2)
        samples = ConstraintSampleSet.uniform(rng.normal(0, 1, 200))
        a = fit_gmm(samples, k=3, seed=5)
        b = fit_gmm(samples, k=3, seed=5)
        np.testing.assert_array_equal(a.means, b.means)
        np.testing.assert_array_equal(a.weights, b.weights)
        np.testing.assert_array_equal(a.variances, b.variances)

    def test_density_integrates_to_one(self):
        rng = np.random.default_rng(3)
        x = np.concatenate([rng.normal(-3, 0.4, 150), rng.normal(2, 1.5, 150)])
        model = fit_gmm(ConstraintSampleSet.uniform(x), k=3, seed=0)
        grid = np.linspace(-30, 30, 20001)
        mass = np.trapezoid(model.pdf(grid), grid)
        assert mass == pytest.approx(1.0, abs=1e-3)

    def test_negative_weights_rejected(self):
        s = ConstraintSampleSet(np.arange(4.0), np.array([0.6, 0.6, 0.4, -0.6]))
        with pytest.raises(ValueError):
            fit_gmm(s, k=1)

    def test_too_few_samples_rejected(self):
        with pytest.raises(Exception):
            fit_gmm(ConstraintSampleSet.uniform([1.0, 2.0]), k=3)

    def test_weighted_fit_matches_replicated_fit(self):
        # weights 2:1 behave like duplicated samples
        x = np.array([0.0, 1.0, 4.0])
        weighted = fit_gmm(
            ConstraintSampleSet(x, np.array([0.5, 0.25, 0.25])), k=1, seed=0
        )
        replicated = fit_gmm(
            ConstraintSampleSet.uniform([0.0, 0.0, 1.0, 4.0]), k=1, seed=0
        )
        assert weighted.means[0] == pytest.approx(replicated.means[0])
        assert weighted.variances[0] == pytest.approx(replicated.variances[0])


def single_gaussian(mu, var):
    return GmmModel(np.array([1.0]), np.array([mu]), np.array([var]))


class TestKlDivergence:
    def test_self_divergence_near_zero(self):
        rng = np.random.default_rng(4)
        model = fit_gmm(ConstraintSampleSet.uniform(rng.normal(0, 1, 300)), k=2, seed=0)
        est = kl_divergence(model, model, mc_samples=4000, seed=0)
        assert abs(est) < 1e-9  # log ratio is identically zero for p == q

    def test_unit_gaussians_shifted_mean(self):
        # oracle: KL(N(0,1) || N(1,1)) = 0.5; MC se ~ 1/sqrt(m)
        p = single_gaussian(0.0, 1.0)
        q = single_gaussian(1.0, 1.0)
        est = kl_divergence(p, q, mc_samples=100_000, seed=1)
        assert est == pytest.approx(0.5, abs=0.02)
        assert est == pytest.approx(gaussian_kl(0, 1, 1, 1), abs=0.02)

    def test_asymmetry_matches_closed_forms(self):
        p = single_gaussian(0.0, 1.0)
        q = single_gaussian(0.0, 4.0)
        kl_pq = kl_divergence(p, q, mc_samples=200_000, seed=2)
        kl_qp = kl_divergence(q, p, mc_samples=200_000, seed=3)
        assert kl_pq == pytest.approx(0.5 * (np.log(4) + 0.25 - 1), abs=0.02)
        assert kl_qp == pytest.approx(0.5 * (-np.log(4) + 4 - 1), abs=0.03)
        assert kl_pq != kl_qp

    def test_deterministic_given_seed(self):
        p = single_gaussian(0.0, 1.0)
        q = single_gaussian(0.5, 2.0)
        assert kl_divergence(p, q, 500, seed=9) == kl_divergence(p, q, 500, seed=9)

    def test_tail_underflow_warns_and_floors(self):
        p = single_gaussian(0.0, 1.0)
        q = single_gaussian(1000.0, 1e-6)
        with pytest.warns(TailWarning):
            est = kl_divergence(p, q, mc_samples=100, seed=0)
        assert np.isfinite(est)

    def test_self_divergence_within_three_standard_errors(self):
        rng = np.random.default_rng(6)
        x = np.concatenate([rng.normal(-1, 0.3, 200), rng.normal(2, 1.0, 200)])
        model = fit_gmm(ConstraintSampleSet.uniform(x), k=2, seed=0)
        m = 2000
        draws = model.sample(m, seed=7)
        log_ratio = model.logpdf(draws) - model.logpdf(draws)
        est = kl_divergence(model, model, mc_samples=m, seed=7)
        se = max(np.std(log_ratio) / np.sqrt(m), 1e-12)
        assert abs(est) <= 3 * se + 1e-12
