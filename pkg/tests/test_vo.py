import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvoplan import (
    DegenerateVelocityWarning,
    ObstacleGeometry,
    SampleSet,
    ShapeError,
    pvo_samples,
    vo_coefficients,
    vo_of_control,
    vo_value,
)

GEOM_1 = ObstacleGeometry(0.5, 0.5)  # combined radius 1


class TestVoValue:
    def test_head_on_course_positive(self):
        assert vo_value([5, 0], [1, 0], GEOM_1) == pytest.approx(1.0)

    def test_perpendicular_course_negative(self):
        assert vo_value([5, 0], [0, 1], GEOM_1) == pytest.approx(-24.0)

    def test_hand_evaluated_oblique_case(self):
        # oracle: (25)^2/25 - 25 + 4 with r = v = (3,4), combined radius 2
        geom = ObstacleGeometry(1.0, 1.0)
        assert vo_value([3, 4], [3, 4], geom) == pytest.approx(4.0)

    def test_degenerate_velocity_uses_static_overlap_limit(self):
        with pytest.warns(DegenerateVelocityWarning):
            out = vo_value([3, 0], [0, 0], GEOM_1)
        assert out == pytest.approx(-9.0 + 1.0)

    def test_shape_check(self):
        with pytest.raises(ShapeError):
            vo_value([1, 2, 3], [1, 0], GEOM_1)


finite = st.floats(min_value=-50, max_value=50, allow_nan=False)
nonzero_vel = st.tuples(finite, finite).filter(lambda v: v[0] ** 2 + v[1] ** 2 > 1e-6)


@settings(max_examples=100, deadline=None)
@given(
    r=st.tuples(finite, finite),
    v=nonzero_vel,
    c=st.floats(min_value=0.01, max_value=100),
)
def test_vo_value_invariant_under_velocity_scaling(r, v, c):
    # the ratio (r.v)^2/|v|^2 is 0-homogeneous in v, so f is unchanged
    base = vo_value(r, v, GEOM_1)
    scaled = vo_value(r, (c * v[0], c * v[1]), GEOM_1)
    assert scaled == pytest.approx(base, rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(r=st.tuples(finite, finite), v=nonzero_vel)
def test_vo_value_point_symmetry(r, v):
    assert vo_value(r, v, GEOM_1) == vo_value((-r[0], -r[1]), (-v[0], -v[1]), GEOM_1)


class TestVoOfControl:
    def test_both_static_gives_overlap_limit(self):
        w = np.zeros(6)
        obs = np.array([10.0, 0, 0, 0])
        with pytest.warns(DegenerateVelocityWarning):
            out = vo_of_control(w, obs, [0, 0], GEOM_1, dt=0.1)
        assert out == pytest.approx(-100.0 + 1.0)

    def test_moving_robot_static_obstacle(self):
        # oracle: robot steps to (0.1, 1, 0, 0); r=(-4.9, 0), v=(1, 0)
        w = np.array([0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
        obs = np.array([5.0, 0, 0, 0])
        out = vo_of_control(w, obs, [0, 0], GEOM_1, dt=0.1)
        assert out == pytest.approx(24.01 - 24.01 + 1.0)

    def test_quadratic_form_cross_check_on_grid(self):
        # with control position-effect zeroed, coefficients reproduce f exactly
        rng = np.random.default_rng(2)
        w = rng.normal(0, 1, 6)
        obs = np.array([3.0, -0.5, 1.0, 0.4])
        dt = 0.2
        coeffs = vo_coefficients(w, obs, GEOM_1, dt)
        for ux in np.linspace(-2, 2, 5):
            for uy in np.linspace(-2, 2, 5):
                direct = vo_of_control(
                    w, obs, [ux, uy], GEOM_1, dt, control_affects_position=False
                )
                assert coeffs.f_value([ux, uy]) == pytest.approx(direct, abs=1e-9)


class TestVoCoefficients:
    def test_zero_control_returns_h6(self):
        w = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        obs = np.array([4.0, 0.0, -1.0, 0.0])
        coeffs = vo_coefficients(w, obs, GEOM_1, dt=0.1)
        assert coeffs.cleared([0.0, 0.0]) == pytest.approx(coeffs.h6)

    def test_sign_consistency_with_direct_path(self):
        rng = np.random.default_rng(7)
        w = np.array([0.0, 1.0, 0.0, -0.5, 0.1, 0.05])
        obs = np.array([2.0, -1.0, 0.5, 0.2])
        dt = 0.25
        coeffs = vo_coefficients(w, obs, GEOM_1, dt)
        for ux in np.linspace(-3, 3, 5):
            for uy in np.linspace(-3, 3, 5):
                direct = vo_of_control(
                    w, obs, [ux, uy], GEOM_1, dt, control_affects_position=False
                )
                assert np.sign(coeffs.cleared([ux, uy])) == np.sign(direct)

    def test_coefficients_finite_for_random_pairs(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            w = rng.normal(0, 2, 6)
            obs = rng.normal(0, 2, 4)
            c = vo_coefficients(w, obs, GEOM_1, dt=0.1)
            values = [c.h1, c.h2, c.h3, c.h4, c.h5, c.h6]
            assert np.all(np.isfinite(values))


class TestPvoSamples:
    def test_single_pair_equals_direct_evaluation(self):
        w = SampleSet.uniform([[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]])
        obs = SampleSet.uniform([[5.0, 0.0, 0.0, 0.0]])
        out = pvo_samples(w, obs, [0, 0], GEOM_1, dt=0.1)
        direct = vo_of_control(w.samples[0], obs.samples[0], [0, 0], GEOM_1, 0.1)
        assert len(out) == 1
        assert out.values[0] == pytest.approx(direct)
        assert out.weights[0] == pytest.approx(1.0)

    def test_cross_pair_cardinality_and_uniform_weights(self):
        rng = np.random.default_rng(3)
        w = SampleSet.uniform(rng.normal(0, 1, (50, 6)))
        obs = SampleSet.uniform(rng.normal(0, 1, (50, 4)) + np.array([4, 0, 0, 0]))
        out = pvo_samples(w, obs, [0.5, -0.5], GEOM_1, dt=0.1)
        assert len(out) == 2500
        np.testing.assert_allclose(out.weights, 1 / 2500)
        assert out.weights.sum() == pytest.approx(1.0, abs=1e-9)

    def test_weighted_sets_produce_exact_outer_product(self):
        rng = np.random.default_rng(4)
        aw = np.array([0.7, 0.5, -0.2])
        bw = np.array([0.3, 0.9, -0.2])
        w = SampleSet(rng.normal(0, 1, (3, 6)), aw)
        obs = SampleSet(rng.normal(0, 1, (3, 4)) + np.array([5, 0, 0, 0]), bw)
        out = pvo_samples(w, obs, [0, 0], GEOM_1, dt=0.1)
        np.testing.assert_allclose(out.weights, np.multiply.outer(aw, bw).ravel())

    def test_values_match_elementwise_direct_path(self):
        rng = np.random.default_rng(5)
        w = SampleSet.uniform(rng.normal(0, 1, (4, 6)))
        obs = SampleSet.uniform(rng.normal(0, 1, (3, 4)) + np.array([4, 0, 0, 0]))
        out = pvo_samples(w, obs, [1.0, 0.2], GEOM_1, dt=0.2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateVelocityWarning)
            k = 0
            for p in range(4):
                for q in range(3):
                    direct = vo_of_control(
                        w.samples[p], obs.samples[q], [1.0, 0.2], GEOM_1, 0.2
                    )
                    assert out.values[k] == pytest.approx(direct, abs=1e-12)
                    k += 1
