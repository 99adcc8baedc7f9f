"""Newton-Raphson M-steps checked against brute-force likelihood search,
score-residual replay, and the stated edge-case behaviors."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from loghmm.distributions import (
    NEGBINOM_R_CEILING,
    VONMISES_KAPPA_CEILING,
    FitWarning,
    WeightedSample,
    fit_beta_nr,
    fit_chisquared,
    fit_gamma_nr,
    fit_negbinom_nr,
    fit_vonmises,
    fit_weibull_nr,
)
from loghmm.special import bessel_i1_i0_ratio, digamma, trigamma


def ws(values, weights=None):
    values = np.asarray(values, dtype=float)
    if weights is None:
        return WeightedSample.with_unit_weights(values)
    return WeightedSample(values, np.asarray(weights, dtype=float))


class TestGamma:
    def test_constant_data_is_degenerate(self):
        with pytest.raises(ValueError, match="degenerate"):
            fit_gamma_nr(ws([1.0, 1.0, 1.0]))

    def test_matches_brute_force(self):
        y = [0.5, 1.0, 1.5, 3.0]
        w = [1.0, 1.0, 1.0, 1.0]
        d = fit_gamma_nr(ws(y, w))
        ybar = sum(y) / len(y)
        alpha_star = oracles.maximize_1d(
            lambda a: oracles.weighted_loglik(oracles.gamma_lp, y, w, a, a / ybar),
            0.05,
            200.0,
            log_grid=True,
        )
        assert d.shape == pytest.approx(alpha_star, abs=1e-4)
        assert d.rate == pytest.approx(alpha_star / ybar, abs=1e-4)

    def test_weight_scaling_leaves_fit_unchanged(self):
        y = [0.4, 1.1, 2.0, 0.8]
        w = [1.0, 2.0, 0.5, 1.5]
        a = fit_gamma_nr(ws(y, w))
        b = fit_gamma_nr(ws(y, [10 * v for v in w]))
        assert b.shape == pytest.approx(a.shape, rel=1e-10)
        assert b.rate == pytest.approx(a.rate, rel=1e-10)

    def test_score_residual_replay(self):
        y = [0.4, 1.1, 2.0, 0.8, 3.3]
        w = [1.0, 2.0, 0.5, 1.5, 1.0]
        d = fit_gamma_nr(ws(y, w))
        n = sum(w)
        ybar = sum(wi * yi for wi, yi in zip(w, y)) / n
        c = math.log(ybar) - sum(wi * math.log(yi) for wi, yi in zip(w, y)) / n
        assert abs(math.log(d.shape) - digamma(d.shape) - c) <= 1e-10


class TestBeta:
    def test_matches_brute_force(self):
        y = [0.2, 0.4, 0.6, 0.8]
        w = [1.0] * 4
        d = fit_beta_nr(ws(y, w))
        a_star, b_star = oracles.maximize_2d(
            lambda a, b: oracles.weighted_loglik(oracles.beta_lp, y, w, a, b),
            (0.1, 20.0),
            (0.1, 20.0),
        )
        assert d.alpha == pytest.approx(a_star, abs=1e-3)
        assert d.beta == pytest.approx(b_star, abs=1e-3)

    def test_symmetric_data_gives_equal_parameters(self):
        y = [0.1, 0.35, 0.65, 0.9, 0.25, 0.75]
        d = fit_beta_nr(ws(y))
        assert d.alpha == pytest.approx(d.beta, abs=1e-8)

    def test_residual_replay(self):
        y = [0.15, 0.5, 0.7, 0.33, 0.8]
        w = [1.0, 0.5, 2.0, 1.0, 0.7]
        d = fit_beta_nr(ws(y, w))
        n = sum(w)
        m1 = sum(wi * math.log(yi) for wi, yi in zip(w, y)) / n
        m2 = sum(wi * math.log(1 - yi) for wi, yi in zip(w, y)) / n
        r1 = digamma(d.alpha) - digamma(d.alpha + d.beta) - m1
        r2 = digamma(d.beta) - digamma(d.alpha + d.beta) - m2
        assert max(abs(r1), abs(r2)) <= 1e-10

    def test_boundary_observations_rejected(self):
        with pytest.raises(ValueError):
            fit_beta_nr(ws([0.0, 0.5]))
        with pytest.raises(ValueError):
            fit_beta_nr(ws([0.5, 1.0]))

    def test_overdispersed_seed_falls_back_to_flat(self):
        # Two-point 0/1-ish data has variance >= ybar(1-ybar); the moment seed
        # is invalid and the fit must still run from (1, 1).
        d = fit_beta_nr(ws([0.02, 0.98]))
        assert d.alpha > 0 and d.beta > 0


class TestWeibull:
    def test_residual_formula_at_k_one(self):
        y = [0.5, 1.0, 2.0, 4.0]
        w = [1.0] * 4
        mean_log = sum(math.log(v) for v in y) / len(y)
        direct = 1.0 + mean_log - sum(v * math.log(v) for v in y) / sum(y)
        # replicate the fitter's residual via its internals
        from loghmm.distributions import _weibull_log_moment_ratios

        _, r1, _ = _weibull_log_moment_ratios(1.0, np.log(np.array(y)), np.array(w))
        resid = 1.0 / 1.0 + mean_log - r1
        assert resid == pytest.approx(direct, abs=1e-12)

    def test_matches_brute_force(self):
        y = [0.5, 1.0, 2.0, 4.0]
        w = [1.0] * 4
        d = fit_weibull_nr(ws(y, w))

        def profiled(k):
            s = sum(wi * yi**k for wi, yi in zip(w, y)) / sum(w)
            lam = s ** (1.0 / k)
            return oracles.weighted_loglik(oracles.weibull_lp, y, w, k, lam)

        k_star = oracles.maximize_1d(profiled, 0.05, 40.0, log_grid=True)
        assert d.shape == pytest.approx(k_star, abs=1e-4)

    def test_scale_equivariance(self):
        y = np.array([0.7, 1.3, 2.9, 0.4, 1.8])
        w = np.array([1.0, 0.5, 1.5, 1.0, 2.0])
        base = fit_weibull_nr(ws(y, w))
        scaled = fit_weibull_nr(ws(3.7 * y, w))
        assert scaled.shape == pytest.approx(base.shape, abs=1e-8)
        assert scaled.scale == pytest.approx(3.7 * base.scale, rel=1e-8)

    def test_non_positive_observation_rejected(self):
        with pytest.raises(ValueError):
            fit_weibull_nr(ws([1.0, 0.0]))


class TestVonMises:
    def test_symmetric_angles_give_zero_mean(self):
        d = fit_vonmises(ws([0.1, -0.1]))
        assert d.mu == pytest.approx(0.0, abs=1e-12)

    def test_concentration_solves_ratio_equation_via_bisection(self):
        # Build a sample whose weighted resultant length is exactly 0.5.
        rbar = 0.5
        theta = math.acos(rbar)
        d = fit_vonmises(ws([theta, -theta]))
        lo, hi = 1e-9, 50.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if bessel_i1_i0_ratio(mid) < rbar:
                lo = mid
            else:
                hi = mid
        kappa_star = 0.5 * (lo + hi)
        assert abs(bessel_i1_i0_ratio(d.kappa) - rbar) <= 1e-10
        assert d.kappa == pytest.approx(kappa_star, abs=1e-6)

    def test_wraparound_mean_near_zero(self):
        angles = [math.radians(350.0), math.radians(10.0)]
        d = fit_vonmises(ws(angles))
        assert abs(oracles.wrapped_angle_diff(d.mu, 0.0)) < 1e-9

    def test_point_mass_clamps_concentration(self):
        with pytest.warns(FitWarning):
            d = fit_vonmises(ws([1.2, 1.2, 1.2]))
        assert d.kappa == VONMISES_KAPPA_CEILING

    def test_uniform_angles_give_zero_concentration(self):
        angles = [0.0, math.pi / 2, math.pi, -math.pi / 2]
        d = fit_vonmises(ws(angles))
        assert d.kappa == 0.0

    def test_matches_brute_force_2d(self):
        y = [0.3, 0.9, -0.2, 0.5, 1.4]
        w = [1.0, 0.8, 1.2, 0.5, 1.0]
        d = fit_vonmises(ws(y, w))
        mu_star, kappa_star = oracles.maximize_2d(
            lambda m, k: oracles.weighted_loglik(oracles.vonmises_lp, y, w, m, k),
            (-math.pi, math.pi),
            (1e-6, 30.0),
        )
        assert abs(oracles.wrapped_angle_diff(d.mu, mu_star)) <= 1e-3
        assert d.kappa == pytest.approx(kappa_star, abs=1e-3)


class TestNegativeBinomial:
    def test_matches_brute_force(self):
        y = [0.0, 1.0, 2.0, 5.0, 9.0]
        w = [1.0] * 5
        d = fit_negbinom_nr(ws(y, w))
        ybar = sum(y) / len(y)

        def profiled(r):
            return oracles.weighted_loglik(oracles.negbinom_lp, y, w, r, r / (r + ybar))

        r_star = oracles.maximize_1d(profiled, 0.05, 500.0, log_grid=True)
        assert d.r == pytest.approx(r_star, abs=1e-3)

    def test_profile_identity(self):
        y = [0.0, 2.0, 3.0, 7.0, 1.0, 12.0]
        w = [1.0, 0.5, 1.0, 2.0, 1.0, 0.5]
        d = fit_negbinom_nr(ws(y, w))
        ybar = sum(wi * yi for wi, yi in zip(w, y)) / sum(w)
        assert d.p * (d.r + ybar) == pytest.approx(d.r, abs=1e-12)

    def test_all_zero_observations_degenerate(self):
        with pytest.raises(ValueError, match="degenerate"):
            fit_negbinom_nr(ws([0.0, 0.0, 0.0]))

    def test_underdispersed_returns_near_poisson_boundary(self):
        with pytest.warns(FitWarning, match="near-Poisson"):
            d = fit_negbinom_nr(ws([3.0, 3.0, 4.0, 3.0, 3.0]))
        assert d.r == NEGBINOM_R_CEILING

    def test_score_replay(self):
        y = [0.0, 1.0, 2.0, 5.0, 9.0, 3.0]
        w = [1.0, 2.0, 1.0, 0.5, 1.0, 1.0]
        d = fit_negbinom_nr(ws(y, w))
        n = sum(w)
        ybar = sum(wi * yi for wi, yi in zip(w, y)) / n
        score = (
            sum(wi * (digamma(yi + d.r) - digamma(d.r)) for wi, yi in zip(w, y)) / n
            + math.log(d.r / (d.r + ybar))
        )
        assert abs(score) <= 1e-8


class TestChiSquared:
    def test_recovers_dof_on_simulated_data(self):
        rng = np.random.default_rng(7)
        y = rng.chisquare(4.0, size=4000)
        d = fit_chisquared(WeightedSample.with_unit_weights(y))
        assert d.dof == pytest.approx(4.0, abs=0.25)

    def test_unit_weights_equal_unweighted(self):
        y = [0.5, 2.0, 4.4, 1.1, 6.0]
        a = fit_chisquared(ws(y))
        b = fit_chisquared(ws(y, [1.0] * 5))
        assert a.dof == b.dof

    def test_matches_brute_force(self):
        y = [0.5, 2.0, 4.4, 1.1, 6.0, 3.2]
        w = [1.0, 0.4, 1.3, 2.0, 0.6, 1.0]
        d = fit_chisquared(ws(y, w))
        nu_star = oracles.maximize_1d(
            lambda v: oracles.weighted_loglik(oracles.chisquared_lp, y, w, v),
            0.1,
            80.0,
            log_grid=True,
        )
        assert d.dof == pytest.approx(nu_star, abs=1e-4)

    def test_gradient_replay(self):
        y = [0.5, 2.0, 4.4, 1.1, 6.0]
        w = [1.0, 0.4, 1.3, 2.0, 0.6]
        d = fit_chisquared(ws(y, w))
        n = sum(w)
        target = sum(wi * math.log(yi) for wi, yi in zip(w, y)) / n - math.log(2.0)
        assert abs(0.5 * (target - digamma(d.dof / 2.0))) <= 1e-10


@st.composite
def positive_samples(draw):
    n = draw(st.integers(min_value=4, max_value=12))
    y = draw(
        st.lists(
            st.floats(min_value=0.05, max_value=20.0),
            min_size=n,
            max_size=n,
            unique=True,
        )
    )
    w = draw(st.lists(st.floats(min_value=0.1, max_value=5.0), min_size=n, max_size=n))
    return y, w


class TestSeedNeverBeatsFit:
    @given(positive_samples())
    @settings(max_examples=40, deadline=None)
    def test_gamma_fit_at_least_as_good_as_seed(self, sample):
        y, w = sample
        s = ws(y, w)
        n = sum(w)
        mean = sum(wi * yi for wi, yi in zip(w, y)) / n
        var = sum(wi * (yi - mean) ** 2 for wi, yi in zip(w, y)) / n
        if var <= 1e-12:
            return
        d = fit_gamma_nr(s)
        seed_shape = mean * mean / var
        ll_fit = oracles.weighted_loglik(oracles.gamma_lp, y, w, d.shape, d.rate)
        ll_seed = oracles.weighted_loglik(oracles.gamma_lp, y, w, seed_shape, seed_shape / mean)
        assert ll_fit >= ll_seed - 1e-10

    @given(positive_samples())
    @settings(max_examples=40, deadline=None)
    def test_weibull_fit_at_least_as_good_as_seed(self, sample):
        y, w = sample
        s = ws(y, w)
        n = sum(w)
        mean = sum(wi * yi for wi, yi in zip(w, y)) / n
        var = sum(wi * (yi - mean) ** 2 for wi, yi in zip(w, y)) / n
        if var <= 1e-12:
            return
        d = fit_weibull_nr(s)
        k0 = (mean / math.sqrt(var)) ** 1.086
        s0 = sum(wi * yi**k0 for wi, yi in zip(w, y)) / n
        lam0 = s0 ** (1.0 / k0)
        ll_fit = oracles.weighted_loglik(oracles.weibull_lp, y, w, d.shape, d.scale)
        ll_seed = oracles.weighted_loglik(oracles.weibull_lp, y, w, k0, lam0)
        assert ll_fit >= ll_seed - 1e-10
