"""Log-density values, support handling, parameter validation, and the
flat-record round trip for all fifteen families."""

import math

import numpy as np
import pytest

import oracles
from loghmm.distributions import (
    FAMILIES,
    Beta,
    Categorical,
    ChiSquared,
    Exponential,
    Gamma,
    Gaussian,
    LogNormal,
    NegativeBinomial,
    Pareto,
    Poisson,
    Rayleigh,
    StudentT,
    Uniform,
    VonMises,
    Weibull,
    deserialize_params,
    serialize_params,
)

ALL_INSTANCES = {
    "gaussian": Gaussian(0.3, 1.7),
    "lognormal": LogNormal(0.1, 0.5),
    "exponential": Exponential(2.0),
    "poisson": Poisson(4.5),
    "rayleigh": Rayleigh(1.3),
    "uniform": Uniform(-1.0, 2.5),
    "categorical": Categorical((0.2, 0.5, 0.3)),
    "von_mises": VonMises(0.7, 2.2),
    "gamma": Gamma(2.3, 1.4),
    "beta": Beta(2.3, 3.1),
    "weibull": Weibull(1.7, 2.0),
    "negative_binomial": NegativeBinomial(3.5, 0.4),
    "chi_squared": ChiSquared(4.0),
    "pareto": Pareto(1.5, 2.5),
    "student_t": StudentT(0.2, 1.1, 5.0),
}


def test_every_family_is_registered_and_covered():
    assert set(ALL_INSTANCES) == set(FAMILIES)
    assert len(FAMILIES) == 15


class TestLogProbValues:
    def test_standard_normal_at_mode(self):
        assert Gaussian(0.0, 1.0).log_prob(0.0) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-12)
        assert Gaussian(0.0, 1.0).log_prob(0.0) == pytest.approx(-0.9189385, abs=1e-7)

    def test_exponential_example(self):
        assert Exponential(2.0).log_prob(1.0) == pytest.approx(math.log(2.0) - 2.0, abs=1e-12)

    def test_uniform_outside_support(self):
        assert Uniform(0.0, 1.0).log_prob(1.5) == -math.inf

    @pytest.mark.parametrize(
        "dist,lp,args",
        [
            (ALL_INSTANCES["gaussian"], oracles.gaussian_lp, (0.3, 1.7)),
            (ALL_INSTANCES["lognormal"], oracles.lognormal_lp, (0.1, 0.5)),
            (ALL_INSTANCES["exponential"], oracles.exponential_lp, (2.0,)),
            (ALL_INSTANCES["poisson"], oracles.poisson_lp, (4.5,)),
            (ALL_INSTANCES["rayleigh"], oracles.rayleigh_lp, (1.3,)),
            (ALL_INSTANCES["uniform"], oracles.uniform_lp, (-1.0, 2.5)),
            (ALL_INSTANCES["gamma"], oracles.gamma_lp, (2.3, 1.4)),
            (ALL_INSTANCES["beta"], oracles.beta_lp, (2.3, 3.1)),
            (ALL_INSTANCES["weibull"], oracles.weibull_lp, (1.7, 2.0)),
            (ALL_INSTANCES["negative_binomial"], oracles.negbinom_lp, (3.5, 0.4)),
            (ALL_INSTANCES["chi_squared"], oracles.chisquared_lp, (4.0,)),
            (ALL_INSTANCES["pareto"], oracles.pareto_lp, (1.5, 2.5)),
            (ALL_INSTANCES["student_t"], oracles.student_t_lp, (0.2, 1.1, 5.0)),
        ],
    )
    def test_matches_reference_formula(self, dist, lp, args):
        pts = [0.05, 0.3, 0.77, 1.0, 2.0, 3.0, 5.0, 1.6]
        for y in pts:
            assert dist.log_prob(y) == pytest.approx(lp(y, *args), abs=1e-10), (dist, y)

    def test_von_mises_matches_series_reference(self):
        d = ALL_INSTANCES["von_mises"]
        for y in [-3.0, -0.5, 0.0, 0.7, 2.9]:
            assert d.log_prob(y) == pytest.approx(oracles.vonmises_lp(y, 0.7, 2.2), abs=5e-7)

    def test_categorical_mass(self):
        d = ALL_INSTANCES["categorical"]
        assert d.log_prob(1.0) == pytest.approx(math.log(0.5), abs=1e-12)
        assert d.log_prob(3.0) == -math.inf
        assert d.log_prob(0.5) == -math.inf

    def test_vectorized_matches_scalar(self):
        for d in ALL_INSTANCES.values():
            ys = np.array([0.1, 0.4, 1.0, 2.0, -0.3])
            vec = d.log_prob(ys)
            for y, v in zip(ys, vec):
                assert d.log_prob(float(y)) == v


class TestSupport:
    @pytest.mark.parametrize(
        "dist,bad",
        [
            (ALL_INSTANCES["lognormal"], -1.0),
            (ALL_INSTANCES["lognormal"], 0.0),
            (ALL_INSTANCES["exponential"], -0.5),
            (ALL_INSTANCES["poisson"], -1.0),
            (ALL_INSTANCES["poisson"], 2.5),
            (ALL_INSTANCES["rayleigh"], -2.0),
            (ALL_INSTANCES["uniform"], 99.0),
            (ALL_INSTANCES["categorical"], -1.0),
            (ALL_INSTANCES["gamma"], 0.0),
            (ALL_INSTANCES["beta"], 1.0),
            (ALL_INSTANCES["beta"], 0.0),
            (ALL_INSTANCES["weibull"], -0.1),
            (ALL_INSTANCES["negative_binomial"], 1.5),
            (ALL_INSTANCES["chi_squared"], -3.0),
            (ALL_INSTANCES["pareto"], 1.0),
        ],
    )
    def test_outside_support_is_neg_inf_not_nan(self, dist, bad):
        assert dist.log_prob(bad) == -math.inf

    def test_nan_input_rejected(self):
        with pytest.raises(ValueError):
            ALL_INSTANCES["gaussian"].log_prob(float("nan"))
        with pytest.raises(ValueError):
            ALL_INSTANCES["gamma"].log_prob(np.array([1.0, float("nan")]))

    def test_no_nan_on_wide_input_sweep(self):
        ys = np.array([-1e6, -2.5, -1.0, 0.0, 1e-12, 0.5, 1.0, 3.0, 1e6])
        for d in ALL_INSTANCES.values():
            out = d.log_prob(ys)
            assert not np.isnan(out).any(), d


class TestNormalization:
    @pytest.mark.parametrize(
        "name,lo,hi",
        [
            ("gaussian", 0.3 - 14 * 1.7, 0.3 + 14 * 1.7),
            ("lognormal", 1e-9, math.exp(0.1 + 12 * 0.5)),
            ("exponential", 0.0, 25.0),
            ("rayleigh", 0.0, 18.0),
            ("uniform", -1.5, 3.0),
            ("von_mises", -math.pi, math.pi),
            ("gamma", 1e-9, 40.0),
            ("beta", 1e-9, 1.0 - 1e-9),
            ("weibull", 1e-9, 30.0),
            ("chi_squared", 1e-9, 90.0),
            ("student_t", 0.2 - 400 * 1.1, 0.2 + 400 * 1.1),
        ],
    )
    def test_continuous_density_integrates_to_one(self, name, lo, hi):
        d = ALL_INSTANCES[name]
        grid = np.linspace(lo, hi, 400_001)
        pdf = np.exp(d.log_prob(grid))
        total = float(np.trapezoid(pdf, grid))
        assert total == pytest.approx(1.0, abs=1e-3), name

    def test_pareto_integrates_to_one(self):
        d = ALL_INSTANCES["pareto"]
        grid = np.geomspace(1.5, 1.5e4, 400_001)
        total = float(np.trapezoid(np.exp(d.log_prob(grid)), grid))
        assert total == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.parametrize("name,cutoff", [("poisson", 80), ("negative_binomial", 400), ("categorical", 2)])
    def test_discrete_mass_sums_to_one(self, name, cutoff):
        d = ALL_INSTANCES[name]
        ks = np.arange(0, cutoff + 1, dtype=float)
        assert float(np.exp(d.log_prob(ks)).sum()) == pytest.approx(1.0, abs=1e-3)


class TestValidation:
    @pytest.mark.parametrize(
        "ctor",
        [
            lambda: Gaussian(0.0, 0.0),
            lambda: Gaussian(0.0, -1.0),
            lambda: LogNormal(0.0, 0.0),
            lambda: Exponential(-2.0),
            lambda: Poisson(0.0),
            lambda: Rayleigh(-1.0),
            lambda: Uniform(1.0, 1.0),
            lambda: Uniform(2.0, 1.0),
            lambda: Categorical((0.5, 0.4)),
            lambda: Categorical((1.2, -0.2)),
            lambda: VonMises(4.0, 1.0),
            lambda: VonMises(0.0, -0.1),
            lambda: Gamma(0.0, 1.0),
            lambda: Beta(1.0, -1.0),
            lambda: Weibull(1.0, 0.0),
            lambda: NegativeBinomial(1.0, 1.0),
            lambda: NegativeBinomial(0.0, 0.5),
            lambda: ChiSquared(0.0),
            lambda: Pareto(0.0, 1.0),
            lambda: StudentT(0.0, 1.0, 0.0),
            lambda: Gaussian(float("inf"), 1.0),
        ],
    )
    def test_invalid_parameters_raise(self, ctor):
        with pytest.raises(ValueError):
            ctor()


class TestParamRecords:
    def test_round_trip_every_family(self):
        for name, dist in ALL_INSTANCES.items():
            rec = serialize_params(dist)
            back = deserialize_params(name, rec)
            assert back == dist, name
            assert serialize_params(back) == rec

    def test_student_t_round_trip_bit_exact(self):
        d = StudentT(0.0, 1.0, 5.0)
        assert deserialize_params("student_t", serialize_params(d)) == d

    def test_gaussian_example(self):
        assert deserialize_params("gaussian", {"mu": 2.0, "sigma": 1.0}) == Gaussian(2.0, 1.0)

    def test_categorical_sum_violation(self):
        with pytest.raises(ValueError, match="sum to 1"):
            deserialize_params("categorical", {"p0": 0.4, "p1": 0.5})

    def test_unknown_family_lists_supported(self):
        with pytest.raises(ValueError, match="supported families"):
            deserialize_params("cauchy", {"x0": 0.0})

    def test_missing_key_is_named(self):
        with pytest.raises(ValueError, match="sigma"):
            deserialize_params("gaussian", {"mu": 0.0})

    def test_invariant_violation_names_field_and_bound(self):
        with pytest.raises(ValueError, match="gamma.alpha must be > 0"):
            deserialize_params("gamma", {"alpha": -1.0, "beta": 2.0})
