"""Emission distribution families and their posterior-weighted ML updates.

Each family is an immutable value object exposing a log-density and a
weighted fit; fits return new instances.  Weighted fits accept the smoothed
state-occupancy weights produced during EM, but work equally with plain
unit weights.  Closed forms are used where they exist; shape-type parameters
are solved by Newton-Raphson from method-of-moments seeds; the location-scale
Student-t runs one ECME cycle per call.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, ClassVar, Mapping

import numpy as np

from .special import (
    bessel_i1_i0_ratio,
    digamma,
    log_bessel_i0,
    log_gamma,
    trigamma,
)

__all__ = [
    "Distribution",
    "Gaussian",
    "LogNormal",
    "Exponential",
    "Poisson",
    "Rayleigh",
    "Uniform",
    "Categorical",
    "VonMises",
    "Gamma",
    "Beta",
    "Weibull",
    "NegativeBinomial",
    "ChiSquared",
    "Pareto",
    "StudentT",
    "WeightedSample",
    "EcmeConfig",
    "FitWarning",
    "FAMILIES",
    "fit_closed_form",
    "fit_gamma_nr",
    "fit_beta_nr",
    "fit_weibull_nr",
    "fit_vonmises",
    "fit_negbinom_nr",
    "fit_chisquared",
    "fit_student_t_ecme",
    "student_t_mixing_expectations",
    "student_t_log_mixing_offset",
    "student_t_nu_objective",
    "student_t_nu_score",
    "student_t_nu_curvature",
    "student_t_weighted_log_likelihood",
    "refit",
    "moment_seed",
    "deserialize_params",
    "serialize_params",
]

LOG_2PI = math.log(2.0 * math.pi)

# Scale-type parameters never drop below this floor, so a state that captures
# a single observation cannot produce a degenerate density spike.
SCALE_FLOOR = 1e-9
VONMISES_KAPPA_CEILING = 1e5
NEGBINOM_R_CEILING = 1e6

_MAX_NEWTON_1D = 50
_MAX_NEWTON_2D = 100

_lgamma_arr = np.frompyfunc(math.lgamma, 1, 1)
_digamma_arr = np.frompyfunc(digamma, 1, 1)
_trigamma_arr = np.frompyfunc(trigamma, 1, 1)


def _lgamma(a: np.ndarray) -> np.ndarray:
    return _lgamma_arr(a).astype(float)


class FitWarning(RuntimeWarning):
    """Raised as a warning when a fit hits an iteration cap or a boundary."""


def _as_float_array(y) -> tuple[np.ndarray, bool]:
    scalar = np.isscalar(y) or (isinstance(y, np.ndarray) and y.ndim == 0)
    arr = np.atleast_1d(np.asarray(y, dtype=float))
    if np.isnan(arr).any():
        raise ValueError("log_prob received NaN input")
    return arr, scalar


def _is_integral(arr: np.ndarray) -> np.ndarray:
    return np.equal(np.floor(arr), arr)


@dataclass(frozen=True)
class WeightedSample:
    """Observations paired with non-negative posterior weights."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if values.shape != weights.shape or values.ndim != 1:
            raise ValueError("values and weights must be 1-D arrays of equal length")
        if np.isnan(values).any():
            raise ValueError("observations contain NaN")
        if np.isnan(weights).any() or (weights < 0).any():
            raise ValueError("weights must be non-negative")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def with_unit_weights(cls, values) -> "WeightedSample":
        values = np.asarray(values, dtype=float)
        return cls(values, np.ones_like(values))

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def mean(self) -> float:
        return float(np.dot(self.weights, self.values) / self.total_weight)

    def effective(self) -> tuple[np.ndarray, np.ndarray]:
        """Entries with strictly positive weight (zero-weight observations may
        lie outside this state's support and must not enter the fit)."""
        keep = self.weights > 0.0
        return self.values[keep], self.weights[keep]


@dataclass(frozen=True)
class EcmeConfig:
    """Controls for the Student-t conditional maximization steps."""

    nu_ceiling: float = 1e6
    nu_tol: float = 1e-6
    max_newton: int = 50


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")


def _check_positive(name: str, value: float) -> None:
    _check_finite(name, value)
    if value <= 0.0:
        raise ValueError(f"{name} must be > 0, got {value}")


class Distribution:
    """Base for all emission families: a log-density plus a weighted fit."""

    family: ClassVar[str]
    param_count: ClassVar[int]

    def log_prob(self, y):
        """Natural-log density (or log-mass) at y; -inf outside the support."""
        arr, scalar = _as_float_array(y)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = self._log_density(arr)
        return float(out[0]) if scalar else out

    def _log_density(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict[str, float]:
        raise NotImplementedError

    def num_free_params(self) -> int:
        return self.param_count


@dataclass(frozen=True)
class Gaussian(Distribution):
    mu: float
    sigma: float

    family: ClassVar[str] = "gaussian"
    param_count: ClassVar[int] = 2

    def __post_init__(self):
        _check_finite("gaussian.mu", self.mu)
        _check_positive("gaussian.sigma", self.sigma)

    def _log_density(self, y):
        z = (y - self.mu) / self.sigma
        return -0.5 * LOG_2PI - math.log(self.sigma) - 0.5 * z * z

    def params(self):
        return {"mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class LogNormal(Distribution):
    mu: float
    sigma: float

    family: ClassVar[str] = "lognormal"
    param_count: ClassVar[int] = 2

    def __post_init__(self):
        _check_finite("lognormal.mu", self.mu)
        _check_positive("lognormal.sigma", self.sigma)

    def _log_density(self, y):
        ly = np.log(np.where(y > 0, y, 1.0))
        z = (ly - self.mu) / self.sigma
        dens = -ly - math.log(self.sigma) - 0.5 * LOG_2PI - 0.5 * z * z
        return np.where(y > 0, dens, -np.inf)

    def params(self):
        return {"mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float

    family: ClassVar[str] = "exponential"
    param_count: ClassVar[int] = 1

    def __post_init__(self):
        _check_positive("exponential.lambda", self.rate)

    def _log_density(self, y):
        return np.where(y >= 0, math.log(self.rate) - self.rate * y, -np.inf)

    def params(self):
        return {"lambda": self.rate}


@dataclass(frozen=True)
class Poisson(Distribution):
    rate: float

    family: ClassVar[str] = "poisson"
    param_count: ClassVar[int] = 1

    def __post_init__(self):
        _check_positive("poisson.lambda", self.rate)

    def _log_density(self, y):
        ok = (y >= 0) & _is_integral(y)
        safe = np.where(ok, y, 0.0)
        mass = safe * math.log(self.rate) - self.rate - _lgamma(safe + 1.0)
        return np.where(ok, mass, -np.inf)

    def params(self):
        return {"lambda": self.rate}


@dataclass(frozen=True)
class Rayleigh(Distribution):
    sigma: float

    family: ClassVar[str] = "rayleigh"
    param_count: ClassVar[int] = 1

    def __post_init__(self):
        _check_positive("rayleigh.sigma", self.sigma)

    def _log_density(self, y):
        s2 = self.sigma * self.sigma
        dens = np.log(np.where(y > 0, y, 1.0)) - math.log(s2) - y * y / (2.0 * s2)
        return np.where(y > 0, dens, -np.inf)

    def params(self):
        return {"sigma": self.sigma}


@dataclass(frozen=True)
class Uniform(Distribution):
    lower: float
    upper: float

    family: ClassVar[str] = "uniform"
    param_count: ClassVar[int] = 2

    def __post_init__(self):
        _check_finite("uniform.a", self.lower)
        _check_finite("uniform.b", self.upper)
        if not self.lower < self.upper:
            raise ValueError(f"uniform requires a < b, got a={self.lower}, b={self.upper}")

    def _log_density(self, y):
        inside = (y >= self.lower) & (y <= self.upper)
        return np.where(inside, -math.log(self.upper - self.lower), -np.inf)

    def params(self):
        return {"a": self.lower, "b": self.upper}


@dataclass(frozen=True)
class Categorical(Distribution):
    probs: tuple[float, ...]

    family: ClassVar[str] = "categorical"
    param_count: ClassVar[int] = 0  # overridden per instance

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if len(probs) < 1:
            raise ValueError("categorical requires at least one category")
        for k, p in enumerate(probs):
            _check_finite(f"categorical.p{k}", p)
            if p < 0:
                raise ValueError(f"categorical.p{k} must be >= 0, got {p}")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(
                f"categorical probabilities must sum to 1 within 1e-12, got {sum(probs)}"
            )
        object.__setattr__(self, "probs", probs)

    def _log_density(self, y):
        p = np.asarray(self.probs)
        with np.errstate(divide="ignore"):
            logp = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), -np.inf)
        ok = (y >= 0) & (y < len(p)) & _is_integral(y)
        idx = np.where(ok, y, 0.0).astype(int)
        return np.where(ok, logp[idx], -np.inf)

    def params(self):
        return {f"p{k}": p for k, p in enumerate(self.probs)}

    def num_free_params(self) -> int:
        return len(self.probs) - 1


@dataclass(frozen=True)
class VonMises(Distribution):
    mu: float
    kappa: float

    family: ClassVar[str] = "von_mises"
    param_count: ClassVar[int] = 2

    def __post_init__(self):
        _check_finite("von_mises.mu", self.mu)
        _check_finite("von_mises.kappa", self.kappa)
        if self.kappa < 0:
            raise ValueError(f"von_mises.kappa must be >= 0, got {self.kappa}")
        if not (-math.pi < self.mu <= math.pi):
            raise ValueError(f"von_mises.mu must lie in (-pi, pi], got {self.mu}")

    def _log_density(self, y):
        return self.kappa * np.cos(y - self.mu) - LOG_2PI - log_bessel_i0(self.kappa)

    def params(self):
        return {"mu": self.mu, "kappa": self.kappa}


@dataclass(frozen=True)
class Gamma(Distribution):
    shape: float
    rate: float

    family: ClassVar[str] = "gamma"
    param_count: ClassVar[int] = 2

    def __post_init__(self):
        _check_positive("gamma.alpha", self.shape)
        _check_positive("gamma.beta", self.rate)

    def _log_density(self, y):
        ly = np.log(np.where(y > 0, y, 1.0))
        dens = (
            self.shape * math.log(self.rate)
            - log_gamma(self.shape)
            + (self.shape - 1.0) * ly
            - self.rate * y
        )
        return np.where(y > 0, dens, -np.inf)

    def params(self):
        return {"alpha": self.shape, "beta": self.rate}


@dataclass(frozen=True)
class Beta(Distribution):
    alpha: float
    beta: float

    family: ClassVar[str] = "beta"
    param_count: ClassVar[int] = 2

    def __post_init__(self):
        _check_positive("beta.alpha", self.alpha)
        _check_positive("beta.beta", self.beta)

    def _log_density(self, y):
        inside = (y > 0) & (y < 1)
        safe = np.where(inside, y, 0.5)
        log_norm = log_gamma(self.alpha) + log_gamma(self.beta) - log_gamma(self.alpha + self.beta)
        dens = (self.alpha - 1.0) * np.log(safe) + (self.beta - 1.0) * np.log1p(-safe) - log_norm
        return np.where(inside, dens, -np.inf)

    def params(self):
        return {"alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class Weibull(Distribution):
    shape: float
    scale: float

    family: ClassVar[str] = "weibull"
    param_count: ClassVar[int] = 2

    def __post_init__(self):
        _check_positive("weibull.k", self.shape)
        _check_positive("weibull.lambda", self.scale)

    def _log_density(self, y):
        ratio = np.where(y > 0, y, 1.0) / self.scale
        dens = (
            math.log(self.shape)
            - math.log(self.scale)
            + (self.shape - 1.0) * np.log(ratio)
            - ratio**self.shape
        )
        return np.where(y > 0, dens, -np.inf)

    def params(self):
        return {"k": self.shape, "lambda": self.scale}


@dataclass(frozen=True)
class NegativeBinomial(Distribution):
    r: float
    p: float

    family: ClassVar[str] = "negative_binomial"
    param_count: ClassVar[int] = 2

    def __post_init__(self):
        _check_positive("negative_binomial.r", self.r)
        _check_finite("negative_binomial.p", self.p)
        if not (0.0 < self.p < 1.0):
            raise ValueError(f"negative_binomial.p must lie in (0, 1), got {self.p}")

    def _log_density(self, y):
        ok = (y >= 0) & _is_integral(y)
        safe = np.where(ok, y, 0.0)
        mass = (
            _lgamma(safe + self.r)
            - log_gamma(self.r)
            - _lgamma(safe + 1.0)
            + self.r * math.log(self.p)
            + safe * math.log1p(-self.p)
        )
        return np.where(ok, mass, -np.inf)

    def params(self):
        return {"r": self.r, "p": self.p}


@dataclass(frozen=True)
class ChiSquared(Distribution):
    dof: float

    family: ClassVar[str] = "chi_squared"
    param_count: ClassVar[int] = 1

    def __post_init__(self):
        _check_positive("chi_squared.nu", self.dof)

    def _log_density(self, y):
        half = self.dof / 2.0
        ly = np.log(np.where(y > 0, y, 1.0))
        dens = (half - 1.0) * ly - y / 2.0 - half * math.log(2.0) - log_gamma(half)
        return np.where(y > 0, dens, -np.inf)

    def params(self):
        return {"nu": self.dof}


@dataclass(frozen=True)
class Pareto(Distribution):
    xm: float
    alpha: float

    family: ClassVar[str] = "pareto"
    param_count: ClassVar[int] = 2

    def __post_init__(self):
        _check_positive("pareto.xm", self.xm)
        _check_positive("pareto.alpha", self.alpha)

    def _log_density(self, y):
        ly = np.log(np.where(y > 0, y, 1.0))
        dens = math.log(self.alpha) + self.alpha * math.log(self.xm) - (self.alpha + 1.0) * ly
        return np.where(y >= self.xm, dens, -np.inf)

    def params(self):
        return {"xm": self.xm, "alpha": self.alpha}


@dataclass(frozen=True)
class StudentT(Distribution):
    mu: float
    sigma: float
    nu: float

    family: ClassVar[str] = "student_t"
    param_count: ClassVar[int] = 3

    def __post_init__(self):
        _check_finite("student_t.mu", self.mu)
        _check_positive("student_t.sigma", self.sigma)
        _check_positive("student_t.nu", self.nu)

    def _log_density(self, y):
        z = (y - self.mu) / self.sigma
        return (
            log_gamma((self.nu + 1.0) / 2.0)
            - log_gamma(self.nu / 2.0)
            - 0.5 * math.log(self.nu * math.pi)
            - math.log(self.sigma)
            - (self.nu + 1.0) / 2.0 * np.log1p(z * z / self.nu)
        )

    def params(self):
        return {"mu": self.mu, "sigma": self.sigma, "nu": self.nu}


FAMILIES: dict[str, type[Distribution]] = {
    cls.family: cls
    for cls in (
        Gaussian,
        LogNormal,
        Exponential,
        Poisson,
        Rayleigh,
        Uniform,
        Categorical,
        VonMises,
        Gamma,
        Beta,
        Weibull,
        NegativeBinomial,
        ChiSquared,
        Pareto,
        StudentT,
    )
}


# ---------------------------------------------------------------------------
# Serialization records (flat name -> number maps; the io layer stores these)
# ---------------------------------------------------------------------------

def serialize_params(dist: Distribution) -> dict[str, float]:
    return dist.params()


def deserialize_params(family: str, record: Mapping[str, float]) -> Distribution:
    if family not in FAMILIES:
        supported = ", ".join(sorted(FAMILIES))
        raise ValueError(f"unknown family '{family}'; supported families: {supported}")
    cls = FAMILIES[family]
    if cls is Categorical:
        keys = sorted(record)
        expected = [f"p{k}" for k in range(len(keys))]
        if keys != sorted(expected):
            raise ValueError(
                f"categorical params must be p0..p{len(keys) - 1}, got {sorted(record)}"
            )
        return Categorical(tuple(float(record[f"p{k}"]) for k in range(len(keys))))
    builders: dict[type, Callable[[Mapping[str, float]], Distribution]] = {
        Gaussian: lambda r: Gaussian(r["mu"], r["sigma"]),
        LogNormal: lambda r: LogNormal(r["mu"], r["sigma"]),
        Exponential: lambda r: Exponential(r["lambda"]),
        Poisson: lambda r: Poisson(r["lambda"]),
        Rayleigh: lambda r: Rayleigh(r["sigma"]),
        Uniform: lambda r: Uniform(r["a"], r["b"]),
        VonMises: lambda r: VonMises(r["mu"], r["kappa"]),
        Gamma: lambda r: Gamma(r["alpha"], r["beta"]),
        Beta: lambda r: Beta(r["alpha"], r["beta"]),
        Weibull: lambda r: Weibull(r["k"], r["lambda"]),
        NegativeBinomial: lambda r: NegativeBinomial(r["r"], r["p"]),
        ChiSquared: lambda r: ChiSquared(r["nu"]),
        Pareto: lambda r: Pareto(r["xm"], r["alpha"]),
        StudentT: lambda r: StudentT(r["mu"], r["sigma"], r["nu"]),
    }
    try:
        return builders[cls](dict(record))
    except KeyError as exc:
        raise ValueError(f"{family} params missing key {exc.args[0]!r}") from None


# ---------------------------------------------------------------------------
# Weighted maximum-likelihood fits
# ---------------------------------------------------------------------------

def _require_mass(sample: WeightedSample) -> float:
    n = sample.total_weight
    if n <= 0.0:
        raise ValueError("fit requires positive total weight")
    return n


def _weighted_mean_var(y: np.ndarray, w: np.ndarray) -> tuple[float, float, float]:
    n = float(w.sum())
    mean = float(np.dot(w, y) / n)
    var = float(np.dot(w, (y - mean) ** 2) / n)
    return n, mean, var


def _validate_support(y: np.ndarray, family: str, *, positive=False, unit=False, integer=False):
    if positive and (y <= 0).any():
        raise ValueError(f"{family} fit requires strictly positive observations")
    if unit and ((y <= 0) | (y >= 1)).any():
        raise ValueError(f"{family} fit requires observations strictly inside (0, 1)")
    if integer and ((y < 0) | ~_is_integral(y)).any():
        raise ValueError(f"{family} fit requires non-negative integer observations")


def fit_gaussian(sample: WeightedSample) -> Gaussian:
    _require_mass(sample)
    y, w = sample.effective()
    _, mean, var = _weighted_mean_var(y, w)
    return Gaussian(mean, max(math.sqrt(var), SCALE_FLOOR))


def fit_lognormal(sample: WeightedSample) -> LogNormal:
    _require_mass(sample)
    y, w = sample.effective()
    _validate_support(y, "lognormal", positive=True)
    _, mean, var = _weighted_mean_var(np.log(y), w)
    return LogNormal(mean, max(math.sqrt(var), SCALE_FLOOR))


def fit_exponential(sample: WeightedSample) -> Exponential:
    _require_mass(sample)
    y, w = sample.effective()
    if (y < 0).any():
        raise ValueError("exponential fit requires non-negative observations")
    _, mean, _ = _weighted_mean_var(y, w)
    if mean <= 0.0:
        raise ValueError("exponential fit is degenerate: weighted mean is zero")
    return Exponential(1.0 / mean)


def fit_poisson(sample: WeightedSample) -> Poisson:
    _require_mass(sample)
    y, w = sample.effective()
    _validate_support(y, "poisson", integer=True)
    _, mean, _ = _weighted_mean_var(y, w)
    return Poisson(max(mean, SCALE_FLOOR))


def fit_rayleigh(sample: WeightedSample) -> Rayleigh:
    _require_mass(sample)
    y, w = sample.effective()
    if (y < 0).any():
        raise ValueError("rayleigh fit requires non-negative observations")
    n = float(w.sum())
    sigma_sq = float(np.dot(w, y * y) / (2.0 * n))
    return Rayleigh(max(math.sqrt(sigma_sq), SCALE_FLOOR))


def fit_uniform(sample: WeightedSample) -> Uniform:
    # The endpoints come from the raw observation range, zero-weight entries
    # included: the constrained MLE uses the global min/max.
    _require_mass(sample)
    lo = float(sample.values.min())
    hi = float(sample.values.max())
    if hi <= lo:
        hi = lo + SCALE_FLOOR
    return Uniform(lo, hi)


def fit_categorical(sample: WeightedSample, num_categories: int | None = None) -> Categorical:
    n = _require_mass(sample)
    y, w = sample.effective()
    _validate_support(y, "categorical", integer=True)
    if num_categories is None:
        num_categories = int(sample.values.max()) + 1 if sample.values.size else 1
    if (y >= num_categories).any():
        raise ValueError(f"categorical fit saw code >= {num_categories}")
    counts = np.zeros(num_categories)
    np.add.at(counts, y.astype(int), w)
    probs = counts / n
    probs = probs / probs.sum()
    return Categorical(tuple(probs))


def fit_pareto(sample: WeightedSample) -> Pareto:
    n = _require_mass(sample)
    _validate_support(sample.values, "pareto", positive=True)
    xm = float(sample.values.min())
    y, w = sample.effective()
    denom = float(np.dot(w, np.log(y / xm)))
    if denom <= 0.0:
        raise ValueError("pareto fit is degenerate: all weighted observations equal the minimum")
    return Pareto(xm, n / denom)


_CLOSED_FORM_FITS: dict[str, Callable[..., Distribution]] = {
    "gaussian": fit_gaussian,
    "lognormal": fit_lognormal,
    "exponential": fit_exponential,
    "poisson": fit_poisson,
    "rayleigh": fit_rayleigh,
    "uniform": fit_uniform,
    "categorical": fit_categorical,
    "pareto": fit_pareto,
}


def fit_closed_form(family: str, sample: WeightedSample, **kwargs) -> Distribution:
    """Exact weighted MLE for the families that admit one analytically."""
    if family not in _CLOSED_FORM_FITS:
        raise ValueError(f"no closed-form fit for family '{family}'")
    return _CLOSED_FORM_FITS[family](sample, **kwargs)


def _newton_1d(
    score: Callable[[float], float],
    slope: Callable[[float], float],
    x0: float,
    tol: float,
    max_iter: int = _MAX_NEWTON_1D,
) -> tuple[float, bool]:
    """Solve score(x) = 0 on x > 0 for a score that crosses zero downward.

    Safeguarded Newton: the signs seen so far bracket the root, and any step
    that leaves the bracket (possible where the profiled likelihood is not
    concave) is replaced by bisection or geometric expansion.  Near the root
    this is plain Newton with its quadratic convergence.
    """
    lo, hi = 0.0, math.inf
    x = x0
    for _ in range(max_iter):
        s = score(x)
        if abs(s) <= tol:
            return x, True
        if s > 0.0:
            lo = max(lo, x)
        else:
            hi = min(hi, x)
        d = slope(x)
        proposal = x - s / d if d != 0.0 else math.inf
        if not (math.isfinite(proposal) and lo < proposal < hi):
            proposal = x * 8.0 if math.isinf(hi) else 0.5 * (lo + hi)
        x = proposal
    return x, abs(score(x)) <= tol


def fit_gamma_nr(sample: WeightedSample) -> Gamma:
    """Weighted Gamma MLE: Newton on the shape score, rate recovered as
    shape/mean.  Seeded from the moment estimate shape = mean^2/variance."""
    _require_mass(sample)
    y, w = sample.effective()
    _validate_support(y, "gamma", positive=True)
    n, mean, var = _weighted_mean_var(y, w)
    if var <= 0.0:
        raise ValueError("gamma fit is degenerate: weighted variance is zero")
    c = math.log(mean) - float(np.dot(w, np.log(y))) / n
    if c <= 0.0:
        raise ValueError("gamma fit is degenerate: zero log-moment gap")
    seed = mean * mean / var
    alpha, ok = _newton_1d(
        score=lambda a: math.log(a) - digamma(a) - c,
        slope=lambda a: 1.0 / a - trigamma(a),
        x0=seed,
        tol=1e-10,
    )
    if not ok:
        warnings.warn("gamma shape update did not converge; using moment seed", FitWarning)
        alpha = seed
    return Gamma(alpha, alpha / mean)


def fit_beta_nr(sample: WeightedSample) -> Beta:
    """Weighted Beta MLE via joint 2-D Newton on the two digamma stationarity
    conditions, damped to keep both parameters positive."""
    _require_mass(sample)
    y, w = sample.effective()
    _validate_support(y, "beta", unit=True)
    n, mean, var = _weighted_mean_var(y, w)
    m1 = float(np.dot(w, np.log(y))) / n
    m2 = float(np.dot(w, np.log1p(-y))) / n
    scale = mean * (1.0 - mean) / var - 1.0 if var > 0 else -1.0
    if scale <= 0.0:
        a, b = 1.0, 1.0
    else:
        a, b = mean * scale, (1.0 - mean) * scale
    converged = False
    for _ in range(_MAX_NEWTON_2D):
        psi_ab = digamma(a + b)
        f1 = digamma(a) - psi_ab - m1
        f2 = digamma(b) - psi_ab - m2
        if max(abs(f1), abs(f2)) <= 1e-10:
            converged = True
            break
        tri_ab = trigamma(a + b)
        j11 = trigamma(a) - tri_ab
        j22 = trigamma(b) - tri_ab
        j12 = -tri_ab
        det = j11 * j22 - j12 * j12
        da = -(f1 * j22 - f2 * j12) / det
        db = -(f2 * j11 - f1 * j12) / det
        while a + da <= 0.0 or b + db <= 0.0:
            da *= 0.5
            db *= 0.5
        a += da
        b += db
    if not converged:
        psi_ab = digamma(a + b)
        if max(abs(digamma(a) - psi_ab - m1), abs(digamma(b) - psi_ab - m2)) > 1e-10:
            warnings.warn("beta fit hit the iteration cap before tolerance", FitWarning)
    return Beta(a, b)


def _weibull_log_moment_ratios(k: float, logy: np.ndarray, w: np.ndarray) -> tuple[float, float, float]:
    # Weights proportional to y^k, computed max-shifted so large k cannot
    # overflow; ratios are shift-invariant.
    shift = k * logy
    m = shift.max()
    wk = w * np.exp(shift - m)
    s0 = float(wk.sum())
    r1 = float(np.dot(wk, logy)) / s0
    r2 = float(np.dot(wk, logy * logy)) / s0
    return s0, r1, r2


def fit_weibull_nr(sample: WeightedSample) -> Weibull:
    """Weighted Weibull MLE: Newton on the shape equation; the scale then has
    a closed form.  Seed is the moment-based power law in mean/std."""
    _require_mass(sample)
    y, w = sample.effective()
    _validate_support(y, "weibull", positive=True)
    n, mean, var = _weighted_mean_var(y, w)
    if var <= 0.0:
        raise ValueError("weibull fit is degenerate: weighted variance is zero")
    logy = np.log(y)
    lbar = float(np.dot(w, logy)) / n

    def residual(k: float) -> float:
        _, r1, _ = _weibull_log_moment_ratios(k, logy, w)
        return 1.0 / k + lbar - r1

    def slope(k: float) -> float:
        _, r1, r2 = _weibull_log_moment_ratios(k, logy, w)
        return -1.0 / (k * k) - (r2 - r1 * r1)

    seed = (mean / math.sqrt(var)) ** 1.086
    k, ok = _newton_1d(residual, slope, seed, tol=1e-10)
    if not ok:
        warnings.warn("weibull shape update did not converge; using moment seed", FitWarning)
        k = seed
    shift = k * logy
    m = shift.max()
    s0 = float(np.dot(w, np.exp(shift - m)))
    scale = math.exp((math.log(s0) + m - math.log(n)) / k)
    return Weibull(k, scale)


def fit_vonmises(sample: WeightedSample) -> VonMises:
    """Weighted von Mises MLE: circular mean direction in closed form, then
    Newton on the Bessel-ratio equation for the concentration."""
    n = _require_mass(sample)
    y, w = sample.effective()
    if not np.isfinite(y).all():
        raise ValueError("von_mises fit requires finite angles")
    s = float(np.dot(w, np.sin(y)))
    c = float(np.dot(w, np.cos(y)))
    mu = math.atan2(s, c)
    if mu <= -math.pi:
        mu = math.pi
    rbar = math.hypot(s, c) / n
    if rbar <= 1e-12:
        return VonMises(mu, 0.0)
    if rbar >= 1.0 - 1e-12:
        warnings.warn(
            "von_mises resultant length is at the boundary; clamping concentration",
            FitWarning,
        )
        return VonMises(mu, VONMISES_KAPPA_CEILING)
    kappa = rbar * (2.0 - rbar * rbar) / (1.0 - rbar * rbar)
    converged = False
    for _ in range(_MAX_NEWTON_1D):
        a = bessel_i1_i0_ratio(kappa)
        f = a - rbar
        if abs(f) <= 1e-10:
            converged = True
            break
        step = f / (1.0 - a * a - a / kappa)
        proposal = kappa - step
        while proposal <= 0.0:
            step *= 0.5
            proposal = kappa - step
        kappa = proposal
        if kappa >= VONMISES_KAPPA_CEILING:
            kappa = VONMISES_KAPPA_CEILING
            warnings.warn("von_mises concentration clamped at ceiling", FitWarning)
            break
    if not converged and kappa < VONMISES_KAPPA_CEILING:
        if abs(bessel_i1_i0_ratio(kappa) - rbar) > 1e-10:
            warnings.warn("von_mises concentration update did not converge", FitWarning)
    return VonMises(mu, kappa)


def fit_negbinom_nr(sample: WeightedSample) -> NegativeBinomial:
    """Weighted Negative Binomial MLE on the profiled likelihood: Newton in
    the dispersion r with the success probability recovered as r/(r+mean)."""
    _require_mass(sample)
    y, w = sample.effective()
    _validate_support(y, "negative_binomial", integer=True)
    n, mean, var = _weighted_mean_var(y, w)
    if mean <= 0.0:
        raise ValueError("negative_binomial fit is degenerate: all observations are zero")
    if var <= mean:
        warnings.warn(
            "negative_binomial data is underdispersed; returning near-Poisson boundary fit",
            FitWarning,
        )
        r = NEGBINOM_R_CEILING
        return NegativeBinomial(r, r / (r + mean))

    def score(r: float) -> float:
        gap = float(np.dot(w, _digamma_arr(y + r).astype(float))) / n - digamma(r)
        return gap + math.log(r / (r + mean))

    def slope(r: float) -> float:
        gap = float(np.dot(w, _trigamma_arr(y + r).astype(float))) / n - trigamma(r)
        return gap + mean / (r * (r + mean))

    # var > mean guarantees an interior root: the score is +inf at r -> 0 and
    # behaves like (mean - var)/(2 r^2) < 0 for large r.
    seed = mean * mean / (var - mean)
    r, ok = _newton_1d(score, slope, seed, tol=1e-8)
    if r > NEGBINOM_R_CEILING:
        warnings.warn("negative_binomial dispersion clamped; data is near-Poisson", FitWarning)
        r = NEGBINOM_R_CEILING
    elif not ok:
        warnings.warn("negative_binomial dispersion update did not converge", FitWarning)
    return NegativeBinomial(r, r / (r + mean))


def fit_chisquared(sample: WeightedSample) -> ChiSquared:
    """Weighted chi-squared MLE: the Gamma M-step with the rate pinned at 1/2
    leaves a single Newton solve for the degrees of freedom."""
    _require_mass(sample)
    y, w = sample.effective()
    _validate_support(y, "chi_squared", positive=True)
    n, mean, _ = _weighted_mean_var(y, w)
    target = float(np.dot(w, np.log(y))) / n - math.log(2.0)
    nu, ok = _newton_1d(
        score=lambda v: 0.5 * (target - digamma(v / 2.0)),
        slope=lambda v: -0.25 * trigamma(v / 2.0),
        x0=max(mean, SCALE_FLOOR),
        tol=1e-10,
    )
    if not ok:
        warnings.warn("chi_squared update did not converge; using mean seed", FitWarning)
        nu = max(mean, SCALE_FLOOR)
    return ChiSquared(nu)


# ---------------------------------------------------------------------------
# Student-t ECME cycle
# ---------------------------------------------------------------------------

def student_t_weighted_log_likelihood(
    sample: WeightedSample, mu: float, sigma: float, nu: float
) -> float:
    y, w = sample.effective()
    z = (y - mu) / sigma
    per_obs = (
        log_gamma((nu + 1.0) / 2.0)
        - log_gamma(nu / 2.0)
        - 0.5 * math.log(nu * math.pi)
        - math.log(sigma)
        - (nu + 1.0) / 2.0 * np.log1p(z * z / nu)
    )
    return float(np.dot(w, per_obs))


def student_t_nu_objective(nu: float, n: float, mix_stat: float) -> float:
    """Expected complete-data contribution of the degrees of freedom.

    ``mix_stat`` is the weighted sum of (E[log u] - E[u]) over the posterior
    mixing expectations produced by the E-step.
    """
    return n * (nu / 2.0 * math.log(nu / 2.0) - log_gamma(nu / 2.0)) + nu / 2.0 * mix_stat


def student_t_nu_score(nu: float, n: float, mix_stat: float) -> float:
    return n / 2.0 * (math.log(nu / 2.0) + 1.0 - digamma(nu / 2.0)) + mix_stat / 2.0


def student_t_nu_curvature(nu: float, n: float) -> float:
    return n / 4.0 * (2.0 / nu - trigamma(nu / 2.0))


def student_t_mixing_expectations(
    y: np.ndarray, mu: float, sigma: float, nu: float
) -> np.ndarray:
    """Posterior mean of the Gaussian scale-mixture variable per observation."""
    z2 = ((y - mu) / sigma) ** 2
    return (nu + 1.0) / (nu + z2)


def student_t_log_mixing_offset(nu: float) -> float:
    """Gap between the posterior mean of log U and log of the posterior mean.

    The mixing variable is conditionally Gamma, so
    E[log U] = log E[U] + psi((nu+1)/2) - log((nu+1)/2); dropping this offset
    stalls the degrees-of-freedom update at its starting point.
    """
    half = (nu + 1.0) / 2.0
    return digamma(half) - math.log(half)


def fit_student_t_ecme(
    sample: WeightedSample, current: StudentT, config: EcmeConfig = EcmeConfig()
) -> StudentT:
    """One ECME cycle for the location-scale Student-t.

    E-step evaluates the scale-mixture expectations at the current
    parameters; CM-step 1 updates location and scale in closed form with the
    degrees of freedom fixed; CM-step 2 runs an inner Newton on the
    degrees-of-freedom objective until the step falls below ``config.nu_tol``.
    The cycle never decreases the weighted observed log-likelihood: the rare
    Newton overshoot is pulled back toward the previous value by halving.
    """
    n = _require_mass(sample)
    y, w = sample.effective()
    mu0, sigma0, nu0 = current.mu, current.sigma, current.nu

    u = student_t_mixing_expectations(y, mu0, sigma0, nu0)

    wu = w * u
    mu = float(np.dot(wu, y) / wu.sum())
    sigma_sq = float(np.dot(wu, (y - mu) ** 2) / n)
    sigma = max(math.sqrt(sigma_sq), SCALE_FLOOR)

    mix_stat = float(np.dot(w, np.log(u) - u)) + n * student_t_log_mixing_offset(nu0)
    nu = nu0
    for _ in range(config.max_newton):
        s = student_t_nu_score(nu, n, mix_stat)
        h = student_t_nu_curvature(nu, n)
        step = -s / h
        proposal = nu + step
        while proposal <= 0.0:
            step *= 0.5
            proposal = nu + step
        # The objective is strictly concave; damp any step that lowers it.
        q_now = student_t_nu_objective(nu, n, mix_stat)
        while student_t_nu_objective(proposal, n, mix_stat) < q_now and abs(step) > 1e-300:
            step *= 0.5
            proposal = nu + step
        if proposal >= config.nu_ceiling:
            warnings.warn("student_t degrees of freedom clamped; near-Gaussian state", FitWarning)
            nu = config.nu_ceiling
            break
        moved = abs(proposal - nu)
        nu = proposal
        if moved < config.nu_tol:
            break

    # Guard the observed likelihood: fall back toward the previous degrees of
    # freedom if the surrogate step overshot.
    base = student_t_weighted_log_likelihood(sample, mu, sigma, nu0)
    for _ in range(60):
        if student_t_weighted_log_likelihood(sample, mu, sigma, nu) >= base - 1e-12:
            break
        nu = nu0 + 0.5 * (nu - nu0)
    else:
        nu = nu0
    return StudentT(mu, sigma, nu)


# ---------------------------------------------------------------------------
# Dispatch used by the trainer's M-step and by model initialization
# ---------------------------------------------------------------------------

def refit(dist: Distribution, sample: WeightedSample, ecme: EcmeConfig = EcmeConfig()) -> Distribution:
    """Posterior-weighted ML update of one state's emission distribution."""
    family = dist.family
    if family == "categorical":
        return fit_categorical(sample, num_categories=len(dist.probs))
    if family == "student_t":
        return fit_student_t_ecme(sample, dist, ecme)
    if family in _CLOSED_FORM_FITS:
        return _CLOSED_FORM_FITS[family](sample)
    newton = {
        "gamma": fit_gamma_nr,
        "beta": fit_beta_nr,
        "weibull": fit_weibull_nr,
        "von_mises": fit_vonmises,
        "negative_binomial": fit_negbinom_nr,
        "chi_squared": fit_chisquared,
    }
    return newton[family](sample)


def moment_seed(family: str, sample: WeightedSample, num_categories: int | None = None) -> Distribution:
    """Cheap valid starting parameters for a family on a slice of data.

    Used to initialize training; Newton families get their moment seeds, not
    the full fit, so the very first M-step still has work to do.
    """
    y, w = sample.effective()
    n, mean, var = _weighted_mean_var(y, w)
    sd = max(math.sqrt(var), SCALE_FLOOR)
    if family == "gaussian":
        return Gaussian(mean, sd)
    if family == "lognormal":
        _validate_support(y, family, positive=True)
        _, lm, lv = _weighted_mean_var(np.log(y), w)
        return LogNormal(lm, max(math.sqrt(lv), SCALE_FLOOR))
    if family == "exponential":
        return Exponential(1.0 / max(mean, SCALE_FLOOR))
    if family == "poisson":
        return Poisson(max(mean, SCALE_FLOOR))
    if family == "rayleigh":
        return Rayleigh(max(math.sqrt(float(np.dot(w, y * y)) / (2.0 * n)), SCALE_FLOOR))
    if family == "uniform":
        return fit_uniform(sample)
    if family == "categorical":
        return fit_categorical(sample, num_categories=num_categories)
    if family == "von_mises":
        s = float(np.dot(w, np.sin(y)))
        c = float(np.dot(w, np.cos(y)))
        mu = math.atan2(s, c)
        if mu <= -math.pi:
            mu = math.pi
        rbar = min(math.hypot(s, c) / n, 1.0 - 1e-9)
        kappa = rbar * (2.0 - rbar * rbar) / (1.0 - rbar * rbar)
        return VonMises(mu, min(kappa, VONMISES_KAPPA_CEILING))
    if family == "gamma":
        _validate_support(y, family, positive=True)
        shape = mean * mean / var if var > 0 else 1.0
        return Gamma(max(shape, SCALE_FLOOR), max(shape, SCALE_FLOOR) / max(mean, SCALE_FLOOR))
    if family == "beta":
        _validate_support(y, family, unit=True)
        scale = mean * (1.0 - mean) / var - 1.0 if var > 0 else -1.0
        if scale <= 0:
            return Beta(1.0, 1.0)
        return Beta(mean * scale, (1.0 - mean) * scale)
    if family == "weibull":
        _validate_support(y, family, positive=True)
        k = (mean / sd) ** 1.086 if var > 0 else 1.0
        scale = mean / math.exp(log_gamma(1.0 + 1.0 / k))
        return Weibull(k, max(scale, SCALE_FLOOR))
    if family == "negative_binomial":
        _validate_support(y, family, integer=True)
        if mean <= 0:
            raise ValueError("negative_binomial seed is degenerate: zero mean")
        r = mean * mean / (var - mean) if var > mean else NEGBINOM_R_CEILING
        return NegativeBinomial(r, r / (r + mean))
    if family == "chi_squared":
        _validate_support(y, family, positive=True)
        return ChiSquared(max(mean, SCALE_FLOOR))
    if family == "pareto":
        return fit_pareto(sample)
    if family == "student_t":
        return StudentT(mean, sd, 10.0)
    raise ValueError(f"unknown family '{family}'")
