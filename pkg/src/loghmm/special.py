"""Scalar special functions and log-domain primitives.

Everything here is dependency-free (stdlib ``math`` only) and pure, so the
layers above can call these kernels from any thread.  Probability zero is
encoded as ``-inf`` throughout; no kernel returns NaN for in-domain input.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

__all__ = [
    "log_sum_exp",
    "log_sum_exp_axis",
    "log_gamma",
    "digamma",
    "trigamma",
    "bessel_i0",
    "bessel_i1",
    "log_bessel_i0",
    "bessel_i1_i0_ratio",
]

NEG_INF = float("-inf")


def log_sum_exp(values: Iterable[float]) -> float:
    """Return log(sum(exp(v) for v in values)) via the max-shifted formula.

    All entries equal to -inf are skipped; if every entry is -inf the result
    is -inf (a sum of zero probabilities).  Raises ValueError on empty input.
    """
    xs = list(values)
    if not xs:
        raise ValueError("log_sum_exp requires at least one value")
    m = max(xs)
    if m == NEG_INF:
        return NEG_INF
    acc = 0.0
    for x in xs:
        acc += math.exp(x - m)
    return m + math.log(acc)


def log_sum_exp_axis(a: np.ndarray, axis: int) -> np.ndarray:
    """Max-shifted log-sum-exp of an array along one axis.

    Rows that are entirely -inf reduce to -inf rather than NaN, matching the
    scalar kernel.
    """
    a = np.asarray(a, dtype=float)
    m = np.max(a, axis=axis, keepdims=True)
    finite = np.isfinite(m)
    shifted = np.where(finite, a - np.where(finite, m, 0.0), NEG_INF)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(shifted), axis=axis)) + np.squeeze(
            np.where(finite, m, NEG_INF), axis=axis
        )
    return out


def _require_positive(x: float, name: str) -> None:
    if math.isnan(x) or x <= 0.0:
        raise ValueError(f"{name} requires a positive argument, got {x}")


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    _require_positive(x, "log_gamma")
    return math.lgamma(x)


# Asymptotic tail coefficients for psi(x); valid once x has been shifted
# above _PSI_SHIFT by the recurrence psi(x) = psi(x+1) - 1/x.
_PSI_SHIFT = 10.0


def digamma(x: float) -> float:
    """Digamma psi(x) for x > 0 via upward recurrence plus asymptotic series."""
    _require_positive(x, "digamma")
    acc = 0.0
    while x < _PSI_SHIFT:
        acc -= 1.0 / x
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = (
        math.log(x)
        - 0.5 * inv
        - inv2
        * (
            1.0 / 12.0
            - inv2
            * (
                1.0 / 120.0
                - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))
            )
        )
    )
    return acc + series


def trigamma(x: float) -> float:
    """Trigamma psi'(x) for x > 0; always positive."""
    _require_positive(x, "trigamma")
    acc = 0.0
    while x < _PSI_SHIFT:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = inv * (
        1.0
        + inv
        * (
            0.5
            + inv
            * (
                1.0 / 6.0
                - inv2
                * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - 5.0 * inv2 / 66.0)))
            )
        )
    )
    return acc + series


# Two-branch polynomial approximations for the modified Bessel functions of
# the first kind (orders 0 and 1): a plain polynomial in (x/3.75)^2 below the
# branch point and an exponentially scaled polynomial in 3.75/x above it.
# Absolute/relative accuracy is ~1e-7 over x >= 0.
_BESSEL_BRANCH = 3.75

_I0_SMALL = (1.0, 3.5156229, 3.0899424, 1.2067492, 0.2659732, 0.0360768, 0.0045813)
_I0_LARGE = (
    0.39894228,
    0.01328592,
    0.00225319,
    -0.00157565,
    0.00916281,
    -0.02057706,
    0.02635537,
    -0.01647633,
    0.00392377,
)
_I1_SMALL = (0.5, 0.87890594, 0.51498869, 0.15084934, 0.02658733, 0.00301532, 0.00032411)
_I1_LARGE = (
    0.39894228,
    -0.03988024,
    -0.00362018,
    0.00163801,
    -0.01031555,
    0.02282967,
    -0.02895312,
    0.01787654,
    -0.00420059,
)


def _poly(coeffs: tuple[float, ...], u: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * u + c
    return acc


def _require_non_negative(x: float, name: str) -> None:
    if math.isnan(x) or x < 0.0:
        raise ValueError(f"{name} requires a non-negative argument, got {x}")


def bessel_i0(x: float) -> float:
    """Modified Bessel function I0(x) for x >= 0."""
    _require_non_negative(x, "bessel_i0")
    if x <= _BESSEL_BRANCH:
        t2 = (x / _BESSEL_BRANCH) ** 2
        return _poly(_I0_SMALL, t2)
    u = _BESSEL_BRANCH / x
    return math.exp(x) / math.sqrt(x) * _poly(_I0_LARGE, u)


def bessel_i1(x: float) -> float:
    """Modified Bessel function I1(x) for x >= 0."""
    _require_non_negative(x, "bessel_i1")
    if x <= _BESSEL_BRANCH:
        t2 = (x / _BESSEL_BRANCH) ** 2
        return x * _poly(_I1_SMALL, t2)
    u = _BESSEL_BRANCH / x
    return math.exp(x) / math.sqrt(x) * _poly(_I1_LARGE, u)


def log_bessel_i0(x: float) -> float:
    """log I0(x) for x >= 0, stable for large x where I0 itself overflows."""
    _require_non_negative(x, "log_bessel_i0")
    if x <= _BESSEL_BRANCH:
        t2 = (x / _BESSEL_BRANCH) ** 2
        return math.log(_poly(_I0_SMALL, t2))
    u = _BESSEL_BRANCH / x
    return x - 0.5 * math.log(x) + math.log(_poly(_I0_LARGE, u))


def bessel_i1_i0_ratio(kappa: float) -> float:
    """Ratio I1(kappa)/I0(kappa) in [0, 1), increasing in kappa.

    Above the branch point the shared exp(x)/sqrt(x) factor cancels, so the
    ratio stays finite for arbitrarily large concentration.
    """
    _require_non_negative(kappa, "bessel_i1_i0_ratio")
    if kappa == 0.0:
        return 0.0
    if kappa <= _BESSEL_BRANCH:
        return bessel_i1(kappa) / bessel_i0(kappa)
    u = _BESSEL_BRANCH / kappa
    return _poly(_I1_LARGE, u) / _poly(_I0_LARGE, u)
