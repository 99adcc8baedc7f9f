"""Log-space forward-backward, smoothed posteriors, and decoding.

Every recursion runs entirely in the log domain: probabilities of zero are
-inf, impossible prefixes propagate -inf (never NaN), and no rescaling
bookkeeping exists to underflow.  The log-transition matrix is computed once
per call and reused across all time steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import Distribution
from .special import log_sum_exp_axis

__all__ = [
    "HmmModel",
    "ForwardBackwardResult",
    "ViterbiResult",
    "InfeasibleSequenceError",
    "validate_sequence",
    "emission_log_matrix",
    "forward_log",
    "backward_log",
    "posteriors",
    "viterbi",
    "posterior_decode",
]

STOCHASTIC_TOL = 1e-12


class InfeasibleSequenceError(ValueError):
    """The observations have zero probability under the model."""


@dataclass(frozen=True, eq=False)
class HmmModel:
    """Initial distribution, row-stochastic transitions, per-state emissions."""

    initial: np.ndarray
    transitions: np.ndarray
    emissions: tuple[Distribution, ...]

    def __eq__(self, other):
        if not isinstance(other, HmmModel):
            return NotImplemented
        return (
            np.array_equal(self.initial, other.initial)
            and np.array_equal(self.transitions, other.transitions)
            and self.emissions == other.emissions
        )

    def __post_init__(self):
        pi = np.asarray(self.initial, dtype=float).copy()
        a = np.asarray(self.transitions, dtype=float).copy()
        emissions = tuple(self.emissions)
        k = pi.shape[0]
        if pi.ndim != 1 or a.shape != (k, k):
            raise ValueError(f"shape mismatch: initial has {k} states, transitions {a.shape}")
        if len(emissions) != k:
            raise ValueError(f"expected {k} emission distributions, got {len(emissions)}")
        if (pi < 0).any() or (a < 0).any():
            raise ValueError("probabilities must be non-negative")
        if abs(pi.sum() - 1.0) > STOCHASTIC_TOL:
            raise ValueError(f"initial distribution sums to {pi.sum()!r}, expected 1")
        for i, row_sum in enumerate(a.sum(axis=1)):
            if abs(row_sum - 1.0) > STOCHASTIC_TOL:
                raise ValueError(f"transitions[{i}] sums to {row_sum!r}, expected 1")
        pi.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "initial", pi)
        object.__setattr__(self, "transitions", a)
        object.__setattr__(self, "emissions", emissions)

    @property
    def num_states(self) -> int:
        return self.initial.shape[0]

    def log_initial(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.initial)

    def log_transitions(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.transitions)


@dataclass(frozen=True)
class ForwardBackwardResult:
    """Forward/backward log variables plus the smoothed posteriors.

    ``gamma`` and ``xi`` are materialized in the linear domain because the
    training M-step consumes them as weights.  ``xi`` is None unless the
    caller asked for it (decoding paths never need the pairwise posteriors).
    """

    log_alpha: np.ndarray
    log_beta: np.ndarray
    log_likelihood: float
    gamma: np.ndarray
    xi: np.ndarray | None = None


@dataclass(frozen=True)
class ViterbiResult:
    path: np.ndarray
    log_joint: float


def validate_sequence(values) -> np.ndarray:
    seq = np.asarray(values, dtype=float)
    if seq.ndim != 1 or seq.shape[0] < 1:
        raise ValueError("an observation sequence must be a non-empty 1-D array")
    if np.isnan(seq).any():
        raise ValueError("observation sequence contains NaN")
    return seq


def emission_log_matrix(model: HmmModel, sequence: np.ndarray) -> np.ndarray:
    """T x K matrix of per-state emission log-densities."""
    seq = validate_sequence(sequence)
    cols = [dist.log_prob(seq) for dist in model.emissions]
    return np.column_stack(cols)


def _forward_from_log_b(model: HmmModel, log_b: np.ndarray) -> tuple[np.ndarray, float]:
    t_len, k = log_b.shape
    log_a = model.log_transitions()
    log_alpha = np.empty((t_len, k))
    log_alpha[0] = model.log_initial() + log_b[0]
    for t in range(1, t_len):
        log_alpha[t] = log_sum_exp_axis(log_alpha[t - 1][:, None] + log_a, axis=0) + log_b[t]
    log_likelihood = float(log_sum_exp_axis(log_alpha[-1][None, :], axis=1)[0])
    return log_alpha, log_likelihood


def _backward_from_log_b(model: HmmModel, log_b: np.ndarray) -> np.ndarray:
    t_len, k = log_b.shape
    log_a = model.log_transitions()
    log_beta = np.zeros((t_len, k))
    for t in range(t_len - 2, -1, -1):
        log_beta[t] = log_sum_exp_axis(log_a + (log_b[t + 1] + log_beta[t + 1])[None, :], axis=1)
    return log_beta


def forward_log(model: HmmModel, sequence) -> tuple[np.ndarray, float]:
    """Log forward variables and the sequence log-likelihood."""
    log_b = emission_log_matrix(model, sequence)
    return _forward_from_log_b(model, log_b)


def backward_log(model: HmmModel, sequence) -> np.ndarray:
    """Log backward variables; the last row is identically zero."""
    log_b = emission_log_matrix(model, sequence)
    return _backward_from_log_b(model, log_b)


def posteriors(model: HmmModel, sequence, include_xi: bool = False) -> ForwardBackwardResult:
    """Smoothed state posteriors (and pairwise posteriors on request)."""
    log_b = emission_log_matrix(model, sequence)
    log_alpha, log_likelihood = _forward_from_log_b(model, log_b)
    if log_likelihood == -np.inf:
        raise InfeasibleSequenceError("sequence impossible under model")
    log_beta = _backward_from_log_b(model, log_b)
    gamma = np.exp(log_alpha + log_beta - log_likelihood)
    xi = None
    if include_xi:
        log_a = model.log_transitions()
        t_len = log_b.shape[0]
        k = model.num_states
        xi = np.empty((max(t_len - 1, 0), k, k))
        for t in range(t_len - 1):
            xi[t] = np.exp(
                log_alpha[t][:, None]
                + log_a
                + (log_b[t + 1] + log_beta[t + 1])[None, :]
                - log_likelihood
            )
    return ForwardBackwardResult(
        log_alpha=log_alpha,
        log_beta=log_beta,
        log_likelihood=log_likelihood,
        gamma=gamma,
        xi=xi,
    )


def viterbi(model: HmmModel, sequence) -> ViterbiResult:
    """Most probable state path; ties break toward the smallest state index."""
    log_b = emission_log_matrix(model, sequence)
    t_len, k = log_b.shape
    log_a = model.log_transitions()
    score = model.log_initial() + log_b[0]
    back = np.zeros((t_len, k), dtype=int)
    for t in range(1, t_len):
        cand = score[:, None] + log_a
        back[t] = np.argmax(cand, axis=0)
        score = cand[back[t], np.arange(k)] + log_b[t]
    best_last = int(np.argmax(score))
    log_joint = float(score[best_last])
    if log_joint == -np.inf:
        raise InfeasibleSequenceError("no feasible path")
    path = np.empty(t_len, dtype=int)
    path[-1] = best_last
    for t in range(t_len - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return ViterbiResult(path=path, log_joint=log_joint)


def posterior_decode(fb: ForwardBackwardResult) -> np.ndarray:
    """Per-time argmax of the smoothed posteriors (smallest index on ties)."""
    return np.argmax(fb.gamma, axis=1)
