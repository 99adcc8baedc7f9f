"""Baum-Welch training with weighted emission M-steps and model selection.

The E-step runs the log-space forward-backward pass sequentially over all
sequences, streaming the pairwise-posterior accumulation per time step so
memory stays at O(TK + K^2).  The M-step re-estimates the initial
distribution, the transition rows, and each state's emission parameters via
the family-appropriate weighted fit.  States whose total posterior mass
falls below the collapse threshold keep their parameters unchanged, which
cannot decrease the EM objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import Distribution, EcmeConfig, WeightedSample, moment_seed, refit
from .inference import (
    HmmModel,
    _backward_from_log_b,
    _forward_from_log_b,
    emission_log_matrix,
    validate_sequence,
)

__all__ = [
    "TrainingConfig",
    "TrainingReport",
    "TrainingError",
    "ModelScore",
    "baum_welch",
    "m_step_transitions",
    "m_step_emissions",
    "score_model",
    "count_parameters",
    "default_initial_model",
]


class TrainingError(ValueError):
    """Raised when the data cannot be trained under the requested model."""


@dataclass(frozen=True)
class TrainingConfig:
    """EM control knobs; defaults favor convergence over speed."""

    max_iterations: int = 500
    rel_tol: float = 1e-8
    collapse_epsilon: float = 1e-8
    ecme: EcmeConfig = field(default_factory=EcmeConfig)

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not (0.0 < self.rel_tol < 1.0):
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.collapse_epsilon <= 0.0:
            raise ValueError("collapse_epsilon must be positive")


@dataclass
class TrainingReport:
    log_likelihood_trace: list[float]
    iterations: int
    converged: bool
    collapsed_states: list[tuple[int, int]]


@dataclass(frozen=True)
class ModelScore:
    log_likelihood: float
    num_params: int
    num_obs: int
    aic: float
    bic: float
    aicc: float | None


def count_parameters(model: HmmModel) -> int:
    """Free parameters: K-1 initial, K(K-1) transition, plus the per-state
    emission parameter counts."""
    k = model.num_states
    return (k - 1) + k * (k - 1) + sum(d.num_free_params() for d in model.emissions)


def score_model(model: HmmModel, data) -> ModelScore:
    """Log-likelihood over all sequences plus AIC/BIC/AICc."""
    seqs = _as_sequence_list(data)
    total_ll = 0.0
    n = 0
    for seq in seqs:
        _, ll = _forward_from_log_b(model, emission_log_matrix(model, seq))
        total_ll += ll
        n += len(seq)
    p = count_parameters(model)
    aic = 2.0 * p - 2.0 * total_ll
    bic = p * math.log(n) - 2.0 * total_ll
    aicc = aic + 2.0 * p * (p + 1.0) / (n - p - 1.0) if n > p + 1 else None
    return ModelScore(total_ll, p, n, aic, bic, aicc)


def m_step_transitions(
    xi_totals: np.ndarray,
    gamma_totals: np.ndarray,
    first_gammas: list[np.ndarray],
    current: HmmModel,
    epsilon: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Re-estimate the initial distribution and transition matrix.

    Rows whose accumulated occupancy falls below ``epsilon`` are left
    unchanged (the collapse guard applied to transitions).
    """
    pi = np.mean(np.stack(first_gammas), axis=0)
    pi = pi / pi.sum()
    k = current.num_states
    a = np.array(current.transitions, copy=True)
    for i in range(k):
        if gamma_totals[i] >= epsilon:
            row = xi_totals[i] / gamma_totals[i]
            total = row.sum()
            if total > 0:
                a[i] = row / total
    return pi, a


def m_step_emissions(
    emissions: tuple[Distribution, ...],
    per_state_samples: list[WeightedSample],
    config: TrainingConfig,
) -> tuple[tuple[Distribution, ...], list[int]]:
    """Family-appropriate weighted fit per state; states with posterior mass
    below the collapse threshold keep their current parameters."""
    updated = []
    collapsed = []
    for j, (dist, sample) in enumerate(zip(emissions, per_state_samples)):
        if sample.total_weight < config.collapse_epsilon:
            updated.append(dist)
            collapsed.append(j)
            continue
        try:
            updated.append(refit(dist, sample, config.ecme))
        except ValueError as exc:
            raise TrainingError(f"state {j}: {exc}") from exc
    return tuple(updated), collapsed


def _as_sequence_list(data) -> list[np.ndarray]:
    if isinstance(data, np.ndarray) and data.ndim == 1:
        data = [data]
    seqs = [validate_sequence(seq) for seq in data]
    if not seqs:
        raise TrainingError("training data contains no sequences")
    return seqs


def baum_welch(
    model: HmmModel, data, config: TrainingConfig | None = None
) -> tuple[HmmModel, TrainingReport]:
    """EM training: returns the refined model and the per-iteration trace.

    The trace records the log-likelihood of the model at the start of each
    iteration; on convergence the returned model is the one whose likelihood
    equals the last trace entry (no trailing M-step is applied).
    """
    config = config or TrainingConfig()
    seqs = _as_sequence_list(data)
    k = model.num_states
    all_obs = np.concatenate(seqs)

    current = model
    trace: list[float] = []
    collapsed_states: list[tuple[int, int]] = []
    converged = False

    for iteration in range(1, config.max_iterations + 1):
        total_ll = 0.0
        xi_totals = np.zeros((k, k))
        gamma_totals = np.zeros(k)
        first_gammas: list[np.ndarray] = []
        gamma_blocks: list[np.ndarray] = []
        log_a = current.log_transitions()

        for s_idx, seq in enumerate(seqs):
            log_b = emission_log_matrix(current, seq)
            dead = np.nonzero(~(log_b > -np.inf).any(axis=1))[0]
            if dead.size:
                raise TrainingError(
                    "observation outside the support of every state: "
                    f"sequence {s_idx}, index {int(dead[0])}"
                )
            log_alpha, ll = _forward_from_log_b(current, log_b)
            if ll == -np.inf:
                raise TrainingError(f"sequence {s_idx} is impossible under the model")
            log_beta = _backward_from_log_b(current, log_b)
            gamma = np.exp(log_alpha + log_beta - ll)
            total_ll += ll
            first_gammas.append(gamma[0])
            gamma_blocks.append(gamma)
            gamma_totals += gamma[:-1].sum(axis=0)
            for t in range(len(seq) - 1):
                xi_totals += np.exp(
                    log_alpha[t][:, None]
                    + log_a
                    + (log_b[t + 1] + log_beta[t + 1])[None, :]
                    - ll
                )

        trace.append(total_ll)
        if len(trace) >= 2:
            delta = trace[-1] - trace[-2]
            if delta == 0.0 or abs(delta) < config.rel_tol * abs(trace[-1]):
                converged = True
                break
        if iteration == config.max_iterations:
            break

        all_gamma = np.concatenate(gamma_blocks, axis=0)
        samples = [WeightedSample(all_obs, all_gamma[:, j]) for j in range(k)]
        new_emissions, collapsed = m_step_emissions(current.emissions, samples, config)
        collapsed_states.extend((iteration, j) for j in collapsed)
        pi_new, a_new = m_step_transitions(
            xi_totals, gamma_totals, first_gammas, current, config.collapse_epsilon
        )
        current = HmmModel(pi_new, a_new, new_emissions)

    report = TrainingReport(
        log_likelihood_trace=trace,
        iterations=len(trace),
        converged=converged,
        collapsed_states=collapsed_states,
    )
    return current, report


def default_initial_model(num_states: int, families, data) -> HmmModel:
    """Deterministic starting model: pooled observations are sorted and split
    into quantile bins, one per state, and each state's family is seeded from
    the moments of its bin.  The chain starts uniform with sticky diagonals.

    ``families`` is one family name (shared by all states) or one per state.
    """
    if num_states < 1:
        raise ValueError("num_states must be positive")
    if isinstance(families, str):
        families = [families]
    families = list(families)
    if len(families) == 1:
        families = families * num_states
    if len(families) != num_states:
        raise ValueError(f"expected 1 or {num_states} family names, got {len(families)}")

    seqs = _as_sequence_list(data)
    pooled = np.sort(np.concatenate(seqs))
    bins = np.array_split(pooled, num_states)
    num_categories = None
    if "categorical" in families:
        num_categories = int(pooled.max()) + 1

    emissions = []
    for family, chunk in zip(families, bins):
        if chunk.size == 0:
            raise TrainingError("more states than observations; cannot seed bins")
        if family in ("uniform", "pareto"):
            # These M-steps pin the support to the global data range; seeding
            # any narrower would make the first update non-monotone.
            sample = WeightedSample.with_unit_weights(pooled)
        else:
            sample = WeightedSample.with_unit_weights(chunk)
        emissions.append(moment_seed(family, sample, num_categories=num_categories))

    pi = np.full(num_states, 1.0 / num_states)
    if num_states == 1:
        a = np.array([[1.0]])
    else:
        off = 0.1 / (num_states - 1)
        a = np.full((num_states, num_states), off)
        np.fill_diagonal(a, 0.9)
    return HmmModel(pi, a, tuple(emissions))
