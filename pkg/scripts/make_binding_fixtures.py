#!/usr/bin/env python3
"""Freeze core results into frontend/fixtures/ for the bindings parity tests.

The Node bindings drive the CLI, so these fixtures pin what "core" computed
for the same inputs; the bindings suite asserts agreement within 1e-12.
Regenerate after any numerical change:  python scripts/make_binding_fixtures.py
"""

import json
from pathlib import Path

import numpy as np

from loghmm.datasets import EARTHQUAKE_COUNTS
from loghmm.distributions import Categorical, Gaussian
from loghmm.inference import HmmModel, posterior_decode, posteriors, viterbi
from loghmm.model_io import model_to_json
from loghmm.training import baum_welch, default_initial_model, score_model

OUT_DIR = Path(__file__).resolve().parent.parent / "frontend" / "fixtures"


def score_fields(model, seqs):
    s = score_model(model, seqs)
    return {
        "log_likelihood": s.log_likelihood,
        "num_params": s.num_params,
        "num_obs": s.num_obs,
        "aic": s.aic,
        "bic": s.bic,
        "aicc": s.aicc,
    }


def earthquake_fixture():
    counts = np.array(EARTHQUAKE_COUNTS, dtype=float)
    start = default_initial_model(2, "poisson", [counts])
    fitted, report = baum_welch(start, [counts])
    return {
        "observations": [int(c) for c in EARTHQUAKE_COUNTS],
        "states": 2,
        "family": "poisson",
        "expected": {
            "iterations": report.iterations,
            "converged": report.converged,
            "log_likelihood": report.log_likelihood_trace[-1],
            "rates_sorted": sorted(d.rate for d in fitted.emissions),
            "viterbi_path": [int(s) for s in viterbi(fitted, counts).path],
            "posterior_path": [int(s) for s in posterior_decode(posteriors(fitted, counts))],
            "score": score_fields(fitted, [counts]),
        },
        "model_document": json.loads(model_to_json(fitted)),
    }


def decode_fixture(name, model, seq):
    return {
        "name": name,
        "model_document": json.loads(model_to_json(model)),
        "observations": [float(v) for v in seq],
        "expected": {
            "log_likelihood": float(posteriors(model, seq).log_likelihood),
            "viterbi_path": [int(s) for s in viterbi(model, seq).path],
            "posterior_path": [int(s) for s in posterior_decode(posteriors(model, seq))],
            "score": score_fields(model, [seq]),
        },
    }


def small_model_fixtures():
    rng = np.random.default_rng(321)
    out = []

    pi = rng.dirichlet(np.ones(2))
    a = rng.dirichlet(np.ones(2), size=2)
    discrete = HmmModel(
        pi, a, tuple(Categorical(tuple(rng.dirichlet(np.ones(3)))) for _ in range(2))
    )
    out.append(decode_fixture("discrete-2", discrete, rng.integers(0, 3, size=8).astype(float)))

    pi = rng.dirichlet(np.ones(3))
    a = rng.dirichlet(np.ones(3), size=3)
    gauss = HmmModel(
        pi,
        a,
        tuple(Gaussian(float(rng.normal(0, 2)), float(rng.uniform(0.4, 1.5))) for _ in range(3)),
    )
    out.append(decode_fixture("gaussian-3", gauss, rng.normal(size=7) * 2.0))

    # search deterministically for a sequence where the jointly-best path and
    # the pointwise-argmax path disagree
    amb_model = HmmModel(
        [0.5, 0.5],
        [[0.92, 0.08], [0.25, 0.75]],
        (Gaussian(0.0, 1.0), Gaussian(1.2, 1.0)),
    )
    for _ in range(10_000):
        seq = rng.normal(size=6) + rng.choice([0.0, 1.2], size=6)
        vit = viterbi(amb_model, seq).path
        post = posterior_decode(posteriors(amb_model, seq))
        if not np.array_equal(vit, post):
            out.append(decode_fixture("ambiguous", amb_model, seq))
            break
    else:
        raise RuntimeError("no ambiguous sequence found")
    return out


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    (OUT_DIR / "earthquake.json").write_text(
        json.dumps(earthquake_fixture(), indent=2) + "\n"
    )
    (OUT_DIR / "small_models.json").write_text(
        json.dumps(small_model_fixtures(), indent=2) + "\n"
    )
    print(f"fixtures written to {OUT_DIR}")


if __name__ == "__main__":
    main()
