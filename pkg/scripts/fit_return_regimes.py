#!/usr/bin/env python3
"""Recipe: market-regime segmentation with a 3-state Student-t HMM.

Requires user-supplied data (daily closing prices or log-returns); index
data is not bundled.  Example with a CSV of closes in column 1:

    python scripts/fit_return_regimes.py prices.csv --column 1 --from-prices

The states are reported sorted by scale (descending), which typically reads
as bearish / neutral / bullish for equity indices.
"""

import argparse

import numpy as np

from loghmm.model_io import read_sequences, save_model
from loghmm.training import TrainingConfig, baum_welch, default_initial_model, score_model


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("data", help="CSV of log-returns (or prices with --from-prices)")
    ap.add_argument("--column", type=int, default=0)
    ap.add_argument("--delimiter", default=",")
    ap.add_argument("--from-prices", action="store_true", help="convert closes to log-returns")
    ap.add_argument("--states", type=int, default=3)
    ap.add_argument("--out", help="write the fitted model document here")
    args = ap.parse_args()

    sequences = read_sequences(args.data, column=args.column, delimiter=args.delimiter)
    if args.from_prices:
        sequences = [np.diff(np.log(seq)) for seq in sequences]

    model = default_initial_model(args.states, "student_t", sequences)
    fitted, report = baum_welch(model, sequences, TrainingConfig())
    score = score_model(fitted, sequences)

    print(f"iterations: {report.iterations} (converged: {report.converged})")
    print(f"logL: {report.log_likelihood_trace[-1]:.4f}   AIC {score.aic:.1f}   BIC {score.bic:.1f}")
    order = np.argsort([-d.sigma for d in fitted.emissions])
    labels = ["high-vol", "mid-vol", "low-vol"] + [f"state-{i}" for i in range(3, args.states)]
    for label, j in zip(labels, order):
        d = fitted.emissions[j]
        print(f"{label:>9}: mu={d.mu:+.6f}  sigma={d.sigma:.6f}  nu={d.nu:.2f}")
    if args.out:
        save_model(fitted, args.out)
        print(f"model written to {args.out}")


if __name__ == "__main__":
    main()
