"""Command-line front end: fit, decode, eval, and benchmark subcommands.

Batch-oriented: reads delimited text sequences, writes JSON model documents
and plot-ready CSV.  Exit codes: 0 success (fit: converged), 2 fit stopped
at the iteration cap, 1 any validation or data error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .datasets import EARTHQUAKE_COUNTS
from .distributions import FAMILIES, Categorical
from .inference import HmmModel, InfeasibleSequenceError, posterior_decode, posteriors, viterbi
from .model_io import ModelFormatError, load_model, read_sequences, save_model
from .training import (
    TrainingConfig,
    TrainingError,
    baum_welch,
    default_initial_model,
    score_model,
)

__all__ = ["main"]

BENCHMARK_DATASETS = {"earthquake": EARTHQUAKE_COUNTS}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loghmm",
        description="Log-space hidden Markov model fitting, decoding, and scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_flags(p, required=True):
        p.add_argument("--data", help="delimited text file of observations", required=required)
        p.add_argument("--column", type=int, default=0, help="column to read (default 0)")
        p.add_argument("--delimiter", default=",", help="cell delimiter (default ',')")

    fit = sub.add_parser("fit", help="train a model with Baum-Welch")
    add_data_flags(fit, required=False)
    fit.add_argument(
        "--benchmark",
        choices=sorted(BENCHMARK_DATASETS),
        help="use an embedded benchmark dataset instead of --data",
    )
    fit.add_argument("--seed-model", help="JSON model to start from")
    fit.add_argument("--states", type=int, help="number of states for the default start")
    fit.add_argument("--family", help="emission family name, or K comma-separated names")
    fit.add_argument("--max-iter", type=int, default=500)
    fit.add_argument("--tol", type=float, default=1e-8, help="relative log-likelihood tolerance")
    fit.add_argument("--out", help="path for the fitted model document")
    fit.add_argument("--format", choices=("text", "json", "csv"), default="text")

    dec = sub.add_parser("decode", help="recover state paths for observation sequences")
    dec.add_argument("--model", required=True)
    add_data_flags(dec)
    dec.add_argument("--method", choices=("viterbi", "posterior"), default="viterbi")
    dec.add_argument("--out", help="output path (default stdout)")
    dec.add_argument("--format", choices=("text", "csv"), default="text")

    ev = sub.add_parser("eval", help="log-likelihood and information criteria")
    ev.add_argument("--model", required=True)
    add_data_flags(ev)
    ev.add_argument("--format", choices=("text", "json", "csv"), default="text")

    bench = sub.add_parser("benchmark", help="forward-backward throughput on synthetic data")
    bench.add_argument(
        "--lengths",
        default="100,1000,10000,100000",
        help="comma-separated sequence lengths",
    )
    bench.add_argument("--out", help="CSV output path (default stdout)")
    return parser


def _load_data(args) -> list[np.ndarray]:
    benchmark = getattr(args, "benchmark", None)
    if benchmark:
        if args.data:
            raise ValueError("--data and --benchmark are mutually exclusive")
        return [np.array(BENCHMARK_DATASETS[benchmark], dtype=float)]
    if not args.data:
        raise ValueError("either --data or --benchmark is required")
    return read_sequences(args.data, column=args.column, delimiter=args.delimiter)


def _initial_model(args, data) -> HmmModel:
    if args.seed_model:
        if args.states or args.family:
            raise ValueError("--seed-model excludes --states/--family")
        return load_model(args.seed_model)
    states = args.states
    family = args.family
    if getattr(args, "benchmark", None) == "earthquake":
        states = states or 2
        family = family or "poisson"
    if not states or not family:
        raise ValueError("provide --seed-model, or both --states and --family")
    families = [name.strip() for name in family.split(",")]
    for name in families:
        if name not in FAMILIES:
            raise ValueError(f"unknown family '{name}'; supported: {', '.join(sorted(FAMILIES))}")
    return default_initial_model(states, families, data)


def _emit(lines: list[str], destination: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if destination:
        Path(destination).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _print_report(report_fields: dict, emissions, fmt: str) -> None:
    if fmt == "json":
        payload = dict(report_fields)
        payload["emissions"] = [
            {"family": d.family, "params": d.params()} for d in emissions
        ]
        print(json.dumps(payload, indent=2))
    elif fmt == "csv":
        keys = list(report_fields)
        print(",".join(keys))
        print(",".join("" if report_fields[k] is None else str(report_fields[k]) for k in keys))
    else:
        for key, value in report_fields.items():
            print(f"{key}: {'' if value is None else value}")
        for j, dist in enumerate(emissions):
            rendered = " ".join(f"{k}={v!r}" for k, v in dist.params().items())
            print(f"state {j}: {dist.family} {rendered}")


def _cmd_fit(args) -> int:
    data = _load_data(args)
    model = _initial_model(args, data)
    config = TrainingConfig(max_iterations=args.max_iter, rel_tol=args.tol)
    start = time.perf_counter()
    fitted, report = baum_welch(model, data, config)
    wall = time.perf_counter() - start
    score = score_model(fitted, data)
    if args.out:
        save_model(fitted, args.out)
    fields = {
        "iterations": report.iterations,
        "converged": report.converged,
        "log_likelihood": report.log_likelihood_trace[-1],
        "aic": score.aic,
        "bic": score.bic,
        "aicc": score.aicc,
        "wall_time_s": round(wall, 6),
    }
    _print_report(fields, fitted.emissions, args.format)
    return 0 if report.converged else 2


def _cmd_decode(args) -> int:
    model = load_model(args.model)
    data = read_sequences(args.data, column=args.column, delimiter=args.delimiter)
    paths = []
    gammas = []
    for idx, seq in enumerate(data):
        try:
            fb = posteriors(model, seq)
            if args.method == "viterbi":
                path = viterbi(model, seq).path
            else:
                path = posterior_decode(fb)
        except InfeasibleSequenceError as exc:
            raise InfeasibleSequenceError(f"sequence {idx}: {exc}") from exc
        paths.append(path)
        gammas.append(fb.gamma)

    if args.format == "csv":
        k = model.num_states
        lines = ["sequence,t,state," + ",".join(f"gamma{j}" for j in range(k))]
        for idx, (path, gamma) in enumerate(zip(paths, gammas)):
            for t, (state, row) in enumerate(zip(path, gamma)):
                lines.append(f"{idx},{t},{int(state)}," + ",".join(repr(float(v)) for v in row))
    else:
        lines = []
        for idx, path in enumerate(paths):
            if idx:
                lines.append("")
            lines.extend(str(int(s)) for s in path)
    _emit(lines, args.out)
    return 0


def _cmd_eval(args) -> int:
    model = load_model(args.model)
    data = read_sequences(args.data, column=args.column, delimiter=args.delimiter)
    score = score_model(model, data)
    fields = {
        "log_likelihood": score.log_likelihood,
        "num_params": score.num_params,
        "num_obs": score.num_obs,
        "aic": score.aic,
        "bic": score.bic,
        "aicc": score.aicc,
    }
    if args.format == "json":
        print(json.dumps(fields, indent=2))
    elif args.format == "csv":
        keys = list(fields)
        print(",".join(keys))
        print(",".join("" if fields[k] is None else str(fields[k]) for k in keys))
    else:
        for key, value in fields.items():
            print(f"{key}: {'' if value is None else value}")
    return 0


def _casino_model() -> HmmModel:
    fair = Categorical(tuple([1.0 / 6.0] * 6))
    loaded = Categorical((0.1, 0.1, 0.1, 0.1, 0.1, 0.5))
    return HmmModel(
        [0.5, 0.5],
        [[0.95, 0.05], [0.10, 0.90]],
        (fair, loaded),
    )


def _sample_casino(model: HmmModel, length: int, rng: np.random.Generator) -> np.ndarray:
    states = np.empty(length, dtype=int)
    obs = np.empty(length)
    states[0] = rng.choice(model.num_states, p=model.initial)
    for t in range(1, length):
        states[t] = rng.choice(model.num_states, p=model.transitions[states[t - 1]])
    for t in range(length):
        probs = np.asarray(model.emissions[states[t]].probs)
        obs[t] = rng.choice(len(probs), p=probs)
    return obs


def _cmd_benchmark(args) -> int:
    lengths = [int(v) for v in args.lengths.split(",") if v.strip()]
    if not lengths or any(v < 2 for v in lengths):
        raise ValueError("--lengths must be integers >= 2")
    model = _casino_model()
    rng = np.random.default_rng(12345)
    lines = ["length,forward_backward_ms,obs_per_ms"]
    for length in lengths:
        seq = _sample_casino(model, length, rng)
        start = time.perf_counter()
        posteriors(model, seq)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        lines.append(f"{length},{elapsed_ms:.3f},{length / elapsed_ms:.3f}")
    _emit(lines, args.out)
    return 0


_COMMANDS = {
    "fit": _cmd_fit,
    "decode": _cmd_decode,
    "eval": _cmd_eval,
    "benchmark": _cmd_benchmark,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        # covers TrainingError, ModelFormatError, InfeasibleSequenceError
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
