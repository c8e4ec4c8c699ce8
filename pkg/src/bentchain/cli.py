"""Command-line front end.

Exit codes: 0 success, 1 numerical or verification failure, 2 usage error.
Times are given in units of 1/lambda.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import __version__
from .chain import (ChainSpec, build_hamiltonian, chain_from_config, chain_to_config,
                    disordered_energies, gamma_for, middle_bend)
from .engine import run_ensemble, run_protocol, spectral_decompose, FidelityTrace
from .errors import THETA_UNITS, ErrorModel
from .experiments import EXPERIMENTS, default_spec, peak_value, run_figure
from .schemes import repeat_pdd, scheme_by_name, to_pulses, verify_selective

log = logging.getLogger("bentchain")


class UsageError(Exception):
    pass


def _chain_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("chain")
    g.add_argument("--config", help="JSON file with 'chain' and/or 'error_model' objects")
    g.add_argument("--n", type=int, default=10, help="number of qubits N")
    g.add_argument("--lambda", dest="lam", type=float, default=1.0, help="coupling scale")
    g.add_argument("--alpha", type=int, default=None, help="bend site (default: middle)")
    g.add_argument("--gamma", default="default", help="bend coupling or 'default'")
    g.add_argument("--no-bend", action="store_true", help="ideal chain, no bend coupling")
    g.add_argument("--eigenenergy", type=float, default=0.0, help="uniform B for every qubit")
    g.add_argument("--disorder", type=float, default=None,
                   help="B_i uniform in [-beta*lambda, beta*lambda]")
    g.add_argument("--disorder-seed", type=int, default=0, help="seed for --disorder")


def _scheme_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("decoupling")
    g.add_argument("--scheme", default="none",
                   help="none, partial, complete or practical, optionally with +sdd")
    g.add_argument("--reps", type=int, default=1, help="scheme passes per pi/lambda")


def _error_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("pulse errors")
    g.add_argument("--timing-q", type=float, default=0.0, help="jitter std as fraction of dt")
    g.add_argument("--theta", type=float, default=0.0, help="over-rotation coefficient")
    g.add_argument("--theta-units", choices=THETA_UNITS, default="lambda_dt")
    g.add_argument("--trajectories", type=int, default=200, help="Monte Carlo trajectories")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = argparse.ArgumentParser(prog="bentchain", description=__doc__, formatter_class=fmt)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("trace", help="simulate one fidelity curve", formatter_class=fmt)
    _chain_flags(t)
    _scheme_flags(t)
    _error_flags(t)
    t.add_argument("--time", type=float, default=3.0 * math.pi, help="total time (1/lambda)")
    t.add_argument("--samples", type=int, default=2000, help="samples per pi/lambda")
    t.add_argument("--frame", choices=("corrected", "raw"), default="corrected")
    t.add_argument("--measure", choices=("probability", "overlap"), default="probability")
    t.add_argument("--seed", type=int, default=0, help="RNG seed")
    t.add_argument("--out", default="results/trace", help="output directory")
    t.add_argument("--label", default="trace", help="CSV file stem")

    v = sub.add_parser("verify", help="check the zeroth-order average Hamiltonian",
                       formatter_class=fmt)
    _chain_flags(v)
    v.add_argument("--scheme", default="complete", help="scheme name, optionally +sdd")
    v.add_argument("--target", choices=("auto", "ideal", "couplings", "self"), default="auto",
                   help="reference Hamiltonian; auto picks couplings for practical, "
                        "self for none, the ideal chain otherwise")
    v.add_argument("--show-scheme", action="store_true", help="also print g_k and p_k")

    e = sub.add_parser("experiment", help="run a named experiment", formatter_class=fmt)
    e.add_argument("id", choices=EXPERIMENTS)
    e.add_argument("--seed", type=int, default=0, help="RNG seed")
    e.add_argument("--out", default="results", help="output directory")
    e.add_argument("--samples", type=int, default=2000, help="samples per pi/lambda")
    e.add_argument("--trajectories", type=int, default=None,
                   help="override Monte Carlo trajectories (fig7)")
    e.add_argument("--measure", choices=("probability", "overlap"), default="probability")
    return p


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc


def chain_from_args(args, cfg: dict) -> ChainSpec:
    if "chain" in cfg or "n_qubits" in cfg:
        try:
            return chain_from_config(cfg.get("chain", cfg))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad chain config: {exc}") from exc
    n, lam = args.n, args.lam
    if args.disorder is not None:
        energies = disordered_energies(n, args.disorder, lam, args.disorder_seed)
        meta = {"disorder": {"model": "uniform", "beta": args.disorder, "seed": args.disorder_seed}}
    else:
        energies = (args.eigenenergy,) * n if args.eigenenergy else None
        meta = {}
    if args.no_bend:
        return ChainSpec(n, lam, energies, None, 0.0, meta)
    alpha = middle_bend(n) if args.alpha is None else args.alpha
    if not 2 <= alpha <= n - 1:
        raise UsageError(f"--alpha must lie in [2, {n - 1}]")
    if args.gamma == "default":
        gamma = gamma_for(n, alpha, lam)
    else:
        try:
            gamma = float(args.gamma)
        except ValueError as exc:
            raise UsageError("--gamma must be a number or 'default'") from exc
    return ChainSpec(n, lam, energies, alpha, gamma, meta)


def error_model_from_args(args, cfg: dict) -> ErrorModel:
    if "error_model" in cfg:
        return ErrorModel.from_config(cfg["error_model"])
    return ErrorModel(args.timing_q, args.theta, args.theta_units, args.trajectories, args.seed)


def cmd_trace(args) -> int:
    cfg = _load_config(args.config)
    chain = chain_from_args(args, cfg)
    model = error_model_from_args(args, cfg)
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    if args.time <= 0:
        raise UsageError("--time must be positive")
    lam = chain.lam
    period = math.pi / lam
    total = args.time / lam
    h = build_hamiltonian(chain)
    seq = None
    if args.scheme != "none":
        alpha = chain.bend_position or middle_bend(chain.n_qubits)
        try:
            seq = to_pulses(repeat_pdd(scheme_by_name(args.scheme, chain.n_qubits, alpha), args.reps))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    prop = spectral_decompose(h)
    kwargs = dict(period=period, lam=lam, samples_per_period=args.samples,
                  frame=args.frame, measure=args.measure)
    expected = period if seq is None else 2 * period
    if model.is_random:
        traces = run_ensemble(prop, seq, total, model, **kwargs)
        trace = FidelityTrace.mean(traces)
    else:
        trace = run_protocol(prop, seq, total, error_model=model, rng_seed=args.seed, **kwargs)
    if not np.all(np.isfinite(trace.fidelity)):
        print("error: non-finite fidelity values", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    peak_t, peak_f = peak_value(trace, expected)
    csv_path = os.path.join(args.out, f"{args.label}.csv")
    trace.write(csv_path, {"first_peak": [peak_t, peak_f], "chain": chain_to_config(chain)})
    row = {"label": args.label, "peak_t": peak_t, "peak_F": peak_f, "scheme": args.scheme,
           "reps": args.reps if seq is not None else 0,
           "pulses_per_period": seq.nominal_count() if seq is not None else 0,
           "physical_pulses_per_period": seq.physical_count() if seq is not None else 0}
    summary = {"curves": [row],
               "config": {"args": _echo(args), "file": cfg, "chain": chain_to_config(chain),
                          "error_model": model.to_config()},
               "seed": args.seed, "version": __version__}
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print(f"first peak: t = {peak_t:.6f}/lambda, F = {peak_f:.6f}")
    print(f"wrote {csv_path}")
    return 0


def cmd_verify(args) -> int:
    cfg = _load_config(args.config)
    chain = chain_from_args(args, cfg)
    n = chain.n_qubits
    alpha = chain.bend_position or middle_bend(n)
    try:
        scheme = scheme_by_name(args.scheme, n, alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    h = build_hamiltonian(chain)
    target = args.target
    base = args.scheme.partition("+")[0]
    if target == "auto":
        target = {"practical": "couplings", "none": "self"}.get(base, "ideal")
    if target == "self":
        ref = h
    elif target == "couplings":
        ref = build_hamiltonian(ChainSpec(n, chain.lam))
    else:
        ref = build_hamiltonian(chain, ideal=True)
    if args.show_scheme:
        print(scheme.describe())
    report = verify_selective(scheme, h, ref)
    print(f"scheme {scheme.name}, N={n}, alpha={alpha}, target={target}")
    print(report)
    return 0 if report.matches_target else 1


def cmd_experiment(args) -> int:
    spec = default_spec(args.id, seed=args.seed, outdir=args.out,
                        samples_per_period=args.samples)
    spec.measure = args.measure
    if args.trajectories is not None:
        spec.curves = tuple(
            c if c.error_model is None else
            type(c)(c.label, c.scheme, c.reps, c.ideal,
                    ErrorModel(c.error_model.timing_q, c.error_model.theta_coeff,
                               c.error_model.theta_units, args.trajectories, args.seed))
            for c in spec.curves
        )
    summary = run_figure(spec)
    for row in summary["curves"]:
        f = row.get("peak_F")
        shown = "n/a" if f is None else f"{f:.6f}"
        extra = f", pulses/period {row['pulses_per_period']}" if row.get("pulses_per_period") else ""
        print(f"{row['label']}: peak F = {shown}{extra}")
    print(f"wrote {os.path.join(args.out, args.id)}")
    return 0


def _echo(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


COMMANDS = {"trace": cmd_trace, "verify": cmd_verify, "experiment": cmd_experiment}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
