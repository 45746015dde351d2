"""Command-line front end.

Subcommands: solve (single instance), sweep (Monte Carlo grid), mgf
(closed-form values and bounds), thresholds (recovery-threshold table),
oracle-check (brute-force cross-validation suite).

stdout carries machine-readable output only (JSON or CSV); progress and
errors go to stderr.  Exit codes: 0 success, 1 internal/numerical failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import estimators, mc
from .errors import InvalidArgumentError, ShufregError
from .model import ModelConfig, generate, load_instance, snr_of
from .perm import CycleType, overlap, sample_uniform
from .theory import (MgfParams, ThresholdQuery, mgf_closed_form, mgf_upper_bound,
                     threshold_snr)

DEFAULT_SEED = 1729

CLI_SOLVERS = {
    "exact-d1": "exact_d1",
    "net-search": "net_search",
    "brute-force": "brute_force",
    "alt-min": "alt_min",
    "auto": "auto",
}


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v != ""])
    except ValueError as exc:
        raise InvalidArgumentError(f"cannot parse vector {text!r}") from exc


def _parse_cycle_type(text: str) -> CycleType:
    counts: dict[int, int] = {}
    for pair in text.replace(";", ",").split(","):
        if not pair:
            continue
        try:
            k, c = pair.split(":")
            counts[int(k)] = counts.get(int(k), 0) + int(c)
        except ValueError as exc:
            raise InvalidArgumentError(f"cannot parse cycle type entry {pair!r}") from exc
    n = sum(k * c for k, c in counts.items())
    if n == 0:
        raise InvalidArgumentError("cycle type is empty")
    return CycleType(n, counts)


def _format_cycle_type(ct: CycleType) -> str:
    return ";".join(f"{k}:{c}" for k, c in sorted(ct.counts.items()))


def _progress_printer(enabled: bool):
    if not enabled:
        return None

    def report(done: int, total: int) -> None:
        if done == total or done % max(1, total // 20) == 0:
            print(f"progress: {done}/{total} trials", file=sys.stderr, flush=True)

    return report


def _config_from_args(args) -> ModelConfig:
    given = [v is not None for v in (args.snr, args.snr_exp, args.sigma)]
    if sum(given) != 1:
        raise InvalidArgumentError("specify exactly one of --snr, --snr-exp, --sigma")
    snr = args.snr
    if args.sigma is not None:
        if args.sigma < 0:
            raise InvalidArgumentError("--sigma must be >= 0")
        snr = math.inf if args.sigma == 0 else (args.beta_norm / args.sigma) ** 2
    return ModelConfig(n=args.n, d=args.d, snr=snr, snr_exponent=args.snr_exp,
                       beta_norm=args.beta_norm, beta_direction=args.beta_direction,
                       pi_law=args.pi_law)


def _solve_dispatch(args, X, y, beta_star=None):
    solver = CLI_SOLVERS[args.solver]
    if solver == "auto":
        solver = "exact_d1" if X.shape[1] == 1 else "net_search"
    if solver == "exact_d1":
        return estimators.solve_exact_d1(X, y)
    if solver == "net_search":
        net = None
        if args.net_radius is not None or args.net_delta is not None or args.net_center_truth:
            if args.net_radius is None or args.net_delta is None:
                raise InvalidArgumentError("--net-radius and --net-delta must be given together")
            if args.net_center_truth:
                if beta_star is None:
                    raise InvalidArgumentError("--net-center-truth requires a generated instance")
                center = beta_star
            else:
                center = np.zeros(X.shape[1])
            net = estimators.NetSpec(center=center, radius=args.net_radius, delta=args.net_delta)
        return estimators.solve_net_search(X, y, net=net, budget=args.net_budget)
    if solver == "brute_force":
        return estimators.solve_brute_force(X, y, cap=args.cap)
    return estimators.solve_alt_min(X, y, max_iters=args.max_iters)


def cmd_solve(args) -> int:
    if args.instance is not None:
        instance = load_instance(args.instance)
    else:
        if args.n is None or args.d is None:
            raise InvalidArgumentError("provide --instance or both --n and --d")
        instance = generate(_config_from_args(args), args.seed)

    est = _solve_dispatch(args, instance.X, instance.y, beta_star=instance.beta_star)
    doc = est.to_json_dict()
    doc.update({
        "n": instance.n,
        "d": instance.d,
        "sigma": instance.sigma,
        "snr": snr_of(instance),
        "seed": instance.seed,
        "pi_star": instance.pi_star.to_one_based(),
        "exact": est.pi_hat == instance.pi_star,
        "overlap": overlap(est.pi_hat, instance.pi_star),
    })
    json.dump(doc, sys.stdout, default=_json_default)
    print()
    return 0


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def cmd_sweep(args) -> int:
    with open(args.config, encoding="utf-8") as f:
        grid = mc.ExperimentGrid.from_json_dict(json.load(f))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    records, summary = mc.run_grid(grid, workers=args.workers,
                                   progress=_progress_printer(args.progress))
    trials_path = out_dir / "trials.csv"
    summary_path = out_dir / "summary.csv"
    mc.write_trials_csv(records, trials_path, deterministic_timing=not args.record_timings)
    mc.write_summary_csv(summary, summary_path)

    transitions = mc.estimate_transition(summary, level=args.level)
    transition_path = out_dir / "transition.json"
    with open(transition_path, "w", encoding="utf-8") as f:
        json.dump({
            "level": args.level,
            "metric": "recovery_rate",
            "cells": [{
                "n": t.n, "d": t.d, "crossing": t.crossing,
                "bracket": list(t.bracket) if t.bracket else None,
                "bracket_values": list(t.bracket_values) if t.bracket_values else None,
            } for t in transitions],
        }, f, indent=2)
        f.write("\n")

    files = [trials_path, summary_path, transition_path]
    if not args.no_plots:
        from .plots import render_sweep_figures
        files.extend(render_sweep_figures(summary, out_dir))

    json.dump({"out_dir": str(out_dir), "files": [str(p) for p in files],
               "cells": len(summary.cells), "trials": len(records)}, sys.stdout)
    print()
    return 0


def cmd_mgf(args) -> int:
    ct = _parse_cycle_type(args.cycle_type)
    params = MgfParams(t=args.t, beta_star=_parse_vector(args.beta_star),
                       beta=_parse_vector(args.beta))
    closed = mgf_closed_form(ct, params)
    try:
        bound_fc, bound_n1 = mgf_upper_bound(ct, params)
        fc_log, n1_log = bound_fc.log_value, bound_n1.log_value
    except ShufregError:
        fc_log = n1_log = math.nan
    writer = sys.stdout
    writer.write("n,cycle_type,t,value,value_log,bound_fc_log,bound_n1_log\n")
    writer.write(",".join([
        str(ct.n), _format_cycle_type(ct), f"{args.t:.17g}",
        f"{closed.value:.17g}", f"{closed.log_value:.17g}",
        f"{fc_log:.17g}", f"{n1_log:.17g}",
    ]) + "\n")
    return 0


def cmd_thresholds(args) -> int:
    modes = ["exact", "almost_exact"] if args.mode == "both" else [args.mode]
    writer = sys.stdout
    writer.write("n,mode,epsilon,snr_threshold\n")
    for n in args.n:
        for mode in modes:
            value = threshold_snr(ThresholdQuery(n=n, mode=mode, epsilon=args.epsilon))
            writer.write(f"{n},{mode},{args.epsilon:.17g},{value:.17g}\n")
    return 0


def cmd_oracle_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    checks = []
    progress = _progress_printer(args.progress)

    def run_check(name, trials, fn):
        failures = 0
        worst = 0.0
        for i in range(trials):
            err = fn(rng)
            worst = max(worst, err)
            if err > 0:
                failures += 1
            if progress is not None:
                progress(i + 1, trials)
        checks.append({"name": name, "trials": trials, "failures": failures,
                       "worst_violation": worst})

    n_top = min(args.n_max, estimators.BRUTE_FORCE_CAP - 1)

    def random_instance(rng, n, d):
        snr = math.inf if rng.random() < 0.2 else 10.0 ** rng.uniform(-2, 8)
        config = ModelConfig(n=n, d=d, snr=snr, beta_direction="sphere")
        return generate(config, int(rng.integers(2**63)))

    def check_exact_d1(rng):
        n = int(rng.integers(3, n_top + 1))
        inst = random_instance(rng, n, 1)
        res_exact = estimators.solve_exact_d1(inst.X, inst.y).residual_sq
        res_brute = estimators.solve_brute_force(inst.X, inst.y).residual_sq
        return max(0.0, abs(res_exact - res_brute) - 1e-9)

    def check_pythagoras(rng):
        n = int(rng.integers(3, 20))
        d = int(rng.integers(1, min(4, n)))
        inst = random_instance(rng, n, d)
        pi = sample_uniform(n, rng)
        res, obj = estimators.residual_and_objective(inst.X, pi, inst.y)
        ynorm2 = float(inst.y @ inst.y)
        return max(0.0, abs(res + obj - ynorm2) / max(ynorm2, 1e-300) - 1e-8)

    def check_net_search(rng):
        n = int(rng.integers(4, min(n_top, 6) + 1))
        inst = random_instance(rng, n, 2)
        brute = estimators.solve_brute_force(inst.X, inst.y)
        radius = 2.0 * float(np.linalg.norm(brute.beta_hat - inst.beta_star)) + 1.0
        delta = radius / 40.0
        net = estimators.NetSpec(center=inst.beta_star, radius=radius, delta=delta)
        est = estimators.solve_net_search(inst.X, inst.y, net=net)
        slack = np.linalg.norm(inst.X, 2) ** 2 * delta**2
        return max(0.0, est.residual_sq - (brute.residual_sq + slack) - 1e-9)

    def check_alt_min(rng):
        n = int(rng.integers(3, n_top + 1))
        inst = random_instance(rng, n, 1)
        res_exact = estimators.solve_exact_d1(inst.X, inst.y).residual_sq
        res_alt = estimators.solve_alt_min(inst.X, inst.y).residual_sq
        return max(0.0, res_exact - res_alt - 1e-9)

    run_check("exact_d1_vs_brute_force", args.trials, check_exact_d1)
    run_check("projection_identity", args.trials, check_pythagoras)
    run_check("net_search_vs_brute_force", max(1, args.trials // 2), check_net_search)
    run_check("alt_min_dominated_by_exact", args.trials, check_alt_min)

    passed = all(c["failures"] == 0 for c in checks)
    json.dump({"passed": passed, "checks": checks}, sys.stdout)
    print()
    return 0 if passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shufreg",
                                     description="Shuffled linear regression solvers and benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance and print the estimate as JSON")
    p.add_argument("--instance", type=str, default=None, help="load an instance JSON file")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--snr", type=float, default=None)
    p.add_argument("--snr-exp", type=float, default=None, help="SNR = n^c")
    p.add_argument("--sigma", type=float, default=None, help="0 selects the noiseless mode")
    p.add_argument("--beta-norm", type=float, default=1.0)
    p.add_argument("--beta-direction", choices=("e1", "sphere"), default="e1")
    p.add_argument("--pi-law", choices=("uniform", "identity"), default="uniform")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--solver", choices=sorted(CLI_SOLVERS), default="auto")
    p.add_argument("--net-radius", type=float, default=None)
    p.add_argument("--net-delta", type=float, default=None)
    p.add_argument("--net-center-truth", action="store_true",
                   help="center an explicit net at the true coefficients")
    p.add_argument("--net-budget", type=int, default=estimators.NET_BUDGET)
    p.add_argument("--cap", type=int, default=estimators.BRUTE_FORCE_CAP)
    p.add_argument("--max-iters", type=int, default=100)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run a Monte Carlo grid and write CSV/figure reports")
    p.add_argument("--config", required=True, help="grid config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=None,
                   help=f"process count (default ${mc.WORKERS_ENV_VAR} or 1)")
    p.add_argument("--level", type=float, default=0.5, help="transition crossing level")
    p.add_argument("--record-timings", action="store_true",
                   help="write measured wall times (breaks byte-identical reruns)")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.add_argument("--progress", action="store_true", help="progress lines on stderr")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mgf", help="closed-form MGF value and bounds as a CSV row")
    p.add_argument("--cycle-type", required=True, help="k:count pairs, e.g. '2:1' or '1:2;3:1'")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--beta", required=True, help="comma-separated vector")
    p.add_argument("--beta-star", required=True, help="comma-separated vector")
    p.set_defaults(func=cmd_mgf)

    p = sub.add_parser("thresholds", help="recovery-threshold table as CSV")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--mode", choices=("exact", "almost_exact", "both"), default="both")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("oracle-check", help="brute-force cross-validation suite")
    p.add_argument("--n-max", type=int, default=7)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ShufregError as exc:
        json.dump({"error": {"kind": exc.kind, "message": str(exc)}}, sys.stderr)
        print(file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # internal failure contract
        json.dump({"error": {"kind": "internal", "message": f"{type(exc).__name__}: {exc}"}},
                  sys.stderr)
        print(file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
