"""Seeded Monte Carlo sweeps over (n, d, SNR-exponent) grids.

Each trial draws its own seed from numpy's ``SeedSequence`` keyed by
(master_seed, n, d, round(exponent * 1e6) mod 2^64, trial_index), so any
cell or trial is reproducible in isolation and results are independent of
execution order and worker count.

Trial CSVs are byte-reproducible by default: the wall_time_ms column is
written as 0.0 unless real timings are explicitly requested, since measured
times would break the byte-identical rerun contract.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import estimators
from .errors import BudgetError, InvalidArgumentError
from .model import ModelConfig, generate
from .perm import overlap

WORKERS_ENV_VAR = "SHUFREG_WORKERS"
MAX_TOTAL_TRIALS = 10**6

TRIALS_HEADER = ["n", "d", "snr_exponent", "trial", "seed", "exact",
                 "overlap", "residual_sq", "wall_time_ms"]
SUMMARY_HEADER = ["n", "d", "snr_exponent", "trials", "recovery_rate",
                  "recovery_se", "mean_overlap", "overlap_se"]


@dataclass(frozen=True)
class GridCell:
    """One sweep cell: problem size, SNR exponent, and the solver to run."""

    n: int
    d: int
    snr_exponent: float
    solver: str = "auto"
    solver_options: dict = field(default_factory=dict)

    def resolved_solver(self) -> str:
        if self.solver == "auto":
            return "exact_d1" if self.d == 1 else "net_search"
        return self.solver


@dataclass(frozen=True)
class ExperimentGrid:
    """Sweep specification: the cross product of sizes and SNR exponents."""

    n_values: tuple
    d_values: tuple
    snr_exponents: tuple
    trials_per_cell: int
    master_seed: int
    solver: str = "auto"
    solver_options: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(v) for v in self.n_values))
        object.__setattr__(self, "d_values", tuple(int(v) for v in self.d_values))
        object.__setattr__(self, "snr_exponents", tuple(float(v) for v in self.snr_exponents))
        if not self.n_values or not self.d_values or not self.snr_exponents:
            raise InvalidArgumentError("n_values, d_values, snr_exponents must be nonempty")
        if self.trials_per_cell < 1:
            raise InvalidArgumentError("trials_per_cell must be >= 1")
        if max(self.d_values) > min(self.n_values):
            raise InvalidArgumentError("every d must satisfy d <= min(n_values)")
        if list(self.snr_exponents) != sorted(self.snr_exponents):
            raise InvalidArgumentError("snr_exponents must be sorted ascending")
        if self.solver not in ("auto",) + estimators.SOLVERS:
            raise InvalidArgumentError(f"unknown solver {self.solver!r}")

    def cells(self) -> list[GridCell]:
        return [GridCell(n, d, c, self.solver, dict(self.solver_options))
                for n, d, c in product(self.n_values, self.d_values, self.snr_exponents)]

    def to_json_dict(self) -> dict:
        return {
            "n_values": list(self.n_values),
            "d_values": list(self.d_values),
            "snr_exponents": list(self.snr_exponents),
            "trials_per_cell": self.trials_per_cell,
            "master_seed": self.master_seed,
            "solver": self.solver,
            "solver_options": dict(self.solver_options),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ExperimentGrid":
        return cls(
            n_values=doc["n_values"],
            d_values=doc["d_values"],
            snr_exponents=doc["snr_exponents"],
            trials_per_cell=int(doc["trials_per_cell"]),
            master_seed=int(doc["master_seed"]),
            solver=doc.get("solver", "auto"),
            solver_options=dict(doc.get("solver_options", {})),
        )


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one solver run on one generated instance."""

    n: int
    d: int
    snr_exponent: float
    trial: int
    seed: int
    exact: bool
    overlap: float
    residual_sq: float
    wall_time_ms: float
    error: str = ""


@dataclass(frozen=True)
class CellSummary:
    n: int
    d: int
    snr_exponent: float
    trials: int
    recovery_rate: float
    recovery_se: float
    mean_overlap: float
    overlap_se: float


@dataclass(frozen=True)
class GridSummary:
    cells: tuple


@dataclass(frozen=True)
class TransitionEstimate:
    """Interpolated exponent where the per-(n, d) curve crosses ``level``."""

    n: int
    d: int
    metric: str
    level: float
    crossing: float | None
    bracket: tuple | None
    bracket_values: tuple | None


def trial_seed(master_seed: int, n: int, d: int, snr_exponent: float, trial_index: int) -> int:
    """Deterministic 64-bit per-trial seed; exponents keyed at 1e-6 resolution."""
    if math.isfinite(snr_exponent):
        exp_key = int(round(snr_exponent * 1e6)) % (1 << 64)
    else:
        exp_key = (1 << 64) - 1  # noiseless sentinel (exponent = inf)
    ss = np.random.SeedSequence([master_seed % (1 << 64), n, d, exp_key, trial_index])
    return int(ss.generate_state(1, np.uint64)[0])


def _solve(cell: GridCell, X, y) -> estimators.Estimate:
    name = cell.resolved_solver()
    opts = cell.solver_options
    if name == "exact_d1":
        return estimators.solve_exact_d1(X, y)
    if name == "net_search":
        return estimators.solve_net_search(X, y, budget=opts.get("net_budget", estimators.NET_BUDGET))
    if name == "brute_force":
        return estimators.solve_brute_force(X, y, cap=opts.get("cap", estimators.BRUTE_FORCE_CAP))
    if name == "alt_min":
        return estimators.solve_alt_min(X, y, max_iters=opts.get("max_iters", 100))
    raise InvalidArgumentError(f"unknown solver {name!r}")


def run_trial(cell: GridCell, trial_index: int, master_seed: int) -> TrialRecord:
    """Generate, solve, and score one trial; budget errors become failed records."""
    seed = trial_seed(master_seed, cell.n, cell.d, cell.snr_exponent, trial_index)
    config = ModelConfig(n=cell.n, d=cell.d, snr_exponent=cell.snr_exponent)
    instance = generate(config, seed)
    start = time.perf_counter()
    try:
        est = _solve(cell, instance.X, instance.y)
    except BudgetError as exc:
        elapsed = (time.perf_counter() - start) * 1e3
        return TrialRecord(cell.n, cell.d, cell.snr_exponent, trial_index, seed,
                           exact=False, overlap=math.nan, residual_sq=math.nan,
                           wall_time_ms=elapsed, error=str(exc))
    elapsed = (time.perf_counter() - start) * 1e3
    exact = est.pi_hat == instance.pi_star
    return TrialRecord(cell.n, cell.d, cell.snr_exponent, trial_index, seed,
                       exact=exact, overlap=overlap(est.pi_hat, instance.pi_star),
                       residual_sq=est.residual_sq, wall_time_ms=elapsed)


def _run_trial_args(args) -> TrialRecord:
    return run_trial(*args)


def _resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV_VAR)
    return max(1, int(env)) if env else 1


def run_grid(grid: ExperimentGrid, workers: int | None = None, progress=None,
             max_total_trials: int = MAX_TOTAL_TRIALS) -> tuple[list[TrialRecord], GridSummary]:
    """Run every cell x trial; output is independent of worker count.

    ``progress`` is an optional callable invoked as progress(done, total).
    """
    cells = grid.cells()
    total = len(cells) * grid.trials_per_cell
    if total > max_total_trials:
        raise BudgetError(
            f"grid requests {total} trials ({len(cells)} cells x {grid.trials_per_cell}), "
            f"over the limit of {max_total_trials}")

    work = [(cell, t, grid.master_seed) for cell in cells for t in range(grid.trials_per_cell)]
    workers = _resolve_workers(workers)
    records: list[TrialRecord] = []
    if workers == 1:
        for i, args in enumerate(work):
            records.append(_run_trial_args(args))
            if progress is not None:
                progress(i + 1, total)
    else:
        chunksize = max(1, total // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, rec in enumerate(pool.map(_run_trial_args, work, chunksize=chunksize)):
                records.append(rec)
                if progress is not None:
                    progress(i + 1, total)
    return records, summarize(records)


def summarize(records: list[TrialRecord]) -> GridSummary:
    """Aggregate per-cell recovery rates and overlaps (cells sorted by key)."""
    groups: dict[tuple, list[TrialRecord]] = {}
    for rec in records:
        groups.setdefault((rec.n, rec.d, rec.snr_exponent), []).append(rec)

    cells = []
    for key in sorted(groups):
        recs = groups[key]
        trials = len(recs)
        rate = sum(r.exact for r in recs) / trials
        rate_se = math.sqrt(rate * (1.0 - rate) / trials)
        overlaps = np.array([r.overlap for r in recs])
        valid = overlaps[~np.isnan(overlaps)]
        mean_overlap = float(valid.mean()) if valid.size else math.nan
        overlap_se = float(valid.std(ddof=1) / math.sqrt(valid.size)) if valid.size > 1 else 0.0
        cells.append(CellSummary(key[0], key[1], key[2], trials, rate, rate_se,
                                 mean_overlap, overlap_se))
    return GridSummary(cells=tuple(cells))


def estimate_transition(summary: GridSummary, level: float = 0.5,
                        metric: str = "recovery_rate") -> list[TransitionEstimate]:
    """Linear interpolation of the first upward level crossing per (n, d).

    Returns crossing=None when the curve never rises through ``level``.
    """
    if metric not in ("recovery_rate", "mean_overlap"):
        raise InvalidArgumentError(f"unknown metric {metric!r}")
    by_nd: dict[tuple, list[CellSummary]] = {}
    for cell in summary.cells:
        by_nd.setdefault((cell.n, cell.d), []).append(cell)

    out = []
    for (n, d), cells in sorted(by_nd.items()):
        cells = sorted(cells, key=lambda c: c.snr_exponent)
        values = [getattr(c, metric) for c in cells]
        exps = [c.snr_exponent for c in cells]
        crossing = bracket = bracket_values = None
        for i in range(len(cells) - 1):
            lo, hi = values[i], values[i + 1]
            if lo < level <= hi:
                crossing = exps[i] + (level - lo) * (exps[i + 1] - exps[i]) / (hi - lo)
                bracket = (exps[i], exps[i + 1])
                bracket_values = (lo, hi)
                break
        out.append(TransitionEstimate(n, d, metric, level, crossing, bracket, bracket_values))
    return out


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_trials_csv(records: list[TrialRecord], path,
                     deterministic_timing: bool = True) -> None:
    """One row per trial, LF line endings, floats at 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRIALS_HEADER)
        for r in records:
            wall = 0.0 if deterministic_timing else r.wall_time_ms
            writer.writerow([r.n, r.d, _fmt(r.snr_exponent), r.trial, r.seed,
                             int(r.exact), _fmt(r.overlap), _fmt(r.residual_sq), _fmt(wall)])


def write_summary_csv(summary: GridSummary, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for c in summary.cells:
            writer.writerow([c.n, c.d, _fmt(c.snr_exponent), c.trials,
                             _fmt(c.recovery_rate), _fmt(c.recovery_se),
                             _fmt(c.mean_overlap), _fmt(c.overlap_se)])


def read_trials_csv(path) -> list[TrialRecord]:
    records = []
    with open(path, encoding="utf-8", newline="") as f:
        for row in csv.DictReader(f):
            records.append(TrialRecord(
                n=int(row["n"]), d=int(row["d"]),
                snr_exponent=float(row["snr_exponent"]), trial=int(row["trial"]),
                seed=int(row["seed"]), exact=bool(int(row["exact"])),
                overlap=float(row["overlap"]), residual_sq=float(row["residual_sq"]),
                wall_time_ms=float(row["wall_time_ms"])))
    return records
