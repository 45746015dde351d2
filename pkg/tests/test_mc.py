import math

import numpy as np
import pytest

from shufreg.errors import BudgetError, InvalidArgumentError
from shufreg.mc import (CellSummary, ExperimentGrid, GridCell, GridSummary, TrialRecord,
                        estimate_transition, read_trials_csv, run_grid, run_trial,
                        summarize, trial_seed, write_summary_csv, write_trials_csv)


def small_grid(**overrides):
    kwargs = dict(n_values=[20], d_values=[1], snr_exponents=[2.0, 6.0],
                  trials_per_cell=5, master_seed=555)
    kwargs.update(overrides)
    return ExperimentGrid(**kwargs)


class TestGridValidation:
    def test_unsorted_exponents_rejected(self):
        with pytest.raises(InvalidArgumentError):
            small_grid(snr_exponents=[6.0, 2.0])

    def test_d_over_min_n_rejected(self):
        with pytest.raises(InvalidArgumentError):
            small_grid(n_values=[4, 20], d_values=[5])

    def test_trials_positive(self):
        with pytest.raises(InvalidArgumentError):
            small_grid(trials_per_cell=0)

    def test_unknown_solver(self):
        with pytest.raises(InvalidArgumentError):
            small_grid(solver="simulated-annealing")

    def test_json_round_trip(self):
        grid = small_grid(solver="alt_min", solver_options={"max_iters": 5})
        assert ExperimentGrid.from_json_dict(grid.to_json_dict()) == grid

    def test_cells_cross_product(self):
        grid = small_grid(n_values=[10, 20], snr_exponents=[1.0, 2.0, 3.0])
        cells = grid.cells()
        assert len(cells) == 6
        assert cells[0] == GridCell(10, 1, 1.0)


class TestRunTrial:
    def test_deterministic(self):
        cell = GridCell(15, 1, 4.0)
        a = run_trial(cell, 3, master_seed=99)
        b = run_trial(cell, 3, master_seed=99)
        assert (a.seed, a.exact, a.overlap, a.residual_sq) == (b.seed, b.exact, b.overlap, b.residual_sq)

    def test_noiseless_cell_recovers(self):
        # exponent = inf encodes the sigma = 0 cell
        for trial in range(5):
            rec = run_trial(GridCell(12, 1, math.inf), trial, master_seed=7)
            assert rec.exact is True
            assert rec.overlap == 1.0
            assert rec.residual_sq < 1e-12

    def test_exact_implies_full_overlap(self):
        for trial in range(20):
            rec = run_trial(GridCell(10, 1, 3.0), trial, master_seed=21)
            assert 0.0 <= rec.overlap <= 1.0
            if rec.exact:
                assert rec.overlap == 1.0

    def test_high_snr_pilot_recovery_rate(self):
        # n=50 at exponent 6 sits far above the recovery threshold
        recs = [run_trial(GridCell(50, 1, 6.0), t, master_seed=11) for t in range(100)]
        rate = sum(r.exact for r in recs) / len(recs)
        assert rate >= 0.9

    def test_budget_error_recorded_not_raised(self):
        cell = GridCell(9, 1, 2.0, solver="brute_force", solver_options={"cap": 8})
        rec = run_trial(cell, 0, master_seed=5)
        assert rec.error != ""
        assert rec.exact is False
        assert math.isnan(rec.overlap) and math.isnan(rec.residual_sq)

    def test_seed_depends_on_every_key(self):
        base = trial_seed(1, 10, 1, 2.0, 0)
        assert trial_seed(2, 10, 1, 2.0, 0) != base
        assert trial_seed(1, 11, 1, 2.0, 0) != base
        assert trial_seed(1, 10, 2, 2.0, 0) != base
        assert trial_seed(1, 10, 1, 2.5, 0) != base
        assert trial_seed(1, 10, 1, 2.0, 1) != base


class TestRunGrid:
    def test_single_cell_single_trial_summary_matches_record(self):
        grid = small_grid(snr_exponents=[5.0], trials_per_cell=1)
        records, summary = run_grid(grid)
        assert len(records) == 1 and len(summary.cells) == 1
        cell = summary.cells[0]
        rec = records[0]
        assert cell.trials == 1
        assert cell.recovery_rate == float(rec.exact)
        assert cell.mean_overlap == rec.overlap
        assert cell.overlap_se == 0.0

    def test_summary_recompute_is_identical(self):
        grid = small_grid()
        records, summary = run_grid(grid)
        assert summarize(records) == summary

    def test_worker_count_does_not_change_output(self, tmp_path):
        grid = small_grid()
        records1, _ = run_grid(grid, workers=1)
        records2, _ = run_grid(grid, workers=2)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_trials_csv(records1, p1)
        write_trials_csv(records2, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_rate_monotone_in_exponent_within_2se(self):
        grid = ExperimentGrid(n_values=[30], d_values=[1],
                              snr_exponents=[2.0, 3.0, 4.0, 5.0, 6.0],
                              trials_per_cell=50, master_seed=808)
        _, summary = run_grid(grid)
        cells = summary.cells
        for lo, hi in zip(cells, cells[1:]):
            slack = 2.0 * math.hypot(lo.recovery_se, hi.recovery_se)
            assert hi.recovery_rate >= lo.recovery_rate - slack

    def test_total_trial_budget(self):
        grid = small_grid(trials_per_cell=100)
        with pytest.raises(BudgetError, match="trials"):
            run_grid(grid, max_total_trials=10)

    def test_progress_callback(self):
        seen = []
        grid = small_grid(snr_exponents=[4.0], trials_per_cell=3)
        run_grid(grid, progress=lambda done, total: seen.append((done, total)))
        assert seen == [(1, 3), (2, 3), (3, 3)]


class TestTransition:
    def make_summary(self, rates, exps, n=100, d=1):
        cells = tuple(CellSummary(n, d, e, 10, r, 0.0, r, 0.0)
                      for e, r in zip(exps, rates))
        return GridSummary(cells=cells)

    def test_interpolated_midpoint(self):
        summary = self.make_summary([0.0, 0.0, 1.0, 1.0], [2.0, 3.0, 4.0, 5.0])
        (t,) = estimate_transition(summary, level=0.5)
        assert t.crossing == pytest.approx(3.5)
        assert t.bracket == (3.0, 4.0)
        assert t.bracket_values == (0.0, 1.0)

    def test_all_rates_one_not_found(self):
        summary = self.make_summary([1.0, 1.0, 1.0], [2.0, 3.0, 4.0])
        (t,) = estimate_transition(summary)
        assert t.crossing is None and t.bracket is None

    def test_multiple_nd_groups(self):
        cells = (CellSummary(50, 1, 2.0, 10, 0.0, 0.0, 0.5, 0.0),
                 CellSummary(50, 1, 4.0, 10, 1.0, 0.0, 1.0, 0.0),
                 CellSummary(100, 1, 2.0, 10, 1.0, 0.0, 1.0, 0.0),
                 CellSummary(100, 1, 4.0, 10, 1.0, 0.0, 1.0, 0.0))
        out = estimate_transition(GridSummary(cells=cells))
        assert len(out) == 2
        assert out[0].crossing == pytest.approx(3.0)
        assert out[1].crossing is None

    def test_overlap_metric(self):
        summary = self.make_summary([0.2, 0.8], [1.0, 3.0])
        (t,) = estimate_transition(summary, level=0.5, metric="mean_overlap")
        assert t.crossing == pytest.approx(2.0)

    def test_unknown_metric(self):
        with pytest.raises(InvalidArgumentError):
            estimate_transition(GridSummary(cells=()), metric="accuracy")


class TestCsvFormats:
    def test_trials_header_and_round_trip(self, tmp_path):
        grid = small_grid(trials_per_cell=3)
        records, _ = run_grid(grid)
        path = tmp_path / "trials.csv"
        write_trials_csv(records, path)
        text = path.read_text()
        assert text.splitlines()[0] == "n,d,snr_exponent,trial,seed,exact,overlap,residual_sq,wall_time_ms"
        assert "\r" not in text
        back = read_trials_csv(path)
        assert [(r.n, r.d, r.snr_exponent, r.trial, r.seed, r.exact, r.overlap, r.residual_sq)
                for r in back] == \
               [(r.n, r.d, r.snr_exponent, r.trial, r.seed, r.exact, r.overlap, r.residual_sq)
                for r in records]

    def test_seventeen_significant_digits(self, tmp_path):
        rec = TrialRecord(10, 1, 2.0, 0, 7, True, 1 / 3, 0.1, 12.5)
        path = tmp_path / "one.csv"
        write_trials_csv([rec], path)
        row = path.read_text().splitlines()[1]
        assert "0.33333333333333331" in row
        assert "0.10000000000000001" in row

    def test_deterministic_timing_default(self, tmp_path):
        rec = TrialRecord(10, 1, 2.0, 0, 7, True, 1.0, 0.0, 123.45)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_trials_csv([rec], a)
        write_trials_csv([rec], b, deterministic_timing=False)
        assert a.read_text().splitlines()[1].endswith(",0")
        assert "123.45" in b.read_text()

    def test_summary_header(self, tmp_path):
        grid = small_grid(trials_per_cell=2)
        _, summary = run_grid(grid)
        path = tmp_path / "summary.csv"
        write_summary_csv(summary, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "n,d,snr_exponent,trials,recovery_rate,recovery_se,mean_overlap,overlap_se"
        assert len(lines) == 1 + len(summary.cells)

    def test_recovery_se_formula(self):
        records = [TrialRecord(5, 1, 2.0, t, t, t < 3, 1.0 if t < 3 else 0.4, 0.1, 0.0)
                   for t in range(10)]
        summary = summarize(records)
        cell = summary.cells[0]
        assert cell.recovery_rate == pytest.approx(0.3)
        assert cell.recovery_se == pytest.approx(math.sqrt(0.3 * 0.7 / 10))
