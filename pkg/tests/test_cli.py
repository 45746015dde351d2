import json

import pytest

from shufreg.cli import main
from shufreg.mc import read_trials_csv


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSolve:
    def test_high_snr_exact_recovery(self, capsys):
        code, out, _ = run_cli(capsys, "solve", "--n", "20", "--d", "1",
                               "--snr-exp", "6", "--seed", "7", "--solver", "exact-d1")
        assert code == 0
        doc = json.loads(out)
        assert doc["exact"] is True
        assert doc["overlap"] == 1.0
        assert doc["solver"] == "exact_d1"
        assert sorted(doc["pi_hat"]) == list(range(1, 21))

    def test_noiseless_residual(self, capsys):
        code, out, _ = run_cli(capsys, "solve", "--n", "12", "--d", "1",
                               "--sigma", "0", "--seed", "3")
        assert code == 0
        doc = json.loads(out)
        assert doc["residual_sq"] <= 1e-8
        assert doc["sigma"] == 0.0

    def test_invalid_d_usage_error(self, capsys):
        code, out, err = run_cli(capsys, "solve", "--n", "10", "--d", "0",
                                 "--snr-exp", "4")
        assert code == 2
        assert out == ""
        assert json.loads(err)["error"]["kind"] == "invalid-argument"

    def test_conflicting_snr_flags(self, capsys):
        code, _, err = run_cli(capsys, "solve", "--n", "10", "--d", "1",
                               "--snr", "10", "--sigma", "0.1")
        assert code == 2
        assert json.loads(err)["error"]["kind"] == "invalid-argument"

    def test_instance_round_trip(self, capsys, tmp_path):
        from shufreg.model import ModelConfig, generate, save_instance
        inst = generate(ModelConfig(n=8, d=1, snr=1e10), seed=77)
        path = tmp_path / "inst.json"
        save_instance(inst, path)
        code, out, _ = run_cli(capsys, "solve", "--instance", str(path))
        assert code == 0
        doc = json.loads(out)
        assert doc["n"] == 8 and doc["seed"] == 77
        assert doc["exact"] is True

    def test_net_search_with_truth_center(self, capsys):
        code, out, _ = run_cli(capsys, "solve", "--n", "15", "--d", "2", "--sigma", "0",
                               "--seed", "5", "--solver", "net-search",
                               "--net-center-truth", "--net-radius", "0.5",
                               "--net-delta", "0.05")
        assert code == 0
        doc = json.loads(out)
        assert doc["residual_sq"] <= 1e-8
        assert doc["exact"] is True

    def test_brute_force_cap_is_failure_exit(self, capsys):
        code, _, err = run_cli(capsys, "solve", "--n", "12", "--d", "1", "--snr", "100",
                               "--solver", "brute-force")
        assert code == 1
        assert json.loads(err)["error"]["kind"] == "budget"


class TestSweep:
    def write_config(self, tmp_path, **overrides):
        doc = dict(n_values=[15], d_values=[1], snr_exponents=[2.0, 6.0],
                   trials_per_cell=4, master_seed=99)
        doc.update(overrides)
        path = tmp_path / "grid.json"
        path.write_text(json.dumps(doc))
        return path

    def test_outputs_and_determinism(self, capsys, tmp_path):
        config = self.write_config(tmp_path)
        out1 = tmp_path / "run1"
        out2 = tmp_path / "run2"
        code, stdout, _ = run_cli(capsys, "sweep", "--config", str(config), "--out", str(out1))
        assert code == 0
        manifest = json.loads(stdout)
        assert manifest["trials"] == 8 and manifest["cells"] == 2
        for name in ("trials.csv", "summary.csv", "transition.json",
                     "recovery_rate.png", "mean_overlap.png"):
            assert (out1 / name).exists(), name
            assert (out1 / name).stat().st_size > 0
        code, _, _ = run_cli(capsys, "sweep", "--config", str(config), "--out", str(out2))
        assert code == 0
        assert (out1 / "trials.csv").read_bytes() == (out2 / "trials.csv").read_bytes()
        assert (out1 / "summary.csv").read_bytes() == (out2 / "summary.csv").read_bytes()

    def test_single_cell_grid(self, capsys, tmp_path):
        config = self.write_config(tmp_path, snr_exponents=[5.0], trials_per_cell=1)
        out = tmp_path / "single"
        code, _, _ = run_cli(capsys, "sweep", "--config", str(config), "--out", str(out),
                             "--no-plots")
        assert code == 0
        lines = (out / "summary.csv").read_text().splitlines()
        assert len(lines) == 2
        records = read_trials_csv(out / "trials.csv")
        assert len(records) == 1

    def test_transition_json_structure(self, capsys, tmp_path):
        config = self.write_config(tmp_path, n_values=[30],
                                   snr_exponents=[2.0, 3.0, 4.0, 5.0, 6.0],
                                   trials_per_cell=20)
        out = tmp_path / "tr"
        code, _, _ = run_cli(capsys, "sweep", "--config", str(config), "--out", str(out),
                             "--no-plots")
        assert code == 0
        doc = json.loads((out / "transition.json").read_text())
        assert doc["level"] == 0.5
        assert doc["cells"][0]["n"] == 30
        crossing = doc["cells"][0]["crossing"]
        assert crossing is None or 2.0 <= crossing <= 6.0

    def test_progress_on_stderr_only(self, capsys, tmp_path):
        config = self.write_config(tmp_path, snr_exponents=[4.0], trials_per_cell=2)
        out = tmp_path / "prog"
        code, stdout, stderr = run_cli(capsys, "sweep", "--config", str(config),
                                       "--out", str(out), "--no-plots", "--progress")
        assert code == 0
        assert "progress:" in stderr
        json.loads(stdout)  # stdout still pure JSON


class TestTheoryCommands:
    def test_thresholds_exact(self, capsys):
        code, out, _ = run_cli(capsys, "thresholds", "--n", "10", "--mode", "exact")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "n,mode,epsilon,snr_threshold"
        assert lines[1] == "10,exact,0,10000"

    def test_thresholds_both_modes_multiple_n(self, capsys):
        code, out, _ = run_cli(capsys, "thresholds", "--n", "10", "100", "--epsilon", "0.5")
        assert code == 0
        assert len(out.splitlines()) == 5
        assert "100,almost_exact,0.5," in out

    def test_mgf_transposition(self, capsys):
        code, out, _ = run_cli(capsys, "mgf", "--cycle-type", "2:1", "--t", "0.5",
                               "--beta", "1", "--beta-star", "1")
        assert code == 0
        header, row = out.splitlines()
        assert header == "n,cycle_type,t,value,value_log,bound_fc_log,bound_n1_log"
        fields = row.split(",")
        assert fields[0] == "2" and fields[1] == "2:1"
        assert float(fields[3]) == pytest.approx(0.4472135954999579, abs=1e-6)

    def test_mgf_multi_cycle_with_bounds(self, capsys):
        code, out, _ = run_cli(capsys, "mgf", "--cycle-type", "1:2;3:1", "--t", "100",
                               "--beta", "1,0", "--beta-star", "1,0")
        assert code == 0
        row = out.splitlines()[1].split(",")
        assert row[0] == "5"
        assert float(row[4]) <= float(row[5]) <= float(row[6])

    def test_mgf_bad_cycle_type(self, capsys):
        code, _, err = run_cli(capsys, "mgf", "--cycle-type", "banana", "--t", "1",
                               "--beta", "1", "--beta-star", "1")
        assert code == 2
        assert json.loads(err)["error"]["kind"] == "invalid-argument"


class TestOracleCheck:
    def test_small_suite_passes(self, capsys):
        code, out, _ = run_cli(capsys, "oracle-check", "--n-max", "6", "--trials", "8",
                               "--seed", "1")
        assert code == 0
        doc = json.loads(out)
        assert doc["passed"] is True
        names = {c["name"] for c in doc["checks"]}
        assert "exact_d1_vs_brute_force" in names
        assert all(c["failures"] == 0 for c in doc["checks"])
