from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from lindblad_gauss import cli, dynamics
from lindblad_gauss.dynamics import Mode

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
BASELINE_CFG = str(CONFIGS / "baseline.cfg")
SWEEP_CFG = str(CONFIGS / "sweep.cfg")


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def summary_dict(text):
    return dict(line.split("=", 1) for line in text.splitlines() if line and not line.startswith("#"))


def read_csv(path):
    lines = Path(path).read_text().splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    return body[0], np.array([[float(x) for x in ln.split(",")] for ln in body[1:]])


class TestSimulate:
    @pytest.mark.parametrize("mode,expected", [
        ("as-printed", (60 / 7, -16 / 7, 24 / 7)),
        ("rederived", (7.2, 1.6, 4.8)),
    ])
    def test_baseline_asymptote(self, tmp_path, capsys, mode, expected):
        code, out, _ = run(["simulate", "--config", BASELINE_CFG, "--mode", mode, "--out", tmp_path], capsys)
        assert code == 0
        header, data = read_csv(tmp_path / "trajectory.csv")
        assert header == cli.CSV_HEADER
        np.testing.assert_allclose(data[-1, 1:4], expected, atol=1e-6)
        s = summary_dict(out)
        assert s["mode"] == mode
        assert float(s["convergence_tau"]) < 10
        assert (tmp_path / "summary.txt").read_text() == out

    def test_closed_ground_state_is_constant(self, tmp_path, capsys):
        code, _, _ = run(["simulate", "--mode", "rederived", "--out", tmp_path,
                          "--set", "gamma=0", "--set", "h11=0", "--set", "h33=0", "--set", "h13r=0",
                          "--set", "t_end=5", "--set", "dt_out=0.1"], capsys)
        assert code == 0
        _, data = read_csv(tmp_path / "trajectory.csv")
        np.testing.assert_allclose(data[:, 1:8], np.tile(data[0, 1:8], (len(data), 1)), atol=1e-14)
        assert "inf,2.5" in (tmp_path / "trajectory.csv").read_text()

    def test_number_format(self, tmp_path, capsys):
        run(["simulate", "--config", BASELINE_CFG, "--mode", "rederived", "--out", tmp_path], capsys)
        row = (tmp_path / "trajectory.csv").read_text().splitlines()[2].split(",")
        mantissa = row[1].split("e")[0]
        assert len(mantissa.replace(".", "").lstrip("-")) == 17

    def test_deterministic(self, tmp_path, capsys):
        for d in ("a", "b"):
            run(["simulate", "--config", BASELINE_CFG, "--mode", "as-printed", "--out", tmp_path / d], capsys)
        for name in ("trajectory.csv", "summary.txt"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_unphysical_exit_3(self, tmp_path, capsys):
        # h11 = 0 with a nonzero cross coupling drives Omega^2 below 1/4
        code, _, err = run(["simulate", "--mode", "rederived", "--out", tmp_path, "--set", "gamma=0.5",
                            "--set", "h11=0", "--set", "h33=0", "--set", "h13r=3", "--set", "t_end=3"], capsys)
        assert code == 3
        assert "unphysical" in err
        text = (tmp_path / "trajectory.csv").read_text()
        assert text.startswith("# FLAGGED")
        assert text.splitlines()[1] == cli.CSV_HEADER

    @pytest.mark.parametrize("extra", [
        [],                                   # no mode
        ["--mode", "rederived", "--set", "bogus=1"],
        ["--mode", "rederived", "--set", "gamma=abc"],
        ["--mode", "rederived", "--set", "gamma=-1"],
        ["--mode", "rederived", "--set", "t_end=0"],
        ["--mode", "sideways"],
    ])
    def test_bad_input_exit_2(self, tmp_path, capsys, extra):
        argv = ["simulate", "--config", BASELINE_CFG, "--out", tmp_path, *extra]
        try:
            code = cli.main([str(a) for a in argv])
        except SystemExit as exc:
            code = exc.code
        assert code == 2

    def test_missing_config_file(self, tmp_path, capsys):
        code, _, err = run(["simulate", "--config", tmp_path / "nope.cfg", "--mode", "rederived"], capsys)
        assert code == 2 and "cannot read" in err


class TestSweep:
    def test_sweep_values(self, tmp_path, capsys):
        code, out, _ = run(["sweep", "--config", SWEEP_CFG, "--mode", "rederived", "--out", tmp_path,
                            "--values", "4", "4.6", "4.9"], capsys)
        assert code == 0
        for v in (4.0, 4.6, 4.9):
            header, data = read_csv(tmp_path / f"sweep_h13r_{v!r}.csv")
            assert header == cli.CSV_HEADER
            assert data[0, 8] == data[0, 9] == 1.0 and data[0, 11] == 1.0
        s = summary_dict(out)
        assert all(s[f"h13r_{v!r}.coupling_ok"] == "true" for v in (4.0, 4.6, 4.9))
        assert s["d_decoh_final_ordering"] in ("increasing", "decreasing", "non-monotonic")
        assert s["failed"] == "0"

    def test_as_printed_partial_failure(self, tmp_path, capsys):
        code, out, _ = run(["sweep", "--config", SWEEP_CFG, "--mode", "as-printed", "--out", tmp_path,
                            "--values", "4", "4.6", "4.9"], capsys)
        s = summary_dict(out)
        assert code == 4
        assert s["h13r_4.9.flagged"] == "true"
        assert s["failed"] == "1"
        assert s["h13r_4.6.d_decoh_above_1_windows"] != "none"

    def test_single_value_matches_simulate(self, tmp_path, capsys):
        run(["sweep", "--config", SWEEP_CFG, "--mode", "rederived", "--out", tmp_path / "sw", "--values", "4"], capsys)
        run(["simulate", "--config", SWEEP_CFG, "--mode", "rederived", "--normalize", "--out", tmp_path / "sim"], capsys)
        assert (tmp_path / "sw" / "sweep_h13r_4.0.csv").read_bytes() == (tmp_path / "sim" / "trajectory.csv").read_bytes()

    def test_invalid_value_counts_as_failure(self, tmp_path, capsys):
        code, out, _ = run(["sweep", "--config", SWEEP_CFG, "--mode", "rederived", "--out", tmp_path,
                            "--key", "gamma", "--values", "0.5", "-1"], capsys)
        assert code == 4
        assert "failed" in out

    def test_values_required(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            cli.main(["sweep", "--config", SWEEP_CFG, "--mode", "rederived", "--out", str(tmp_path), "--values"])
        assert exc.value.code == 2


class TestThermal:
    def test_T1(self, capsys):
        code, out, _ = run(["thermal", "--T", 1, "--gamma", 0.5, "--mode", "rederived"], capsys)
        assert code == 0
        s = summary_dict(out)
        assert float(s["d_corr"]) == pytest.approx(1.471038, abs=1e-6)
        assert float(s["d_decoh"]) == pytest.approx(0.679792, abs=1e-6)
        assert float(s["d_mix"]) == pytest.approx(1.533102, abs=1e-6)
        assert float(s["stationary.rederived.max_abs_deviation"]) < 1e-12
        assert "calibration.as-printed.h11" in s and "calibration.rederived.h11" in s

    def test_high_temperature(self, capsys):
        _, out, _ = run(["thermal", "--T", 100, "--gamma", 0.5, "--mode", "as-printed"], capsys)
        assert float(summary_dict(out)["d_decoh"]) == pytest.approx(0.070711, abs=1e-5)

    @pytest.mark.parametrize("T,gamma", [(0, 0.5), (-1, 0.5), (1, 0)])
    def test_domain(self, capsys, T, gamma):
        code, _, _ = run(["thermal", "--T", T, "--gamma", gamma, "--mode", "rederived"], capsys)
        assert code == 2


class TestAudit:
    def test_baseline(self, capsys):
        code, out, _ = run(["audit", "--config", BASELINE_CFG], capsys)
        assert code == 0
        s = summary_dict(out)
        assert float(s["formula.A"]) == pytest.approx(232 / 17)
        assert float(s["as-printed.fixed_point_A"]) == pytest.approx(60 / 7)
        assert float(s["rederived.fixed_point_A"]) == pytest.approx(7.2)
        assert s["rederived.matches_stated_decay"] == "true"
        assert s["as-printed.matches_stated_decay"] == "false"
        assert sum(k.startswith("difference.") for k in s) == 3

    def test_thermal_calibrated(self, capsys):
        code, out, _ = run(["audit", "--thermal-T", 1, "--gamma", 0.5, "--mode", "rederived"], capsys)
        s = summary_dict(out)
        assert code == 0
        assert float(s["rederived.thermal_residual"]) < 1e-12
        assert float(s["as-printed.thermal_residual"]) > 1e-3

    def test_coupling_warning(self, capsys):
        code, out, _ = run(["audit", "--set", "gamma=0.5", "--set", "h11=1", "--set", "h33=1", "--set", "h13r=2"], capsys)
        assert code == 0
        assert "# WARNING coupling inequality violated" in out

    def test_needs_friction(self, capsys):
        code, _, _ = run(["audit", "--set", "gamma=0", "--set", "h11=1", "--set", "h33=1", "--set", "h13r=0"], capsys)
        assert code == 2


class TestValidate:
    def test_passes_and_is_deterministic(self, capsys):
        code, first, _ = run(["validate"], capsys)
        assert code == 0
        assert "FAIL" not in first
        _, second, _ = run(["validate"], capsys)
        assert first == second

    def test_sign_mutation_is_caught(self, monkeypatch, capsys):
        original = dynamics.moment_system

        def mutated(p, mode):
            sysm = original(p, mode)
            if Mode(mode) is Mode.REDERIVED:
                M = sysm.M.copy()
                M[1, 0] = -M[1, 0]
                return replace(sysm, M=M)
            return sysm

        monkeypatch.setattr(dynamics, "moment_system", mutated)
        code, out, _ = run(["validate"], capsys)
        assert code == 1
        assert "FAIL oracle.characteristics_closure" in out
