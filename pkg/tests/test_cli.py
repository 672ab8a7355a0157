import json

import pytest

from pca_ergo.cli import (DEFAULT_SEED, EXIT_BAD_INPUT, EXIT_DEGENERATE,
                          EXIT_IO, EXIT_OK, main)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestCheck:
    def test_params_json(self, capsys):
        code, out, _ = run(capsys, "check", "--params", "0.8,0.3,0.5,0.6")
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["holds"] is True
        assert set(data) == {"gamma0", "gamma1", "lhs", "rhs", "holds",
                             "drift_bound"}

    def test_ca_code(self, capsys):
        code, out, _ = run(capsys, "check", "--ca", "0011", "--eps", "0.1")
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["lhs"] == pytest.approx(1.2, abs=1e-12)
        assert data["rhs"] == pytest.approx(0.8, abs=1e-12)

    def test_constant_rule_reports_inf(self, capsys):
        code, out, _ = run(capsys, "check", "--ca", "0000", "--eps", "0.3")
        assert code == EXIT_OK
        assert json.loads(out)["drift_bound"] == "inf"

    def test_rejects_both_param_styles(self, capsys):
        code, _, err = run(capsys, "check", "--params", "0.1,0.2,0.3,0.4",
                           "--ca", "0011", "--eps", "0.1")
        assert code == EXIT_BAD_INPUT
        assert "exactly one" in err

    def test_rejects_neither(self, capsys):
        code, _, err = run(capsys, "check")
        assert code == EXIT_BAD_INPUT

    def test_rejects_bad_probability(self, capsys):
        code, _, err = run(capsys, "check", "--params", "0.1,0.2,0.3,1.4")
        assert code == EXIT_BAD_INPUT

    def test_rejects_wrong_arity(self, capsys):
        code, _, err = run(capsys, "check", "--params", "0.1,0.2,0.3")
        assert code == EXIT_BAD_INPUT

    def test_degenerate_denominator_exit(self, capsys):
        code, _, err = run(capsys, "check", "--params", "0,0,1,1")
        assert code == EXIT_DEGENERATE
        assert "error" in err

    def test_out_file(self, capsys, tmp_path):
        path = tmp_path / "check.json"
        code, out, _ = run(capsys, "check", "--ca", "0011", "--eps", "0.1",
                           "--out", str(path))
        assert code == EXIT_OK
        assert out == ""
        assert json.loads(path.read_text())["holds"] is True


class TestDeriveGammaChain:
    def test_derive_payload(self, capsys):
        code, out, _ = run(capsys, "derive", "--params", "0.8,0.3,0.5,0.6")
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["p"] == pytest.approx(0.3)
        assert data["q"] == pytest.approx(0.2)
        assert data["r"] == pytest.approx(0.5)
        assert data["R_x"][0] == pytest.approx(0.15)

    def test_gamma_values(self, capsys):
        code, out, _ = run(capsys, "gamma", "--ca", "0001", "--eps", "0.1")
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["gamma0"] == pytest.approx(0.5, abs=1e-12)
        assert data["gamma1"] == pytest.approx(0.5, abs=1e-12)

    def test_chain_stationary_sums_to_one(self, capsys):
        code, out, _ = run(capsys, "chain", "--params", "0.8,0.3,0.5,0.6",
                           "--side", "right")
        assert code == EXIT_OK
        data = json.loads(out)
        assert sum(data["stationary"].values()) == pytest.approx(1.0)
        assert data["rows"]["0"] == pytest.approx([0.30, 0.55, 0.15])


class TestDrift:
    def test_bound_only(self, capsys):
        code, out, _ = run(capsys, "drift", "--params", "0.8,0.3,0.5,0.6")
        assert code == EXIT_OK
        data = json.loads(out)
        assert "bound" in data and "mc_mean" not in data

    def test_with_monte_carlo(self, capsys):
        code, out, _ = run(capsys, "drift", "--params", "0.8,0.3,0.5,0.6",
                           "--mc-steps", "20000", "--seed", "3")
        data = json.loads(out)
        assert data["mc_mean"] >= data["bound"] - 4 * data["mc_stderr"]
        assert data["seed"] == 3

    def test_r_zero_rejected(self, capsys):
        code, _, err = run(capsys, "drift", "--params", "0.4,0.4,0.4,0.4")
        assert code == EXIT_BAD_INPUT


class TestSimulationCommands:
    def test_island_summary(self, capsys):
        code, out, _ = run(capsys, "island", "--params", "0.8,0.3,0.5,0.6",
                           "--gap", "5", "--horizon", "200")
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["seed"] == DEFAULT_SEED
        assert data["steps"] <= 200

    def test_island_csv(self, capsys, tmp_path):
        path = tmp_path / "traj.csv"
        code, _, _ = run(capsys, "island", "--params", "0.8,0.3,0.5,0.6",
                         "--gap", "5", "--horizon", "50", "--out", str(path))
        assert code == EXIT_OK
        assert path.read_text().startswith("t,i,j,x,y,alive\n")

    def test_envelope_with_artifacts(self, capsys, tmp_path):
        csv_path = tmp_path / "density.csv"
        pgm_path = tmp_path / "run.pgm"
        code, out, _ = run(capsys, "envelope", "--params", "0.8,0.3,0.5,0.6",
                           "--cells", "40", "--max-steps", "2000",
                           "--out", str(csv_path), "--pgm", str(pgm_path))
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["hit_time"] is not None
        assert csv_path.read_text().startswith("step,q_density_num")
        assert pgm_path.read_bytes().startswith(b"P5")

    def test_ca1000_closed_forms(self, capsys):
        code, out, _ = run(capsys, "ca1000", "--eps", "0.25")
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["drift_bound"] == pytest.approx(1.375, abs=1e-12)

    def test_ca1000_rejects_eps_out_of_range(self, capsys):
        code, _, _ = run(capsys, "ca1000", "--eps", "0.6")
        assert code == EXIT_BAD_INPUT


class TestSweepVolume:
    def test_sweep_csv(self, capsys):
        code, out, _ = run(capsys, "sweep", "--codes", "0011,1000",
                           "--grid", "0.1,0.2")
        assert code == EXIT_OK
        lines = out.strip().split("\n")
        assert lines[0].startswith("code,eps,")
        assert len(lines) == 5

    def test_sweep_grid_validation(self, capsys):
        code, _, _ = run(capsys, "sweep", "--grid", "0.0,0.1")
        assert code == EXIT_BAD_INPUT

    def test_volume_json_reproducible(self, capsys):
        a = run(capsys, "volume", "--samples", "20000", "--seed", "9")
        b = run(capsys, "volume", "--samples", "20000", "--seed", "9",
                "--jobs", "4")
        assert a[0] == EXIT_OK
        assert json.loads(a[1]) == json.loads(b[1])


class TestConfigAndErrors:
    def test_config_supplies_defaults(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"ca": "0011", "eps": 0.1}))
        code, out, _ = run(capsys, "--config", str(cfg), "check")
        assert code == EXIT_OK
        assert json.loads(out)["lhs"] == pytest.approx(1.2, abs=1e-12)

    def test_explicit_flag_beats_config(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"ca": "0011", "eps": 0.1}))
        code, out, _ = run(capsys, "--config", str(cfg), "check",
                           "--eps", "0.2")
        assert code == EXIT_OK
        assert json.loads(out)["lhs"] == pytest.approx(1.4, abs=1e-12)

    def test_missing_config_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "--config", str(tmp_path / "nope.json"),
                         "check", "--ca", "0011", "--eps", "0.1")
        assert code == EXIT_IO

    def test_unwritable_out(self, capsys, tmp_path):
        code, _, _ = run(capsys, "check", "--ca", "0011", "--eps", "0.1",
                         "--out", str(tmp_path / "missing" / "x.json"))
        assert code == EXIT_IO

    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
