import csv
import hashlib
import json

import numpy as np
import pytest

from holonomy.cli import main
from holonomy.config import parse_config_text
from holonomy.errors import ConfigError
from holonomy.io import read_curve_csv, read_generators_json, write_csv
from holonomy import quadrupole as qd

TYCKO = qd.TYCKO_THETA

BASE_CONFIG = """
system = quadrupole
theta = tycko
phi0 = 0.0
omega = 0.15707963267948966
phi_final = 6.283185307179586
grid = 400
method = magnus4
seed = 99
gauge_count = 5
"""


@pytest.fixture
def quad_config(tmp_path):
    path = tmp_path / "quad.cfg"
    path.write_text(BASE_CONFIG)
    return path


@pytest.fixture
def custom_inputs(tmp_path):
    # two-generator spin-1/2 family on a constant curve
    sx = [[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]]
    sz = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-1.0, 0.0]]]
    gen_path = tmp_path / "gens.json"
    gen_path.write_text(json.dumps({"dimension": 2, "generators": [sx, sz]}))
    ts = np.linspace(0.0, 4.0, 161)
    rows = ["t,theta1,theta2"] + [f"{t},0.3,1.0" for t in ts]
    curve_path = tmp_path / "curve.csv"
    curve_path.write_text("\n".join(rows) + "\n")
    cfg = tmp_path / "custom.cfg"
    cfg.write_text(
        f"system = custom-family\ngenerators_file = {gen_path}\ncurve_file = {curve_path}\n"
        "levels = all\ngrid = 64\nseed = 3\n"
    )
    return cfg


class TestConfigParsing:
    def test_tycko_shortcut(self):
        cfg = parse_config_text(BASE_CONFIG)
        assert cfg.theta == pytest.approx(TYCKO, abs=1e-15)
        assert cfg.method == "magnus4"
        assert cfg.levels is None

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown configuration keys"):
            parse_config_text(BASE_CONFIG + "\nbogus = 1\n")

    def test_missing_required_keys(self):
        with pytest.raises(ConfigError, match="missing"):
            parse_config_text("system = quadrupole\ntheta = 1.0\n")

    def test_duration_and_phi_final_exclusive(self):
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config_text(BASE_CONFIG + "\nduration = 10\n")

    def test_grid_minimum(self):
        with pytest.raises(ConfigError, match="grid"):
            parse_config_text(BASE_CONFIG.replace("grid = 400", "grid = 8"))

    def test_seed_range(self):
        with pytest.raises(ConfigError, match="seed"):
            parse_config_text(BASE_CONFIG.replace("seed = 99", "seed = -1"))
        with pytest.raises(ConfigError, match="seed"):
            parse_config_text(BASE_CONFIG.replace("seed = 99", f"seed = {2**64}"))

    def test_levels_parsing(self):
        cfg = parse_config_text(BASE_CONFIG + "\nlevels = 1,2\n")
        assert cfg.levels == (1, 2)
        with pytest.raises(ConfigError):
            parse_config_text(BASE_CONFIG + "\nlevels = 0,1\n")

    def test_method_alias(self):
        cfg = parse_config_text(BASE_CONFIG.replace("magnus4", "midpoint"))
        assert cfg.method == "midpoint_exp"

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text(BASE_CONFIG + "\ngrid = 32\n" + "grid = 64\n")

    def test_mixed_system_keys_rejected(self):
        with pytest.raises(ConfigError, match="not valid"):
            parse_config_text(BASE_CONFIG + "\ncurve_file = x.csv\n")

    def test_comments_and_blank_lines(self):
        cfg = parse_config_text("# run\n\n" + BASE_CONFIG + "\n# end\n")
        assert cfg.system == "quadrupole"


class TestIO:
    def test_curve_roundtrip_with_header(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("t,a,b\n0,1,2\n1,3,4\n2,5,6\n")
        curve = read_curve_csv(path)
        assert curve.num_samples == 3 and curve.num_parameters == 2
        assert np.allclose(curve.points[1], [3, 4])

    def test_curve_headerless(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("0,1\n1,2\n")
        curve = read_curve_csv(path)
        assert curve.num_samples == 2

    def test_curve_bad_cell(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("t,a\n0,1\n1,x\n")
        with pytest.raises(ConfigError):
            read_curve_csv(path)

    def test_generators_validation(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"generators": [[[0, 1], [1, 0]]]}))
        with pytest.raises(ConfigError):
            read_generators_json(path)

    def test_csv_float_precision(self, tmp_path):
        path = tmp_path / "x.csv"
        value = 1.0 / 3.0
        write_csv(path, ["v"], [[value]])
        raw = path.read_bytes()
        assert f"{value:.17g}".encode() in raw
        assert b"\r\n" in raw  # RFC-4180 line endings

    def test_csv_blank_for_none(self, tmp_path):
        path = tmp_path / "x.csv"
        write_csv(path, ["a", "b"], [[None, 1.5]])
        rows = list(csv.reader(path.read_text().splitlines()))
        assert rows[1][0] == ""


class TestPhaseCommand:
    def test_cyclic_summary_matches_closed_form(self, quad_config, tmp_path):
        out = tmp_path / "out"
        assert main(["phase", "--config", str(quad_config), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        lv2 = summary["levels"]["2"]
        expected = qd.pi2_cyclic(TYCKO)
        assert abs(complex(lv2["re_pi"], lv2["im_pi"]) - expected) <= 1e-8
        assert summary["levels"]["1"]["visibility"] == pytest.approx(1.0, abs=1e-12)
        assert lv2["oracle_gamma_deviation"] <= 1e-8

    def test_zero_length_run_single_row(self, tmp_path):
        cfg = tmp_path / "z.cfg"
        cfg.write_text(BASE_CONFIG.replace("phi_final = 6.283185307179586", "phi_final = 0.0"))
        out = tmp_path / "out"
        assert main(["phase", "--config", str(cfg), "--out", str(out)]) == 0
        rows = (out / "phase.csv").read_text().strip().splitlines()
        assert len(rows) == 3  # header + one row per level
        summary = json.loads((out / "summary.json").read_text())
        assert summary["levels"]["1"]["re_pi"] == pytest.approx(1.0)
        assert summary["levels"]["2"]["re_pi"] == pytest.approx(2.0)

    def test_deterministic_csv_bytes(self, quad_config, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["phase", "--config", str(quad_config), "--out", str(out1)])
        main(["phase", "--config", str(quad_config), "--out", str(out2)])
        h1 = hashlib.sha256((out1 / "phase.csv").read_bytes()).hexdigest()
        h2 = hashlib.sha256((out2 / "phase.csv").read_bytes()).hexdigest()
        assert h1 == h2

    def test_custom_family_constant_curve(self, custom_inputs, tmp_path):
        out = tmp_path / "out"
        assert main(["phase", "--config", str(custom_inputs), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        for label in ("1", "2"):
            rec = summary["levels"][label]
            assert complex(rec["re_pi"], rec["im_pi"]) == pytest.approx(1.0, abs=1e-9)
        assert summary["diagnostics"]["adiabaticity_ratio"] <= 1e-12

    def test_invalid_config_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("system = quadrupole\nwhat = 1\n")
        assert main(["phase", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "configuration error" in capsys.readouterr().err

    def test_level_crossing_exit_code(self, tmp_path, capsys):
        gen = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-1.0, 0.0]]]
        gen_path = tmp_path / "g.json"
        gen_path.write_text(json.dumps({"generators": [gen]}))
        curve_path = tmp_path / "c.csv"
        ts = np.linspace(0, 1, 33)
        curve_path.write_text("\n".join(f"{t},{1.0 - 2.0 * t}" for t in ts) + "\n")
        cfg = tmp_path / "x.cfg"
        cfg.write_text(
            f"system = custom-family\ngenerators_file = {gen_path}\ncurve_file = {curve_path}\n"
        )
        assert main(["phase", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
        assert "numerical failure" in capsys.readouterr().err


class TestLoggingAndWarnings:
    def test_holonomy_log_env_sets_level(self, quad_config, tmp_path, monkeypatch):
        import logging

        monkeypatch.setenv("HOLONOMY_LOG", "DEBUG")
        assert main(["phase", "--config", str(quad_config), "--out", str(tmp_path / "o")]) == 0
        assert logging.getLogger().level == logging.DEBUG
        monkeypatch.setenv("HOLONOMY_LOG", "WARNING")
        main(["phase", "--config", str(quad_config), "--out", str(tmp_path / "o2")])
        assert logging.getLogger().level == logging.WARNING

    def test_fast_drive_warns(self, tmp_path, capsys):
        # omega comparable to the gap: adiabaticity ratio above the 0.1 level
        cfg = tmp_path / "fast.cfg"
        cfg.write_text(BASE_CONFIG.replace("omega = 0.15707963267948966", "omega = 1.2"))
        assert main(["phase", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        assert "adiabaticity ratio" in capsys.readouterr().err


class TestOracleVerifyCommand:
    def test_default_passes(self, quad_config):
        assert main(["oracle-verify", "--config", str(quad_config), "--random-points", "100"]) == 0

    def test_coarse_grid_fails_with_diagnosis(self, quad_config, capsys):
        code = main([
            "oracle-verify", "--config", str(quad_config), "--grid", "16", "--random-points", "20",
        ])
        assert code == 1
        err = capsys.readouterr().err
        assert "holonomy_ode_vs_closed_form" in err
        assert "grid" in err

    def test_equatorial_diagonal_path(self, tmp_path):
        cfg = tmp_path / "eq.cfg"
        cfg.write_text(BASE_CONFIG.replace("theta = tycko", "theta = 1.5707963267948966"))
        assert main(["oracle-verify", "--config", str(cfg), "--random-points", "50"]) == 0


class TestSweepCommand:
    def test_single_point_matches_phase_summary(self, quad_config, tmp_path):
        out = tmp_path / "s"
        assert main([
            "sweep", "--config", str(quad_config), "--out", str(out),
            "--param", "theta", "--start", str(TYCKO), "--stop", str(TYCKO), "--count", "1",
        ]) == 0
        rows = list(csv.DictReader((out / "sweep.csv").read_text().splitlines()))
        assert len(rows) == 1
        got = complex(float(rows[0]["level2_re_pi"]), float(rows[0]["level2_im_pi"]))
        assert abs(got - qd.pi2_cyclic(TYCKO)) <= 1e-8

    def test_theta_sweep_matches_closed_form(self, quad_config, tmp_path):
        out = tmp_path / "s"
        assert main([
            "sweep", "--config", str(quad_config), "--out", str(out),
            "--param", "theta", "--start", "0.4", "--stop", "2.7", "--count", "9",
            "--workers", "2",
        ]) == 0
        rows = list(csv.DictReader((out / "sweep.csv").read_text().splitlines()))
        assert len(rows) == 9
        for row in rows:
            theta = float(row["theta"])
            got = complex(float(row["level2_re_pi"]), float(row["level2_im_pi"]))
            assert abs(got - qd.pi2_cyclic(theta)) <= 1e-8

    def test_phi_f_sweep_spot_check(self, quad_config, tmp_path):
        out = tmp_path / "s"
        assert main([
            "sweep", "--config", str(quad_config), "--out", str(out),
            "--param", "phi_f", "--start", str(np.pi), "--stop", str(2 * np.pi), "--count", "3",
        ]) == 0
        rows = list(csv.DictReader((out / "sweep.csv").read_text().splitlines()))
        last = rows[-1]
        got = complex(float(last["level2_re_pi"]), float(last["level2_im_pi"]))
        assert abs(got - qd.pi2_cyclic(TYCKO)) <= 1e-8

    def test_json_flag_emits_summary(self, quad_config, tmp_path):
        out = tmp_path / "s"
        assert main([
            "sweep", "--config", str(quad_config), "--out", str(out),
            "--param", "theta", "--start", "0.5", "--stop", "1.0", "--count", "2", "--json",
        ]) == 0
        payload = json.loads((out / "sweep.json").read_text())
        assert payload["parameter"] == "theta"
        assert len(payload["rows"]) == 2

    def test_workers_do_not_change_bytes(self, quad_config, tmp_path):
        outs = []
        for workers, name in ((1, "w1"), (3, "w3")):
            out = tmp_path / name
            main([
                "sweep", "--config", str(quad_config), "--out", str(out),
                "--param", "omega", "--start", "0.1", "--stop", "0.3", "--count", "4",
                "--workers", str(workers),
            ])
            outs.append((out / "sweep.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_bad_param_rejected(self, quad_config, tmp_path, capsys):
        with pytest.raises(SystemExit):
            main([
                "sweep", "--config", str(quad_config), "--out", str(tmp_path / "s"),
                "--param", "rho", "--start", "1", "--stop", "2", "--count", "2",
            ])


class TestAdiabaticCommand:
    def test_quadrupole_ladder(self, quad_config, tmp_path):
        out = tmp_path / "a"
        assert main([
            "adiabatic", "--config", str(quad_config), "--out", str(out),
            "--tau-list", "50,100,200",
        ]) == 0
        rows = list(csv.DictReader((out / "adiabatic.csv").read_text().splitlines()))
        defects = [float(r["defect"]) for r in rows]
        ratios = [float(r["adiabaticity_ratio"]) for r in rows]
        assert defects[0] > defects[1] > defects[2]
        assert 1.3 <= defects[0] / defects[1] <= 3.0
        assert ratios[0] == pytest.approx(2 * ratios[1], rel=1e-6)

    def test_constant_custom_family(self, custom_inputs, tmp_path):
        out = tmp_path / "a"
        assert main([
            "adiabatic", "--config", str(custom_inputs), "--out", str(out),
            "--tau-list", "4,8",
        ]) == 0
        rows = list(csv.DictReader((out / "adiabatic.csv").read_text().splitlines()))
        for row in rows:
            assert float(row["defect"]) <= 1e-9

    def test_bad_tau_list(self, quad_config, tmp_path):
        assert main([
            "adiabatic", "--config", str(quad_config), "--out", str(tmp_path / "a"),
            "--tau-list", "nope",
        ]) == 2


class TestGaugeTestCommand:
    def test_passes_and_writes_rows(self, quad_config, tmp_path):
        out = tmp_path / "g"
        assert main([
            "gauge-test", "--config", str(quad_config), "--out", str(out), "--count", "5",
        ]) == 0
        rows = list(csv.DictReader((out / "gauge_test.csv").read_text().splitlines()))
        assert len(rows) == 5
        for row in rows:
            assert float(row["abs_delta_pi"]) <= 1e-9

    def test_impossible_tolerance_fails(self, quad_config):
        assert main([
            "gauge-test", "--config", str(quad_config), "--count", "2", "--tolerance", "1e-18",
        ]) == 1
