import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from weakcorr import GridSpec, make_grid, product_gaussian, save_wavefunction
from weakcorr.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main
from weakcorr.config import load_config, parse_config
from weakcorr.exceptions import ConfigurationError, InputFormatError
from weakcorr.report import SWEEP_COLUMNS, dumps, format_float

SMALL_GRID = {"n1": 128, "n2": 128, "x1_min": -8, "x1_max": 8, "x2_min": -8, "x2_max": 8}


def write_config(tmp_path, state, name="config.json", **blocks):
    cfg = {"state": state, **blocks}
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestAnalyze:
    def test_general_gaussian_is_ap(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"kind": "general_gaussian", "a": 0.5, "b": 0.2, "lambda": 0.3})
        assert main(["analyze", "--config", str(cfg)]) == EXIT_OK
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["verdict"] == "AP"
        assert report["indicators"]["iA_mean"] == pytest.approx(0.4, abs=1e-6)
        assert report["provenance"]["grid_resolution"] == [256, 256]
        assert report["provenance"]["tool_version"] == "0.1.0"
        assert "AP" in capsys.readouterr().out

    def test_product_all_residuals_pass(self, tmp_path):
        cfg = write_config(tmp_path, {"kind": "product_gaussian"})
        assert main(["analyze", "--config", str(cfg)]) == EXIT_OK
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["verdict"] == "PRODUCT"
        block = report["representations"]["position"]
        assert block["identity_suite"]["passed"]
        assert all(r["passed"] for r in block["identity_suite"]["residuals"])

    def test_both_representations(self, tmp_path):
        cfg = write_config(tmp_path, {"kind": "phase_gaussian", "sigma": 1, "lambda": 0.3},
                           analysis={"representation": "both"})
        assert main(["analyze", "--config", str(cfg)]) == EXIT_OK
        report = json.loads((tmp_path / "report.json").read_text())
        assert set(report["representations"]) == {"position", "momentum"}
        assert report["entangled_agreement"] is True
        assert abs(report["representations"]["momentum"]["parseval_norm"] - 1) < 1e-8

    def test_out_directory(self, tmp_path):
        cfg = write_config(tmp_path, {"kind": "product_gaussian"}, grid=SMALL_GRID)
        out = tmp_path / "results"
        assert main(["analyze", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        assert (out / "report.json").exists()
        assert not (tmp_path / "report.json").exists()

    def test_deterministic(self, tmp_path):
        cfg = write_config(tmp_path, {"kind": "cat", "c": 2, "sigma": 0.5}, grid=SMALL_GRID)
        main(["analyze", "--config", str(cfg), "--out", str(tmp_path / "a")])
        main(["analyze", "--config", str(cfg), "--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()

    def test_file_state(self, tmp_path):
        save_wavefunction(product_gaussian(1.0, 1.0, make_grid(GridSpec(64, 64))), tmp_path / "psi")
        cfg = write_config(tmp_path, {"kind": "file", "path": "psi.json"}, grid=SMALL_GRID)
        assert main(["analyze", "--config", str(cfg)]) == EXIT_OK
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["verdict"] == "PRODUCT"
        assert report["provenance"]["grid_resolution"] == [64, 64]

    def test_missing_state_file(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"kind": "file", "path": "nowhere/psi.json"})
        assert main(["analyze", "--config", str(cfg)]) == EXIT_USAGE
        assert "nowhere/psi.json" in capsys.readouterr().err

    def test_degenerate_state_is_numerical(self, tmp_path):
        cfg = write_config(tmp_path, {"kind": "product_gaussian", "sigma1": 0.05, "sigma2": 0.05},
                           grid=SMALL_GRID)
        assert main(["analyze", "--config", str(cfg)]) == EXIT_NUMERICAL


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        [],
        ["frobnicate", "--config", "x.json"],
        ["analyze"],
        ["analyze", "--config", "does-not-exist.json"],
    ])
    def test_usage(self, argv):
        assert main(argv) == EXIT_USAGE

    @pytest.mark.parametrize("cfg", [
        "{broken",
        json.dumps({"state": {"kind": "warp"}}),
        json.dumps({"state": {"kind": "product_gaussian"}, "extra": 1}),
        json.dumps({"state": {"kind": "product_gaussian"}, "analysis": {"tau": 0.5}}),
        json.dumps({"state": {"kind": "product_gaussian"}, "analysis": {"scheme": "fd2"}}),
        json.dumps({"state": {"kind": "product_gaussian"}, "grid": {"n1": 4}}),
        json.dumps({"state": {"kind": "product_gaussian"}, "grid": {"shape": 4}}),
        json.dumps({"grid": SMALL_GRID}),
    ])
    def test_bad_configs(self, tmp_path, cfg):
        path = tmp_path / "c.json"
        path.write_text(cfg)
        assert main(["analyze", "--config", str(path)]) == EXIT_USAGE

    def test_thread_limit(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, {"kind": "product_gaussian"}, grid=SMALL_GRID)
        monkeypatch.setenv("WEAKCORR_THREADS", "1")
        assert main(["analyze", "--config", str(cfg)]) == EXIT_OK
        monkeypatch.setenv("WEAKCORR_THREADS", "many")
        assert main(["analyze", "--config", str(cfg)]) == EXIT_USAGE

    def test_module_entry_point(self, tmp_path):
        cfg = write_config(tmp_path, {"kind": "product_gaussian"}, grid=SMALL_GRID)
        ok = subprocess.run([sys.executable, "-m", "weakcorr", "analyze", "--config", str(cfg)],
                            capture_output=True, text=True)
        assert ok.returncode == 0, ok.stderr
        bad = subprocess.run([sys.executable, "-m", "weakcorr", "analyze"], capture_output=True, text=True)
        assert bad.returncode == 1


class TestFields:
    def test_correlated_fields(self, tmp_path):
        # fd4 truncation in the tails reaches 2.7e-5 at 256 points, so refine to 384
        fine = {**SMALL_GRID, "n1": 384, "n2": 384}
        cfg = write_config(tmp_path, {"kind": "correlated_gaussian", "a": 0.5, "b": 0.2},
                           grid=fine, outputs={"fields_dir": "fields"})
        assert main(["fields", "--config", str(cfg)]) == EXIT_OK
        out = tmp_path / "fields"
        names = {p.name for p in out.iterdir()}
        assert {"u1.csv", "u2.csv", "v1.csv", "v2.csv", "vq.csv", "re_cw.csv", "im_cw.csv",
                "rho.csv", "header.json"} <= names
        rows = read_csv(out / "re_cw.csv")
        assert list(rows[0]) == ["i", "j", "x1", "x2", "value"]
        values = np.array([float(r["value"]) for r in rows if r["value"] != ""])
        assert any(r["value"] == "" for r in rows)
        np.testing.assert_allclose(values, 0.2, rtol=0, atol=1e-5)

    def test_rho_reintegrates_to_one(self, tmp_path):
        cfg = write_config(tmp_path, {"kind": "general_gaussian"}, outputs={"fields_dir": "f"})
        main(["fields", "--config", str(cfg)])
        header = json.loads((tmp_path / "f" / "header.json").read_text())
        g = header["grid"]
        rows = read_csv(tmp_path / "f" / "rho.csv")
        rho = np.array([float(r["value"]) for r in rows]).reshape(g["n1"], g["n2"])
        h1 = (g["x1_max"] - g["x1_min"]) / (g["n1"] - 1)
        h2 = (g["x2_max"] - g["x2_min"]) / (g["n2"] - 1)
        total = np.trapezoid(np.trapezoid(rho, dx=h2, axis=1), dx=h1)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_product_cw_vanishes(self, tmp_path):
        cfg = write_config(tmp_path, {"kind": "product_gaussian"}, grid=SMALL_GRID,
                           outputs={"fields_dir": "f"})
        main(["fields", "--config", str(cfg)])
        for name in ("re_cw.csv", "im_cw.csv"):
            values = [float(r["value"]) for r in read_csv(tmp_path / "f" / name) if r["value"]]
            assert max(abs(v) for v in values) < 1e-8

    def test_momentum_fields(self, tmp_path):
        cfg = write_config(tmp_path, {"kind": "phase_gaussian"}, grid=SMALL_GRID,
                           analysis={"representation": "both"}, outputs={"fields_dir": "f"})
        assert main(["fields", "--config", str(cfg)]) == EXIT_OK
        header = json.loads((tmp_path / "f" / "momentum" / "header.json").read_text())
        assert header["representation"] == "momentum"
        assert header["files"] == ["im_cw.csv", "re_cw.csv", "rho.csv"]

    def test_requires_fields_dir(self, tmp_path):
        cfg = write_config(tmp_path, {"kind": "product_gaussian"}, grid=SMALL_GRID)
        assert main(["fields", "--config", str(cfg)]) == EXIT_USAGE


class TestSweep:
    def test_lambda_sweep(self, tmp_path):
        cfg = write_config(tmp_path, {"kind": "phase_gaussian", "sigma": 1},
                           outputs={"sweep": {"parameter": "lambda", "values": [0, 0.1, 0.2, 0.3]}})
        assert main(["sweep", "--config", str(cfg)]) == EXIT_OK
        rows = read_csv(tmp_path / "sweep.csv")
        assert list(rows[0]) == list(SWEEP_COLUMNS)
        assert [r["verdict"] for r in rows] == ["PRODUCT", "P_ONLY", "P_ONLY", "P_ONLY"]
        ip = np.array([float(r["iP_sup"]) for r in rows])
        lam = np.array([0, 0.1, 0.2, 0.3])
        # iP_sup = 2|λ|/√(M11 M22) = 4|λ| at σ = 1
        np.testing.assert_allclose(ip, 4 * lam, rtol=1e-3, atol=1e-12)

    def test_b_sweep_monotone(self, tmp_path):
        cfg = write_config(tmp_path, {"kind": "correlated_gaussian", "a": 0.5},
                           outputs={"sweep": {"parameter": "b", "values": [0.05, 0.1, 0.15, 0.2],
                                              "path": "b.csv"}})
        assert main(["sweep", "--config", str(cfg)]) == EXIT_OK
        rows = read_csv(tmp_path / "b.csv")
        for col in ("iA_mean", "iA_sup"):
            assert np.all(np.diff([float(r[col]) for r in rows]) > 0)

    def test_empty_grid(self, tmp_path):
        cfg = write_config(tmp_path, {"kind": "phase_gaussian"},
                           outputs={"sweep": {"parameter": "lambda", "values": []}})
        assert main(["sweep", "--config", str(cfg)]) == EXIT_USAGE

    @pytest.mark.parametrize("sweep", [
        {"parameter": "kind", "values": [1]},
        {"parameter": "lambda", "values": ["x"]},
        {"values": [0.1]},
    ])
    def test_bad_sweeps(self, tmp_path, sweep):
        cfg = write_config(tmp_path, {"kind": "phase_gaussian"}, outputs={"sweep": sweep})
        assert main(["sweep", "--config", str(cfg)]) == EXIT_USAGE


class TestVerify:
    def test_report_and_exit_code_agree(self, tmp_path):
        cfg = tmp_path / "v.json"
        cfg.write_text("{}")
        code = main(["verify", "--config", str(cfg)])
        report = json.loads((tmp_path / "report.json").read_text())
        assert len(report["states"]) == 5
        assert code == (EXIT_OK if report["passed"] else EXIT_NUMERICAL)
        # every ρ-weighted (mean) identity holds on every battery state
        for state in report["states"]:
            assert all(r["passed"] for r in state["residuals"] if r["kind"] == "mean"), state["label"]

    def test_loose_tolerance_passes(self, tmp_path, capsys):
        cfg = tmp_path / "v.json"
        cfg.write_text(json.dumps({"analysis": {"tol": 1e-2}}))
        assert main(["verify", "--config", str(cfg)]) == EXIT_OK
        assert capsys.readouterr().out.count("PASS") == 5


class TestConfig:
    def test_defaults(self):
        cfg = parse_config({"state": {"kind": "product_gaussian"}})
        assert cfg.grid == GridSpec()
        assert cfg.analysis.tau == 1e-3 and cfg.analysis.scheme == "fd4"
        assert cfg.outputs.report_path == "report.json"

    def test_paths(self, tmp_path):
        path = write_config(tmp_path, {"kind": "file", "path": "psi.json"})
        cfg = load_config(path, tmp_path / "out")
        assert cfg.resolve("r.json") == tmp_path / "out" / "r.json"
        assert cfg.resolve_input("psi.json") == tmp_path / "psi.json"

    def test_echo_round_trips(self):
        d = {"state": {"kind": "general_gaussian", "a": 0.5, "b": 0.2, "lambda": 0.3},
             "analysis": {"tau": 0.01, "representation": "both"},
             "outputs": {"sweep": {"parameter": "b", "values": [0.1]}}}
        assert parse_config(parse_config(d).to_dict()).to_dict() == parse_config(d).to_dict()

    def test_errors(self, tmp_path):
        with pytest.raises(InputFormatError):
            load_config(tmp_path / "absent.json")
        with pytest.raises(ConfigurationError):
            parse_config([])


class TestSerialization:
    def test_float_format(self):
        assert format_float(0.1) == "0.10000000000000001"
        assert format_float(1.0) == "1"

    def test_dumps(self):
        text = dumps({"b": [1, 2.5], "a": {"z": None, "y": float("nan"), "x": 1 + 2j}, "c": True})
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')
        d = json.loads(text)
        assert d["a"]["y"] is None and d["a"]["x"] == {"re": 1, "im": 2}
        assert text.endswith("}\n")

    def test_unknown_type(self):
        with pytest.raises(TypeError):
            dumps({"a": object()})
