import io
import json
import sys
from pathlib import Path

import pytest

from heavyrates.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run_cli(argv, capsys, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(json.dumps(stdin)))
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def small_config(tmp_path, **kw):
    cfg = json.loads((CONFIGS / "k1_gaussian.json").read_text())
    cfg.update(n_grid=[100, 1000, 10000], trials=20, output_dir=str(tmp_path / "run"), **kw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_rates_run_and_fit(tmp_path, capsys):
    code, out = run_cli(["rates", "run", "-c", str(small_config(tmp_path))], capsys)
    assert code == 0 and out["verdict"] == "PASS"
    raw = tmp_path / "run" / "raw.csv"
    assert raw.exists()
    code, out = run_cli(["rates", "fit", "-i", str(raw), "--window", "3", "--r-assumed", "64", "--k", "1",
                         "-o", str(tmp_path / "refit.svg")], capsys)
    assert code == 0 and 0.7 < out["beta_hat"] < 1.3
    assert (tmp_path / "refit.svg").read_text().count("<polyline") == 2


def test_rates_fit_vacuous(tmp_path, capsys):
    run_cli(["rates", "run", "-c", str(small_config(tmp_path))], capsys)
    code, out = run_cli(["rates", "fit", "-i", str(tmp_path / "run" / "raw.csv"), "--r-assumed", "4", "--k", "1"],
                        capsys)
    assert code == 3 and out["verdict"] == "VACUOUS"


def test_rates_fit_fail(tmp_path, capsys):
    from heavyrates.experiments import TrialRecord, raw_csv

    rows = [TrialRecord(n, t, 0, (1 + 0.01 * t) * n**-0.3, (1 + 0.01 * t) * n**-0.3, False, 1.0, "ok", "")
            for n in (100, 1000, 10000) for t in range(5)]
    path = tmp_path / "raw.csv"
    path.write_text(raw_csv(rows))
    code, out = run_cli(["rates", "fit", "-i", str(path), "--r-assumed", "100", "--k", "2", "--d", "2"], capsys)
    assert code == 2 and out["verdict"] == "FAIL"
    assert out["beta_hat"] == pytest.approx(0.3, abs=1e-9)


def test_bounds_eval(capsys, monkeypatch):
    obj = {"r": 4, "n": 100, "M": 2, "sigma": 1, "zeta": 8, "x": 1}
    code, out = run_cli(["bounds", "eval"], capsys, obj, monkeypatch)
    assert code == 0 and set(out) == {"value", "argmin_l", "diagnostics"}
    assert out["value"] == pytest.approx(1.855, abs=1e-3) and out["argmin_l"] == 1
    code, out = run_cli(["bounds", "eval"], capsys, {"op": "kmeans_rate", "r": 24, "k": 2, "d": 1}, monkeypatch)
    assert code == 0 and out["value"] == pytest.approx(0.17586, abs=1e-5)
    code, out = run_cli(["bounds", "eval"], capsys, {"op": "kmeans_rate", "r": 8, "k": 2, "d": 1}, monkeypatch)
    assert code == 3 and out["diagnostics"]
    code, _ = run_cli(["bounds", "eval"], capsys, {"op": "nope"}, monkeypatch)
    assert code == 1


def test_bernstein_check(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "bernstein_k1_gaussian.json").read_text())
    cfg["oracle"]["oracle_n"] = 10**5
    path = tmp_path / "b.json"
    path.write_text(json.dumps(cfg))
    code, out = run_cli(["bernstein", "check", "-c", str(path), "-o", str(tmp_path / "b")], capsys)
    assert code == 0 and out["verdict"] == "PASS"
    assert (tmp_path / "b" / "fit.json").exists()
    assert len((tmp_path / "b" / "probes.csv").read_text().strip().split("\n")) == 41


def test_net_build(tmp_path, capsys):
    code, out = run_cli(["net", "build", "--rho", "1", "--k", "2", "--epsilon", "0.25", "--lipschitz-L", "1",
                         "--C", "4", "--K", "2", "-o", str(tmp_path / "net.bin")], capsys)
    assert code == 0 and out["members"] == out["per_axis"] ** 2 and out["entropy"]["holds"]
    assert (tmp_path / "net.bin.json").exists()
    code, out = run_cli(["net", "build", "--rho", "1", "--epsilon", "0.01", "--lipschitz-L", "1",
                         "--C", "0.1", "--K", "1"], capsys)
    assert code == 2
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"family": "Uniform", "params": {"low": -1, "high": 1}, "dim": 1}))
    code, out = run_cli(["net", "build", "--rho", "1", "--epsilon", "0.2", "--spec", str(spec),
                         "--oracle-n", "20000"], capsys)
    assert code == 0 and out["lipschitz_L"] > 0


def test_module_entry_point():
    import subprocess

    res = subprocess.run([sys.executable, "-m", "heavyrates", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "rates" in res.stdout
