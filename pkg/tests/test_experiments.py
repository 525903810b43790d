import json
import math
import warnings
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from heavyrates import experiments as ex
from heavyrates.distributions import DistributionSpec
from heavyrates.experiments import (
    CurvePoint,
    ExperimentConfig,
    FitError,
    RateCurve,
    RateFit,
    compare_theory,
    emit,
    fit_rate,
    raw_csv,
    read_raw_csv,
    run,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
GAUSS = DistributionSpec.gaussian()


def small_config(**kw):
    base = dict(spec=GAUSS, k=1, rho=10.0, n_grid=[100, 1000, 10000], trials=40, r_assumed=64,
                erm_strategy="Exact1D", oracle={"mode": "Analytic"}, name="small")
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(n_grid=[100, 100])
    with pytest.raises(ValueError):
        small_config(trials=0)
    with pytest.raises(ValueError):
        small_config(d=2)
    with pytest.raises(ValueError):
        small_config(erm_strategy="Greedy")
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({**small_config().to_dict(), "schema": 2})
    with pytest.warns(UserWarning):
        small_config(spec=DistributionSpec.pareto(3.0), r_assumed=24)


def test_config_json_roundtrip(tmp_path):
    cfg = small_config()
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.load(path) == cfg


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")))
def test_shipped_configs_parse(path):
    obj = json.loads(path.read_text())
    if "n_grid" not in obj:
        return  # bernstein configs
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = ExperimentConfig.from_dict(obj)
    assert cfg.schema == 1


def test_fit_rate_examples():
    ns = [100, 1000, 10000, 100000]
    f = fit_rate([(n, 3.0 / n) for n in ns], window=None)
    assert f.beta_hat == pytest.approx(1, abs=1e-12) and f.se == pytest.approx(0, abs=1e-12)
    f = fit_rate([(n, 2.0 / math.sqrt(n)) for n in ns], window=3)
    assert f.beta_hat == pytest.approx(0.5, abs=1e-12) and f.used_n == (1000, 10000, 100000)
    f = fit_rate([(10, 0.0)] + [(n, 1.0 / n) for n in ns], window=None)
    assert f.excluded_n == (10,)
    with pytest.raises(FitError):
        fit_rate([(10, 1.0), (100, 0.0), (1000, 0.001)], window=None)


def _curve(beta, se, beta_max=0.505):
    return RateCurve("c", [], RateFit(beta, se, (1, 2, 3)), beta_max, 100.0)


def test_compare_theory_examples():
    assert compare_theory(_curve(1.0, 0.0)).status == "PASS"
    v = compare_theory(_curve(0.3, 0.0))
    assert v.status == "FAIL" and v.exit_code == 2 and v.margin == pytest.approx(0.3 - 0.505)
    v = compare_theory(_curve(1.0, 0.0, beta_max=0.0))
    assert v.status == "VACUOUS" and v.exit_code == 3


def test_compare_theory_generic_profile():
    from heavyrates.bounds import BernsteinProfile, BoundParams

    v = compare_theory(_curve(0.4, 0.0), BoundParams(r=64, C_entropy=4), BernsteinProfile.from_gammas([1, 0.5]))
    assert v.status == "PASS" and v.beta_max == pytest.approx(1 / 3)


@pytest.fixture(scope="module")
def gauss_run():
    return run(small_config(trials=200, n_grid=[100, 1000, 10000]), workers=4)


def test_k1_gaussian_medians(gauss_run):
    # excess = Xbar^2, so n * excess ~ chi^2_1
    med = stats.chi2(1).median()
    for p in gauss_run.curve.points:
        assert abs(p.median - med / p.n) <= 3 * p.median_se
        assert p.clip_rate == 0 and p.failures == 0
    assert 0.9 <= gauss_run.curve.fit.beta_hat <= 1.1


def test_raw_table_sorted_and_roundtrip(gauss_run, tmp_path):
    keys = [(r.n, r.trial) for r in gauss_run.records]
    assert keys == sorted(keys)
    path = tmp_path / "raw.csv"
    path.write_text(raw_csv(gauss_run.records))
    back = read_raw_csv(path)
    assert [r.excess for r in back] == [r.excess for r in gauss_run.records]
    assert raw_csv(back) == path.read_text()


def test_parallel_identical():
    cfg = small_config(n_grid=[50, 500], trials=16)
    a = raw_csv(run(cfg, workers=1).records)
    b = raw_csv(run(cfg, workers=8).records)
    assert a == b


def test_point_mass_excess_vanishes():
    spec = DistributionSpec.mixture([-1.0, 1.0], [0.5, 0.5])
    res = run(small_config(spec=spec, k=2, rho=2.0, n_grid=[20, 200], trials=30, oracle={}))
    assert all(r.excess == 0 for r in res.records if r.n == 200)
    assert compare_theory(res.curve).status == "PASS"


def test_failures_are_recorded(monkeypatch):
    real = ex.erm

    def flaky(smp, k, rho, strategy, **kw):
        if kw["seed"] % 5 == 0:
            raise RuntimeError("solver exploded")
        return real(smp, k, rho, strategy, **kw)

    monkeypatch.setattr(ex, "erm", flaky)
    res = run(small_config(trials=20, n_grid=[100, 200, 400]))
    failed = [r for r in res.records if r.status != "ok"]
    assert failed and all(math.isnan(r.excess) for r in failed)
    assert sum(p.failures for p in res.curve.points) == len(failed)
    assert any("trials failed" in d for d in res.curve.diagnostics)
    for p in res.curve.points:
        assert p.trials + p.failures == 20


def test_emit_formats(gauss_run, tmp_path):
    curve = gauss_run.curve
    back = RateCurve.from_dict(json.loads(emit(curve, "json", tmp_path / "c.json").read_text()))
    assert back == curve
    rows = emit(curve, "csv", tmp_path / "c.csv").read_text().strip().split("\n")
    assert len(rows) - 1 == len(curve.points) * 3
    svg = emit(curve, "svg", tmp_path / "c.svg").read_text()
    assert svg.count("<polyline") == 2
    with pytest.raises(ValueError):
        emit(curve, "png", tmp_path / "c.png")
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        emit(curve, "json", blocker / "c.json")


def test_run_persists_outputs(tmp_path):
    cfg = small_config(trials=10, output_dir=str(tmp_path / "out"))
    run(cfg)
    out = tmp_path / "out"
    for name in ("raw.csv", "curve.json", "curve.csv", "curve.svg", "oracle.json", "config.json"):
        assert (out / name).exists()
    assert len((out / "raw.csv").read_text().strip().split("\n")) == 1 + 3 * 10


def test_lloyd_caveat_logged():
    res = run(small_config(trials=5, erm_strategy="LloydMultistart", restarts=4))
    assert any("Lloyd" in d for d in res.curve.diagnostics)


@pytest.mark.parametrize("name", ["k1_gaussian", "t30_k2", "pointmass_k2", "pareto3_k2_breaks"])
def test_reference_medians_monotone(name):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = ExperimentConfig.load(CONFIGS / f"{name}.json")
    cfg.output_dir = None
    pts = run(cfg, workers=8).curve.points
    for a, b in zip(pts, pts[1:]):
        assert b.median <= a.median + 3 * max(a.median_se, b.median_se)
