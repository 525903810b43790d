import math

import numpy as np
import pytest

from heavyrates.bernstein import (
    DegenerateFitError,
    HypothesisProbe,
    check_condition,
    default_tau,
    far_field_violations,
    fit_multiscale,
    probe,
    probes_to_csv,
    ray_codebooks,
)
from heavyrates.bounds import BernsteinPiece, BernsteinProfile, far_field_bernstein
from heavyrates.distributions import DistributionSpec, envelope_norm
from heavyrates.quantization import Codebook, RiskOracle

GAUSS = DistributionSpec.gaussian()


def one(c, rho=10.0):
    return Codebook([[c]], rho)


def synthetic(excess, power, B=1.0):
    return [HypothesisProbe(one(0.0), e, B * e**power, 0) for e in excess]


@pytest.fixture(scope="module")
def gauss_oracle():
    return RiskOracle.build(GAUSS, 1, 10.0, "Analytic")


def test_probe_examples(gauss_oracle):
    p0, p1, p2 = probe([one(0.0), one(1.0), one(2.0)], GAUSS, gauss_oracle)
    assert (p0.excess, p0.second_moment) == (0.0, 0.0)
    assert p1.excess == pytest.approx(1, abs=1e-12) and p1.second_moment == pytest.approx(5, abs=1e-12)
    assert p2.excess == pytest.approx(4, abs=1e-12) and p2.second_moment == pytest.approx(32, abs=1e-12)


def test_probe_rejects_other_law(gauss_oracle):
    with pytest.raises(ValueError):
        probe([one(0.0)], DistributionSpec.student_t(5.0), gauss_oracle)


def test_variance_invariant():
    with pytest.raises(ValueError):
        HypothesisProbe(one(0.0), 2.0, 1.0, 0)


@pytest.mark.parametrize("spec", [GAUSS, DistributionSpec.student_t(6.0), DistributionSpec.lognormal(0.0, 0.5)])
def test_k1_closed_form_matches_mc(spec):
    # second = m^2 + 4 Var(X) m with m = (c - mu)^2
    o = RiskOracle.build(spec, 1, 20.0, "MonteCarlo", oracle_n=10**6, oracle_seed=3)
    mu = o.reference_optimum.flat[0]
    var = o.risk_star
    for t in (0.05, 0.3, 1.0, 2.5):
        p = probe([one(mu + t, 20.0)], spec, o)[0]
        m = t * t
        assert abs(p.excess - m) <= 5 * p.se_excess + 1e-12
        assert abs(p.second_moment - (m * m + 4 * var * m)) <= 5 * p.se_second + 1e-12


def test_fit_exact_power_laws():
    ex = np.geomspace(1e-4, 1e-1, 25)
    f = fit_multiscale(synthetic(ex, 1.0), tau=1.0)
    near = f.piece("near")
    assert near.gamma == pytest.approx(1, abs=1e-9) and near.B == pytest.approx(1, rel=1e-9)
    f = fit_multiscale(synthetic(ex, 2 / 3), tau=1.0)
    assert f.piece("near").gamma == pytest.approx(2 / 3, abs=1e-9)
    assert f.piece("near").satisfied and "region far is empty" in f.diagnostics


def test_fit_k1_gaussian_closed_form():
    m = np.geomspace(1e-4, 0.1, 30)
    probes = [HypothesisProbe(one(0.0), x, x * x + 4 * x, 0) for x in m]
    f = fit_multiscale(probes, tau=0.1)
    assert abs(f.piece("near").gamma - 1) < 0.1


def test_fit_two_regions_partition():
    ex = np.concatenate([np.geomspace(1e-3, 0.5, 20), np.geomspace(2, 50, 20)])
    probes = [HypothesisProbe(one(0.0), e, e * e + 4 * e, 0) for e in ex]
    f = fit_multiscale(probes, tau=1.0)
    assert [p.region for p in f.pieces] == ["near", "far"]
    assert sum(p.count for p in f.pieces) == len(probes)
    assert f.piece("far").gamma == 1 and f.piece("far").clipped
    assert not check_condition(probes, f.profile(), 1.0)


def test_fit_errors():
    with pytest.raises(DegenerateFitError):
        fit_multiscale(synthetic([0.1] * 25, 1.0), tau=1.0)
    with pytest.raises(ValueError):
        fit_multiscale(synthetic(np.geomspace(1e-3, 0.1, 5), 1.0), tau=1.0)


def test_check_condition_examples():
    probes = synthetic(np.geomspace(1e-3, 0.1, 25), 1.0)
    fit = fit_multiscale(probes, tau=1.0)
    assert check_condition(probes, fit.profile(), 1.0) == []
    halved = BernsteinProfile((BernsteinPiece("near", 0.5, 1.0),))
    assert len(check_condition(probes, halved, 1.0)) == len(probes)
    tau = 0.5
    m = np.geomspace(1e-4, tau, 30)
    g = [HypothesisProbe(one(0.0), x, x * x + 4 * x, 0) for x in m]
    prof = BernsteinProfile((BernsteinPiece("near", 4 + tau, 1.0),))
    assert check_condition(g, prof, tau) == []


def test_default_tau():
    assert default_tau(1.0) == 1.0
    assert default_tau(2.0, 3.0) == 1.0
    with pytest.raises(ValueError):
        default_tau(1.0, 1.0)


def test_far_field_inequality_heavy_tailed(tmp_path):
    # k=1 with a StudentT law: every probe past the threshold satisfies the inequality
    spec, rho, r = DistributionSpec.student_t(9.0), 4.0, 4.0
    o = RiskOracle.build(spec, 1, rho, "Analytic")
    W = envelope_norm(spec, rho, r)
    M = W ** (r / (r - 2))
    ff = far_field_bernstein(W, r, 2 * M)
    books = [one(c, rho) for c in np.linspace(-3.99, 3.99, 200)]
    probes = probe(books, spec, o)
    checked, bad = far_field_violations(probes, ff, o.risk_star)
    assert checked > 0 and bad == []


def test_ray_codebooks_stay_in_box():
    opt = Codebook([[0.5], [-0.5]], 1.0)
    books = ray_codebooks([opt], [0.01, 0.1, 10.0], rays=3, seed=1)
    assert len(books) == 9
    assert all(np.all(np.abs(b.centers) < 1.0) for b in books)


def test_probes_csv():
    text = probes_to_csv(synthetic([0.5, 0.25], 1.0))
    rows = text.strip().split("\n")
    assert len(rows) == 3 and rows[0].startswith("index,centers")
    assert float(rows[1].split(",")[2]) == 0.5
