"""Empirical checks of the multi-scale Bernstein condition on k-means.

Probes are codebooks with both moments E[l(C) - l(C*)] and
E[(l(C) - l(C*))^2] measured against their nearest global optimum. The
hypothesis class is split into a near and a far region by an excess-risk
threshold tau, and each region gets its own (B, gamma).
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .bounds import BernsteinPiece, BernsteinProfile, FarField
from .quantization import Codebook, RiskOracle

__all__ = [
    "HypothesisProbe",
    "RegionFit",
    "BernsteinFit",
    "DegenerateFitError",
    "Violation",
    "probe",
    "fit_multiscale",
    "check_condition",
    "default_tau",
    "ray_codebooks",
    "far_field_violations",
    "probes_to_csv",
]

GAMMA_FLOOR = 1e-6


class DegenerateFitError(ValueError):
    pass


@dataclass(frozen=True)
class HypothesisProbe:
    codebook: Codebook
    excess: float
    second_moment: float
    nearest_optimum: int
    se_excess: float = 0.0
    se_second: float = 0.0

    def __post_init__(self):
        # variance nonnegativity, up to the estimation noise
        tol = 1e-12 * max(1.0, self.second_moment) + 5 * (self.se_second + 2 * abs(self.excess) * self.se_excess)
        if self.second_moment < self.excess**2 - tol:
            raise ValueError("second moment below squared mean")


@dataclass(frozen=True)
class RegionFit:
    region: str
    lo: float  # excess-risk range (lo, hi] covered by the region
    hi: float
    gamma: float
    gamma_raw: float
    gamma_band: tuple[float, float]
    B: float
    count: int
    clipped: bool
    satisfied: bool


@dataclass
class BernsteinFit:
    pieces: list[RegionFit]
    tau: float
    diagnostics: list[str] = field(default_factory=list)

    def profile(self) -> BernsteinProfile:
        return BernsteinProfile(
            tuple(BernsteinPiece(p.region, p.B, p.gamma) for p in self.pieces), "Estimated"
        )

    def piece(self, region: str) -> RegionFit:
        for p in self.pieces:
            if p.region == region:
                return p
        raise KeyError(region)

    def to_dict(self) -> dict:
        return {"tau": self.tau, "pieces": [asdict(p) for p in self.pieces], "diagnostics": self.diagnostics}


@dataclass(frozen=True)
class Violation:
    index: int
    region: str
    second_moment: float
    allowed: float
    tolerance: float


def probe(codebooks: Sequence[Codebook], spec, oracle: RiskOracle, *, workers: int = 1) -> list[HypothesisProbe]:
    """Measure both Bernstein moments of each codebook against its nearest optimum."""
    if spec is not None and oracle.spec != spec:
        raise ValueError("oracle was built for a different law")

    def one(cb: Codebook) -> HypothesisProbe:
        j = oracle.nearest_optimum(cb)
        m, s, se_m, se_s = oracle.difference_moments(cb, oracle.optima[j])
        return HypothesisProbe(cb, m, s, j, se_m, se_s)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, codebooks))
    return [one(cb) for cb in codebooks]


def default_tau(risk_star: float, alpha_over_M: float = 2.0) -> float:
    """Far-field threshold translated to excess risk: (M/(alpha - M)) R(C*)."""
    if not alpha_over_M > 1:
        raise ValueError("alpha must exceed M")
    return risk_star / (alpha_over_M - 1)


def _split(probes, tau):
    near = [i for i, p in enumerate(probes) if p.excess <= tau]
    far = [i for i, p in enumerate(probes) if p.excess > tau]
    return {"near": near, "far": far}


def _fit_region(name, probes, idx, lo, hi, min_count) -> RegionFit:
    if len(idx) < min_count:
        raise ValueError(f"region {name} has {len(idx)} probes, need >= {min_count}")
    ex = np.array([probes[i].excess for i in idx])
    sm = np.array([probes[i].second_moment for i in idx])
    usable = (ex > 0) & (sm > 0)
    lx, ly = np.log(ex[usable]), np.log(sm[usable])
    if lx.size < 2 or np.ptp(lx) == 0:
        raise DegenerateFitError(f"region {name}: excess values are degenerate, cannot regress")
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icpt)
    dof = lx.size - 2
    if dof > 0:
        se = math.sqrt(float(resid @ resid) / dof / float(np.sum((lx - lx.mean()) ** 2)))
    else:
        se = 0.0
    gamma = float(min(1.0, max(GAMMA_FLOOR, slope)))
    clipped = bool(gamma != slope)
    B = float(np.exp(np.max(ly - gamma * lx)))
    satisfied = bool(np.all(sm <= B * np.power(ex, gamma) * (1 + 1e-12)))
    return RegionFit(
        name, lo, hi, gamma, float(slope), (float(slope - 1.96 * se), float(slope + 1.96 * se)),
        B, len(idx), clipped, satisfied,
    )


def fit_multiscale(probes: Sequence[HypothesisProbe], tau: float, *, min_count: int = 20) -> BernsteinFit:
    """Fit (B_i, gamma_i) on the near (excess <= tau) and far regions.

    gamma is the least-squares slope of log second moment on log excess,
    clipped to (0, 1]; B is exp of the largest residual at that gamma, so the
    fitted inequality holds literally at every probe of the region. Empty
    regions are skipped; nonempty ones need ``min_count`` probes.
    """
    regions = _split(probes, tau)
    fit = BernsteinFit([], tau)
    for name, lo, hi in (("near", 0.0, tau), ("far", tau, math.inf)):
        idx = regions[name]
        if not idx:
            fit.diagnostics.append(f"region {name} is empty")
            continue
        rf = _fit_region(name, probes, idx, lo, hi, min_count)
        if rf.clipped:
            fit.diagnostics.append(f"region {name}: slope {rf.gamma_raw:.6g} clipped to {rf.gamma:.6g}")
        skipped = len(idx) - int(sum(1 for i in idx if probes[i].excess > 0 and probes[i].second_moment > 0))
        if skipped:
            fit.diagnostics.append(f"region {name}: {skipped} probes with zero moments left out of the regression")
        fit.pieces.append(rf)
    return fit


def check_condition(probes: Sequence[HypothesisProbe], profile: BernsteinProfile, tau: float) -> list[Violation]:
    """Probes with second > B excess^gamma + 3 propagated SE.

    A one-piece profile applies everywhere; a two-piece profile is read as
    (near, far) around ``tau``.
    """
    pieces = profile.pieces
    if len(pieces) not in (1, 2):
        raise ValueError("profile must have one piece or a (near, far) pair")
    out = []
    for i, p in enumerate(probes):
        far = len(pieces) == 2 and p.excess > tau
        piece = pieces[1] if far else pieces[0]
        allowed = piece.B * max(p.excess, 0.0) ** piece.gamma
        slope = piece.B * piece.gamma * p.excess ** (piece.gamma - 1) if p.excess > 0 else 0.0
        tol = 3 * math.hypot(p.se_second, slope * p.se_excess)
        if p.second_moment > allowed + tol + 1e-12 * max(1.0, allowed):
            out.append(Violation(i, "far" if far else "near", p.second_moment, allowed, tol))
    return out


def far_field_violations(probes: Sequence[HypothesisProbe], ff: FarField, risk_star: float) -> tuple[int, list[int]]:
    """Check E[(dl)^2] <= B (E dl)^gamma at every probe past the risk-ratio threshold.

    Returns (number of probes checked, indices that violate).
    """
    checked, bad = 0, []
    for i, p in enumerate(probes):
        if p.excess + risk_star >= ff.threshold * risk_star:
            checked += 1
            if p.second_moment > ff.B * p.excess**ff.gamma:
                bad.append(i)
    return checked, bad


def ray_codebooks(
    optima: Sequence[Codebook],
    distances: Sequence[float],
    *,
    rays: int = 1,
    seed: int = 0,
) -> list[Codebook]:
    """Codebooks C* + t u along random unit directions u, for each t in ``distances``.

    Points landing outside the box are clipped back into it.
    """
    rng = np.random.Generator(np.random.Philox(key=seed & ((1 << 64) - 1)))
    out = []
    for opt in optima:
        for _ in range(rays):
            u = rng.standard_normal(opt.flat.size)
            u /= np.linalg.norm(u)
            for t in distances:
                out.append(Codebook.clipped((opt.flat + t * u).reshape(opt.centers.shape), opt.rho))
    return out


def probes_to_csv(probes: Sequence[HypothesisProbe]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "centers", "excess", "second_moment", "se_excess", "se_second", "nearest_optimum"])
    for i, p in enumerate(probes):
        centers = ";".join(format(v, ".17g") for v in p.codebook.flat)
        w.writerow([
            i, centers, format(p.excess, ".17g"), format(p.second_moment, ".17g"),
            format(p.se_excess, ".17g"), format(p.se_second, ".17g"), p.nearest_optimum,
        ])
    return buf.getvalue()
