"""k-means distortion, empirical and true risk, ERM solvers and risk oracles.

The hypothesis class is the open box (-rho, rho)^{d x k}; a codebook is a
(k, d) array of centers inside it. Solvers that produce centroids outside the
box clip them to +-(rho - 1e-12).
"""
from __future__ import annotations

import enum
import hashlib
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .distributions import (
    DistributionSpec,
    Family,
    Sample,
    partial_moments,
    ppf,
    sample as draw,
)

__all__ = [
    "Codebook",
    "Strategy",
    "OracleMode",
    "RiskOracle",
    "ExcessRisk",
    "distortion",
    "distortions",
    "empirical_risk",
    "true_risk",
    "erm",
    "excess_risk",
    "lloyd_max",
    "estimate_lipschitz",
    "codebook_distance",
]

CLIP_MARGIN = 1e-12


@dataclass(frozen=True, eq=False)
class Codebook:
    """k centers in R^d, all coordinates strictly inside (-rho, rho).

    A flat sequence of scalars is read as k one-dimensional centers.
    """

    centers: np.ndarray
    rho: float = math.inf

    def __post_init__(self):
        c = np.array(self.centers, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValueError("a codebook needs at least one center")
        if not np.all(np.isfinite(c)):
            raise ValueError("centers must be finite")
        if not self.rho > 0:
            raise ValueError("rho must be > 0")
        if np.any(np.abs(c) >= self.rho):
            raise ValueError(f"centers must lie in the open box (-{self.rho}, {self.rho})")
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "rho", float(self.rho))

    @classmethod
    def clipped(cls, centers, rho: float) -> "Codebook":
        c = np.array(centers, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if math.isfinite(rho):
            bound = rho - CLIP_MARGIN * max(1.0, rho)
            c = np.clip(c, -bound, bound)
        return cls(c, rho)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    @property
    def flat(self) -> np.ndarray:
        return self.centers.reshape(-1)

    def is_interior(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.centers) < self.rho - tol * max(1.0, self.rho)))

    def to_json(self) -> str:
        return json.dumps([[float(v) for v in row] for row in self.centers])

    @classmethod
    def from_json(cls, text: str, rho: float = math.inf) -> "Codebook":
        return cls(np.asarray(json.loads(text), dtype=float), rho)

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return self.rho == other.rho and np.array_equal(self.centers, other.centers)

    def __repr__(self):
        return f"Codebook({self.centers.tolist()}, rho={self.rho})"


def _points(x) -> np.ndarray:
    if isinstance(x, Sample):
        return x.points
    p = np.asarray(x, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    return p


def distortions(codebook: Codebook, points) -> tuple[np.ndarray, np.ndarray]:
    """Per-point distortion and nearest-center index (lowest index on ties)."""
    pts = _points(points)
    if pts.shape[1] != codebook.d:
        raise ValueError(f"points have dim {pts.shape[1]}, codebook has dim {codebook.d}")
    best = np.full(pts.shape[0], np.inf)
    idx = np.zeros(pts.shape[0], dtype=np.intp)
    for j, c in enumerate(codebook.centers):
        if codebook.d == 1:
            dj = np.square(pts[:, 0] - c[0])
        else:
            dj = np.square(pts - c).sum(axis=1)
        better = dj < best
        best = np.where(better, dj, best)
        idx[better] = j
    return best, idx


def distortion(codebook: Codebook, x) -> float:
    """min_i ||x - y_i||^2 for a single point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (codebook.d,):
        raise ValueError(f"point has shape {x.shape}, expected ({codebook.d},)")
    return float(distortions(codebook, x[None, :])[0][0])


def empirical_risk(codebook: Codebook, sample) -> float:
    """P_n l(C), summed exactly (math.fsum) so the result is order independent."""
    dist, _ = distortions(codebook, sample)
    if dist.size == 0:
        raise ValueError("empty sample")
    return math.fsum(dist) / dist.size


# ---------------------------------------------------------------------------
# 1-D analytic risk
# ---------------------------------------------------------------------------

def _cells(centers_1d: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    c = np.unique(centers_1d)
    mids = (c[:-1] + c[1:]) / 2
    lo = np.concatenate([[-np.inf], mids])
    hi = np.concatenate([mids, [np.inf]])
    return c, lo, hi


def _analytic_risk(spec: DistributionSpec, centers_1d: np.ndarray) -> float:
    c, lo, hi = _cells(centers_1d)
    m0, m1, m2 = partial_moments(spec, lo, hi)
    if not np.all(np.isfinite(m2)):
        return math.inf
    return math.fsum(np.concatenate([m2, -2 * c * m1, c * c * m0]))


def _analytic_difference(spec, a_centers, b_centers) -> tuple[float, float]:
    """(E[l(A) - l(B)], E[(l(A) - l(B))^2]) for 1-D codebooks, exact.

    On every piece of the common refinement both nearest centers are fixed,
    so the loss difference is affine in x and only partial moments up to
    order two are needed.
    """
    ca, lo_a, _ = _cells(a_centers)
    cb, lo_b, _ = _cells(b_centers)
    edges = np.unique(np.concatenate([lo_a[1:], lo_b[1:]]))
    lo = np.concatenate([[-np.inf], edges])
    hi = np.concatenate([edges, [np.inf]])
    with np.errstate(invalid="ignore"):
        mid = (lo + hi) / 2
    probe = np.where(np.isfinite(mid), mid, np.where(np.isfinite(lo), lo + 1.0, hi - 1.0))
    if len(edges) == 0:
        probe = np.zeros(1)
    a = ca[np.argmin(np.abs(probe[:, None] - ca[None, :]), axis=1)]
    b = cb[np.argmin(np.abs(probe[:, None] - cb[None, :]), axis=1)]
    m0, m1, m2 = partial_moments(spec, lo, hi)
    slope = 2 * (b - a)
    icpt = a * a - b * b
    if not np.all(np.isfinite(m2)):
        return math.inf, math.inf
    mean = math.fsum(np.concatenate([slope * m1, icpt * m0]))
    second = math.fsum(np.concatenate([slope**2 * m2, 2 * slope * icpt * m1, icpt**2 * m0]))
    return mean, second


def lloyd_max(
    spec: DistributionSpec,
    k: int,
    rho: float = math.inf,
    *,
    starts: int = 8,
    seed: int = 0,
    tol: float = 1e-13,
    max_iter: int = 200_000,
) -> list[tuple[Codebook, float]]:
    """Lloyd iterations on a 1-D continuous law, from several quantile starts.

    Returns every converged local optimum as ``(codebook, risk)``, sorted by
    risk; the first entry is the reference global optimum.
    """
    if spec.dim != 1 or spec.is_discrete:
        raise ValueError("lloyd_max needs a 1-D continuous law")
    inits = [ppf(spec, (np.arange(k) + 0.5) / k)]
    for s in range(1, starts):
        rng = np.random.default_rng([seed, s])
        inits.append(ppf(spec, np.sort(rng.uniform(0.02, 0.98, size=k))))
    found: list[tuple[Codebook, float]] = []
    for c in inits:
        c = np.sort(np.asarray(c, dtype=float))
        for _ in range(max_iter):
            mids = (c[:-1] + c[1:]) / 2
            lo = np.concatenate([[-np.inf], mids])
            hi = np.concatenate([mids, [np.inf]])
            m0, m1, _ = partial_moments(spec, lo, hi)
            new = np.where(m0 > 0, m1 / np.where(m0 > 0, m0, 1.0), c)
            if math.isfinite(rho):
                bound = rho - CLIP_MARGIN * max(1.0, rho)
                new = np.clip(new, -bound, bound)
            step = np.max(np.abs(new - c))
            c = new
            if step <= tol * (1.0 + np.max(np.abs(c))):
                break
        cb = Codebook.clipped(c, rho)
        found.append((cb, _analytic_risk(spec, cb.centers[:, 0])))
    found.sort(key=lambda t: t[1])
    best = found[0][1]
    unique: list[tuple[Codebook, float]] = []
    for cb, r in found:
        if r - best > 1e-12 * max(1.0, abs(best)):
            continue
        if not any(np.allclose(cb.centers, u.centers, atol=1e-8) for u, _ in unique):
            unique.append((cb, r))
    return unique


# ---------------------------------------------------------------------------
# exact solvers
# ---------------------------------------------------------------------------

def _segment_cost_fn(xs: np.ndarray):
    s1 = np.concatenate([[0.0], np.cumsum(xs)])
    s2 = np.concatenate([[0.0], np.cumsum(xs * xs)])

    def cost(i, j):
        # SSE of xs[i:j]; i, j broadcastable index arrays with i < j
        cnt = j - i
        d1 = s1[j] - s1[i]
        return np.maximum(s2[j] - s2[i] - d1 * d1 / cnt, 0.0)

    return cost


def kmeans_1d_segments(x: np.ndarray, k: int) -> list[tuple[int, int]]:
    """Optimal contiguous segmentation of sorted 1-D data into k clusters.

    Dynamic programming over sorted points; each layer is filled by divide
    and conquer on the monotone optimal split point, O(k n log n).
    """
    n = len(x)
    k = min(k, n)
    xs = x - x.mean()  # centering keeps the prefix-sum cancellation small
    cost = _segment_cost_fn(xs)
    if k == 1:
        return [(0, n)]
    idx = np.arange(n + 1)
    prev = np.full(n + 1, np.inf)
    prev[1:] = cost(np.zeros(n, dtype=int), idx[1:])
    splits: list[np.ndarray] = []
    for m in range(2, k):
        cur = np.full(n + 1, np.inf)
        arg = np.zeros(n + 1, dtype=int)
        # fill cur[j] for j in [m, n - (k - m)]
        stack = [(m, n - (k - m), m - 1, n - (k - m) - 1)]
        while stack:
            jlo, jhi, ilo, ihi = stack.pop()
            if jlo > jhi:
                continue
            mid = (jlo + jhi) // 2
            cand = np.arange(max(ilo, m - 1), min(ihi, mid - 1) + 1)
            vals = prev[cand] + cost(cand, mid)
            best = int(np.argmin(vals))
            cur[mid] = vals[best]
            arg[mid] = cand[best]
            stack.append((jlo, mid - 1, ilo, arg[mid]))
            stack.append((mid + 1, jhi, arg[mid], ihi))
        splits.append(arg)
        prev = cur
    cand = np.arange(k - 1, n)
    vals = prev[cand] + cost(cand, n)
    last = int(cand[int(np.argmin(vals))])
    bounds = [n, last]
    for arg in reversed(splits):
        bounds.append(int(arg[bounds[-1]]))
    bounds.append(0)
    bounds = bounds[::-1]
    return list(zip(bounds[:-1], bounds[1:]))


def _restricted_growth_strings(n: int, k: int) -> np.ndarray:
    """All set partitions of range(n) into at most k blocks, as label arrays."""
    out = []
    labels = [0] * n

    def rec(i, used):
        if i == n:
            out.append(labels.copy())
            return
        for lab in range(min(used + 1, k)):
            labels[i] = lab
            rec(i + 1, max(used, lab + 1))

    if n:
        labels[0] = 0
        rec(1, 1)
    return np.asarray(out, dtype=np.int8)


def _partition_codebooks(points, weights, k, rho) -> tuple[np.ndarray, np.ndarray]:
    """Candidate centers (P, k, d) from every partition, and their risks."""
    m, d = points.shape
    rgs = _restricted_growth_strings(m, k)
    onehot = rgs[:, :, None] == np.arange(k)[None, None, :]  # (P, m, k)
    w = onehot * weights[None, :, None]
    mass = w.sum(axis=1)  # (P, k)
    sums = np.einsum("pmk,md->pkd", w, points)
    with np.errstate(invalid="ignore", divide="ignore"):
        centers = sums / mass[:, :, None]
    empty = mass <= 0
    # empty blocks duplicate block 0 (duplicate centers are allowed)
    centers = np.where(empty[:, :, None], centers[:, :1, :], centers)
    if math.isfinite(rho):
        bound = rho - CLIP_MARGIN * max(1.0, rho)
        centers = np.clip(centers, -bound, bound)
    d2 = np.square(points[None, :, None, :] - centers[:, None, :, :]).sum(axis=-1)  # (P, m, k)
    risks = (d2.min(axis=2) * weights[None, :]).sum(axis=1)
    return centers, risks


class Strategy(str, enum.Enum):
    EXACT_1D = "Exact1D"
    BRUTE_FORCE_TINY = "BruteForceTiny"
    LLOYD_MULTISTART = "LloydMultistart"


def _lloyd_run(x: np.ndarray, k: int, rho: float, seed: int, restart: int, max_iter: int):
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, restart], dtype=np.uint64)))
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    best = np.square(x - centers[0]).sum(axis=1)
    for j in range(1, k):
        tot = best.sum()
        if tot <= 0:
            centers[j] = centers[0]
            continue
        i = int(np.searchsorted(np.cumsum(best), rng.uniform(0, tot), side="right"))
        centers[j] = x[min(i, n - 1)]
        best = np.minimum(best, np.square(x - centers[j]).sum(axis=1))
    cb = Codebook.clipped(centers, rho)
    assign = None
    for _ in range(max_iter):
        dist, new_assign = distortions(cb, x)
        if assign is not None and np.array_equal(assign, new_assign):
            break
        assign = new_assign
        c = cb.centers.copy()
        counts = np.bincount(assign, minlength=k)
        for j in range(k):
            if counts[j]:
                c[j] = x[assign == j].mean(axis=0)
            else:
                far = int(np.argmax(dist))
                c[j] = x[far]
                dist[far] = 0.0
        cb = Codebook.clipped(c, rho)
    return cb, empirical_risk(cb, x)


def erm(
    sample,
    k: int,
    rho: float = math.inf,
    strategy: str | Strategy = Strategy.EXACT_1D,
    *,
    restarts: int = 32,
    seed: int | None = None,
    max_iter: int = 300,
    workers: int = 1,
) -> Codebook:
    """Empirical risk minimizer over (-rho, rho)^{d x k}.

    ``Exact1D`` is globally optimal for d = 1 (up to clipping at the box).
    ``BruteForceTiny`` enumerates every partition and needs n <= 12.
    ``LloydMultistart`` keeps the best of ``restarts`` k-means++ seeded runs;
    it is not guaranteed to find the global minimum.
    """
    strategy = Strategy(strategy)
    x = _points(sample)
    n, d = x.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < 1:
        raise ValueError("empty sample")
    if strategy is Strategy.EXACT_1D:
        if d != 1:
            raise ValueError("Exact1D requires d = 1")
        xs = np.sort(x[:, 0])
        segs = kmeans_1d_segments(xs, k)
        centers = [math.fsum(xs[a:b]) / (b - a) for a, b in segs]
        centers += [centers[-1]] * (k - len(centers))
        return Codebook.clipped(np.asarray(centers)[:, None], rho)
    if strategy is Strategy.BRUTE_FORCE_TINY:
        if n > 12:
            raise ValueError("BruteForceTiny requires n <= 12")
        if d * k > 12:
            raise ValueError("BruteForceTiny requires small d*k")
        centers, risks = _partition_codebooks(x, np.full(n, 1.0 / n), k, rho)
        return Codebook(centers[int(np.argmin(risks))], rho)
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if seed is None:
        seed = getattr(sample, "seed", 0)
    seed &= (1 << 64) - 1
    run = lambda r: _lloyd_run(x, k, rho, seed, r, max_iter)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, range(restarts)))
    else:
        results = [run(r) for r in range(restarts)]
    best = min(range(restarts), key=lambda r: (results[r][1], r))
    return results[best][0]


# ---------------------------------------------------------------------------
# risk oracles
# ---------------------------------------------------------------------------

class OracleMode(str, enum.Enum):
    EXACT_DISCRETE = "ExactDiscrete"
    MONTE_CARLO = "MonteCarlo"
    ANALYTIC = "Analytic"  # closed-form cell integrals, 1-D continuous laws


class ExcessRisk(NamedTuple):
    value: float
    clipped: bool
    raw: float
    se: float


def codebook_distance(a: Codebook, b: Codebook) -> float:
    """Euclidean distance between codebooks, minimized over center orderings."""
    if a.k != b.k or a.d != b.d:
        raise ValueError("codebooks differ in shape")
    if a.k <= 6:
        perms = itertools.permutations(range(a.k))
        return min(float(np.linalg.norm(a.centers[list(p)] - b.centers)) for p in perms)
    return float(np.linalg.norm(a.centers - b.centers))


@dataclass
class RiskOracle:
    """True-risk oracle for one (spec, k, rho) plus the reference optimum C*.

    ``optima`` holds every known global minimizer (as codebooks); the first
    is the reference C*. ``violations`` counts queried codebooks whose risk
    came out below R(C*), which signals that the oracle needs refinement.
    """

    mode: OracleMode
    spec: DistributionSpec
    k: int
    rho: float
    optima: list[Codebook] = field(default_factory=list)
    risk_star: float = math.nan
    provenance: str = ""
    oracle_n: int = 0
    oracle_seed: int = 0
    points: np.ndarray | None = field(default=None, repr=False)
    violations: int = 0

    # -- construction -----------------------------------------------------
    @classmethod
    def build(cls, spec, k, rho=math.inf, mode=None, *, oracle_n=10**6, oracle_seed=0, optima=None):
        if mode is None:
            mode = (
                OracleMode.EXACT_DISCRETE
                if spec.is_discrete
                else OracleMode.ANALYTIC if spec.dim == 1 else OracleMode.MONTE_CARLO
            )
        mode = OracleMode(mode)
        if mode is OracleMode.EXACT_DISCRETE:
            return cls.exact_discrete(spec, k, rho, optima=optima)
        if mode is OracleMode.ANALYTIC:
            return cls.analytic(spec, k, rho, optima=optima)
        return cls.monte_carlo(spec, k, rho, oracle_n=oracle_n, oracle_seed=oracle_seed, optima=optima)

    @classmethod
    def exact_discrete(cls, spec, k, rho=math.inf, optima=None):
        if not spec.is_discrete:
            raise ValueError("ExactDiscrete needs a point-mass mixture")
        self = cls(OracleMode.EXACT_DISCRETE, spec, k, rho)
        if optima is None:
            atoms, w = spec.atoms, spec.weights
            keep = w > 0
            atoms, w = atoms[keep], w[keep]
            if len(atoms) > 12:
                raise ValueError("exact optimum search supports at most 12 atoms")
            centers, risks = _partition_codebooks(atoms, w, k, rho)
            best = risks.min()
            tie = np.flatnonzero(risks <= best + 1e-13 * max(1.0, best))
            optima = []
            for i in tie:
                cb = Codebook(centers[i], rho)
                if not any(codebook_distance(cb, o) < 1e-12 for o in optima):
                    optima.append(cb)
            self.provenance = "exact partition enumeration over atoms"
        else:
            self.provenance = "supplied"
        self._set_optima(optima)
        return self

    @classmethod
    def analytic(cls, spec, k, rho=math.inf, optima=None):
        if spec.is_discrete or spec.dim != 1:
            raise ValueError("Analytic oracle needs a 1-D continuous law")
        self = cls(OracleMode.ANALYTIC, spec, k, rho)
        if optima is None:
            optima = [cb for cb, _ in lloyd_max(spec, k, rho)]
            self.provenance = "Lloyd-Max on the exact law, multistart"
        else:
            self.provenance = "supplied"
        self._set_optima(optima)
        return self

    @classmethod
    def monte_carlo(cls, spec, k, rho=math.inf, *, oracle_n=10**6, oracle_seed=0, optima=None):
        self = cls(OracleMode.MONTE_CARLO, spec, k, rho, oracle_n=oracle_n, oracle_seed=oracle_seed)
        self.points = draw(spec, oracle_n, oracle_seed, stream=1).points
        if optima is None:
            strategy = Strategy.EXACT_1D if spec.dim == 1 else Strategy.LLOYD_MULTISTART
            optima = [erm(self.points, k, rho, strategy, seed=oracle_seed)]
            self.provenance = f"{strategy.value} ERM on the oracle sample"
        else:
            self.provenance = "supplied"
        self._set_optima(optima)
        return self

    def _set_optima(self, optima):
        self.optima = [o if isinstance(o, Codebook) else Codebook(o, self.rho) for o in optima]
        if not self.optima:
            raise ValueError("oracle needs at least one optimum")
        self.risk_star = self.risk(self.optima[0])

    @property
    def reference_optimum(self) -> Codebook:
        return self.optima[0]

    @property
    def interior(self) -> bool:
        return all(o.is_interior() for o in self.optima)

    # -- queries ----------------------------------------------------------
    def _check(self, codebook: Codebook):
        if codebook.d != self.spec.dim:
            raise ValueError("codebook dimension does not match the law")

    def risk(self, codebook: Codebook) -> float:
        return self.risk_with_se(codebook)[0]

    def risk_with_se(self, codebook: Codebook) -> tuple[float, float]:
        self._check(codebook)
        if self.mode is OracleMode.EXACT_DISCRETE:
            dist, _ = distortions(codebook, self.spec.atoms)
            return math.fsum(dist * self.spec.weights), 0.0
        if self.mode is OracleMode.ANALYTIC:
            return _analytic_risk(self.spec, codebook.centers[:, 0]), 0.0
        dist, _ = distortions(codebook, self.points)
        return math.fsum(dist) / dist.size, float(dist.std(ddof=1) / math.sqrt(dist.size))

    def difference_moments(self, codebook: Codebook, ref: Codebook) -> tuple[float, float, float, float]:
        """E[l(C) - l(ref)], E[(l(C) - l(ref))^2] and their standard errors."""
        self._check(codebook)
        if self.mode is OracleMode.ANALYTIC:
            m, s = _analytic_difference(self.spec, codebook.centers[:, 0], ref.centers[:, 0])
            return m, s, 0.0, 0.0
        if self.mode is OracleMode.EXACT_DISCRETE:
            pts, w = self.spec.atoms, self.spec.weights
        else:
            pts, w = self.points, None
        delta = distortions(codebook, pts)[0] - distortions(ref, pts)[0]
        if w is not None:
            return math.fsum(delta * w), math.fsum(delta * delta * w), 0.0, 0.0
        sq = delta * delta
        n = delta.size
        return (
            math.fsum(delta) / n,
            math.fsum(sq) / n,
            float(delta.std(ddof=1) / math.sqrt(n)),
            float(sq.std(ddof=1) / math.sqrt(n)),
        )

    def nearest_optimum(self, codebook: Codebook) -> int:
        dists = [codebook_distance(codebook, o) for o in self.optima]
        return int(np.argmin(dists))

    def raw_excess(self, codebook: Codebook) -> tuple[float, float]:
        """Unclipped R(C) - R(C*) and its standard error; does not touch the counter."""
        if self.mode is OracleMode.MONTE_CARLO:
            raw, _, se, _ = self.difference_moments(codebook, self.reference_optimum)
            return raw, se
        return self.risk(codebook) - self.risk_star, 0.0

    def excess(self, codebook: Codebook) -> ExcessRisk:
        raw, se = self.raw_excess(codebook)
        clipped = raw < 0
        if clipped:
            self.violations += 1
        return ExcessRisk(max(0.0, raw), clipped, raw, se)

    def describe(self) -> dict:
        return {
            "mode": self.mode.value,
            "provenance": self.provenance,
            "risk_star": self.risk_star,
            "optima": [o.centers.tolist() for o in self.optima],
            "interior": self.interior,
            "oracle_n": self.oracle_n,
            "oracle_seed": self.oracle_seed,
            "violations": self.violations,
        }


def true_risk(codebook: Codebook, spec: DistributionSpec, oracle: RiskOracle) -> float:
    """R(C) under ``spec`` via ``oracle``."""
    if oracle.spec != spec:
        raise ValueError("oracle was built for a different law")
    if oracle.mode is OracleMode.EXACT_DISCRETE and not spec.is_discrete:
        raise ValueError("ExactDiscrete requested for a continuous law")
    return oracle.risk(codebook)


def excess_risk(codebook: Codebook, oracle: RiskOracle, spec: DistributionSpec | None = None) -> ExcessRisk:
    """max(0, R(C) - R(C*)); ``clipped`` records when the max fired."""
    if spec is not None and oracle.spec != spec:
        raise ValueError("oracle was built for a different law")
    return oracle.excess(codebook)


def random_codebooks(k: int, d: int, rho: float, count: int, seed: int, scale: float | None = None):
    """Uniform codebooks in the box (or in (-scale, scale) when rho is infinite)."""
    s = rho if math.isfinite(rho) else scale
    if s is None:
        raise ValueError("scale needed for an unbounded box")
    rng = np.random.Generator(np.random.Philox(key=seed & ((1 << 64) - 1)))
    raw = rng.uniform(-s, s, size=(count, k, d))
    return [Codebook.clipped(c, rho) for c in raw]


def estimate_lipschitz(
    oracle: RiskOracle, *, pairs: int = 200, seed: int = 0, scale: float | None = None
) -> dict:
    """Regress E[(l(C) - l(C'))^2] on ||C - C'||^2 through the origin.

    Returns the slope, the max observed ratio and the pair count.
    """
    a = random_codebooks(oracle.k, oracle.spec.dim, oracle.rho, pairs, seed, scale)
    b = random_codebooks(oracle.k, oracle.spec.dim, oracle.rho, pairs, seed + 1, scale)
    x, y = [], []
    for ca, cbk in zip(a, b):
        _, second, _, _ = oracle.difference_moments(ca, cbk)
        x.append(float(np.sum(np.square(ca.centers - cbk.centers))))
        y.append(second)
    x, y = np.asarray(x), np.asarray(y)
    slope = float(x @ y / (x @ x))
    return {"slope": slope, "max_ratio": float(np.max(y / x)), "pairs": pairs}


def trial_seed(*parts) -> int:
    """Stable 64-bit seed from a tuple of integers (blake2b)."""
    h = hashlib.blake2b(":".join(str(int(p)) for p in parts).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")
