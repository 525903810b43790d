"""The rate laboratory: seeded trials, excess-risk curves, exponent fits.

A run draws ``trials`` samples at every n of the grid, fits the ERM and
scores it with a shared risk oracle. Every trial is a pure function of its
derived seed, and the raw table is sorted by (n, trial) before it is
written, so the output does not depend on how many workers ran it.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .bounds import BernsteinProfile, BetaInterval, BoundParams, guaranteed_rate, kmeans_rate, lederer_tail
from .distributions import DistributionSpec, moment, sample, sup_abs_moment
from .quantization import Codebook, OracleMode, RiskOracle, Strategy, erm, trial_seed

__all__ = [
    "SCHEMA_VERSION",
    "OracleSettings",
    "ExperimentConfig",
    "TrialRecord",
    "CurvePoint",
    "RateFit",
    "FitError",
    "RateCurve",
    "Verdict",
    "RunResult",
    "run",
    "run_trial",
    "aggregate",
    "fit_rate",
    "compare_theory",
    "emit",
    "raw_csv",
    "read_raw_csv",
    "lederer_dominance",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
QUANTILES = ("median", "q90", "mean")


@dataclass
class OracleSettings:
    mode: str | None = None  # None picks ExactDiscrete / Analytic / MonteCarlo by law
    oracle_n: int = 10**6
    oracle_seed: int = 0


@dataclass
class ExperimentConfig:
    spec: DistributionSpec
    k: int
    rho: float
    n_grid: list[int]
    trials: int
    r_assumed: float
    name: str = "experiment"
    d: int | None = None
    base_seed: int = 0
    erm_strategy: str = "Exact1D"
    restarts: int = 32
    oracle: OracleSettings = field(default_factory=OracleSettings)
    fit_window: int = 3
    workers: int = 1
    output_dir: str | None = None
    schema: int = SCHEMA_VERSION

    def __post_init__(self):
        if isinstance(self.spec, dict):
            self.spec = DistributionSpec.from_dict(self.spec)
        if isinstance(self.oracle, dict):
            self.oracle = OracleSettings(**self.oracle)
        if self.d is None:
            self.d = self.spec.dim
        if self.d != self.spec.dim:
            raise ValueError(f"d={self.d} does not match the law's dimension {self.spec.dim}")
        if self.schema != SCHEMA_VERSION:
            raise ValueError(f"unsupported config schema {self.schema}")
        self.n_grid = [int(n) for n in self.n_grid]
        if not self.n_grid or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be nonempty and strictly increasing")
        if self.n_grid[0] < 1:
            raise ValueError("sample sizes must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.k < 1 or not self.rho > 0:
            raise ValueError("need k >= 1 and rho > 0")
        Strategy(self.erm_strategy)
        if math.isinf(moment(self.spec, self.r_assumed)):
            warnings.warn(
                f"{self.name}: E||X||^{self.r_assumed} is infinite; the theory comparison is out of its hypotheses",
                stacklevel=2,
            )

    def to_dict(self) -> dict:
        out = asdict(self)
        out["spec"] = self.spec.to_dict()
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        obj = dict(obj)
        if obj.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"config needs \"schema\": {SCHEMA_VERSION}")
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def build_oracle(self) -> RiskOracle:
        o = self.oracle
        return RiskOracle.build(
            self.spec, self.k, self.rho, o.mode, oracle_n=o.oracle_n, oracle_seed=o.oracle_seed
        )

    def theory(self) -> BetaInterval:
        return kmeans_rate(self.r_assumed, self.k, self.d)


@dataclass(frozen=True)
class TrialRecord:
    n: int
    trial: int
    seed: int
    excess: float
    raw_excess: float
    clipped: bool
    risk: float
    status: str
    centers: str


@dataclass(frozen=True)
class CurvePoint:
    n: int
    median: float
    q90: float
    mean: float
    trials: int
    failures: int
    clip_rate: float
    median_se: float


@dataclass(frozen=True)
class RateFit:
    beta_hat: float
    se: float
    used_n: tuple[int, ...]
    excluded_n: tuple[int, ...] = ()


class FitError(ValueError):
    pass


@dataclass
class RateCurve:
    name: str
    points: list[CurvePoint]
    fit: RateFit | None
    theory_beta: float
    theory_r: float
    theory_diagnostic: str = ""
    theory_source: str = "kmeans_rate"
    diagnostics: list[str] = field(default_factory=list)

    @property
    def theory(self) -> BetaInterval:
        return BetaInterval(self.theory_beta, self.theory_r, self.theory_diagnostic)

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.fit is not None:
            out["fit"]["used_n"] = list(self.fit.used_n)
            out["fit"]["excluded_n"] = list(self.fit.excluded_n)
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "RateCurve":
        obj = dict(obj)
        obj["points"] = [CurvePoint(**p) for p in obj["points"]]
        if obj.get("fit") is not None:
            f = dict(obj["fit"])
            f["used_n"] = tuple(f["used_n"])
            f["excluded_n"] = tuple(f.get("excluded_n", ()))
            obj["fit"] = RateFit(**f)
        return cls(**obj)


@dataclass(frozen=True)
class Verdict:
    status: str  # PASS, FAIL or VACUOUS
    beta_hat: float
    se: float
    beta_max: float
    margin: float
    note: str = ""

    @property
    def exit_code(self) -> int:
        return {"PASS": 0, "FAIL": 2, "VACUOUS": 3}[self.status]


@dataclass
class RunResult:
    curve: RateCurve
    records: list[TrialRecord]
    oracle: dict


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def run_trial(config: ExperimentConfig, oracle: RiskOracle, n: int, t: int) -> TrialRecord:
    seed = trial_seed(config.base_seed, n, t)
    try:
        smp = sample(config.spec, n, seed)
        cb = erm(smp, config.k, config.rho, config.erm_strategy, restarts=config.restarts, seed=seed)
        raw, _ = oracle.raw_excess(cb)
        risk = oracle.risk(cb)
        centers = json.dumps([[_fmt(v) for v in row] for row in cb.centers]).replace('"', "")
        return TrialRecord(n, t, seed, max(0.0, raw), raw, raw < 0, risk, "ok", centers)
    except Exception as exc:  # recorded per trial, excluded from quantiles
        log.warning("trial n=%d t=%d failed: %s", n, t, exc)
        return TrialRecord(n, t, seed, math.nan, math.nan, False, math.nan, f"failed: {exc}", "")


def run(config: ExperimentConfig, workers: int | None = None, oracle: RiskOracle | None = None) -> RunResult:
    """Execute every (n, trial) pair and aggregate into a rate curve.

    The raw table is persisted (when ``output_dir`` is set) before any
    aggregation happens.
    """
    workers = config.workers if workers is None else workers
    oracle = oracle or config.build_oracle()
    tasks = [(n, t) for n in config.n_grid for t in range(config.trials)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            records = list(pool.map(lambda nt: run_trial(config, oracle, *nt), tasks))
    else:
        records = [run_trial(config, oracle, n, t) for n, t in tasks]
    records.sort(key=lambda r: (r.n, r.trial))
    out = Path(config.output_dir) if config.output_dir else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "raw.csv").write_text(raw_csv(records))

    diagnostics = []
    if Strategy(config.erm_strategy) is Strategy.LLOYD_MULTISTART:
        diagnostics.append("ERM by Lloyd multistart: empirical risk may not be the global minimum")
    if not oracle.interior:
        diagnostics.append("reference optimum touches the box boundary")
    diagnostics.append("rate constants are fitted empirically, not bounded")
    points = aggregate(records)
    theory = config.theory()
    curve = RateCurve(config.name, points, None, theory.beta_max, theory.r, theory.diagnostic, "kmeans_rate", diagnostics)
    try:
        curve.fit = fit_rate([(p.n, p.median) for p in points], config.fit_window)
        if curve.fit.excluded_n:
            diagnostics.append(f"zero medians excluded from fit at n={list(curve.fit.excluded_n)}")
    except FitError as exc:
        diagnostics.append(f"no fit: {exc}")
    failures = sum(p.failures for p in points)
    if failures:
        diagnostics.append(f"{failures} trials failed")
    odesc = oracle.describe()
    odesc["violations"] = sum(r.clipped for r in records)
    if out is not None:
        emit(curve, "json", out / "curve.json")
        emit(curve, "csv", out / "curve.csv")
        emit(curve, "svg", out / "curve.svg")
        (out / "oracle.json").write_text(json.dumps(odesc, indent=2) + "\n")
        (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2) + "\n")
    return RunResult(curve, records, odesc)


def _median_se(values: np.ndarray) -> float:
    # distribution-free: half-width of the order-statistic 95% interval / 1.96
    m = values.size
    if m < 3:
        return math.nan
    s = np.sort(values)
    half = 1.96 * math.sqrt(m) / 2
    lo = max(0, int(math.floor(m / 2 - half)))
    hi = min(m - 1, int(math.ceil(m / 2 + half)))
    return float((s[hi] - s[lo]) / (2 * 1.96))


def aggregate(records: Sequence[TrialRecord]) -> list[CurvePoint]:
    by_n: dict[int, list[TrialRecord]] = {}
    for r in records:
        by_n.setdefault(r.n, []).append(r)
    points = []
    for n in sorted(by_n):
        rows = by_n[n]
        ok = np.array([r.excess for r in rows if r.status == "ok"])
        clips = sum(r.clipped for r in rows if r.status == "ok")
        if ok.size == 0:
            points.append(CurvePoint(n, math.nan, math.nan, math.nan, 0, len(rows), 0.0, math.nan))
            continue
        points.append(
            CurvePoint(
                n,
                float(np.median(ok)),
                float(np.quantile(ok, 0.9)),
                math.fsum(ok) / ok.size,
                int(ok.size),
                len(rows) - int(ok.size),
                clips / ok.size,
                _median_se(ok),
            )
        )
    return points


def fit_rate(points: Sequence[tuple[float, float]], window: int | None = 3) -> RateFit:
    """Negated least-squares slope of log(median excess) on log n.

    ``window`` keeps the largest ``window`` sample sizes (None keeps all);
    zero medians inside the window are left out and reported.
    """
    pts = sorted((float(n), float(v)) for n, v in points)
    if window is not None:
        pts = pts[-window:]
    used = [(n, v) for n, v in pts if v > 0 and math.isfinite(v)]
    excluded = tuple(int(n) for n, v in pts if not (v > 0 and math.isfinite(v)))
    if len(used) < 3:
        raise FitError(f"need >= 3 positive points, have {len(used)}")
    x = np.log([n for n, _ in used])
    y = np.log([v for _, v in used])
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    dof = len(used) - 2
    se = math.sqrt(float(resid @ resid) / dof / float(np.sum((x - x.mean()) ** 2)))
    return RateFit(float(-slope), se, tuple(int(n) for n, _ in used), excluded)


def compare_theory(
    curve: RateCurve, params: BoundParams | None = None, profile: BernsteinProfile | None = None
) -> Verdict:
    """PASS when beta_hat + 2 se >= beta_max.

    The guarantee bounds excess risk from above, so the empirical decay must
    be at least as fast as the guaranteed exponent. With ``params`` and
    ``profile`` the generic rate replaces the k-means one.
    """
    theory = guaranteed_rate(params, profile) if params is not None and profile is not None else curve.theory
    if theory.empty:
        bh = curve.fit.beta_hat if curve.fit else math.nan
        se = curve.fit.se if curve.fit else math.nan
        return Verdict("VACUOUS", bh, se, theory.beta_max, math.nan, theory.diagnostic)
    if curve.fit is None:
        tail = curve.points[-3:]
        if tail and all(p.median == 0 for p in tail):
            return Verdict("PASS", math.inf, 0.0, theory.beta_max, math.inf, "excess vanished at the largest n")
        return Verdict("FAIL", math.nan, math.nan, theory.beta_max, math.nan, "no rate fit")
    f = curve.fit
    margin = f.beta_hat + 2 * f.se - theory.beta_max
    return Verdict("PASS" if margin >= 0 else "FAIL", f.beta_hat, f.se, theory.beta_max, margin)


# ---------------------------------------------------------------------------
# outputs
# ---------------------------------------------------------------------------

_RAW_FIELDS = ["n", "trial", "seed", "excess", "raw_excess", "clipped", "risk", "status", "centers"]


def raw_csv(records: Sequence[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_RAW_FIELDS)
    for r in records:
        w.writerow([r.n, r.trial, r.seed, _fmt(r.excess), _fmt(r.raw_excess), int(r.clipped),
                    _fmt(r.risk), r.status, r.centers])
    return buf.getvalue()


def read_raw_csv(path) -> list[TrialRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        TrialRecord(int(r["n"]), int(r["trial"]), int(r["seed"]), float(r["excess"]),
                    float(r["raw_excess"]), bool(int(r["clipped"])), float(r["risk"]),
                    r["status"], r["centers"])
        for r in rows
    ]


def _curve_csv(curve: RateCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "quantile", "value", "trials", "failures", "clip_rate"])
    for p in curve.points:
        for q in QUANTILES:
            w.writerow([p.n, q, _fmt(getattr(p, q)), p.trials, p.failures, _fmt(p.clip_rate)])
    return buf.getvalue()


def _curve_svg(curve: RateCurve, width=640, height=420, pad=60) -> str:
    pts = [(p.n, p.median) for p in curve.points if p.median > 0 and math.isfinite(p.median)]
    ns = [p.n for p in curve.points]
    lx = np.log10(ns)
    x0, x1 = float(lx.min()), float(lx.max()) if len(ns) > 1 else float(lx.min()) + 1
    beta = max(curve.theory_beta, 0.0)
    if pts:
        anchor_n = curve.fit.used_n[0] if curve.fit else pts[0][0]
        anchor_v = dict(pts).get(anchor_n, pts[0][1])
    else:
        anchor_n, anchor_v = ns[0], 1.0
    theory = [(n, anchor_v * (n / anchor_n) ** (-beta)) for n in (ns[0], ns[-1])]
    ys = np.log10([v for _, v in pts + theory])
    y0, y1 = float(ys.min()), float(ys.max())
    if y1 - y0 < 1e-9:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def sx(n):
        return pad + (math.log10(n) - x0) / max(x1 - x0, 1e-12) * (width - 2 * pad)

    def sy(v):
        return height - pad - (math.log10(v) - y0) / (y1 - y0) * (height - 2 * pad)

    poly = lambda seq: " ".join(f"{sx(n):.2f},{sy(v):.2f}" for n, v in seq)
    title = f"{curve.name}: median excess risk vs n"
    fit_txt = f"fit beta = {curve.fit.beta_hat:.3f} +- {curve.fit.se:.3f}" if curve.fit else "no fit"
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" fill="none" stroke="#888"/>',
        f'<text x="{width / 2}" y="{pad / 2}" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{width / 2}" y="{height - pad / 3}" text-anchor="middle" font-size="12">log10 n in [{x0:.2f}, {x1:.2f}]</text>',
        f'<text x="{pad}" y="{height - pad / 1.5}" font-size="11">log10 excess in [{y0:.2f}, {y1:.2f}]; {fit_txt}; theory beta = {beta:.3f}</text>',
        f'<polyline class="empirical" fill="none" stroke="#1f77b4" stroke-width="2" points="{poly(pts)}"/>',
        f'<polyline class="theory" fill="none" stroke="#d62728" stroke-dasharray="6,4" points="{poly(theory)}"/>',
        "</svg>",
        "",
    ])


def emit(curve: RateCurve, fmt: str, path) -> Path:
    """Write the curve as csv (one row per n and quantile), json or svg."""
    path = Path(path)
    if fmt == "csv":
        text = _curve_csv(curve)
    elif fmt == "json":
        text = json.dumps(curve.to_dict(), indent=2) + "\n"
    elif fmt == "svg":
        text = _curve_svg(curve)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


# ---------------------------------------------------------------------------
# empirical check of the polynomial tail bound
# ---------------------------------------------------------------------------

def _sup_means(spec_k: DistributionSpec, n: int, reps: int, seed: int, chunk: int) -> np.ndarray:
    out = []
    for c, start in enumerate(range(0, reps, chunk)):
        m = min(chunk, reps - start)
        pts = sample(spec_k, n * m, trial_seed(seed, c)).points
        out.append(np.abs(pts).reshape(m, n, spec_k.dim).mean(axis=1).max(axis=1))
    return np.concatenate(out)


def lederer_dominance(
    spec: DistributionSpec,
    *,
    family_size: int,
    n: int,
    r: float,
    zeta: float = 8.0,
    x_grid: Sequence[float] | None = None,
    replicates: int = 10**5,
    oracle_replicates: int = 10**6,
    seed: int = 0,
    chunk: int = 50_000,
) -> dict:
    """Compare P[V >= (1+zeta) EV + x] with the polynomial tail bound.

    The family is V_j(Z) = |Z_j|, j < family_size, for Z with iid coordinates
    drawn from the 1-D ``spec``; V = max_j P_n V_j. M is taken exactly,
    M^r = E max_j |Z_j|^r, and sigma^2 = E Z^2; EV is estimated from
    ``oracle_replicates`` independent replicates.
    """
    spec_k = spec.with_dim(family_size)
    M = sup_abs_moment(spec, family_size, r) ** (1 / r)
    sigma = math.sqrt(moment(spec, 2.0))
    params = BoundParams(r=r, n=n)
    ev_draws = _sup_means(spec_k, n, oracle_replicates, trial_seed(seed, 1), chunk)
    ev = math.fsum(ev_draws) / ev_draws.size
    v = _sup_means(spec_k, n, replicates, trial_seed(seed, 2), chunk)
    if x_grid is None:
        c = 64 / zeta + zeta + 7
        first = c * (1 / n) ** (1 - 1 / r) * M + 4 * sigma * math.sqrt(1 / n)
        x_grid = first * np.geomspace(1.0, 100.0, 10)
    rows = []
    for x in x_grid:
        tb = lederer_tail(params, M, sigma, zeta, float(x))
        freq = float(np.mean(v >= (1 + zeta) * ev + x))
        se = math.sqrt(freq * (1 - freq) / v.size)
        rows.append({"x": float(x), "bound": tb.value, "argmin_l": tb.argmin_l, "freq": freq, "se": se,
                     "holds": freq <= tb.value + 3 * se})
    return {"spec": spec.to_dict(), "family_size": family_size, "n": n, "r": r, "zeta": zeta,
            "M": M, "sigma": sigma, "EV": ev, "rows": rows}
