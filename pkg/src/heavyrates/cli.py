"""Command line: ``heavyrates {rates,bounds,bernstein,net} ...``.

Exit codes: 0 PASS, 2 FAIL, 3 VACUOUS, 1 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import bernstein as bn
from . import bounds as bd
from .distributions import DistributionSpec, envelope_norm
from .experiments import ExperimentConfig, RateCurve, aggregate, compare_theory, emit, fit_rate, read_raw_csv, run
from .nets import build_net, certified_lipschitz, entropy_check
from .quantization import Codebook, RiskOracle, estimate_lipschitz, random_codebooks
from .storage import write_net

EXIT = {"PASS": 0, "FAIL": 2, "VACUOUS": 3}


def _read_json(path: str) -> dict:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return json.loads(text)


def _print(obj) -> None:
    print(json.dumps(obj, indent=2, default=_jsonable))


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if hasattr(x, "tolist"):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def _verdict_dict(v) -> dict:
    return {"verdict": v.status, "beta_hat": v.beta_hat, "se": v.se, "beta_max": v.beta_max,
            "margin": v.margin, "note": v.note}


# ---------------------------------------------------------------------------
# rates
# ---------------------------------------------------------------------------

def cmd_rates_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    res = run(cfg, workers=args.workers)
    verdict = compare_theory(res.curve)
    _print({**_verdict_dict(verdict), "name": cfg.name, "output_dir": cfg.output_dir,
            "diagnostics": res.curve.diagnostics})
    return EXIT[verdict.status]


def cmd_rates_fit(args) -> int:
    records = read_raw_csv(args.input)
    points = aggregate(records)
    theory = bd.kmeans_rate(args.r_assumed, args.k, args.d)
    curve = RateCurve(Path(args.input).stem, points, None, theory.beta_max, theory.r, theory.diagnostic)
    try:
        curve.fit = fit_rate([(p.n, p.median) for p in points], args.window)
    except ValueError as exc:
        curve.diagnostics.append(f"no fit: {exc}")
    verdict = compare_theory(curve)
    if args.output:
        emit(curve, Path(args.output).suffix.lstrip(".") or "json", args.output)
    _print({**_verdict_dict(verdict), "diagnostics": curve.diagnostics})
    return EXIT[verdict.status]


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def _params(obj: dict) -> bd.BoundParams:
    keys = ("r", "C_entropy", "K_entropy", "W", "rho", "delta", "n")
    return bd.BoundParams(**{k: obj[k] for k in keys if k in obj})


def cmd_bounds_eval(args) -> int:
    obj = _read_json(args.input)
    op = obj.get("op", "lederer_tail")
    diagnostics: list[str] = []
    argmin_l = None
    status = "PASS"
    if op == "lederer_tail":
        tb = bd.lederer_tail(_params(obj), obj["M"], obj["sigma"], obj["zeta"], obj["x"],
                             constant=obj.get("constant"))
        value, argmin_l = tb.value, tb.argmin_l
        if value >= 1:
            diagnostics.append("bound is >= 1 (uninformative)")
    elif op == "exponent_A":
        value = bd.exponent_A(obj["l"], _params(obj), obj["beta"], obj["alpha"])
    elif op in ("admissible_beta", "kmeans_rate", "guaranteed_rate"):
        if op == "admissible_beta":
            iv = bd.admissible_beta(_params(obj), obj["alpha"])
        elif op == "kmeans_rate":
            iv = bd.kmeans_rate(obj["r"], obj["k"], obj["d"])
        else:
            iv = bd.guaranteed_rate(_params(obj), bd.BernsteinProfile.from_gammas(obj["gammas"]))
        value = iv.beta_max
        if iv.empty:
            status = "VACUOUS"
            diagnostics.append(iv.diagnostic)
        else:
            argmin_l = iv.witness_l(value)
    elif op == "implicit_bound":
        value = bd.implicit_bound(obj["a"], obj["b"], obj["nu"])
    elif op == "far_field_bernstein":
        ff = bd.far_field_bernstein(obj["W"], obj["r"], obj["alpha"])
        value = ff.B
        diagnostics.append(f"gamma={ff.gamma!r} M={ff.M!r} threshold={ff.threshold!r}")
    else:
        raise ValueError(f"unknown op {op!r}")
    _print({"value": value, "argmin_l": argmin_l, "diagnostics": diagnostics})
    return EXIT[status]


# ---------------------------------------------------------------------------
# bernstein
# ---------------------------------------------------------------------------

def bernstein_check(cfg: dict) -> tuple[bn.BernsteinFit, list[bn.HypothesisProbe], dict]:
    """Probe, fit and check one configuration; also used by the scripts."""
    spec = DistributionSpec.from_dict(cfg["spec"])
    k, rho, r = int(cfg["k"]), float(cfg["rho"]), float(cfg["r"])
    o = cfg.get("oracle", {})
    optima = [Codebook(c, rho) for c in cfg["optima"]] if cfg.get("optima") else None
    oracle = RiskOracle.build(spec, k, rho, o.get("mode"), oracle_n=o.get("oracle_n", 10**6),
                              oracle_seed=o.get("oracle_seed", 0), optima=optima)
    seed = int(cfg.get("seed", 0))
    dists = cfg.get("distances") or np.geomspace(0.01, rho / 2, 20).tolist()
    books = bn.ray_codebooks(oracle.optima, dists, rays=int(cfg.get("rays", 1)), seed=seed)
    books += random_codebooks(k, spec.dim, rho, int(cfg.get("uniform_count", 0)), seed + 1)
    probes = bn.probe(books, spec, oracle, workers=int(cfg.get("workers", 1)))
    W = envelope_norm(spec, rho, r)
    alpha = float(cfg.get("alpha_over_M", 2.0)) * W ** (r / (r - 2))
    ff = bd.far_field_bernstein(W, r, alpha)
    tau = float(cfg["tau"]) if "tau" in cfg else bn.default_tau(oracle.risk_star, alpha / ff.M)
    fit = bn.fit_multiscale(probes, tau, min_count=int(cfg.get("min_count", 20)))
    viol = bn.check_condition(probes, fit.profile(), tau) if fit.pieces else []
    checked, ff_bad = bn.far_field_violations(probes, ff, oracle.risk_star)
    report = {
        "tau": tau,
        "risk_star": oracle.risk_star,
        "violations": len(viol),
        "far_field": {"W": W, "M": ff.M, "alpha": alpha, "B": ff.B, "gamma": ff.gamma,
                      "threshold": ff.threshold, "checked": checked, "violations": ff_bad},
    }
    return fit, probes, report


def cmd_bernstein_check(args) -> int:
    cfg = _read_json(args.config)
    fit, probes, report = bernstein_check(cfg)
    out = Path(args.output_dir or cfg.get("output_dir") or ".")
    out.mkdir(parents=True, exist_ok=True)
    doc = {**fit.to_dict(), **report}
    (out / "fit.json").write_text(json.dumps(doc, indent=2, default=_jsonable) + "\n")
    (out / "probes.csv").write_text(bn.probes_to_csv(probes))
    ok = all(p.satisfied for p in fit.pieces) and not report["violations"] and not report["far_field"]["violations"]
    _print({"verdict": "PASS" if ok else "FAIL", "output_dir": str(out), **doc})
    return 0 if ok else 2


# ---------------------------------------------------------------------------
# nets
# ---------------------------------------------------------------------------

def cmd_net_build(args) -> int:
    L, certified = args.lipschitz_L, None
    if L is None:
        if args.spec is None:
            raise ValueError("give --lipschitz-L or --spec to derive it")
        spec = DistributionSpec.from_dict(_read_json(args.spec))
        L = certified_lipschitz(spec, args.rho)
        certified = math.isfinite(L)
        if not certified:
            # regression estimate, inflated; not a certificate
            oracle = RiskOracle.build(spec, args.k, args.rho, oracle_n=args.oracle_n)
            L = 2 * estimate_lipschitz(oracle)["slope"]
    net = build_net(args.rho, args.d, args.k, args.epsilon, L)
    out = {"mesh": net.mesh, "per_axis": net.per_axis, "members": net.size, "epsilon": net.epsilon,
           "lipschitz_L": L, "lipschitz_certified": certified}
    if args.C is not None:
        ec = entropy_check(net, args.C, args.K)
        out["entropy"] = {"log_count": ec.log_count, "bound": ec.bound, "holds": ec.holds, "K_min": ec.K_min}
    if args.output:
        write_net(args.output, net)
        out["output"] = args.output
    _print(out)
    return 0 if out.get("entropy", {}).get("holds", True) else 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="heavyrates", description="Fast-rate lab for heavy-tailed k-means.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="group", required=True)

    rates = sub.add_parser("rates").add_subparsers(dest="cmd", required=True)
    r = rates.add_parser("run", help="run a rate experiment from a JSON config")
    r.add_argument("-c", "--config", required=True)
    r.add_argument("-w", "--workers", type=int, default=None)
    r.add_argument("-o", "--output-dir")
    r.set_defaults(func=cmd_rates_run)
    f = rates.add_parser("fit", help="refit a raw trial table")
    f.add_argument("-i", "--input", required=True)
    f.add_argument("--window", type=int, default=3)
    f.add_argument("--r-assumed", type=float, required=True)
    f.add_argument("--k", type=int, required=True)
    f.add_argument("--d", type=int, default=1)
    f.add_argument("-o", "--output", help="curve output (.json, .csv or .svg)")
    f.set_defaults(func=cmd_rates_fit)

    b = sub.add_parser("bounds").add_subparsers(dest="cmd", required=True)
    e = b.add_parser("eval", help="evaluate a bound from a JSON parameter object")
    e.add_argument("-i", "--input", default="-")
    e.set_defaults(func=cmd_bounds_eval)

    bs = sub.add_parser("bernstein").add_subparsers(dest="cmd", required=True)
    c = bs.add_parser("check", help="probe, fit and check the Bernstein condition")
    c.add_argument("-c", "--config", required=True)
    c.add_argument("-o", "--output-dir")
    c.set_defaults(func=cmd_bernstein_check)

    n = sub.add_parser("net").add_subparsers(dest="cmd", required=True)
    nb = n.add_parser("build", help="build a grid epsilon-net")
    nb.add_argument("--rho", type=float, required=True)
    nb.add_argument("--d", type=int, default=1)
    nb.add_argument("--k", type=int, default=1)
    nb.add_argument("--epsilon", type=float, required=True)
    nb.add_argument("--lipschitz-L", type=float)
    nb.add_argument("--spec", help="JSON law used to estimate L when --lipschitz-L is absent")
    nb.add_argument("--oracle-n", type=int, default=10**5)
    nb.add_argument("--C", type=float)
    nb.add_argument("--K", type=float, default=1.0)
    nb.add_argument("-o", "--output")
    nb.set_defaults(func=cmd_net_build)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, OverflowError) as exc:
        print(f"heavyrates: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
