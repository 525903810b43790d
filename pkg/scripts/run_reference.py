"""Run every shipped rate config and print one verdict line each.

    python scripts/run_reference.py [--workers 8] [--out runs]
"""
import argparse
import warnings
from pathlib import Path

from heavyrates.experiments import ExperimentConfig, compare_theory, run

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--workers", type=int, default=8)
    ap.add_argument("--out", default=str(ROOT / "runs"))
    ap.add_argument("names", nargs="*", help="config stems (default: all rate configs)")
    args = ap.parse_args()
    paths = [ROOT / "configs" / f"{n}.json" for n in args.names] or sorted((ROOT / "configs").glob("*.json"))
    for path in paths:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                cfg = ExperimentConfig.load(path)
            except (TypeError, ValueError):
                continue  # not a rate config
        cfg.output_dir = str(Path(args.out) / cfg.name)
        res = run(cfg, workers=args.workers)
        v = compare_theory(res.curve)
        med = "  ".join(f"n={p.n}: {p.median:.3g}" for p in res.curve.points)
        print(f"{cfg.name:<20} {v.status:<8} beta_hat={v.beta_hat:.3f}+-{v.se:.3f} beta_max={v.beta_max:.3f}  {med}")
        for w in caught:
            print(f"{'':<20} warning: {w.message}")


if __name__ == "__main__":
    main()
