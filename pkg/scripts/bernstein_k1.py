"""Probe the two-scale Bernstein condition for k=1 and compare with the closed form.

For k=1 in one dimension, E[(l(c) - l(c*))^2] = m^2 + 4 var(X) m with
m = (c - c*)^2, for any law with a finite fourth moment.

    python scripts/bernstein_k1.py [--config configs/bernstein_k1_gaussian.json]
"""
import argparse
import json
from pathlib import Path

from heavyrates.cli import bernstein_check

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default=str(ROOT / "configs" / "bernstein_k1_gaussian.json"))
    args = ap.parse_args()
    cfg = json.loads(Path(args.config).read_text())
    fit, probes, report = bernstein_check(cfg)
    var = report["risk_star"]
    print(f"tau={report['tau']:.4g}  R*={var:.6g}")
    print(f"{'c':>9} {'excess':>11} {'second':>11} {'closed form':>11} {'z':>6}")
    for p in sorted(probes, key=lambda p: p.excess):
        m = float((p.codebook.flat - cfg["optima"][0][0][0]) @ (p.codebook.flat - cfg["optima"][0][0][0]))
        closed = m * m + 4 * var * m
        z = (p.second_moment - closed) / p.se_second if p.se_second else 0.0
        print(f"{p.codebook.flat[0]:9.4f} {p.excess:11.5g} {p.second_moment:11.5g} {closed:11.5g} {z:6.2f}")
    for piece in fit.pieces:
        print(f"{piece.region}: gamma={piece.gamma:.4f} (raw {piece.gamma_raw:.4f}) B={piece.B:.4g} "
              f"n={piece.count} satisfied={piece.satisfied}")
    ff = report["far_field"]
    print(f"far field: B={ff['B']:.4g} gamma={ff['gamma']:.4f} threshold={ff['threshold']:.3g} "
          f"checked={ff['checked']} violations={len(ff['violations'])}")


if __name__ == "__main__":
    main()
