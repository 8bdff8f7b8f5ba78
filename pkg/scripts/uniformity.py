"""Finite-box restriction ratios (p = 2, q = 6, d = 2) across curve families.

* scale family c * exp(t) on (0, 1), c = 2^-6 .. 2^6
* parabola, monomial N = 6 and the flat curve
* flat curve on (a, 0.12) with a -> 0, where omega degenerates
"""
import argparse

from restrictlab.curve import CurveSpec, Exponential, Flat, Monomial, Scaled
from restrictlab.extension import ExponentPair, TestFunction, uniformity_sweep


def show(title, curves, R, grid):
    rep = uniformity_sweep(curves, [TestFunction("constant")], ExponentPair(2, 2), R, grid)
    print(f"{title}: spread {rep['spread']:.3f}")
    for c, row in zip(curves, rep["rows"]):
        print(f"  {c.family!r:45s} ({c.a:g}, {c.b:g})  ratio {row['max_ratio']:.4f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--R", type=float, default=1e3)
    ap.add_argument("--grid", type=int, default=64)
    ap.add_argument("--skip-scale", action="store_true", help="skip the slow c = 2^k family")
    args = ap.parse_args()
    if not args.skip_scale:
        show("scale family", [CurveSpec(2, 0.0, 1.0, Scaled(2.0**k, Exponential())) for k in range(-6, 7)],
             args.R, args.grid)
    show("mixed", [CurveSpec(2, -1.0, 1.0, Monomial(2), degenerate=True),
                   CurveSpec(2, 0.1, 1.0, Monomial(6)), CurveSpec(2, 0.01, 0.12, Flat())], args.R, args.grid)
    show("flat, a -> 0", [CurveSpec(2, a, 0.12, Flat()) for a in (0.04, 0.02, 0.01, 0.005, 0.002)],
         args.R, args.grid)
