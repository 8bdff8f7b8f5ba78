"""Minimum of the psi lower-bound ratio over random admissible configurations."""
import argparse
import json

from restrictlab.kernel import lemma1_sweep

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4, 5])
    args = ap.parse_args()
    for d in args.dims:
        for s in args.seeds:
            rep = lemma1_sweep(d, args.n, s)
            print(f"d={d} seed={s} min ratio {rep['min_ratio']:.5g}")
        print("  worst configuration:", json.dumps(rep["argmin"]))
