"""Run every config in configs/ (except the deliberately broken one) into out/<name>/."""
import argparse
import sys
from pathlib import Path

from restrictlab.runner import main

ROOT = Path(__file__).resolve().parents[1]


def run_all(out: Path, workers: int) -> int:
    worst = 0
    for cfg in sorted((ROOT / "configs").glob("*.json")):
        if cfg.stem.startswith("bad_"):
            continue
        print(f"== {cfg.stem}")
        code = main(["run", str(cfg), "--out", str(out / cfg.stem), "--workers", str(workers)])
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=ROOT / "out")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    sys.exit(run_all(args.out, args.workers))
