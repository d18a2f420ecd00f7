"""Deficit-vs-eps sweep for a nearly circular family; writes CSV and a log-log SVG.

    python3 scripts/sharpness_sweep.py --mode 4 --alpha -0.5 --h 0.01 --out sharp.csv --plot sharp.svg
"""
import argparse
import sys
import time
from pathlib import Path

from robin_stability.experiments import FemSettings, sharpness_sweep, write_csv
from robin_stability.cli import sharpness_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--mode", type=int, default=4, help="cosine mode of the perturbation")
    ap.add_argument("--alpha", type=float, default=-0.5)
    ap.add_argument("--eps", default="0.02,0.03,0.05,0.07,0.1")
    ap.add_argument("--h", type=float, default=0.01)
    ap.add_argument("--order", type=int, default=1)
    ap.add_argument("--out", help="CSV path (default: stdout)")
    ap.add_argument("--plot", help="SVG path")
    args = ap.parse_args()
    eps = [float(s) for s in args.eps.split(",")]
    t0 = time.perf_counter()
    table = sharpness_sweep({args.mode: 1.0}, args.alpha, eps, args.h, FemSettings(order=args.order))
    if args.out:
        with open(args.out, "w", newline="") as f:
            write_csv(table.rows, f)
    else:
        write_csv(table.rows, sys.stdout)
    for r in table.rows:
        print(f"eps={r.eps:g}  deficit={r.deficit:.6e}  A/eps={r.asymmetry / r.eps:.4f}", file=sys.stderr)
    print(f"fitted slope {table.fitted_slope:.4f} ({time.perf_counter() - t0:.1f} s)", file=sys.stderr)
    if args.plot:
        Path(args.plot).write_text(sharpness_svg(table.eps, table.deficits, table.fitted_slope, table.fitted_intercept))
    return 2 if table.partial else 0


if __name__ == "__main__":
    sys.exit(main())
