"""Check the stability inequality on the shipped corpus (or given domain files).

    python3 scripts/run_corpus.py --alpha -0.2,-0.5,-0.8 --h 0.02 --out corpus.csv
"""
import argparse
import sys
import time

from robin_stability.experiments import FemSettings, run_corpus, write_csv
from robin_stability.cli import shipped_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("domains", nargs="*", help="domain files (default: shipped corpus)")
    ap.add_argument("--alpha", default="-0.2,-0.5,-0.8")
    ap.add_argument("--h", type=float, default=0.02)
    ap.add_argument("--order", type=int, default=1)
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args()
    alphas = [float(s) for s in args.alpha.split(",")]
    t0 = time.perf_counter()
    report = run_corpus(args.domains or shipped_corpus(), alphas, args.h, FemSettings(order=args.order))
    if args.out:
        with open(args.out, "w", newline="") as f:
            write_csv(report.rows, f)
    else:
        write_csv(report.rows, sys.stdout)
    print(f"{len(report.rows)} cases, all passed: {report.all_passed}, worst margin {report.worst_margin:.4e}, "
          f"{time.perf_counter() - t0:.1f} s", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
