"""Mesh-convergence study of lambda_2 on the unit disk against the Bessel-root value.

    python3 scripts/convergence_study.py --alpha -0.5 --h 0.08,0.04,0.02,0.01 --order 1 2
"""
import argparse
import math
import time

from robin_stability.ball_spectrum import BallSpec, lambda2_ball
from robin_stability.fem import assemble, solve_lowest
from robin_stability.geometry import disk
from robin_stability.mesh import triangulate


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--alpha", type=float, default=-0.5)
    ap.add_argument("--h", default="0.08,0.04,0.02,0.01", help="comma-separated target mesh sizes")
    ap.add_argument("--order", type=int, nargs="+", default=[1, 2])
    args = ap.parse_args()
    hs = [float(s) for s in args.h.split(",")]
    exact = lambda2_ball(BallSpec(2, 1.0), args.alpha)
    print(f"exact lambda_2 = {exact:.15g}")
    print("order,h_target,h,dof,lambda2,rel_err,observed_order,seconds")
    for order in args.order:
        prev = None
        for h in hs:
            t0 = time.perf_counter()
            mesh = triangulate(disk(1.0), h)
            op = assemble(mesh, args.alpha, order)
            lam = solve_lowest(op, m=4).eigenvalues[1]
            err = abs(lam - exact) / exact
            rate = math.log(prev[1] / err) / math.log(prev[0] / mesh.h) if prev else float("nan")
            prev = (mesh.h, err)
            print(f"{order},{h:g},{mesh.h:.5f},{op.dof_count},{lam:.12e},{err:.3e},{rate:.3f},"
                  f"{time.perf_counter() - t0:.2f}")


if __name__ == "__main__":
    main()
