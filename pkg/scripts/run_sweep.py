"""Hall-to-MHD convergence sweep on Taylor-Green data.

    python scripts/run_sweep.py [--N 32] [--dt 2e-3] [--t-end 0.5] [--etas 1e-1 1e-2 1e-3] [--csv out.csv]
"""

import argparse
import sys
import time

from hallmhd import sweep as sw
from hallmhd.solver import SolverConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=32)
    ap.add_argument("--dt", type=float, default=2e-3)
    ap.add_argument("--t-end", type=float, default=0.5)
    ap.add_argument("--etas", type=float, nargs="+", default=[1e-1, 1e-2, 1e-3])
    ap.add_argument("--csv", default=None)
    args = ap.parse_args()
    base = SolverConfig(nu=0.1, mu=0.1, alpha=1.0, N=args.N, dt=args.dt, t_end=args.t_end)
    t0 = time.perf_counter()
    res = sw.convergence_sweep(sw.SweepConfig(base, args.etas))
    for e, d2, d1 in zip(res.etas, res.diffs, res.diffs_unsquared):
        print(f"eta={e:<8g} sup|U|^2+|B|^2={d2:.6e} sup|U|+|B|={d1:.6e}")
    print(f"slope={res.fitted_slope:.4f} r2={res.fit_r2:.7f} "
          f"(unsquared {res.slope_unsquared:.4f}) in {time.perf_counter() - t0:.0f} s")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            sw.write_sweep_csv(res, fh)
    return 0 if 1.8 <= res.fitted_slope <= 2.2 and res.fit_r2 > 0.99 else 1


if __name__ == "__main__":
    sys.exit(main())
