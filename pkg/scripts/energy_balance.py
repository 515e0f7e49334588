"""Energy-balance residual of the Taylor-Green run against the time step.

    python scripts/energy_balance.py [--N 32] [--t-end 0.5] [--dts 2e-3 1e-3 5e-4]

Prints the time-integrated residual |E(T) - E(0) + int D| / E(0), the
worst Hall neutrality pairing and the ratio between successive dts.
"""

import argparse
import time

from hallmhd import diagnostics as dg
from hallmhd import solver as sv


def measure(N, dt, t_end, eta=0.01):
    cfg = sv.SolverConfig(nu=0.1, mu=0.1, alpha=1.0, N=N, dt=dt, t_end=t_end, eta=eta)
    neutral = []
    traj = sv.run(sv.make_initial("taylor_green", cfg.grid), cfg,
                  callback=lambda s, i: neutral.append(dg.hall_neutrality(s)))
    return sv.energy_balance_residual(traj), max(neutral)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=32)
    ap.add_argument("--t-end", type=float, default=0.5)
    ap.add_argument("--dts", type=float, nargs="+", default=[2e-3, 1e-3, 5e-4])
    args = ap.parse_args()
    prev = None
    for dt in args.dts:
        t0 = time.perf_counter()
        res, neutral = measure(args.N, dt, args.t_end)
        ratio = f"{prev / res:8.2f}" if prev else "       -"
        print(f"dt={dt:<8g} residual={res:.3e} ratio={ratio} hall={neutral:.1e} ({time.perf_counter() - t0:.0f} s)")
        prev = res


if __name__ == "__main__":
    main()
