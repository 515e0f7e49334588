"""Measure and freeze the constants the acceptance suite compares against.

Writes tests/data/norm_equivalence.json (shell/direct norm-ratio intervals
on the N=32 grid) and tests/data/probe_ceilings.json (per-lemma maxima of
the probe ratios at N=48 over 100 seeds, with a 25% margin).

    python scripts/freeze_constants.py [--seeds 100] [--skip-probes]
"""

import argparse
import json
import time
from pathlib import Path

from hallmhd import littlewood_paley as lp
from hallmhd import spectral as sp

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"
MARGIN = 1.25


def norm_intervals(n=32):
    grid = sp.get_grid(n)
    out = {"N": n, "intervals": {}}
    for s in (0, 1, 2, 3):
        c1, c2 = lp.norm_equivalence_bounds(grid, float(s))
        out["intervals"][str(s)] = [c1, c2]
    return out


def probe_ceilings(n=48, seeds=100):
    grid = sp.get_grid(n)
    rows = list(lp.run_probes(grid, range(seeds)))
    maxima = lp.max_ratio_by_shell(rows)
    return {
        "N": n,
        "seeds": seeds,
        "margin": MARGIN,
        "measured": {lem: {str(q): v for q, v in sorted(per.items())} for lem, per in sorted(maxima.items())},
        "ceiling": {lem: MARGIN * max(per.values()) for lem, per in sorted(maxima.items())},
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--skip-probes", action="store_true")
    args = ap.parse_args()
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "norm_equivalence.json").write_text(json.dumps(norm_intervals(), indent=2) + "\n")
    print("wrote", DATA / "norm_equivalence.json")
    if not args.skip_probes:
        t0 = time.perf_counter()
        ceilings = probe_ceilings(seeds=args.seeds)
        (DATA / "probe_ceilings.json").write_text(json.dumps(ceilings, indent=2) + "\n")
        print(f"wrote {DATA / 'probe_ceilings.json'} in {time.perf_counter() - t0:.0f} s")
        for lem, per in ceilings["measured"].items():
            vals = list(per.values())
            print(f"  {lem:22s} max/min over q = {max(vals) / min(vals):.3f}")


if __name__ == "__main__":
    main()
