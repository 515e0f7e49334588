"""Command-line entry point ``hallmhd``.

Subcommands: simulate, decompose, budget, probe, sweep, riccati.
Exit status: 0 success, 1 configuration error, 2 numerical fault, 64 usage.
Set HALLMHD_LOG (DEBUG, INFO, WARNING, ...) for log output on stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import math
import os
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.fft as sfft

from . import diagnostics as dg
from . import littlewood_paley as lp
from . import snapshot
from . import spectral as sp
from . import sweep as sw
from .config import parse_config
from .errors import BlowupDetected, CflError, ConfigError, HallMHDError, NumericalFault
from .io import csv_row, dumps, write_ndjson
from .solver import SolverConfig, State, dissipation_rate, make_initial, run, tail_fraction

log = logging.getLogger("hallmhd")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _solver_config(args) -> SolverConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = parse_config(args.config)
    if not isinstance(cfg, SolverConfig):
        raise ConfigError("expected a solver configuration (kind = \"solver\")", field="kind")
    if args.seed_override is not None:
        cfg = cfg.replace(seed=args.seed_override)
    return cfg


def _initial(args, cfg: SolverConfig) -> State:
    if getattr(args, "snapshot", None):
        state, _ = snapshot.load(args.snapshot)
        if state.grid.n != cfg.N:
            raise ConfigError(f"snapshot N={state.grid.n} does not match config N={cfg.N}", field="N")
        return state
    return make_initial(cfg.initial_kind, cfg.grid, cfg.seed, cfg.s)


def _out_dir(args) -> Path:
    path = Path(args.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _record(state: State, step: int, cfg: SolverConfig) -> dict:
    eu = 0.5 * state.u.norm() ** 2
    eb = 0.5 * state.b.norm() ** 2
    return {
        "step": step,
        "t": state.t,
        "energy": eu + eb,
        "energy_u": eu,
        "energy_b": eb,
        "dissipation": dissipation_rate(state, cfg),
        "divergence_max": state.divergence_max(),
        "tail_fraction": tail_fraction(state),
        "shell_spectrum": [list(row) for row in dg.shell_spectrum(state, cfg.s)],
        "budget": dg.energy_budget(state, cfg, cfg.s).as_record(),
    }


def cmd_simulate(args) -> int:
    cfg = _solver_config(args)
    out = _out_dir(args)
    initial = _initial(args, cfg)
    stream = sys.stdout

    def emit(state, step):
        write_ndjson(stream, _record(state, step, cfg))

    try:
        traj = run(initial, cfg, callback=emit)
    except (BlowupDetected, CflError) as exc:
        write_ndjson(stream, {"error": type(exc).__name__, "message": str(exc), "t": getattr(exc, "t", None)})
        partial = getattr(exc, "trajectory", None)
        if partial is not None:
            snapshot.save(out / "final.bin", partial.states[-1], cfg.as_dict())
        raise
    snapshot.save(out / "final.bin", traj.final, cfg.as_dict())
    return EXIT_OK


def cmd_decompose(args) -> int:
    if not args.snapshot:
        raise ConfigError("--snapshot is required")
    state, _ = snapshot.load(args.snapshot)
    sys.stdout.write(csv_row(("q", "u_weighted_energy", "b_weighted_energy")))
    for q, a, b in dg.shell_spectrum(state, args.s):
        sys.stdout.write(csv_row((q, float(a), float(b))))
    return EXIT_OK


def cmd_budget(args) -> int:
    cfg = _solver_config(args)
    s = cfg.s if args.s is None else args.s
    out = _out_dir(args)
    initial = _initial(args, cfg)
    budgets, reports = [], []

    def collect(state, step):
        budgets.append(dg.energy_budget(state, cfg, s))
        reports.append(dg.cancellation_checks(state, s))

    try:
        if args.snapshot:
            collect(initial, 0)
        else:
            run(initial, cfg, callback=collect)
    finally:
        with open(out / "budget.ndjson", "w", encoding="utf-8") as fh:
            for b in budgets:
                write_ndjson(fh, b.as_record())
        with open(out / "cancellations.csv", "w", encoding="utf-8") as fh:
            dg.write_cancellation_csv(reports, fh)
    return EXIT_OK


def cmd_probe(args) -> int:
    base = args.seed_override or 0
    grid = sp.get_grid(args.N)
    out = _out_dir(args)
    rows = list(lp.run_probes(grid, range(base, base + args.seeds), tuple(args.lemma or lp.PROBE_LEMMAS)))
    with open(out / "probes.csv", "w", encoding="utf-8") as fh:
        lp.write_probe_csv(rows, fh)
    maxima = lp.max_ratio_by_shell(rows)
    summary = {"N": args.N, "seeds": args.seeds,
               "max_ratio": {lem: {str(q): v for q, v in sorted(per.items())} for lem, per in sorted(maxima.items())}}
    text = dumps(summary) + "\n"
    (out / "probe_summary.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = parse_config(args.config)
    if not isinstance(cfg, sw.SweepConfig):
        raise ConfigError("expected a sweep configuration (kind = \"sweep\")", field="kind")
    if args.seed_override is not None:
        cfg = sw.SweepConfig(cfg.base.replace(seed=args.seed_override), cfg.etas, cfg.t_end, cfg.diff_stride)
    out = _out_dir(args)
    try:
        result = sw.convergence_sweep(cfg)
        summary = result.summary()
    except (BlowupDetected, CflError) as exc:
        result = exc.partial
        summary = result.summary()
        summary["aborted_eta"] = exc.eta
        _write_sweep(out, result, summary)
        raise
    _write_sweep(out, result, summary)
    sys.stdout.write(dumps(summary) + "\n")
    return EXIT_OK


def _write_sweep(out: Path, result, summary: dict) -> None:
    with open(out / "sweep.csv", "w", encoding="utf-8") as fh:
        sw.write_sweep_csv(result, fh)
    (out / "sweep_summary.json").write_text(dumps(summary) + "\n", encoding="utf-8")


def cmd_riccati(args) -> int:
    cfg = _solver_config(args)
    s = cfg.s if args.s is None else args.s
    out = _out_dir(args)
    initial = _initial(args, cfg)
    X, rate, times = [], [], []

    def collect(state, step):
        b = dg.energy_budget(state, cfg, s)
        X.append(dg.shell_sobolev_energy(state, s))
        rate.append(2.0 * sum(b.I))
        times.append(state.t)

    run(initial, cfg, callback=collect)
    fitted = dg.fit_riccati_params(X, rate, args.gamma1, args.gamma2)
    T = dg.existence_time_estimate(initial, cfg, s, fitted)
    doubled = [t for t, x in zip(times, X) if x >= 2 * X[0]]
    if math.isfinite(T):
        _, curve = dg.riccati_time(fitted.replace(X0=X[0]))
    else:
        curve = np.array([[0.0, 0.0]])
    with open(out / "riccati.csv", "w", encoding="utf-8") as fh:
        dg.write_riccati_csv(curve, fh)
    summary = {"X0": X[0], "C1": fitted.C1, "C2": fitted.C2, "gamma1": fitted.gamma1, "gamma2": fitted.gamma2,
               "T_guaranteed": T, "T_observed": doubled[0] if doubled else math.inf}
    sys.stdout.write(dumps(summary) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hallmhd", description="Hall-MHD spectral solver and estimate diagnostics.")
    parser.add_argument("--threads", type=int, default=None, help="FFT worker threads")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, config=True, snap=False, s=False):
        if config:
            p.add_argument("--config", help="run configuration file")
        if snap:
            p.add_argument("--snapshot", help="snapshot file with the state to use")
        if s:
            p.add_argument("--s", type=float, default=None, help="Sobolev weight (default: config s)")
        p.add_argument("--out-dir", default=".", help="directory for output files")
        p.add_argument("--seed-override", type=int, default=None)
        p.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="FFT worker threads")

    p = sub.add_parser("simulate", help="run the solver, stream NDJSON diagnostics, write final.bin")
    common(p, snap=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decompose", help="weighted shell energies of a snapshot as CSV")
    common(p, config=False, snap=True)
    p.add_argument("--s", type=float, default=2.0)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("budget", help="energy budget and cancellation series")
    common(p, snap=True, s=True)
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("probe", help="empirical constants of the commutator and Bernstein bounds")
    common(p, config=False)
    p.add_argument("--N", type=int, default=32)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--lemma", action="append", choices=lp.PROBE_LEMMAS)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("sweep", help="Hall-to-MHD convergence sweep")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("riccati", help="fit the Riccati bound along a run and report its horizon")
    common(p, snap=True, s=True)
    p.add_argument("--gamma1", type=float, default=1.5)
    p.add_argument("--gamma2", type=float, default=3.0)
    p.set_defaults(func=cmd_riccati)
    return parser


def _configure_logging() -> None:
    level = os.environ.get("HALLMHD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    threads = getattr(args, "threads", None)
    workers = sfft.set_workers(threads) if threads else contextlib.nullcontext()
    try:
        with workers, warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFault, BlowupDetected, CflError, ArithmeticError) as exc:
        print(f"numerical fault: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except HallMHDError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
