"""Hall-to-MHD convergence sweep.

Every Hall run is advanced in lockstep with the eta = 0 reference from the
same initial data and step, and the squared L2 distance
||u^eta - u||^2 + ||b^eta - b||^2 is sampled every ``diff_stride`` steps.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from typing import Optional, Sequence

import numpy as np

from .errors import BlowupDetected, CflError, ConfigError
from .io import fmt_float
from .solver import Integrator, SolverConfig, State, hs_norm, make_initial, n_steps

log = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class SweepConfig:
    """A base solver configuration (its eta is ignored) and the Hall coefficients to compare."""

    base: SolverConfig
    etas: tuple
    t_end: Optional[float] = None
    diff_stride: int = 1

    def __post_init__(self):
        etas = tuple(float(e) for e in self.etas)
        if len(etas) < 3:
            raise ConfigError("need at least 3 etas", field="etas")
        if any(not (e > 0 and math.isfinite(e)) for e in etas):
            raise ConfigError("etas must be finite and > 0", field="etas")
        if len(set(etas)) != len(etas):
            raise ConfigError("etas must be distinct", field="etas")
        if max(etas) < 10 * min(etas):
            raise ConfigError("etas must span at least one decade", field="etas")
        if not (isinstance(self.diff_stride, (int, np.integer)) and self.diff_stride >= 1):
            raise ConfigError("diff_stride must be an integer >= 1", field="diff_stride")
        t_end = self.base.t_end if self.t_end is None else float(self.t_end)
        if not t_end > 0:
            raise ConfigError("t_end must be > 0", field="t_end")
        object.__setattr__(self, "etas", tuple(sorted(etas, reverse=True)))
        object.__setattr__(self, "t_end", t_end)
        object.__setattr__(self, "base", self.base.replace(eta=0.0, t_end=t_end))


@dataclasses.dataclass
class SweepResult:
    """Per-eta sup-in-time differences and the log-log fits.

    ``diffs`` holds sup_t (||U||^2 + ||B||^2) and ``diffs_unsquared``
    sup_t (||U|| + ||B||); ``fitted_slope`` and ``fit_r2`` refer to the
    squared form.
    """

    etas: list
    diffs: list
    diffs_unsquared: list
    fitted_slope: float = math.nan
    fit_r2: float = math.nan
    slope_unsquared: float = math.nan
    r2_unsquared: float = math.nan
    t_reached: float = 0.0

    def summary(self) -> dict:
        return {
            "slope": self.fitted_slope,
            "r2": self.fit_r2,
            "slope_unsquared": self.slope_unsquared,
            "r2_unsquared": self.r2_unsquared,
            "etas": list(self.etas),
            "diffs": list(self.diffs),
            "diffs_unsquared": list(self.diffs_unsquared),
            "t_end": self.t_reached,
        }


def loglog_fit(x: Sequence[float], y: Sequence[float]) -> tuple:
    """Least-squares slope of log y against log x and its r^2."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icpt)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def _distance(a: State, b: State) -> tuple:
    du = (a.u - b.u).norm()
    db = (a.b - b.b).norm()
    return du * du + db * db, du + db


def sup_differences(base: SolverConfig, etas: Sequence[float], diff_stride: int = 1,
                    initial: Optional[State] = None) -> SweepResult:
    """Lockstep runs of each eta against eta = 0; no fitting, eta = 0 allowed.

    Raises BlowupDetected or CflError from the first failing run, with the
    partial SweepResult attached as ``exc.partial`` and the failing
    coefficient as ``exc.eta``.
    """
    base = base.replace(eta=0.0)
    etas = [float(e) for e in etas]
    if initial is None:
        initial = make_initial(base.initial_kind, base.grid, base.seed, base.s)
    threshold = base.blowup_threshold
    if threshold is None:
        threshold = 1e6 * max(math.hypot(hs_norm(initial.u, base.s), hs_norm(initial.b, base.s)), 1e-300)
    ref = Integrator(initial, base, threshold=threshold)
    runs = [Integrator(initial, base.replace(eta=e), threshold=threshold) for e in etas]
    sup2 = [0.0] * len(etas)
    sup1 = [0.0] * len(etas)
    total = n_steps(base)
    result = SweepResult(etas, sup2, sup1)
    for i in range(1, total + 1):
        current = None
        try:
            current = 0.0
            ref_state = ref.advance()
            for j, r in enumerate(runs):
                current = etas[j]
                state = r.advance()
                if i % diff_stride == 0 or i == total:
                    d2, d1 = _distance(state, ref_state)
                    sup2[j] = max(sup2[j], d2)
                    sup1[j] = max(sup1[j], d1)
        except (BlowupDetected, CflError) as exc:
            exc.eta = current
            exc.partial = result
            log.warning("sweep aborted at step %d (eta=%g): %s", i, current, exc)
            raise
        result.t_reached = ref_state.t
    return result


def convergence_sweep(cfg: SweepConfig, initial: Optional[State] = None) -> SweepResult:
    """Run the sweep and fit the rates over the etas of ``cfg``."""
    result = sup_differences(cfg.base, cfg.etas, cfg.diff_stride, initial)
    order = np.argsort(result.etas)
    etas = np.asarray(result.etas)[order]
    result.etas = [float(e) for e in etas]
    result.diffs = [float(result.diffs[k]) for k in order]
    result.diffs_unsquared = [float(result.diffs_unsquared[k]) for k in order]
    if min(result.diffs) > 0:
        result.fitted_slope, result.fit_r2 = loglog_fit(etas, result.diffs)
        result.slope_unsquared, result.r2_unsquared = loglog_fit(etas, result.diffs_unsquared)
    return result


def is_monotone(result: SweepResult, rtol: float = 0.01) -> bool:
    """Differences nondecreasing in eta, up to a relative tolerance."""
    pairs = sorted(zip(result.etas, result.diffs))
    return all(b >= a * (1 - rtol) for (_, a), (_, b) in zip(pairs, pairs[1:]))


SWEEP_CSV_FIELDS = ("eta", "sup_diff_sq", "sup_diff")


def write_sweep_csv(result: SweepResult, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(SWEEP_CSV_FIELDS)
    for e, d2, d1 in zip(result.etas, result.diffs, result.diffs_unsquared):
        writer.writerow((fmt_float(e), fmt_float(d2), fmt_float(d1)))
