"""Shell-weighted energy budget, exact cancellations and the Riccati horizon.

All pairings use the discrete L2 inner product of the spectral module, so a
pairing of dealiased products is an exact collocation quadrature.  The
weighted pairing sum_q lambda_q^(2s) (Delta_q f, Delta_q g) is evaluated as
(f, M_s g) with the multiplier M_s = sum_q lambda_q^(2s) phi_q^2.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import nnls

from . import littlewood_paley as lp
from . import spectral as sp
from .errors import InvalidParameter
from .io import fmt_float
from .solver import SolverConfig, State, rhs

EPS = 1e-300


def _weighted(profile: lp.DyadicProfile, s: float) -> np.ndarray:
    return profile.sobolev_weight(float(s))


def _lams(profile: lp.DyadicProfile) -> np.ndarray:
    return np.array([lp.lam(q) for q in profile.shells])


# ---------------------------------------------------------------------------
# spectra


def shell_spectrum(state: State, s: float) -> list:
    """(q, lambda_q^(2s) ||u_q||^2, lambda_q^(2s) ||b_q||^2) for q = -1 .. q_max."""
    profile = lp.build_profile(state.grid)
    w = _lams(profile) ** (2 * s)
    eu = w * lp.shell_energies(state.u)
    eb = w * lp.shell_energies(state.b)
    return [(q, float(a), float(c)) for q, a, c in zip(profile.shells, eu, eb)]


def shell_sobolev_energy(state: State, s: float) -> float:
    """X = sum_q lambda_q^(2s) (||u_q||^2 + ||b_q||^2)."""
    return float(sum(a + c for _, a, c in shell_spectrum(state, s)))


# ---------------------------------------------------------------------------
# energy budget


@dataclasses.dataclass(frozen=True)
class EnergyBudget:
    """One evaluation of the shell-weighted energy identity.

    ``diss_u`` and ``diss_b`` are the shell forms nu sum lambda_q^(2s+2)
    ||u_q||^2 and mu sum lambda_q^(2s+2 alpha) ||b_q||^2.  They are only
    comparable to the true dissipation, so the closure uses the exact
    multiplier forms ``diss_u_exact`` and ``diss_b_exact``.
    """

    t: float
    s: float
    diss_u: float
    diss_b: float
    I: tuple
    ddt_shell_energy: float
    closure_residual: float
    diss_u_exact: float
    diss_b_exact: float

    def as_record(self) -> dict:
        rec = {"t": self.t, "s": self.s, "diss_u": self.diss_u, "diss_b": self.diss_b}
        for n, v in enumerate(self.I, start=1):
            rec[f"I{n}"] = v
        rec.update(
            ddt_shell_energy=self.ddt_shell_energy,
            closure_residual=self.closure_residual,
            diss_u_exact=self.diss_u_exact,
            diss_b_exact=self.diss_b_exact,
        )
        return rec


def energy_budget(state: State, config: SolverConfig, s: Optional[float] = None) -> EnergyBudget:
    """Evaluate I1..I5, both dissipation forms and the shell-energy derivative.

    I5 carries the Hall coefficient and the sign with which the Hall term
    enters the induction equation, I5 = -eta sum_q lambda_q^(2s)
    int Delta_q((curl b) x b) . curl b_q dx.
    """
    s = config.s if s is None else s
    grid = state.grid
    profile = lp.build_profile(grid)
    M = _weighted(profile, s)
    u, b = state.u, state.b
    Mu, Mb = u.multiply(M), b.multiply(M)

    I1 = -sp.dealiased_product(u, u, "advect").inner(Mu)
    I2 = sp.dealiased_product(b, b, "advect").inner(Mu)
    I3 = -sp.dealiased_product(u, b, "advect").inner(Mb)
    I4 = sp.dealiased_product(b, u, "advect").inner(Mb)
    if config.eta:
        jxb = sp.dealiased_product(sp.curl(b), b, "cross")
        I5 = -config.eta * jxb.inner(sp.curl(Mb))
    else:
        I5 = 0.0
    terms = (float(I1), float(I2), float(I3), float(I4), float(I5))

    du, db = rhs(state, config)
    ddt = float(du.inner(Mu) + db.inner(Mb))

    frac = sp.fractional_multiplier(grid, config.alpha)
    diss_u_exact = config.nu * u.inner(u.multiply(M * grid.k2))
    diss_b_exact = config.mu * b.inner(b.multiply(M * frac))

    lams = _lams(profile)
    diss_u = config.nu * float(np.sum(lams ** (2 * s + 2) * lp.shell_energies(u)))
    diss_b = config.mu * float(np.sum(lams ** (2 * s + 2 * config.alpha) * lp.shell_energies(b)))

    total_I = sum(terms)
    diss = diss_u_exact + diss_b_exact
    scale = max(diss, abs(total_I), EPS)
    closure = abs(ddt + diss - total_I) / scale
    return EnergyBudget(state.t, float(s), diss_u, diss_b, terms, ddt, float(closure),
                        float(diss_u_exact), float(diss_b_exact))


def hall_neutrality(state: State) -> float:
    """|(curl((curl b) x b), b)| relative to ||curl((curl b) x b)|| ||b||."""
    h = sp.hall_term(state.b, 1.0)
    scale = h.norm() * state.b.norm()
    return abs(h.inner(state.b)) / scale if scale > 0 else 0.0


# ---------------------------------------------------------------------------
# cancellations


@dataclasses.dataclass(frozen=True)
class CancellationReport:
    """Relative residuals of the three exact cancellations.

    Each is scaled by sum_q lambda_q^(2s) int |f||g||h| dx over the factors
    of its integrand.
    """

    t: float
    r312: float
    r512: float
    r212_412: float
    I312: float = 0.0
    I512: float = 0.0
    I212_412: float = 0.0

    def as_record(self) -> dict:
        return dataclasses.asdict(self)


CANCELLATION_CSV_FIELDS = ("t", "r312", "r512", "r212_412", "I312", "I512", "I212_412")


def _phys(f: sp.SpectralField) -> np.ndarray:
    return sp.as_physical(f)


def _mag(values: np.ndarray) -> np.ndarray:
    """Pointwise Euclidean (Frobenius for tensors) magnitude."""
    flat = values.reshape(-1, *values.shape[-3:])
    return np.sqrt(np.sum(flat**2, axis=0))


def _quad(values: np.ndarray) -> float:
    return sp.VOLUME * float(np.mean(values))


def _reassembled(v: sp.SpectralField, q: int, band: int) -> sp.SpectralField:
    """sum_{|p-q| <= band} Delta_q v_p."""
    out = sp.SpectralField.zeros(v.grid)
    for p in range(max(q - band, -1), q + band + 1):
        out = out + lp._block(lp._block(v, p), q)
    return out


def _ratio(value: float, scale: float) -> float:
    return abs(value) / scale if scale > 0 else 0.0


def cancellation_checks(state: State, s: Optional[float] = None, band: int = lp.INTERACTION_BAND) -> CancellationReport:
    """Evaluate I312, I512 and I212 + I412 term by term.

    Each integrand is sampled on the grid and integrated by collocation
    quadrature, which is exact when every factor lies in the dealiasing
    cube.  The shell fields under the transport derivative are the
    reassembled sums sum_{|p-q| <= 2} Delta_q b_p (resp. u_p).
    """
    s = 2.0 if s is None else s
    u, b = state.u, state.b
    profile = lp.build_profile(state.grid)
    I312 = I512 = I2412 = 0.0
    S312 = S512 = S2412 = 0.0
    for q in profile.shells:
        w = lp.lam(q) ** (2 * s)
        uL = _phys(lp._low(u, q - 2))
        bL = _phys(lp._low(b, q - 2))
        uq, bq = lp._block(u, q), lp._block(b, q)
        uq_x, bq_x = _phys(uq), _phys(bq)
        b_re = _reassembled(b, q, band)
        u_re = _reassembled(u, q, band)

        jac_b = sp.jacobian(b_re)
        f312 = np.sum(np.einsum("jxyz,ijxyz->ixyz", uL, jac_b) * bq_x, axis=0)
        I312 -= w * _quad(f312)
        S312 += w * _quad(_mag(uL) * _mag(jac_b) * _mag(bq_x))

        cb, cq = _phys(sp.curl(b_re)), _phys(sp.curl(bq))
        f512 = np.sum(sp.cross_physical(bL, cb) * cq, axis=0)
        I512 += w * _quad(f512)
        S512 += w * _quad(_mag(bL) * _mag(cb) * _mag(cq))

        jac_u = sp.jacobian(u_re)
        f212 = np.sum(np.einsum("jxyz,ijxyz->ixyz", bL, jac_b) * uq_x, axis=0)
        f412 = np.sum(np.einsum("jxyz,ijxyz->ixyz", bL, jac_u) * bq_x, axis=0)
        I2412 += w * (_quad(f212) + _quad(f412))
        S2412 += w * _quad(_mag(bL) * (_mag(jac_b) * _mag(uq_x) + _mag(jac_u) * _mag(bq_x)))
    return CancellationReport(state.t, _ratio(I312, S312), _ratio(I512, S512), _ratio(I2412, S2412),
                              float(I312), float(I512), float(I2412))


def write_cancellation_csv(reports: Iterable[CancellationReport], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CANCELLATION_CSV_FIELDS)
    for r in reports:
        writer.writerow([fmt_float(getattr(r, f)) for f in CANCELLATION_CSV_FIELDS])


# ---------------------------------------------------------------------------
# Riccati horizon


@dataclasses.dataclass(frozen=True)
class RiccatiParams:
    """Right-hand side C1 X^gamma1 + C2 X^gamma2 with X(0) = X0."""

    C1: float
    C2: float
    gamma1: float
    gamma2: float
    X0: float

    def __post_init__(self):
        for name in ("C1", "C2", "gamma1", "gamma2", "X0"):
            v = getattr(self, name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v):
                raise InvalidParameter(f"{name} must be finite, got {v!r}")
        if self.C1 < 0 or self.C2 < 0 or self.C1 + self.C2 == 0:
            raise InvalidParameter("C1, C2 must be >= 0 and not both zero")
        if self.gamma1 <= 1 or self.gamma2 <= 1:
            raise InvalidParameter("gamma1, gamma2 must exceed 1")
        if self.X0 < 0:
            raise InvalidParameter("X0 must be >= 0")

    def replace(self, **kw) -> "RiccatiParams":
        return dataclasses.replace(self, **kw)

    def rate(self, X):
        X = np.asarray(X, dtype=float)
        return self.C1 * X**self.gamma1 + self.C2 * X**self.gamma2


def riccati_time(params: RiccatiParams, factor: float = 2.0, samples: int = 201,
                 rtol: float = 1e-13) -> tuple:
    """Time for X' = C1 X^g1 + C2 X^g2 to grow from X0 to ``factor`` X0.

    Integrated adaptively (DOP853) for z = log(X / X0) in the time unit
    set by the initial growth rate, with a terminal event at z = log(factor).

    Returns
    -------
    T : float
        The horizon; ``inf`` for X0 = 0.
    curve : ndarray, shape (samples, 2)
        Columns t, X(t) sampled uniformly on [0, T].
    """
    if not factor > 1:
        raise InvalidParameter("factor must exceed 1")
    X0 = params.X0
    if X0 == 0:
        return math.inf, np.array([[0.0, 0.0]])
    r1 = params.C1 * X0 ** (params.gamma1 - 1)
    r2 = params.C2 * X0 ** (params.gamma2 - 1)
    unit = 1.0 / (r1 + r2)
    a1, a2 = r1 * unit, r2 * unit
    g1, g2 = params.gamma1 - 1, params.gamma2 - 1
    z_end = math.log(factor)

    def f(_, z):
        return [a1 * math.exp(g1 * z[0]) + a2 * math.exp(g2 * z[0])]

    def hit(_, z):
        return z[0] - z_end

    hit.terminal = True
    hit.direction = 1
    # z' >= 1 at the start and grows, so the event occurs before tau = z_end
    sol = solve_ivp(f, (0.0, 2.0 * z_end), [0.0], method="DOP853", rtol=rtol, atol=1e-15,
                    events=hit, dense_output=True)
    if not sol.t_events[0].size:
        raise InvalidParameter("Riccati integration did not reach the target")
    tau = float(sol.t_events[0][0])
    taus = np.linspace(0.0, tau, samples)
    X = X0 * np.exp(sol.sol(taus)[0])
    X[-1] = factor * X0
    return tau * unit, np.column_stack((taus * unit, X))


def riccati_closed_form(C1: float, gamma1: float, X0: float, t) -> np.ndarray:
    """X(t) = (X0^(1-g) - C1 (g-1) t)^(1/(1-g)) for the single-term equation."""
    t = np.asarray(t, dtype=float)
    base = X0 ** (1 - gamma1) - C1 * (gamma1 - 1) * t
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(base > 0, base ** (1.0 / (1 - gamma1)), np.inf)


def riccati_closed_form_time(C1: float, gamma1: float, X0: float, factor: float = 2.0) -> float:
    """Time for the single-term equation to reach ``factor`` X0."""
    if X0 == 0:
        return math.inf
    return X0 ** (1 - gamma1) * (1 - factor ** (1 - gamma1)) / (C1 * (gamma1 - 1))


def existence_time_estimate(state0: State, config: SolverConfig, s: Optional[float], fitted: RiccatiParams) -> float:
    """Riccati horizon started from the shell Sobolev energy of ``state0``."""
    s = config.s if s is None else s
    X0 = shell_sobolev_energy(state0, s)
    if X0 == 0:
        return math.inf
    return riccati_time(fitted.replace(X0=X0))[0]


def fit_riccati_params(X: Sequence[float], rate: Sequence[float], gamma1: float = 1.5,
                       gamma2: float = 3.0, X0: Optional[float] = None) -> RiccatiParams:
    """Fit C1 X^g1 + C2 X^g2 to observed growth rates and lift it to an envelope.

    Non-negative least squares gives the shape; both constants are then
    scaled by the smallest factor that makes the model dominate every
    sample, so the fitted right-hand side is an upper bound along the data.
    """
    X = np.asarray(X, dtype=float)
    y = np.abs(np.asarray(rate, dtype=float))
    if X.ndim != 1 or X.shape != y.shape or X.size == 0:
        raise InvalidParameter("X and rate must be matching non-empty 1-D sequences")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))) or np.any(X <= 0):
        raise InvalidParameter("samples must be finite with X > 0")
    A = np.column_stack((X**gamma1, X**gamma2))
    coef, _ = nnls(A, y)
    floor = 1e-12 * max(float(np.max(y / A.sum(axis=1))), 1e-300)
    coef = np.maximum(coef, floor)
    model = A @ coef
    lift = max(1.0, float(np.max(y / model)))
    C1, C2 = coef * lift
    return RiccatiParams(float(C1), float(C2), gamma1, gamma2, float(X[0] if X0 is None else X0))


def write_riccati_csv(curve: np.ndarray, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(("t", "X"))
    for t, x in curve:
        writer.writerow((fmt_float(t), fmt_float(x)))
