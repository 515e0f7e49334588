"""Hall-MHD time integration on the periodic box.

Solves

    u_t + u.grad u - b.grad b + grad p = nu Lap u,                      div u = 0
    b_t + u.grad b - b.grad u + eta curl((curl b) x b) = -mu (-Lap)^alpha b

with an integrating-factor RK4 scheme: the diffusive multipliers
exp(-nu |k|^2 t) and exp(-mu |k|^(2 alpha) t) are applied exactly and the
remaining nonlinear system is advanced with classical RK4.  Pressure is
eliminated by Leray projection.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import warnings
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft
from scipy.integrate import simpson

from . import spectral as sp
from .errors import BlowupDetected, CflError, ConfigError, NumericalFault

log = logging.getLogger(__name__)

INITIAL_KINDS = ("taylor_green", "abc", "random_band")


class RegularityWarning(UserWarning):
    """s is at or below the well-posedness threshold 2 - 2 alpha + 3/2."""


def regularity_threshold(alpha: float, dim: int = 3) -> float:
    return 2.0 - 2.0 * alpha + dim / 2.0


@dataclasses.dataclass(frozen=True)
class SolverConfig:
    nu: float
    mu: float
    alpha: float
    N: int
    dt: float
    t_end: float
    eta: float = 0.0
    s: float = 2.0
    blowup_threshold: Optional[float] = None  # None: 1e6 x initial H^s norm
    seed: int = 0
    initial_kind: str = "taylor_green"
    diag_stride: int = 10
    cfl: float = 0.5

    def __post_init__(self):
        def bad(field, msg):
            raise ConfigError(msg, field=field)

        if not self.nu > 0:
            bad("nu", f"nu must be > 0 (got {self.nu})")
        if not self.mu > 0:
            bad("mu", f"mu must be > 0 (got {self.mu})")
        if not self.alpha > 0.5:
            bad("alpha", f"alpha must satisfy alpha > 1/2 (got {self.alpha})")
        if not self.eta >= 0:
            bad("eta", f"eta must be >= 0 (got {self.eta})")
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 8 and self.N % 2 == 0):
            bad("N", f"N must be an even integer >= 8 (got {self.N})")
        if not self.dt > 0:
            bad("dt", f"dt must be > 0 (got {self.dt})")
        if not self.t_end >= 0:
            bad("t_end", f"t_end must be >= 0 (got {self.t_end})")
        if self.initial_kind not in INITIAL_KINDS:
            bad("initial_kind", f"initial_kind must be one of {INITIAL_KINDS}")
        if self.blowup_threshold is not None and not self.blowup_threshold > 0:
            bad("blowup_threshold", "blowup_threshold must be > 0")
        if not self.diag_stride >= 1:
            bad("diag_stride", "diag_stride must be >= 1")
        if not self.cfl > 0:
            bad("cfl", "cfl must be > 0")
        if self.s <= regularity_threshold(self.alpha):
            warnings.warn(
                f"s={self.s} does not exceed 2 - 2*alpha + n/2 = {regularity_threshold(self.alpha):g}",
                RegularityWarning,
                stacklevel=3,
            )

    @property
    def grid(self) -> sp.Grid:
        return sp.get_grid(self.N)

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass
class State:
    t: float
    u: sp.SpectralField
    b: sp.SpectralField

    @property
    def grid(self) -> sp.Grid:
        return self.u.grid

    def copy(self) -> "State":
        return State(self.t, self.u.copy(), self.b.copy())

    def energy(self) -> float:
        """(||u||^2 + ||b||^2) / 2."""
        return 0.5 * (self.u.inner(self.u) + self.b.inner(self.b))

    def divergence_max(self) -> float:
        return max(
            float(np.abs(sp.divergence(self.u).coeffs).max()),
            float(np.abs(sp.divergence(self.b).coeffs).max()),
        )


# ---------------------------------------------------------------------------
# initial data


def taylor_green(grid: sp.Grid) -> tuple:
    """Taylor-Green velocity with the matching magnetic Taylor-Green field."""
    x, y, z = grid.coords()
    u = np.stack((np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), np.zeros_like(x)))
    b = np.stack(
        (np.cos(x) * np.sin(y) * np.sin(z), np.sin(x) * np.cos(y) * np.sin(z), -2.0 * np.sin(x) * np.sin(y) * np.cos(z))
    )
    return u, b


def abc_field(grid: sp.Grid, A: float = 1.0, B: float = 1.0, C: float = 1.0) -> np.ndarray:
    """Arnold-Beltrami-Childress field, an eigenfield of curl with eigenvalue 1."""
    x, y, z = grid.coords()
    return np.stack((A * np.sin(z) + C * np.cos(y), B * np.sin(x) + A * np.cos(z), C * np.sin(y) + B * np.cos(x)))


def hs_norm(field: sp.SpectralField, s: float) -> float:
    """Inhomogeneous H^s norm, (sum (1 + |k|^2)^s |c_k|^2 (2 pi)^3)^(1/2)."""
    grid = field.grid
    power = np.abs(field.coeffs) ** 2
    if power.ndim == 4:
        power = power.sum(axis=0)
    return float(np.sqrt(sp.VOLUME * np.sum(grid.weights * (1.0 + grid.k2) ** s * power)))


def make_initial(kind: str, grid: sp.Grid, seed: int = 0, s: float = 2.0) -> State:
    """Divergence-free initial pair (u0, b0) at t = 0.

    ``taylor_green``: Taylor-Green velocity and magnetic field.
    ``abc``: Taylor-Green velocity, ABC(1,1,1) magnetic field.
    ``random_band``: Gaussian coefficients on 1 <= |k| <= 4, Leray-projected,
    each field scaled to unit H^s norm.
    """
    if kind == "taylor_green":
        u, b = taylor_green(grid)
    elif kind == "abc":
        u, _ = taylor_green(grid)
        b = abc_field(grid)
    elif kind == "random_band":
        rng = np.random.default_rng(seed)
        fields = []
        for _ in range(2):
            f = sp.random_field(grid, rng, kmin=1.0, kmax=4.0, solenoidal=True)
            fields.append(f * (1.0 / hs_norm(f, s)))
        return State(0.0, *fields)
    else:
        raise ConfigError(f"unknown initial kind {kind!r}", field="initial_kind")
    to_spec = lambda v: sp.dealias(sp.leray_project(sp.PhysicalField(grid, v).to_spectral()))
    return State(0.0, to_spec(u), to_spec(b))


# ---------------------------------------------------------------------------
# right-hand side


def _inverse(grid, coeffs):
    return sfft.irfftn(coeffs, s=grid.shape, axes=(-3, -2, -1), norm="forward")


def _forward(grid, values):
    out = sfft.rfftn(values, axes=(-3, -2, -1), norm="forward")
    out *= grid.dealias_mask
    return out


def nonlinear_terms(u: sp.SpectralField, b: sp.SpectralField, eta: float) -> tuple:
    """Projected nonlinear tendencies (N_u, N_b).

    Uses the conservative forms  -div(u u - b b)  and  curl(u x b - eta (curl b) x b),
    identical to -u.grad u + b.grad b and -u.grad b + b.grad u - eta curl((curl b) x b)
    for solenoidal fields whose products are resolved by the 2/3 rule.
    """
    grid = u.grid
    k = grid.k
    uu = _inverse(grid, u.coeffs)
    bb = _inverse(grid, b.coeffs)
    # symmetric stress u_i u_j - b_i b_j, six independent entries
    pairs = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
    stress = np.stack([uu[i] * uu[j] - bb[i] * bb[j] for i, j in pairs])
    emf = sp.cross_physical(uu, bb)
    if eta:
        jj = _inverse(grid, sp.curl(b).coeffs)
        emf -= eta * sp.cross_physical(jj, bb)
    if not (np.all(np.isfinite(stress)) and np.all(np.isfinite(emf))):
        raise NumericalFault("non-finite values in nonlinear products")
    S = _forward(grid, stress)
    E = _forward(grid, emf)
    T = np.empty((3, 3) + grid.spectral_shape, dtype=complex)
    for n, (i, j) in enumerate(pairs):
        T[i, j] = S[n]
        T[j, i] = S[n]
    div_stress = 1j * np.einsum("jxyz,ijxyz->ixyz", k, T)
    Nu = sp.leray_project(sp.SpectralField(grid, -div_stress))
    Nb = sp.curl(sp.SpectralField(grid, E))
    return Nu, Nb


def linear_multipliers(config: SolverConfig) -> tuple:
    grid = config.grid
    return -config.nu * grid.k2, -config.mu * sp.fractional_multiplier(grid, config.alpha)


def rhs(state: State, config: SolverConfig, include_linear: bool = True) -> tuple:
    """(du/dt, db/dt) for the Hall-MHD system; optionally without the diffusive terms."""
    du, db = nonlinear_terms(state.u, state.b, config.eta)
    if include_linear:
        Lu, Lb = linear_multipliers(config)
        du = du + state.u.multiply(Lu)
        db = db + state.b.multiply(Lb)
    return du, db


# ---------------------------------------------------------------------------
# time stepping


def cfl_limit(state: State, config: SolverConfig) -> float:
    """C (min(dx / (|u|_inf + |b|_inf), dx^2 / (eta |b|_inf)))."""
    grid = state.grid
    umax = sp.sup_norm(_inverse(grid, state.u.coeffs))
    bmax = sp.sup_norm(_inverse(grid, state.b.coeffs))
    limits = [math.inf]
    if umax + bmax > 0:
        limits.append(grid.dx / (umax + bmax))
    if config.eta > 0 and bmax > 0:
        limits.append(grid.dx**2 / (config.eta * bmax))
    return config.cfl * min(limits)


def _kahan(total, comp, increment):
    y = increment - comp
    t = total + y
    return t, (t - total) - y


class Integrator:
    """Integrating-factor RK4 (Lawson) stepper.

    Advances v = exp(-L (t - t_ref)) u.  The factors are evaluated from the
    number of steps since the reference rather than accumulated step by
    step, so a purely diffusive mode is reproduced to a single rounding,
    and v is accumulated with compensated (Kahan) summation.
    The reference moves forward once max|L| (t - t_ref) exceeds
    ``rebase_at``.
    """

    rebase_at = 30.0

    def __init__(self, state: State, config: SolverConfig, threshold: Optional[float] = None,
                 nonlinear: bool = True, check_cfl: bool = True):
        self.config = config
        self.grid = state.grid
        self.threshold = threshold
        self.nonlinear = nonlinear
        self.check_cfl = check_cfl
        self.Lu, self.Lb = linear_multipliers(config)
        self._lmax = max(float(np.abs(self.Lu).max()), float(np.abs(self.Lb).max()))
        self.t0 = state.t
        self.steps = 0
        self.state = state
        self._rebase()

    def _rebase(self):
        self.ref = self.steps
        self.vu = self.state.u.coeffs
        self.vb = self.state.b.coeffs
        self.cu = np.zeros_like(self.vu)
        self.cb = np.zeros_like(self.vb)

    def _factors(self, m: float) -> tuple:
        x = m * self.config.dt
        return np.exp(self.Lu * x), np.exp(self.Lb * x)

    def _N(self, uc, bc) -> tuple:
        nu_, nb_ = nonlinear_terms(sp.SpectralField(self.grid, uc), sp.SpectralField(self.grid, bc), self.config.eta)
        return nu_.coeffs, nb_.coeffs

    def advance(self) -> State:
        h = self.config.dt
        if self.check_cfl and self.nonlinear:
            limit = cfl_limit(self.state, self.config)
            if h > limit:
                raise CflError(h, limit)
        m = self.steps - self.ref
        vu, vb = self.vu, self.vb
        Fu2, Fb2 = self._factors(m + 1)
        if self.nonlinear:
            Fu0, Fb0 = self._factors(m)
            Fu1, Fb1 = self._factors(m + 0.5)
            au, ab = self._N(self.state.u.coeffs, self.state.b.coeffs)
            au, ab = au / Fu0, ab / Fb0
            bu, bb = self._N(Fu1 * (vu + 0.5 * h * au), Fb1 * (vb + 0.5 * h * ab))
            bu, bb = bu / Fu1, bb / Fb1
            cu, cb = self._N(Fu1 * (vu + 0.5 * h * bu), Fb1 * (vb + 0.5 * h * bb))
            cu, cb = cu / Fu1, cb / Fb1
            du, db = self._N(Fu2 * (vu + h * cu), Fb2 * (vb + h * cb))
            du, db = du / Fu2, db / Fb2
            vu, comp_u = _kahan(vu, self.cu, (h / 6.0) * (au + 2.0 * (bu + cu) + du))
            vb, comp_b = _kahan(vb, self.cb, (h / 6.0) * (ab + 2.0 * (bb + cb) + db))
        else:
            comp_u, comp_b = self.cu, self.cb
        u1, b1 = Fu2 * (vu - comp_u), Fb2 * (vb - comp_b)
        t1 = self.t0 + (self.steps + 1) * h
        if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(b1))):
            raise BlowupDetected(t1)
        new = State(t1, sp.SpectralField(self.grid, u1), sp.SpectralField(self.grid, b1))
        if self.threshold is not None:
            norm = math.hypot(hs_norm(new.u, self.config.s), hs_norm(new.b, self.config.s))
            if norm > self.threshold:
                raise BlowupDetected(t1, norm)
        self.steps += 1
        self.vu, self.vb, self.cu, self.cb, self.state = vu, vb, comp_u, comp_b, new
        if self._lmax * (self.steps - self.ref) * h > self.rebase_at:
            self._rebase()
        return new


def step(state: State, config: SolverConfig, threshold: Optional[float] = None,
         nonlinear: bool = True, check_cfl: bool = True) -> State:
    """One integrating-factor RK4 step of size config.dt."""
    return Integrator(state, config, threshold, nonlinear, check_cfl).advance()


# ---------------------------------------------------------------------------
# runs


def dissipation_rate(state: State, config: SolverConfig) -> float:
    """nu ||grad u||^2 + mu ||(-Lap)^(alpha/2) b||^2."""
    grid = state.grid
    pu = np.sum(np.abs(state.u.coeffs) ** 2, axis=0)
    pb = np.sum(np.abs(state.b.coeffs) ** 2, axis=0)
    frac = sp.fractional_multiplier(grid, config.alpha)
    return float(sp.VOLUME * np.sum(grid.weights * (config.nu * grid.k2 * pu + config.mu * frac * pb)))


TAIL_LIMIT = 0.01


def tail_fraction(state: State) -> float:
    """Energy fraction in the top octave of the dealiased band (|k| > N/6)."""
    grid = state.grid
    power = grid.weights * (np.sum(np.abs(state.u.coeffs) ** 2, axis=0) + np.sum(np.abs(state.b.coeffs) ** 2, axis=0))
    total = power.sum()
    return float(power[grid.kmag > grid.n / 6].sum() / total) if total > 0 else 0.0


@dataclasses.dataclass
class Trajectory:
    """States kept at the save stride plus per-step scalar series and diagnostics."""

    config: SolverConfig
    states: list
    times: list
    energy: list
    dissipation: list
    diagnostics: list = dataclasses.field(default_factory=list)
    error: Optional[Exception] = None

    @property
    def final(self) -> State:
        return self.states[-1]


def n_steps(config: SolverConfig) -> int:
    return int(round(config.t_end / config.dt))


def run(initial: State, config: SolverConfig, callback: Optional[Callable] = None,
        diag_stride: Optional[int] = None, save_stride: Optional[int] = None) -> Trajectory:
    """Advance ``initial`` to config.t_end.

    ``callback(state, step_index)`` is called every ``diag_stride`` steps
    (default config.diag_stride) and at the final step; non-None returns are
    collected in ``trajectory.diagnostics``.  States are kept every
    ``save_stride`` steps (default: initial and final only).  On
    BlowupDetected or CflError the partial trajectory is attached to the
    exception as ``exc.trajectory`` and re-raised.
    """
    diag_stride = diag_stride or config.diag_stride
    total = n_steps(config)
    threshold = config.blowup_threshold
    if threshold is None:
        threshold = 1e6 * max(math.hypot(hs_norm(initial.u, config.s), hs_norm(initial.b, config.s)), 1e-300)
    traj = Trajectory(config, [initial], [initial.t], [initial.energy()], [dissipation_rate(initial, config)])

    def emit(st, i):
        if callback is not None:
            rec = callback(st, i)
            if rec is not None:
                traj.diagnostics.append(rec)

    emit(initial, 0)
    state = initial
    integrator = Integrator(initial, config, threshold=threshold)
    for i in range(1, total + 1):
        try:
            state = integrator.advance()
        except (BlowupDetected, CflError) as exc:
            traj.error = exc
            exc.trajectory = traj
            if traj.states[-1] is not state:
                traj.states.append(state)
            log.warning("run stopped at t=%.6g: %s", state.t, exc)
            raise
        traj.times.append(state.t)
        traj.energy.append(state.energy())
        traj.dissipation.append(dissipation_rate(state, config))
        if i % diag_stride == 0 or i == total:
            emit(state, i)
        if (save_stride and i % save_stride == 0) or i == total:
            traj.states.append(state)
    tail = tail_fraction(state)
    if tail > TAIL_LIMIT:
        log.warning("under-resolved: %.3g of the energy sits in the top octave at t=%.6g", tail, state.t)
    return traj


def energy_balance_residual(traj: Trajectory) -> float:
    """|E(T) - E(0) + int_0^T D dt| / E(0), the integral by composite Simpson."""
    t = np.asarray(traj.times)
    D = np.asarray(traj.dissipation)
    E = np.asarray(traj.energy)
    return float(abs(E[-1] - E[0] + simpson(D, x=t)) / E[0])


def pressure(state: State) -> sp.SpectralField:
    """Diagnostic-only pressure from the Poisson equation -Lap p = div(u.grad u - b.grad b)."""
    grid = state.grid
    f = sp.dealiased_product(state.u, state.u, "advect") - sp.dealiased_product(state.b, state.b, "advect")
    k2 = np.where(grid.k2 == 0, 1.0, grid.k2)
    p = 1j * np.sum(grid.k * f.coeffs, axis=0) / k2
    p[0, 0, 0] = 0.0
    return sp.SpectralField(grid, p)
