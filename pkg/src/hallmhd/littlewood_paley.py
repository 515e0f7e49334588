"""Dyadic frequency decomposition, paraproducts and commutator probes.

The cutoff ``chi`` is radial, equal to 1 on [0, 3/4] and 0 on [1, inf),
joined by an exponential smoothstep.  Blocks are

    phi_{-1}(r) = chi(r),   phi_q(r) = chi(r / 2^(q+1)) - chi(r / 2^q),   q >= 0

so block q >= 0 lives on the open annulus 3*2^(q-2) < |k| < 2^(q+1).
"""
from __future__ import annotations

import csv
import dataclasses
import functools
from typing import Iterable, Iterator

import numpy as np

from . import spectral as sp
from .errors import EmptyShell, InvalidParameter, PreconditionViolated, ShellOutOfRange
from .io import fmt_float

# Paraproduct sums run over |p - q| <= INTERACTION_BAND.  Frozen from
# measure_interaction_band(); the suite re-measures it.
INTERACTION_BAND = 2
# bony_decompose residuals are relative to max(||Delta_q(u.grad v)||, BONY_FLOOR ||u.grad v||)
BONY_FLOOR = 1e-3


def _psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def chi(r):
    """Smooth radial cutoff: 1 for r <= 3/4, 0 for r >= 1, monotone between."""
    r = np.asarray(r, dtype=float)
    a = _psi(4.0 * (1.0 - r))
    b = _psi(4.0 * (r - 0.75))
    return a / (a + b)


def phi(q: int, r):
    """Annular profile of block q (q = -1 is the low-frequency ball)."""
    if q < -1:
        return np.zeros_like(np.asarray(r, dtype=float))
    if q == -1:
        return chi(r)
    return chi(np.asarray(r) / 2.0 ** (q + 1)) - chi(np.asarray(r) / 2.0**q)


def lam(q: int) -> float:
    return 2.0**q


def shell_support(q: int) -> tuple:
    """Open radial interval where phi_q > 0."""
    if q == -1:
        return (0.0, 1.0)
    return (3.0 * 2.0 ** (q - 2), 2.0 ** (q + 1))


@dataclasses.dataclass(frozen=True)
class DyadicProfile:
    """Cutoff profile bound to a grid, with cached per-shell multipliers."""

    grid: sp.Grid

    @property
    def q_max(self) -> int:
        # smallest Q with chi(|k| / 2^(Q+1)) = 1 on every retained mode
        q = -1
        while 0.75 * 2.0 ** (q + 1) < self.grid.max_wavenumber:
            q += 1
        return q

    @property
    def shells(self) -> range:
        return range(-1, self.q_max + 1)

    chi = staticmethod(chi)

    def phi(self, q: int, r):
        return phi(q, r)

    @functools.lru_cache(maxsize=None)
    def multiplier(self, q: int) -> np.ndarray:
        if q < -1 or q > self.q_max:
            return np.zeros(self.grid.spectral_shape)
        return phi(q, self.grid.kmag)

    @functools.lru_cache(maxsize=None)
    def low_multiplier(self, Q: int) -> np.ndarray:
        if Q < -1:
            return np.zeros(self.grid.spectral_shape)
        return chi(self.grid.kmag / 2.0 ** (Q + 1))

    @functools.lru_cache(maxsize=None)
    def sobolev_weight(self, s: float) -> np.ndarray:
        """sum_q lambda_q^(2s) phi_q(|k|)^2 per mode."""
        w = np.zeros(self.grid.spectral_shape)
        for q in self.shells:
            w += lam(q) ** (2 * s) * self.multiplier(q) ** 2
        return w


@functools.lru_cache(maxsize=None)
def build_profile(grid: sp.Grid) -> DyadicProfile:
    return DyadicProfile(grid)


def _profile(u: sp.SpectralField) -> DyadicProfile:
    return build_profile(u.grid)


def _check_shell(profile: DyadicProfile, q: int):
    if q < -1 or q > profile.q_max:
        raise ShellOutOfRange(f"shell {q} outside [-1, {profile.q_max}] for N={profile.grid.n}")


def dyadic_block(u: sp.SpectralField, q: int) -> sp.SpectralField:
    """u_q: coefficients scaled by phi_q(|k|)."""
    profile = _profile(u)
    _check_shell(profile, q)
    return u.multiply(profile.multiplier(q))


def _block(u: sp.SpectralField, q: int) -> sp.SpectralField:
    # shells beyond the grid are empty, below -1 do not exist
    return u.multiply(_profile(u).multiplier(q))


def low_pass(u: sp.SpectralField, Q: int) -> sp.SpectralField:
    """u_{<=Q} = sum_{q=-1}^{Q} u_q, i.e. the multiplier chi(|k| / 2^(Q+1)); zero for Q < -1."""
    profile = _profile(u)
    if Q > profile.q_max:
        raise ShellOutOfRange(f"Q={Q} exceeds q_max={profile.q_max}")
    return u.multiply(profile.low_multiplier(Q))


def _low(u: sp.SpectralField, Q: int) -> sp.SpectralField:
    profile = _profile(u)
    return u.multiply(profile.low_multiplier(min(Q, profile.q_max)))


def _tilde(u: sp.SpectralField, p: int) -> sp.SpectralField:
    """sum_{|p'-p| <= 1} u_{p'}."""
    profile = _profile(u)
    m = profile.multiplier(p - 1) + profile.multiplier(p) + profile.multiplier(p + 1)
    return u.multiply(m)


def decompose(u: sp.SpectralField) -> list:
    """All blocks u_{-1} .. u_{q_max}."""
    return [dyadic_block(u, q) for q in _profile(u).shells]


def shell_energies(u: sp.SpectralField) -> np.ndarray:
    """||u_q||_2^2 for q = -1 .. q_max."""
    profile = _profile(u)
    grid = u.grid
    power = np.abs(u.coeffs) ** 2
    if power.ndim == 4:
        power = power.sum(axis=0)
    power = power * grid.weights
    return np.array([sp.VOLUME * np.sum(profile.multiplier(q) ** 2 * power) for q in profile.shells])


def shell_sobolev_norm(u: sp.SpectralField, s: float) -> float:
    """(sum_q lambda_q^(2s) ||u_q||_2^2)^(1/2)."""
    profile = _profile(u)
    lams = np.array([lam(q) for q in profile.shells])
    return float(np.sqrt(np.sum(lams ** (2 * s) * shell_energies(u))))


def direct_sobolev_norm(u: sp.SpectralField, s: float) -> float:
    """(sum_{k != 0} |k|^(2s) |u_hat(k)|^2)^(1/2) in the physical L2 scaling."""
    grid = u.grid
    power = np.abs(u.coeffs) ** 2
    if power.ndim == 4:
        power = power.sum(axis=0)
    nz = grid.k2 > 0
    return float(np.sqrt(sp.VOLUME * np.sum(grid.weights[nz] * grid.kmag[nz] ** (2 * s) * power[nz])))


def norm_equivalence_bounds(grid: sp.Grid, s: float) -> tuple:
    """Exact [c1, c2] with c1 <= shell/direct <= c2 for every zero-mean field on the grid."""
    profile = build_profile(grid)
    mask = grid.nyquist_mask & (grid.k2 > 0)
    ratio = profile.sobolev_weight(s)[mask] / grid.kmag[mask] ** (2 * s)
    return float(np.sqrt(ratio.min())), float(np.sqrt(ratio.max()))


# ---------------------------------------------------------------------------
# paraproducts


def _plateau_edges() -> tuple:
    """(a, b) with chi == 1 exactly on [0, a] and chi == 0 exactly on [b, inf), in floating point."""

    def bisect(pred, lo, hi):
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            lo, hi = (mid, hi) if pred(mid) else (lo, mid)
        return lo, hi

    a, _ = bisect(lambda r: chi(r) == 1.0, 0.75, 1.0)
    _, b = bisect(lambda r: chi(r) > 0.0, 0.75, 1.0)
    return float(a), float(b)


def measure_interaction_band(q_range: Iterable[int] = range(0, 16)) -> int:
    """Largest |p - q| for which a paraproduct term indexed by p can reach block q.

    Uses the floating-point supports of the frozen profile: block p lives in
    (a 2^p, b 2^(p+1)), the low part u_{<=Q} in the ball of radius b 2^(Q+1),
    and the support of a product is bounded by the Minkowski sum of supports.
    """
    a, b = _plateau_edges()

    def annulus(p):
        return (0.0, b) if p == -1 else (a * 2.0**p, b * 2.0 ** (p + 1))

    def ball(Q):
        return b * 2.0 ** (Q + 1)

    band = 0
    qs = list(q_range)
    for q in qs:
        lo_q, hi_q = annulus(q)
        for p in range(-1, max(qs) + 8):
            lo_p, hi_p = annulus(p)
            if p - 2 >= -1:
                lo, hi = max(lo_p - ball(p - 2), 0.0), hi_p + ball(p - 2)
                if hi > lo_q and lo < hi_q:
                    band = max(band, abs(p - q))
            # high-high terms reach every shell below p; only the lower end of the sum is limited
            if p < q and hi_p + annulus(p + 1)[1] > lo_q:
                band = max(band, q - p)
    return band


def block_overlap_radius(q_range: Iterable[int] = range(0, 12)) -> int:
    """Largest |p - q| with Delta_q Delta_p != 0 for the frozen profile."""
    r = np.linspace(0.0, 2.0 ** (max(q_range) + 3), 400001)
    radius = 0
    for q in q_range:
        for p in range(-1, max(q_range) + 3):
            if np.any(phi(q, r) * phi(p, r) > 0):
                radius = max(radius, abs(p - q))
    return radius


@dataclasses.dataclass
class BonyParts:
    lowhigh: sp.SpectralField
    highlow: sp.SpectralField
    highhigh: sp.SpectralField
    residual: float


def _advect(a, b):
    return sp.dealiased_product(a, b, "advect")


def bony_decompose(u: sp.SpectralField, v: sp.SpectralField, q: int, band: int = INTERACTION_BAND) -> BonyParts:
    """Split Delta_q(u . grad v) into low-high, high-low and high-high parts."""
    profile = _profile(u)
    _check_shell(profile, q)
    zero = sp.SpectralField.zeros(u.grid, vector=v.is_vector)
    lowhigh, highlow, highhigh = zero, zero, zero
    for p in range(max(q - band, -1), q + band + 1):
        lowhigh = lowhigh + _block(_advect(_low(u, p - 2), _block(v, p)), q)
        highlow = highlow + _block(_advect(_block(u, p), _low(v, p - 2)), q)
    for p in range(max(q - band, -1), profile.q_max + 1):
        highhigh = highhigh + _block(_advect(_tilde(u, p), _block(v, p)), q)
    whole = _advect(u, v)
    direct = _block(whole, q)
    err = (lowhigh + highlow + highhigh - direct).norm()
    # floor keeps shells with no product content (the mean, for solenoidal u) off roundoff
    ref = max(direct.norm(), BONY_FLOOR * whole.norm())
    residual = err / ref if ref > 0 else 0.0
    return BonyParts(lowhigh, highlow, highhigh, residual)


# ---------------------------------------------------------------------------
# commutators


def commutator_transport(u: sp.SpectralField, v: sp.SpectralField, p: int, q: int) -> sp.SpectralField:
    """[Delta_q, u_{<=p-2} . grad] v_p."""
    profile = _profile(u)
    _check_shell(profile, q)
    _check_shell(profile, p)
    w = _low(u, p - 2)
    vp = _block(v, p)
    return _block(_advect(w, vp), q) - _advect(w, _block(vp, q))


def _is_solenoidal(F: sp.SpectralField, rtol: float = 1e-10) -> bool:
    div = sp.divergence(F).norm()
    scale = np.sqrt(np.sum(F.grid.k2 * np.abs(F.coeffs) ** 2 * F.grid.weights) * sp.VOLUME)
    return div <= rtol * max(scale, np.finfo(float).tiny)


def commutator_cross(F: sp.SpectralField, G: sp.SpectralField, q: int, mode: str = "cross_curl") -> sp.SpectralField:
    """[Delta_q, F x curl] G  (mode ``cross_curl``) or [Delta_q, (curl F) x] G  (``curl_cross``)."""
    _check_shell(_profile(F), q)
    Gq = _block(G, q)
    if mode == "cross_curl":
        if not _is_solenoidal(F):
            raise PreconditionViolated("cross_curl commutator requires div F = 0")
        whole = sp.dealiased_product(F, sp.curl(G), "cross")
        part = sp.dealiased_product(F, sp.curl(Gq), "cross")
    elif mode == "curl_cross":
        cF = sp.curl(F)
        whole = sp.dealiased_product(cF, G, "cross")
        part = sp.dealiased_product(cF, Gq, "cross")
    else:
        raise InvalidParameter(f"unknown commutator mode {mode!r}")
    return _block(whole, q) - part


@dataclasses.dataclass
class CommutatorProbeResult:
    lemma: str
    q: int
    p: int
    seed: int
    norm_lhs: float
    bound_rhs: float

    @property
    def ratio(self) -> float:
        return self.norm_lhs / self.bound_rhs if self.bound_rhs > 0 else 0.0


def trilinear_commutator_pairing(F, G, H, q: int) -> CommutatorProbeResult:
    """|int [Delta_q, (curl F) x] G . curl H dx|  against  ||grad^2 F||_inf ||G||_2 ||H||_2."""
    comm = commutator_cross(F, G, q, mode="curl_cross")
    lhs = abs(comm.inner(sp.curl(H)))
    rhs = sp.sup_norm(sp.hessian(F)) * G.norm() * H.norm()
    return CommutatorProbeResult("le-Hall2", q, q, -1, lhs, rhs)


def bernstein_ratio(u: sp.SpectralField, q: int, r: float = np.inf, s_exp: float = 2.0) -> float:
    """||u_q||_r / (lambda_q^(3(1/s - 1/r)) ||u_q||_s), norms by collocation quadrature."""
    if not (1 <= s_exp <= r):
        raise InvalidParameter("need 1 <= s_exp <= r")
    uq = dyadic_block(u, q)
    if not np.any(uq.coeffs):
        raise EmptyShell(f"block {q} is empty")
    vals = uq.to_physical().values
    exponent = 3.0 * (1.0 / s_exp - (0.0 if np.isinf(r) else 1.0 / r))
    return sp.lp_norm(vals, r) / (lam(q) ** exponent * sp.lp_norm(vals, s_exp))


# ---------------------------------------------------------------------------
# probe ensembles


def resolved_shell_max(grid: sp.Grid) -> int:
    """Largest q whose annulus fits inside the dealiasing cube (2^(q+1) <= N/3)."""
    return int(np.floor(np.log2(grid.n / 3.0))) - 1


def wave_packet(grid: sp.Grid, rng: np.random.Generator, q: int, solenoidal: bool = False,
                centre=None) -> sp.SpectralField:
    """Block-q field with phases aligned at a grid point.

    Bounds of Bernstein and commutator type are attained by concentrated
    fields, so the probes draw phase-aligned packets (random grid-point
    centre, random polarization, 10% amplitude noise) rather than
    random-phase noise, which underestimates the constants at high q.
    """
    if centre is None:
        centre = rng.integers(0, grid.n, size=3) * grid.dx
    phase = np.exp(-1j * np.tensordot(np.asarray(centre, dtype=float), grid.k, axes=1))
    amp = 1.0 + 0.1 * rng.standard_normal(grid.spectral_shape)
    pol = rng.standard_normal(3)
    pol /= np.linalg.norm(pol)
    coeffs = pol[:, None, None, None] * (phi(q, grid.kmag) * amp * phase)
    coeffs *= grid.dealias_mask
    # round trip restores exact Hermitian symmetry on the k3 = 0 plane
    field = sp.transform(sp.SpectralField(grid, coeffs).to_physical(), "forward")
    return sp.leray_project(field) if solenoidal else field


def probe_shells(grid: sp.Grid, lemma: str) -> list:
    """Shells probed for a lemma: non-degenerate and resolved inside the dealiasing cube.

    Commutator probes need a non-constant low-frequency coefficient
    (u_{<=p-2} or a packet two octaves down), hence q >= 2.
    """
    low = 0 if lemma == "bernstein" else 2
    return list(range(low, resolved_shell_max(grid) + 1))


PROBE_LEMMAS = ("le-commu", "le-Hall1", "le-Hall2", "bernstein")


def run_probes(grid: sp.Grid, seeds: Iterable[int], lemmas=PROBE_LEMMAS) -> Iterator[CommutatorProbeResult]:
    """Empirical-constant probes, one record per (lemma, q, p, seed)."""
    for lemma in lemmas:
        for seed in seeds:
            for q in probe_shells(grid, lemma):
                rng = np.random.default_rng([seed, q, sum(map(ord, lemma))])
                yield from _probe_one(grid, lemma, q, seed, rng)


def _probe_one(grid, lemma, q, seed, rng):
    top = resolved_shell_max(grid)
    # all packets of one draw share a centre: the extremal configuration overlaps them
    centre = rng.integers(0, grid.n, size=3) * grid.dx
    if lemma == "le-commu":
        u = sp.random_field(grid, rng, kmin=1.0, kmax=2.0)
        for p in range(max(q - INTERACTION_BAND, 2), min(q + INTERACTION_BAND, top) + 1):
            v = wave_packet(grid, rng, p, centre=centre)
            lhs = commutator_transport(u, v, p, q).norm()
            rhs = sp.sup_norm(sp.jacobian(_low(u, p - 2))) * _block(v, p).norm()
            yield CommutatorProbeResult(lemma, q, p, seed, lhs, rhs)
    elif lemma == "le-Hall1":
        F = wave_packet(grid, rng, q - 2, solenoidal=True, centre=centre)
        G = wave_packet(grid, rng, q, centre=centre)
        bound = sp.sup_norm(sp.jacobian(F)) * G.norm()
        for mode in ("cross_curl", "curl_cross"):
            lhs = commutator_cross(F, G, q, mode).norm()
            yield CommutatorProbeResult(f"{lemma}:{mode}", q, q, seed, lhs, bound)
    elif lemma == "le-Hall2":
        F = wave_packet(grid, rng, q - 2, solenoidal=True, centre=centre)
        G = wave_packet(grid, rng, q, centre=centre)
        H = wave_packet(grid, rng, q, centre=centre)
        yield dataclasses.replace(trilinear_commutator_pairing(F, G, H, q), seed=seed)
    elif lemma == "bernstein":
        u = wave_packet(grid, rng, q, centre=centre)
        yield CommutatorProbeResult(lemma, q, q, seed, bernstein_ratio(u, q, np.inf, 2.0), 1.0)
    else:
        raise InvalidParameter(f"unknown lemma {lemma!r}")


def max_ratio_by_shell(rows: Iterable[CommutatorProbeResult]) -> dict:
    """{lemma: {q: max ratio}}."""
    out: dict = {}
    for r in rows:
        per = out.setdefault(r.lemma, {})
        per[r.q] = max(per.get(r.q, 0.0), r.ratio)
    return out


PROBE_CSV_FIELDS = ("lemma", "q", "p", "seed", "lhs", "rhs", "ratio")


def write_probe_csv(rows: Iterable[CommutatorProbeResult], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(PROBE_CSV_FIELDS)
    for r in rows:
        writer.writerow([r.lemma, r.q, r.p, r.seed, fmt_float(r.norm_lhs), fmt_float(r.bound_rhs), fmt_float(r.ratio)])
