"""Fourier-lattice fields on the periodic box [0, 2*pi)^3.

Conventions
-----------
Coefficients are Fourier-series coefficients::

    f(x) = sum_k  f_hat(k) exp(i k.x),     f_hat(k) = N^-3 sum_x f(x) exp(-i k.x)

so the forward transform carries the 1/N^3 factor (``norm="forward"`` in
:mod:`scipy.fft`).  A constant field ``c`` has ``f_hat(0) = c`` and
``sin(x1)`` has ``f_hat(+-1, 0, 0) = -+ i/2``.

Only the half spectrum ``k3 >= 0`` is stored (real transforms), so Hermitian
symmetry ``f_hat(-k) = conj(f_hat(k))`` holds by construction away from the
``k3 = 0`` plane and is restored there by the inverse transform.  Nyquist
modes (any component equal to -N/2) are zeroed on every forward transform.

Inner products use the physical L2 pairing over the box, i.e.
``(f, g) = (2 pi)^3 sum_k conj(f_hat) g_hat`` summed over the full lattice.
"""
from __future__ import annotations

import dataclasses
import functools
from typing import Union

import numpy as np
import scipy.fft as sfft

from .errors import GridMismatch, InvalidField, InvalidOperand, InvalidParameter

BOX_LENGTH = 2.0 * np.pi
VOLUME = BOX_LENGTH**3
_AXES = (-3, -2, -1)


@dataclasses.dataclass(frozen=True)
class Grid:
    """Collocation grid with N points per axis and unit wavenumber spacing."""

    n: int
    dim: int = 3

    def __post_init__(self):
        if self.dim != 3:
            raise InvalidParameter("only dim=3 is supported")
        if self.n < 8 or self.n % 2:
            raise InvalidParameter(f"points_per_axis must be an even integer >= 8, got {self.n}")

    @property
    def box_length(self) -> float:
        return BOX_LENGTH

    @property
    def dx(self) -> float:
        return BOX_LENGTH / self.n

    @property
    def shape(self) -> tuple:
        return (self.n, self.n, self.n)

    @property
    def spectral_shape(self) -> tuple:
        return (self.n, self.n, self.n // 2 + 1)

    @functools.cached_property
    def k(self) -> np.ndarray:
        """Integer wavevectors, shape (3, N, N, N//2+1)."""
        full = np.fft.fftfreq(self.n, 1.0 / self.n)
        half = np.fft.rfftfreq(self.n, 1.0 / self.n)
        return np.stack(np.meshgrid(full, full, half, indexing="ij"))

    @functools.cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.k**2, axis=0)

    @functools.cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @functools.cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on retained (non-Nyquist) modes."""
        half = self.n // 2
        k = self.k
        return (k[0] != -half) & (k[1] != -half) & (k[2] != half)

    @functools.cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3 rule: keep modes with every |k_j| < N/3.

        Strict, so that aliases of products of retained modes never land
        on a retained mode (matters when 3 divides N).
        """
        return np.all(3 * np.abs(self.k) < self.n, axis=0) & self.nyquist_mask

    @functools.cached_property
    def weights(self) -> np.ndarray:
        """Multiplicity of each stored mode in the full Hermitian spectrum."""
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        w[..., -1] = 1.0
        return w

    @functools.cached_property
    def max_wavenumber(self) -> float:
        """Largest |k| among retained modes."""
        return float(self.kmag[self.nyquist_mask].max())

    def coords(self) -> np.ndarray:
        x = np.arange(self.n) * self.dx
        return np.stack(np.meshgrid(x, x, x, indexing="ij"))


@functools.lru_cache(maxsize=None)
def get_grid(n: int) -> Grid:
    return Grid(n)


def _check_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatch(f"fields live on different grids (N={a.grid.n} vs N={b.grid.n})")


@dataclasses.dataclass
class PhysicalField:
    """Real samples on the collocation grid; shape (N,N,N) or (3,N,N,N)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[-3:] != self.grid.shape or self.values.ndim not in (3, 4):
            raise InvalidField(f"array shape {self.values.shape} does not match grid N={self.grid.n}")
        if self.values.ndim == 4 and self.values.shape[0] != 3:
            raise InvalidField("vector fields need exactly 3 components")

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == 4

    def to_spectral(self) -> "SpectralField":
        return transform(self, "forward")


@dataclasses.dataclass
class SpectralField:
    """Half-spectrum Fourier coefficients; shape (N,N,N//2+1) or (3,N,N,N//2+1)."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape[-3:] != self.grid.spectral_shape or self.coeffs.ndim not in (3, 4):
            raise InvalidField(f"coefficient shape {self.coeffs.shape} does not match grid N={self.grid.n}")
        if self.coeffs.ndim == 4 and self.coeffs.shape[0] != 3:
            raise InvalidField("vector fields need exactly 3 components")

    @classmethod
    def zeros(cls, grid: Grid, vector: bool = True) -> "SpectralField":
        shape = ((3,) if vector else ()) + grid.spectral_shape
        return cls(grid, np.zeros(shape, dtype=complex))

    @property
    def is_vector(self) -> bool:
        return self.coeffs.ndim == 4

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def to_physical(self) -> PhysicalField:
        return transform(self, "inverse")

    def mean(self) -> np.ndarray:
        return self.coeffs[..., 0, 0, 0].real

    def inner(self, other: "SpectralField") -> float:
        """L2 pairing over the box."""
        _check_grid(self, other)
        prod = np.conj(self.coeffs) * other.coeffs
        if prod.ndim == 4:
            prod = prod.sum(axis=0)
        return float(VOLUME * np.sum(self.grid.weights * prod.real))

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self), 0.0)))

    def multiply(self, multiplier: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * multiplier)

    def __add__(self, other):
        _check_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


Field = Union[PhysicalField, SpectralField]


def transform(field: Field, direction: str = "forward") -> Field:
    """Forward (physical -> spectral) or inverse (spectral -> physical) FFT."""
    grid = field.grid
    if direction == "forward":
        if not isinstance(field, PhysicalField):
            raise InvalidOperand("forward transform expects a PhysicalField")
        if not np.all(np.isfinite(field.values)):
            raise InvalidField("non-finite values in physical field")
        coeffs = sfft.rfftn(field.values, axes=_AXES, norm="forward")
        coeffs *= grid.nyquist_mask
        return SpectralField(grid, coeffs)
    if direction == "inverse":
        if not isinstance(field, SpectralField):
            raise InvalidOperand("inverse transform expects a SpectralField")
        if not np.all(np.isfinite(field.coeffs)):
            raise InvalidField("non-finite spectral coefficients")
        values = sfft.irfftn(field.coeffs, s=grid.shape, axes=_AXES, norm="forward")
        return PhysicalField(grid, values)
    raise InvalidOperand(f"unknown transform direction {direction!r}")


def as_spectral(field: Field) -> SpectralField:
    return field if isinstance(field, SpectralField) else transform(field, "forward")


def as_physical(field: Field) -> np.ndarray:
    return field.values if isinstance(field, PhysicalField) else transform(field, "inverse").values


def full_spectrum(field: SpectralField) -> np.ndarray:
    """Full (unsymmetrized) complex spectrum via a complex FFT of the samples."""
    values = as_physical(field)
    return sfft.fftn(values, axes=_AXES, norm="forward")


def hermitian_residual(field: SpectralField) -> float:
    """max |c(-k) - conj(c(k))| over the full spectrum."""
    c = full_spectrum(field)
    flipped = np.roll(np.flip(c, axis=_AXES), 1, axis=_AXES)
    return float(np.max(np.abs(flipped - np.conj(c))))


# ---------------------------------------------------------------------------
# linear operators


def partial(field: SpectralField, j: int) -> SpectralField:
    """Derivative along axis j (0-based)."""
    return SpectralField(field.grid, 1j * field.grid.k[j] * field.coeffs)


def gradient(field: SpectralField) -> SpectralField:
    if field.is_vector:
        raise InvalidOperand("gradient expects a scalar field")
    return SpectralField(field.grid, 1j * field.grid.k * field.coeffs)


def divergence(field: SpectralField) -> SpectralField:
    if not field.is_vector:
        raise InvalidOperand("divergence expects a vector field")
    return SpectralField(field.grid, 1j * np.sum(field.grid.k * field.coeffs, axis=0))


def curl(field: SpectralField) -> SpectralField:
    if not field.is_vector:
        raise InvalidOperand("curl expects a vector field")
    k, c = field.grid.k, field.coeffs
    out = np.empty_like(c)
    out[0] = 1j * (k[1] * c[2] - k[2] * c[1])
    out[1] = 1j * (k[2] * c[0] - k[0] * c[2])
    out[2] = 1j * (k[0] * c[1] - k[1] * c[0])
    return SpectralField(field.grid, out)


def jacobian(field: SpectralField) -> np.ndarray:
    """Physical samples of d_j F_i, shape (3, 3, N, N, N) indexed [i, j]."""
    if not field.is_vector:
        raise InvalidOperand("jacobian expects a vector field")
    k = field.grid.k
    spec = 1j * k[None, :] * field.coeffs[:, None]
    return sfft.irfftn(spec, s=field.grid.shape, axes=_AXES, norm="forward")


def hessian(field: SpectralField) -> np.ndarray:
    """Physical samples of d_j d_l F_i, shape (3, 3, 3, N, N, N)."""
    if not field.is_vector:
        raise InvalidOperand("hessian expects a vector field")
    k = field.grid.k
    spec = -(k[None, :, None] * k[None, None, :]) * field.coeffs[:, None, None]
    return sfft.irfftn(spec, s=field.grid.shape, axes=_AXES, norm="forward")


_DIFF_OPS = {"gradient": gradient, "divergence": divergence, "curl": curl}


def apply_diff_operator(field: SpectralField, op: str) -> SpectralField:
    """Dispatch ``partial_1``..``partial_3``, ``gradient``, ``divergence`` or ``curl``."""
    if op.startswith("partial_"):
        try:
            j = int(op.split("_", 1)[1]) - 1
        except ValueError:
            raise InvalidOperand(f"bad derivative {op!r}") from None
        if j not in (0, 1, 2):
            raise InvalidOperand(f"bad derivative {op!r}")
        return partial(field, j)
    try:
        return _DIFF_OPS[op](field)
    except KeyError:
        raise InvalidOperand(f"unknown operator {op!r}") from None


def leray_project(field: SpectralField) -> SpectralField:
    """Orthogonal projection onto divergence-free fields; the k=0 mode is untouched."""
    if not field.is_vector:
        raise InvalidOperand("Leray projection expects a vector field")
    grid = field.grid
    k, k2 = grid.k, grid.k2
    safe = np.where(k2 == 0, 1.0, k2)
    kdotf = np.sum(k * field.coeffs, axis=0)
    return SpectralField(grid, field.coeffs - k * (kdotf / safe))


def fractional_multiplier(grid: Grid, alpha: float) -> np.ndarray:
    """|k|^(2 alpha), zero at k=0."""
    if not alpha > 0:
        raise InvalidParameter(f"alpha must be positive, got {alpha}")
    return grid.kmag ** (2.0 * alpha)


def fractional_laplacian(field: SpectralField, alpha: float) -> SpectralField:
    """(-Laplacian)^alpha as the Fourier multiplier |k|^(2 alpha)."""
    return field.multiply(fractional_multiplier(field.grid, alpha))


def dealias(field: SpectralField) -> SpectralField:
    return field.multiply(field.grid.dealias_mask)


# ---------------------------------------------------------------------------
# nonlinear products


def cross_physical(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack(
        (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])
    )


def _forward_dealiased(grid: Grid, values: np.ndarray) -> SpectralField:
    coeffs = sfft.rfftn(values, axes=_AXES, norm="forward")
    coeffs *= grid.dealias_mask
    return SpectralField(grid, coeffs)


def dealiased_product(F: Field, G: Field, kind: str = "cross") -> SpectralField:
    """Pointwise product evaluated on the grid and truncated by the 2/3 rule.

    ``kind="cross"`` gives ``F x G``; ``kind="advect"`` gives ``(F . grad) G``
    component by component.
    """
    _check_grid(F, G)
    grid = F.grid
    if kind == "cross":
        a, b = as_physical(F), as_physical(G)
        if a.ndim != 4 or b.ndim != 4:
            raise InvalidOperand("cross product needs two vector fields")
        out = cross_physical(a, b)
    elif kind == "advect":
        a = as_physical(F)
        if a.ndim != 4:
            raise InvalidOperand("advecting field must be a vector field")
        g = as_spectral(G)
        if g.is_vector:
            out = np.einsum("jxyz,ijxyz->ixyz", a, jacobian(g))
        else:
            grad = as_physical(gradient(g))
            out = np.sum(a * grad, axis=0)
    else:
        raise InvalidOperand(f"unknown product kind {kind!r}")
    if not np.all(np.isfinite(out)):
        raise InvalidField("non-finite values in product")
    return _forward_dealiased(grid, out)


def hall_term(b: SpectralField, eta: float = 1.0) -> SpectralField:
    """eta * curl((curl b) x b) with the product dealiased."""
    if eta == 0:
        return SpectralField.zeros(b.grid)
    return curl(dealiased_product(curl(b), b, "cross")) * eta


# ---------------------------------------------------------------------------
# helpers


def lp_norm(values: np.ndarray, p: float) -> float:
    """L^p norm over the box by collocation quadrature; vectors use the pointwise Euclidean norm."""
    mag = np.abs(values) if values.ndim == 3 else np.sqrt(np.sum(values**2, axis=0))
    if np.isinf(p):
        return float(mag.max())
    cell = VOLUME / mag.size
    return float((cell * np.sum(mag**p)) ** (1.0 / p))


def sup_norm(values: np.ndarray) -> float:
    """Max over the grid of the Euclidean norm across all leading (tensor) axes."""
    flat = values.reshape(-1, *values.shape[-3:])
    return float(np.sqrt(np.sum(flat**2, axis=0)).max())


def band_mask(grid: Grid, kmin: float, kmax: float) -> np.ndarray:
    return (grid.kmag >= kmin) & (grid.kmag <= kmax) & grid.nyquist_mask


def random_field(grid: Grid, rng: np.random.Generator, kmin: float = 1.0, kmax: float = None,
                 solenoidal: bool = True, vector: bool = True, slope: float = 0.0) -> SpectralField:
    """Gaussian random field supported on kmin <= |k| <= kmax.

    Samples white noise in physical space (so Hermitian symmetry is exact),
    keeps the band, applies an optional power-law envelope |k|^slope and
    intersects with the dealiasing cube.
    """
    if kmax is None:
        kmax = grid.n / 3
    shape = ((3,) if vector else ()) + grid.shape
    noise = PhysicalField(grid, rng.standard_normal(shape))
    field = transform(noise, "forward")
    env = band_mask(grid, kmin, kmax) & grid.dealias_mask
    if slope:
        env = env * np.where(grid.kmag > 0, grid.kmag, 1.0) ** slope
    field = field.multiply(env)
    if solenoidal and vector:
        field = leray_project(field)
    return field
