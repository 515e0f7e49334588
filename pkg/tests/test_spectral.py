import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import rel
from hallmhd import spectral as sp
from hallmhd.errors import GridMismatch, InvalidField, InvalidOperand, InvalidParameter
from hallmhd.solver import abc_field


def physical(grid, values):
    return sp.transform(sp.PhysicalField(grid, values), "forward")


def test_grid_validation():
    with pytest.raises(InvalidParameter):
        sp.Grid(7)
    with pytest.raises(InvalidParameter):
        sp.Grid(6)
    g = sp.get_grid(16)
    assert g.spectral_shape == (16, 16, 9)
    assert g.dx == pytest.approx(2 * np.pi / 16)


def test_nyquist_and_dealias_masks(grid16):
    k = grid16.k
    assert not grid16.nyquist_mask[k[0] == -8].any()
    assert not grid16.dealias_mask[np.abs(k[1]) >= 6].any()
    assert grid16.dealias_mask[np.all(np.abs(k) <= 5, axis=0)].all()


def test_constant_field_has_only_mean(grid16):
    f = physical(grid16, np.full((3,) + grid16.shape, 2.5))
    c = f.coeffs.copy()
    assert np.allclose(c[:, 0, 0, 0], 2.5)
    c[:, 0, 0, 0] = 0
    assert np.abs(c).max() < 1e-15


def test_single_harmonic_convention(grid16):
    # forward transform carries exp(-i k x) and the 1/N^3 factor
    x = grid16.coords()[0]
    f = physical(grid16, np.stack((np.sin(x), 0 * x, 0 * x)))
    assert f.coeffs[0, 1, 0, 0] == pytest.approx(-0.5j)
    assert f.coeffs[0, -1, 0, 0] == pytest.approx(0.5j)
    f.coeffs[0, 1, 0, 0] = f.coeffs[0, -1, 0, 0] = 0
    assert np.abs(f.coeffs).max() < 1e-15


def test_non_finite_rejected(grid16):
    v = np.zeros((3,) + grid16.shape)
    v[0, 1, 2, 3] = np.nan
    with pytest.raises(InvalidField):
        sp.transform(sp.PhysicalField(grid16, v), "forward")


@given(seed=st.integers(0, 2**32 - 1))
def test_round_trip_and_parseval(seed):
    grid = sp.get_grid(16)
    rng = np.random.default_rng(seed)
    f = sp.random_field(grid, rng, solenoidal=False)
    vals = sp.as_physical(f)
    back = physical(grid, vals)
    assert rel(back.coeffs, f.coeffs) < 1e-12
    l2 = sp.lp_norm(vals, 2)
    assert abs(l2 - f.norm()) / f.norm() < 1e-12
    assert sp.hermitian_residual(f) < 1e-15


def test_partial_of_sine(grid16):
    x = grid16.coords()[0]
    f = physical(grid16, np.stack((np.sin(x), 0 * x, 0 * x)))
    d = sp.as_physical(sp.apply_diff_operator(f, "partial_1"))
    assert np.abs(d[0] - np.cos(x)).max() < 1e-13
    assert np.abs(d[1:]).max() < 1e-15


def test_operator_shape_errors(grid16, rng):
    v = sp.random_field(grid16, rng)
    s = sp.random_field(grid16, rng, vector=False)
    with pytest.raises(InvalidOperand):
        sp.apply_diff_operator(s, "divergence")
    with pytest.raises(InvalidOperand):
        sp.apply_diff_operator(v, "gradient")
    with pytest.raises(InvalidOperand):
        sp.apply_diff_operator(v, "partial_4")
    with pytest.raises(InvalidOperand):
        sp.apply_diff_operator(v, "laplace")


@given(seed=st.integers(0, 2**32 - 1))
def test_curl_grad_and_div_curl_vanish(seed):
    grid = sp.get_grid(16)
    rng = np.random.default_rng(seed)
    phi = sp.random_field(grid, rng, vector=False)
    F = sp.random_field(grid, rng, solenoidal=False)
    g = sp.gradient(phi)
    assert np.abs(sp.curl(g).coeffs).max() <= 1e-12 * np.abs(g.coeffs).max()
    c = sp.curl(F)
    assert np.abs(sp.divergence(c).coeffs).max() <= 1e-12 * np.abs(c.coeffs).max()


def test_abc_is_beltrami(grid16):
    b = physical(grid16, abc_field(grid16))
    assert rel(sp.curl(b).coeffs, b.coeffs) < 1e-12


def test_leray_properties(grid16, rng):
    f = sp.random_field(grid16, rng, solenoidal=False)
    f.coeffs[:, 0, 0, 0] = (1.0, -2.0, 0.5)
    Pf = sp.leray_project(f)
    assert np.abs(sp.divergence(Pf).coeffs).max() < 1e-12
    assert rel(sp.leray_project(Pf).coeffs, Pf.coeffs) < 1e-12
    assert np.allclose(Pf.coeffs[:, 0, 0, 0], (1.0, -2.0, 0.5))
    phi = sp.random_field(grid16, rng, vector=False)
    assert np.abs(sp.leray_project(sp.gradient(phi)).coeffs).max() < 1e-14
    g = sp.random_field(grid16, rng, solenoidal=False)
    assert abs(sp.leray_project(f).inner(g) - f.inner(sp.leray_project(g))) < 1e-12 * f.norm() * g.norm()


def test_fractional_multiplier(grid16, rng):
    k = grid16.k
    m1 = sp.fractional_multiplier(grid16, 1.0)
    assert np.abs(m1 - grid16.k2).max() < 1e-12 * grid16.k2.max()
    m_half = sp.fractional_multiplier(grid16, 0.5)
    assert m_half[2, 0, 0] == pytest.approx(2.0)
    assert m1[0, 0, 0] == 0
    f = sp.random_field(grid16, rng)
    out = sp.fractional_laplacian(f, 0.75)
    expect = np.empty_like(f.coeffs)
    for idx in np.ndindex(grid16.spectral_shape):
        kk = np.sqrt(sum(int(k[j][idx]) ** 2 for j in range(3)))
        expect[(slice(None),) + idx] = kk**1.5 * f.coeffs[(slice(None),) + idx]
    assert rel(out.coeffs, expect) < 1e-13
    with pytest.raises(InvalidParameter):
        sp.fractional_laplacian(f, 0.0)


def test_cross_products(grid16, rng):
    F = sp.random_field(grid16, rng, solenoidal=False)
    assert np.abs(sp.dealiased_product(F, F, "cross").coeffs).max() < 1e-13
    ones = np.ones(grid16.shape)
    e1 = physical(grid16, np.stack((ones, 0 * ones, 0 * ones)))
    e2 = physical(grid16, np.stack((0 * ones, ones, 0 * ones)))
    e3 = sp.dealiased_product(e1, e2, "cross")
    assert e3.coeffs[2, 0, 0, 0] == pytest.approx(1.0)
    G = sp.random_field(grid16, rng, solenoidal=False)
    a = sp.dealiased_product(F, G, "cross")
    b = sp.dealiased_product(G, F, "cross")
    assert rel(a.coeffs, -b.coeffs) < 1e-13
    with pytest.raises(GridMismatch):
        sp.dealiased_product(F, sp.random_field(sp.get_grid(32), rng), "cross")


def test_advect_by_constant_target(grid16, rng):
    u = sp.random_field(grid16, rng)
    c = physical(grid16, np.ones((3,) + grid16.shape))
    assert np.abs(sp.dealiased_product(u, c, "advect").coeffs).max() < 1e-15


def test_advect_matches_convolution_sum():
    grid = sp.get_grid(16)
    rng = np.random.default_rng(3)
    u = sp.random_field(grid, rng, kmax=2.0)
    v = sp.random_field(grid, rng, kmax=2.0)
    out = sp.full_spectrum(sp.dealiased_product(u, v, "advect"))
    cu, cv = sp.full_spectrum(u), sp.full_spectrum(v)
    n = grid.n
    kk = np.fft.fftfreq(n, 1.0 / n).astype(int)
    modes = [(a, b, c) for a in range(n) for b in range(n) for c in range(n)
             if abs(kk[a]) <= 2 and abs(kk[b]) <= 2 and abs(kk[c]) <= 2 and np.abs(cu[:, a, b, c]).max() > 0]
    expect = np.zeros_like(out)
    for p in modes:
        kp = np.array([kk[i] for i in p])
        for q in modes:
            kq = np.array([kk[i] for i in q])
            tgt = tuple((kp + kq) % n)
            # (u . grad) v : u_hat(p)_j * i kq_j * v_hat(q)
            expect[(slice(None),) + tgt] += np.dot(cu[(slice(None),) + p], 1j * kq) * cv[(slice(None),) + q]
    assert rel(out, expect) < 1e-11


def vec_ident_rhs(F, G):
    """(G.grad)F - (div F) G - (F.grad)G + (div G) F, with every product truncated."""
    grid = F.grid
    dF = sp.as_physical(sp.divergence(F))
    dG = sp.as_physical(sp.divergence(G))
    Fx, Gx = sp.as_physical(F), sp.as_physical(G)
    scal = physical(grid, dG * Fx - dF * Gx)
    return sp.dealias(scal) + sp.dealiased_product(G, F, "advect") - sp.dealiased_product(F, G, "advect")


@given(seed=st.integers(0, 2**32 - 1))
def test_vector_identity(seed):
    grid = sp.get_grid(16)
    rng = np.random.default_rng(seed)
    F = sp.random_field(grid, rng, solenoidal=False)
    G = sp.random_field(grid, rng, solenoidal=False)
    lhs = sp.curl(sp.dealiased_product(F, G, "cross"))
    assert rel(lhs.coeffs, vec_ident_rhs(F, G).coeffs) < 1e-10


def test_hall_term_cases(grid16, rng):
    const = physical(grid16, np.ones((3,) + grid16.shape))
    assert np.abs(sp.hall_term(const, 1.0).coeffs).max() == 0
    beltrami = physical(grid16, abc_field(grid16))
    assert np.abs(sp.hall_term(beltrami, 1.0).coeffs).max() < 1e-13
    b = sp.random_field(grid16, rng)
    assert np.abs(sp.hall_term(b, 0.0).coeffs).max() == 0
    h = sp.hall_term(b, 0.3)
    assert np.abs(sp.divergence(h).coeffs).max() < 1e-12 * np.abs(h.coeffs).max() * grid16.n
    # expansion via the vector identity with F = curl b, G = b
    assert rel(h.coeffs, 0.3 * vec_ident_rhs(sp.curl(b), b).coeffs) < 1e-10


@given(seed=st.integers(0, 2**32 - 1))
def test_hall_energy_neutral(seed):
    grid = sp.get_grid(16)
    b = sp.random_field(grid, np.random.default_rng(seed))
    h = sp.hall_term(b, 1.0)
    assert abs(h.inner(b)) < 1e-10 * h.norm() * b.norm()


def test_lp_and_sup_norms(grid16):
    x, y, z = grid16.coords()
    vals = np.stack((np.sin(x), np.cos(y), 0 * z))
    # |v|^2 = sin^2 x + cos^2 y has mean 1
    assert sp.lp_norm(vals, 2) == pytest.approx(np.sqrt(sp.VOLUME))
    assert sp.sup_norm(vals) == pytest.approx(np.sqrt(2.0), rel=1e-3)


def test_thread_count_reproducible(grid32, rng):
    import scipy.fft as sfft

    f = sp.random_field(grid32, rng)
    one = sp.as_physical(f)
    with sfft.set_workers(2):
        two = sp.as_physical(f)
    assert np.abs(one - two).max() <= 1e-13 * np.abs(one).max()
