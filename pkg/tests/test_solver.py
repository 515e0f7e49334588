import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import rel
from hallmhd import solver as sv
from hallmhd import spectral as sp
from hallmhd.errors import BlowupDetected, CflError, ConfigError


def cfg(**kw):
    base = dict(nu=0.1, mu=0.1, alpha=1.0, N=16, dt=1e-3, t_end=0.01)
    base.update(kw)
    return sv.SolverConfig(**base)


def field(grid, values):
    return sp.transform(sp.PhysicalField(grid, values), "forward")


@pytest.mark.parametrize(
    "bad, field_name",
    [({"nu": 0.0}, "nu"), ({"mu": -1.0}, "mu"), ({"alpha": 0.4}, "alpha"), ({"alpha": 0.5}, "alpha"),
     ({"N": 15}, "N"), ({"dt": 0.0}, "dt"), ({"eta": -0.1}, "eta"), ({"initial_kind": "vortex"}, "initial_kind")],
)
def test_config_rejects(bad, field_name):
    with pytest.raises(ConfigError) as exc:
        cfg(**bad)
    assert exc.value.field == field_name


def test_alpha_message_cites_threshold():
    with pytest.raises(ConfigError, match="alpha > 1/2"):
        cfg(alpha=0.4)


def test_regularity_warning():
    with pytest.warns(sv.RegularityWarning):
        cfg(alpha=0.6, s=2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cfg(alpha=1.0, s=2.0)
    assert sv.regularity_threshold(1.0) == 1.5


def test_initial_data(grid16):
    tg = sv.make_initial("taylor_green", grid16)
    assert tg.divergence_max() < 1e-13
    ab = sv.make_initial("abc", grid16)
    assert rel(sp.curl(ab.b).coeffs, ab.b.coeffs) < 1e-12
    r1 = sv.make_initial("random_band", grid16, seed=4)
    r2 = sv.make_initial("random_band", grid16, seed=4)
    assert np.array_equal(r1.u.coeffs, r2.u.coeffs) and np.array_equal(r1.b.coeffs, r2.b.coeffs)
    assert sv.hs_norm(r1.u, 2.0) == pytest.approx(1.0)
    assert r1.divergence_max() < 1e-13
    assert np.all(r1.u.coeffs[:, grid16.kmag > 4] == 0)


def test_rhs_rest_state(grid16):
    z = sp.SpectralField.zeros(grid16)
    du, db = sv.rhs(sv.State(0.0, z, z), cfg(eta=0.1))
    assert np.abs(du.coeffs).max() == 0 and np.abs(db.coeffs).max() == 0


def test_rhs_navier_stokes_limit(grid16, rng):
    u = sp.random_field(grid16, rng)
    z = sp.SpectralField.zeros(grid16)
    c = cfg(eta=0.1)
    du, db = sv.rhs(sv.State(0.0, u, z), c)
    assert np.abs(db.coeffs).max() == 0
    expect = -sp.leray_project(sp.dealiased_product(u, u, "advect")) + u.multiply(-c.nu * grid16.k2)
    assert rel(du.coeffs, expect.coeffs) < 1e-12


def test_rhs_matches_advective_form(grid16, rng):
    u, b = sp.random_field(grid16, rng), sp.random_field(grid16, rng)
    c = cfg(eta=0.05)
    du, db = sv.rhs(sv.State(0.0, u, b), c, include_linear=False)
    adv = lambda f, g: sp.dealiased_product(f, g, "advect")
    eu = sp.leray_project(adv(b, b) - adv(u, u))
    eb = adv(b, u) - adv(u, b) - sp.hall_term(b, c.eta)
    assert rel(du.coeffs, eu.coeffs) < 1e-12
    assert rel(db.coeffs, eb.coeffs) < 1e-12
    assert np.abs(sp.divergence(du).coeffs).max() < 1e-12
    assert np.abs(sp.divergence(db).coeffs).max() < 1e-12


def test_rhs_linear_in_eta(grid16, rng):
    u, b = sp.random_field(grid16, rng), sp.random_field(grid16, rng)
    st = sv.State(0.0, u, b)
    _, d0 = sv.rhs(st, cfg(eta=0.0))
    _, d1 = sv.rhs(st, cfg(eta=1e-6))
    diff = (d1 - d0).norm()
    assert diff == pytest.approx(1e-6 * sp.hall_term(b, 1.0).norm(), rel=1e-6)


def test_pure_diffusion_step_exact(grid16):
    x = grid16.coords()[0]
    u = field(grid16, np.stack((0 * x, np.cos(x), 0 * x)))
    st = sv.State(0.0, u, sp.SpectralField.zeros(grid16))
    out = sv.step(st, cfg(dt=0.01), nonlinear=False)
    assert rel(out.u.coeffs, u.coeffs * math.exp(-0.001)) < 1e-14


def test_time_order(grid16):
    c = cfg(eta=0.02, t_end=0.2)
    init = sv.make_initial("random_band", grid16, seed=1)
    init = sv.State(0.0, init.u * 3.0, init.b * 3.0)
    finals = [sv.run(init, c.replace(dt=dt)).final for dt in (0.02, 0.01, 0.005)]
    e1 = (finals[0].u - finals[1].u).norm() + (finals[0].b - finals[1].b).norm()
    e2 = (finals[1].u - finals[2].u).norm() + (finals[1].b - finals[2].b).norm()
    order = math.log2(e1 / e2)
    assert 3.5 <= order <= 4.5


def test_mhd_symmetry(grid16, rng):
    u = sp.random_field(grid16, rng, kmax=4)
    traj = sv.run(sv.State(0.0, u, u.copy()), cfg(eta=0.0, t_end=0.05, dt=5e-3), save_stride=1)
    for s in traj.states:
        assert rel(s.u.coeffs, s.b.coeffs) < 1e-12


def test_cfl_error(grid16):
    init = sv.make_initial("taylor_green", grid16)
    with pytest.raises(CflError) as exc:
        sv.step(init, cfg(dt=1.0))
    assert 0 < exc.value.suggested_dt < 1.0


def test_blowup_keeps_partial_results(grid16):
    init = sv.make_initial("taylor_green", grid16)
    c = cfg(blowup_threshold=1e-3, t_end=0.005)
    with pytest.raises(BlowupDetected) as exc:
        sv.run(init, c)
    assert exc.value.trajectory is not None
    assert exc.value.trajectory.states[0] is init


def test_empty_run(grid16):
    init = sv.make_initial("taylor_green", grid16)
    traj = sv.run(init, cfg(t_end=0.0))
    assert traj.states == [init] and traj.times == [0.0]


def test_replay_is_identical(grid16):
    c = cfg(initial_kind="random_band", seed=9, eta=0.01, t_end=0.01)
    rec = lambda s, i: (s.t, s.energy())
    a = sv.run(sv.make_initial(c.initial_kind, c.grid, c.seed), c, callback=rec, diag_stride=2)
    b = sv.run(sv.make_initial(c.initial_kind, c.grid, c.seed), c, callback=rec, diag_stride=2)
    assert a.diagnostics == b.diagnostics
    assert np.array_equal(a.final.u.coeffs, b.final.u.coeffs)


def test_taylor_green_energy_decays():
    c = sv.SolverConfig(nu=0.1, mu=0.1, alpha=1.0, N=32, dt=2e-3, t_end=1.0, eta=0.01)
    init = sv.make_initial("taylor_green", c.grid)
    divs = []
    traj = sv.run(init, c, callback=lambda s, i: divs.append(s.divergence_max()))
    assert np.all(np.diff(traj.energy) < 0)
    assert max(divs) < 1e-10
    assert sv.energy_balance_residual(traj) < 1e-8
    assert sv.tail_fraction(traj.final) < 0.01


def test_under_resolution_flagged(caplog):
    c = sv.SolverConfig(nu=0.1, mu=0.1, alpha=1.0, N=16, dt=2e-3, t_end=0.002)
    with caplog.at_level("WARNING", logger="hallmhd.solver"):
        sv.run(sv.make_initial("taylor_green", c.grid), c)
    assert "under-resolved" not in caplog.text
    x = c.grid.coords()[0]
    u = field(c.grid, np.stack((0 * x, np.cos(5 * x), 0 * x)))
    with caplog.at_level("WARNING", logger="hallmhd.solver"):
        sv.run(sv.State(0.0, u, u.copy()), c.replace(s=3.0))
    assert "under-resolved" in caplog.text


def test_rebase_is_transparent(grid16, rng):
    # forcing a rebase every step must not change the trajectory beyond roundoff
    c = cfg(eta=0.01, dt=1e-3)
    init = sv.make_initial("taylor_green", grid16)
    a = sv.Integrator(init, c)
    b = sv.Integrator(init, c)
    b.rebase_at = 0.0
    for _ in range(10):
        sa, sb = a.advance(), b.advance()
    assert rel(sa.u.coeffs, sb.u.coeffs) < 1e-13
    assert sa.t == sb.t == pytest.approx(0.01)


@given(alpha=st.sampled_from([0.6, 0.75, 1.0, 1.5]), kx=st.integers(1, 5), ky=st.integers(0, 5))
def test_fractional_decay_exact(alpha, kx, ky):
    grid = sp.get_grid(16)
    x, y, _ = grid.coords()
    phase = kx * x + ky * y
    u = field(grid, np.stack((0 * x, 0 * x, np.cos(phase))))
    c = sv.SolverConfig(nu=0.1, mu=0.07, alpha=alpha, N=16, dt=0.01, t_end=0.1, s=3.0)
    traj = sv.run(sv.State(0.0, u, u.copy()), c)
    n = sv.n_steps(c)
    kk = math.hypot(kx, ky)
    assert rel(traj.final.u.coeffs, u.coeffs * math.exp(-c.nu * kk**2 * 0.1)) < 1e-14 * n
    assert rel(traj.final.b.coeffs, u.coeffs * math.exp(-c.mu * kk ** (2 * alpha) * 0.1)) < 1e-14 * n


def test_pressure_poisson(grid16, rng):
    u, b = sp.random_field(grid16, rng), sp.random_field(grid16, rng)
    st = sv.State(0.0, u, b)
    p = sv.pressure(st)
    f = sp.dealiased_product(u, u, "advect") - sp.dealiased_product(b, b, "advect")
    lhs = p.multiply(grid16.k2)
    rhs = sp.divergence(f)
    assert rel(lhs.coeffs, rhs.coeffs) < 1e-12
