import numpy as np
import pytest

from thermoflow.exponents import pressure_exponent
from thermoflow.pressure import (
    PressureField,
    pressure_norm_monitor,
    reconstruct_pressure,
    weak_identity_residual,
)
from thermoflow.solver import Model, RunConfig


@pytest.fixture(scope="module")
def hydro_model():
    return Model(RunConfig(scenario="steady", n=8, m=16, fx=0.0, fy=-1.0))


def _uniform_theta_state(model, value=1.0):
    c = np.zeros(model.nc)
    d = np.zeros(model.nd)
    d[0] = value * np.sqrt(model.domain.Lx)
    return c, d


def test_hydrostatic_affine_profile(hydro_model):
    # v = 0, theta = 1, f = -e2: the balance grad(pi) = theta f gives the
    # mean-zero affine profile pi = 1/2 - y
    c, d = _uniform_theta_state(hydro_model)
    pf = reconstruct_pressure(hydro_model, c, d)
    exact = 0.5 - hydro_model.grid.y[None, :]
    assert np.abs(pf.values - exact).max() < 1e-10
    assert pf.slope == pytest.approx(-1.0, abs=1e-10)
    assert np.abs(pf.coef).max() < 1e-10
    assert pf.mean() == 0.0
    grad_err = np.abs(
        (pf.values[:, 1:] - pf.values[:, :-1]) / np.diff(hydro_model.grid.y)[None, :] + 1.0
    )
    assert grad_err.max() < 1e-8


def test_zero_force_zero_pressure(hydro_model):
    model = Model(RunConfig(scenario="shear-decay", n=8, m=16, fx=0.0, fy=0.0))
    c, d = _uniform_theta_state(model, value=3.0)
    pf = reconstruct_pressure(model, c, d)
    assert np.abs(pf.values).max() < 1e-12


def test_weak_identity_on_generic_states(hydro_model, rng):
    for trial in range(3):
        c = rng.normal(size=hydro_model.nc) * 0.3
        d = rng.normal(size=hydro_model.nd) * 0.2
        d[0] += 1.5 * np.sqrt(hydro_model.domain.Lx)
        pf = reconstruct_pressure(hydro_model, c, d)
        assert weak_identity_residual(pf, hydro_model, c, d) < 1e-8
        assert pf.mean() == 0.0
        # mean of the synthesized field vanishes too
        assert abs(hydro_model.grid.integrate(pf.values)) < 1e-10


def test_weak_identity_with_slip_boundary(rng):
    model = Model(RunConfig(scenario="shear-decay", n=6, m=10, alpha=0.7, k=2.0))
    c = rng.normal(size=model.nc) * 0.5
    d = rng.normal(size=model.nd) * 0.3
    d[0] += np.sqrt(model.domain.Lx)
    pf = reconstruct_pressure(model, c, d)
    assert weak_identity_residual(pf, model, c, d) < 1e-8


def test_norm_monitor_closed_form(hydro_model):
    c, d = _uniform_theta_state(hydro_model)
    pf = reconstruct_pressure(hydro_model, c, d)
    zp = pressure_exponent(2.0)
    assert zp == pytest.approx(5 / 3)
    # int |1/2 - y|^(5/3) dy = 2 (1/2)^(8/3) * 3/8; the integrand has a kink
    # at y = 1/2 so Gauss-Legendre is accurate but not exact
    analytic = hydro_model.grid.domain.Lx * 2.0 * 0.5 ** (8 / 3) * 3.0 / 8.0
    assert pressure_norm_monitor(pf, zp) == pytest.approx(analytic, rel=1e-4)
    assert pressure_norm_monitor(pf, zp) >= 0.0


def test_norm_monitor_homogeneity(hydro_model):
    c, d = _uniform_theta_state(hydro_model)
    pf = reconstruct_pressure(hydro_model, c, d)
    doubled = PressureField(basis=pf.basis, coef=2.0 * pf.coef, slope=2.0 * pf.slope)
    zp = 5 / 3
    assert pressure_norm_monitor(doubled, zp) == pytest.approx(
        2.0**zp * pressure_norm_monitor(pf, zp), rel=1e-13
    )
    zero = PressureField(basis=pf.basis, coef=0.0 * pf.coef, slope=0.0)
    assert pressure_norm_monitor(zero, zp) == 0.0


def test_quadratic_term_self_convergence():
    # single-mode Stokes state with p=2: pi comes from the convective
    # quadratic term; a double-resolution solve agrees on the grid values
    vals = {}
    for factor in (2, 4):
        cfg = RunConfig.for_scenario(
            "shear-decay", n=6, m=10, shear_amp=1.0, fx=0.0, fy=0.0, grid_factor=factor
        )
        model = Model(cfg)
        from thermoflow.solver import prepare_initial_data

        s0 = prepare_initial_data(cfg, model)
        pf = reconstruct_pressure(model, s0.c, s0.d)
        # compare on a fixed probe line
        probe_y = model.grid.y[model.grid.ny // 2]
        vals[factor] = (pf.slope, np.sort(np.abs(pf.coef))[-3:])
    assert vals[2][0] == pytest.approx(vals[4][0], abs=1e-9)
    np.testing.assert_allclose(vals[2][1], vals[4][1], atol=1e-9)


def test_momentum_residual_with_pressure_against_gradient_tests(hydro_model, rng):
    """Inserting the reconstructed pi closes the momentum identity for
    non-divergence-free (gradient) test fields."""
    model = hydro_model
    c = rng.normal(size=model.nc) * 0.2 / (1.0 + np.arange(model.nc))
    d = rng.normal(size=model.nd) * 0.1 / (1.0 + model.temp.laplacian_eigenvalues())
    d[0] += 2.0 * np.sqrt(model.domain.Lx)
    pf = reconstruct_pressure(model, c, d)
    dy, f = model.rhs_and_fields(0.0, np.concatenate([c, d, np.zeros(6)]))
    dc, _, _ = model.split(dy)

    temp, g = model.temp, model.grid
    from thermoflow.truncation import g_cut, t_cut

    u, v = f["u"], f["v"]
    gk = g_cut(u * u + v * v, model.k)
    tk_pos = t_cut(f["theta_pos"], model.k)
    worst = 0.0
    for _ in range(5):
        dphi = rng.normal(size=model.nd) / (1.0 + temp.laplacian_eigenvalues())
        dphi[0] = 0.0
        phix, phiy = temp.gradient(dphi)
        # <d_t v, grad(phi)> = 0 for divergence-free tangential fields
        dt_term = g.integrate(model.vel.velocity(dc)[0] * phix + model.vel.velocity(dc)[1] * phiy)
        a = temp.pack(dphi)
        lpi = temp._lpi
        gxx = temp._synth(temp._dx(temp._dx(a)), temp._yc)
        gxy = temp._synth(-temp._dx(a) * lpi, temp._ys)
        gyy = temp._synth(-a * lpi * lpi, temp._yc)
        conv = g.integrate(u * u * gk * gxx + 2 * u * v * gk * gxy + v * v * gk * gyy)
        strs = g.integrate(f["sxx"] * gxx + 2 * f["sxy"] * gxy + f["syy"] * gyy)
        force = g.integrate(tk_pos * (model.fx * phix + model.fy * phiy))
        div_phi = -temp.values(temp.laplacian_eigenvalues() * dphi)
        prs = g.integrate(pf.values * div_phi)
        resid = dt_term - conv + strs - force - prs
        scale = abs(conv) + abs(strs) + abs(force) + abs(prs) + 1e-3
        worst = max(worst, abs(resid) / scale)
    assert worst < 1e-8
