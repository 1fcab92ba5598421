import numpy as np
import pytest

from thermoflow.discretization import (
    ChannelDomain,
    SpectralField,
    build_bases,
    gram_deviation,
    make_grid,
    norms,
)


def test_domain_validation():
    ChannelDomain(Lx=3.5)
    with pytest.raises(ValueError):
        ChannelDomain(Lx=0.0)
    with pytest.raises(ValueError):
        ChannelDomain(Lx=1.0, Ly=2.0)


def test_grid_trig_exactness():
    g = make_grid(ChannelDomain(), jmax=5, lmax=6, grid_factor=2)
    # x: uniform rule integrates every in-band harmonic exactly
    for j in range(1, 3 * 5 + 1):
        arg = 2 * np.pi * j * g.x / g.domain.Lx
        assert abs(np.sum(np.cos(arg)) * g.wx) < 1e-12
        assert abs(np.sum(np.sin(arg)) * g.wx) < 1e-12
    # y: calibrated Gauss-Legendre integrates the triple-product band
    for l in range(1, g.y_band + 1):
        exact_sin = (1 - (-1) ** l) / (l * np.pi)
        assert abs(np.sum(g.wy * np.sin(l * np.pi * g.y)) - exact_sin) < 1e-13
        assert abs(np.sum(g.wy * np.cos(l * np.pi * g.y))) < 1e-13


def test_first_streamfunction_mode_closed_form(small_bases):
    vel, _ = small_bases
    g = vel.grid
    c = np.zeros(vel.size)
    c[vel._off] = 1.0  # (t=0, j=0, l=1)
    u, v = vel.velocity(c)
    expected = np.sqrt(2.0 / g.domain.Lx) * np.cos(np.pi * g.y)[None, :]
    np.testing.assert_allclose(u, np.broadcast_to(expected, u.shape), atol=1e-13)
    np.testing.assert_allclose(v, 0.0, atol=1e-14)


def test_gram_identity_at_double_resolution(small_bases):
    # independent oracle: rebuild the same modes on a double-resolution grid
    vel, temp = small_bases
    assert vel.gram_deviation < 1e-10
    assert temp.gram_deviation < 1e-10
    vel4, temp4 = build_bases(6, 6, grid_factor=4, check_gram=False)
    assert gram_deviation(vel4) < 1e-10
    assert gram_deviation(temp4) < 1e-10


def test_divergence_free_and_tangential(small_bases, rng):
    vel, _ = small_bases
    for _ in range(5):
        c = rng.normal(size=vel.size)
        assert np.abs(vel.divergence(c)).max() < 1e-10
        n0, n1 = vel.wall_normal(c)
        assert np.abs(n0).max() == 0.0 and np.abs(n1).max() == 0.0


def test_projection_identity_idempotent_self_adjoint(small_bases, rng):
    vel, temp = small_bases
    g = vel.grid
    c = rng.normal(size=vel.size)
    u, v = vel.velocity(c)
    np.testing.assert_allclose(vel.project(u, v), c, atol=1e-12)

    # out-of-band grid field: projection contracts the L2 norm and is idempotent
    xx, yy = np.meshgrid(g.x, g.y, indexing="ij")
    f = np.exp(np.sin(2 * np.pi * xx / g.domain.Lx)) * yy**2
    d1 = temp.project(f)
    d2 = temp.project(temp.values(d1))
    np.testing.assert_allclose(d2, d1, atol=1e-12)
    assert np.linalg.norm(d1) <= norms(f, g, 2.0) + 1e-12

    # self-adjointness in the quadrature inner product
    h = np.cos(3 * yy) * (1 + 0.3 * np.sin(2 * np.pi * xx / g.domain.Lx))
    pf = temp.values(temp.project(f))
    ph = temp.values(temp.project(h))
    assert g.integrate(pf * h) == pytest.approx(g.integrate(f * ph), rel=1e-12, abs=1e-13)


def test_mean_flow_mode_retained_iff_included():
    vel_with, _ = build_bases(4, 4, include_mean=True, check_gram=False)
    vel_without, _ = build_bases(4, 4, include_mean=False, check_gram=False)
    g = vel_with.grid
    ones = np.ones((g.nx, g.ny))
    zeros = np.zeros_like(ones)
    c = vel_with.project(ones, zeros)
    u, v = vel_with.velocity(c)
    np.testing.assert_allclose(u, 1.0, atol=1e-12)
    c2 = vel_without.project(ones, zeros)
    u2, v2 = vel_without.velocity(c2)
    np.testing.assert_allclose(u2, 0.0, atol=1e-12)


def test_sym_gradient_single_mode(small_bases):
    # psi = sin(pi y) (normalized): u = scale*pi*cos(pi y) so the only
    # nonzero entry of D is D_xy = -scale*pi^2 sin(pi y)/2
    vel, _ = small_bases
    g = vel.grid
    c = np.zeros(vel.size)
    c[vel._off] = 1.0
    scale = 1.0 / np.sqrt(0.5 * g.domain.Lx * np.pi**2)
    dxx, dxy, dyy = vel.sym_gradient(c)
    np.testing.assert_allclose(dxx, 0.0, atol=1e-13)
    np.testing.assert_allclose(dyy, 0.0, atol=1e-13)
    expected = -0.5 * scale * np.pi**2 * np.sin(np.pi * g.y)[None, :]
    np.testing.assert_allclose(dxy, np.broadcast_to(expected, dxy.shape), atol=1e-12)


def test_constant_field_zero_gradient(small_bases):
    _, temp = small_bases
    d = np.zeros(temp.size)
    d[0] = 2.5
    gx, gy = temp.gradient(d)
    assert np.abs(gx).max() < 1e-14 and np.abs(gy).max() < 1e-14
    ones = np.ones((temp.grid.nx, temp.grid.ny))
    np.testing.assert_allclose(temp.project(ones)[0], np.sqrt(temp.grid.domain.Lx), rtol=1e-14)


def test_norm_examples(small_bases):
    vel, _ = small_bases
    g = vel.grid
    Lx = g.domain.Lx
    one = np.ones((g.nx, g.ny))
    assert norms(one, g, 2.0) == pytest.approx(np.sqrt(Lx), rel=1e-14)
    s = np.sin(2 * np.pi * g.x / Lx)[:, None] * one
    assert norms(s, g, 2.0) ** 2 == pytest.approx(Lx / 2, rel=1e-13)
    cy = np.cos(np.pi * g.y)[None, :] * one
    assert norms(cy, g, 4.0) ** 4 == pytest.approx(3 * Lx / 8, rel=1e-13)
    assert norms(cy, g, np.inf) == pytest.approx(np.abs(np.cos(np.pi * g.y)).max())
    with pytest.raises(ValueError):
        norms(one, g, 0.5)


def test_quadrature_exact_triple_products(small_bases):
    # closed form: int cos^2(2 pi x/Lx) dx * int sin^2(pi y) cos(pi y) dy = 0
    # and int cos(2pix/Lx)^2 * sin(pi y)^2 = Lx/2 * 1/2
    vel, _ = small_bases
    g = vel.grid
    cx = np.cos(2 * np.pi * g.x / g.domain.Lx)[:, None]
    sy = np.sin(np.pi * g.y)[None, :]
    cyy = np.cos(np.pi * g.y)[None, :]
    assert g.integrate(cx * cx * sy * sy) == pytest.approx(g.domain.Lx / 4, rel=1e-13)
    # int sin^2(pi y) cos(pi y) dy = [sin^3(pi y)/(3 pi)] over [0,1] = 0
    assert abs(g.integrate(cx * cx * sy * sy * cyy)) < 1e-12
    # triple sine integral: int sin^3(pi y) = 4/(3 pi)
    assert g.integrate(sy**3) / g.domain.Lx == pytest.approx(4 / (3 * np.pi), rel=1e-12)


def test_spectral_field_roundtrip(small_bases, rng):
    vel, temp = small_bases
    c = rng.normal(size=vel.size)
    fld = SpectralField(vel, c)
    u, v = fld.values
    np.testing.assert_allclose(vel.project(u, v), c, atol=1e-12)
    with pytest.raises(ValueError):
        SpectralField(vel, np.zeros(3))
    with pytest.raises(ValueError):
        SpectralField(temp, np.full(temp.size, np.nan))


def test_wall_tangential_values(small_bases, rng):
    vel, _ = small_bases
    g = vel.grid
    c = rng.normal(size=vel.size)
    u0, u1 = vel.wall_tangential(c)
    # oracle: synthesize u on the grid and extrapolate analytically per mode
    a = vel.pack_streamfunction(c) * vel._lpi
    ref0 = g.xc[: vel.nj].T @ (a[0] @ np.ones(vel.nl)) + g.xs[: vel.nj].T @ (a[1] @ np.ones(vel.nl))
    if vel.include_mean:
        ref0 = ref0 + c[0] / np.sqrt(g.domain.Lx)
    np.testing.assert_allclose(u0, ref0, atol=1e-12)
    assert u0.shape == (g.nx,) and u1.shape == (g.nx,)


def test_build_bases_validation():
    with pytest.raises(ValueError):
        build_bases(0, 4)
    with pytest.raises(ValueError):
        build_bases(4, 4, grid_factor=1)
