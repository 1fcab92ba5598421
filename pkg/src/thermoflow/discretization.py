"""Tensor-product spectral bases on a 2D periodic channel.

Domain: (x, y) in [0, Lx) x [0, 1], periodic in x, walls at y = 0 and y = 1
with outward normals -/+ e2.

Velocity basis: curl of streamfunctions psi = X_j(x) sin(l pi y) with
X_j in {cos, sin}(2 pi j x / Lx), so every field is pointwise divergence
free and tangential at the walls, plus an optional x-mean flow mode
(u = const, v = 0).  Temperature basis: X_j(x) cos(l pi y) including the
constant, so every mode has zero wall-normal derivative.  Both families are
L2-orthonormal after analytic normalization.

Quadrature: uniform nodes in x (exact for trigonometric products up to the
grid band) and Gauss-Legendre in y with a node count calibrated so that all
sin/cos(k pi y) moments up to the triple-product band integrate to machine
precision.  The calibration is verified at build time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChannelDomain",
    "Grid",
    "VelocityBasis",
    "TemperatureBasis",
    "SpectralField",
    "build_bases",
    "norms",
    "gauss_legendre_01",
]


@dataclass(frozen=True)
class ChannelDomain:
    """Periodic channel of length Lx and unit height."""

    Lx: float = 2.0
    Ly: float = 1.0
    d: int = 2

    def __post_init__(self):
        if not (np.isfinite(self.Lx) and self.Lx > 0.0):
            raise ValueError(f"channel length must be positive, got {self.Lx}")
        if self.Ly != 1.0 or self.d != 2:
            raise ValueError("only the unit-height 2D channel is supported")


def gauss_legendre_01(n):
    """Gauss-Legendre nodes/weights mapped to (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _gl_trig_error(nodes, weights, band):
    """Worst moment error of the rule over sin/cos(k pi y), k <= band."""
    k = np.arange(1, band + 1)[:, None]
    ky = k * np.pi * nodes[None, :]
    cos_err = np.abs(np.cos(ky) @ weights)
    sin_exact = (1.0 - (-1.0) ** k[:, 0]) / (k[:, 0] * np.pi)
    sin_err = np.abs(np.sin(ky) @ weights - sin_exact)
    return max(cos_err.max(), sin_err.max())


def _calibrated_gl(band, tol=1e-14):
    """Smallest comfortable GL rule integrating the trig band to ``tol``."""
    n = int(np.ceil(1.35 * band)) + 10
    for _ in range(40):
        y, w = gauss_legendre_01(n)
        if _gl_trig_error(y, w, band) < tol:
            return y, w
        n = int(np.ceil(1.15 * n)) + 4
    raise RuntimeError(f"could not calibrate a Gauss-Legendre rule for band {band}")


@dataclass
class Grid:
    """Collocation grid, quadrature weights and 1D transform tables."""

    domain: ChannelDomain
    nx: int
    ny: int
    x: np.ndarray
    y: np.ndarray
    wx: float
    wy: np.ndarray
    weights: np.ndarray  # (nx, ny) tensor quadrature weights
    xc: np.ndarray  # (nj, nx) cos(2 pi j x / Lx)
    xs: np.ndarray  # (nj, nx) sin(2 pi j x / Lx)
    ycos: np.ndarray  # (nl, ny) cos(l pi y), l = 0..nl-1
    ysin: np.ndarray  # (nl, ny) sin(l pi y)
    kappa_x: np.ndarray  # (nj,) 2 pi j / Lx
    y_band: int

    def integrate(self, f):
        """Quadrature of grid values."""
        return float(np.sum(f * self.weights))

    def integrate_x(self, fx):
        """Quadrature of wall values (1D array over x)."""
        return float(np.sum(fx) * self.wx)


def make_grid(domain: ChannelDomain, jmax: int, lmax: int, grid_factor: int = 2) -> Grid:
    """Build the collocation grid for x-wavenumbers <= jmax, y-indices <= lmax.

    ``grid_factor`` oversamples per direction; the default 2 makes products
    of up to three in-band factors integrate exactly.
    """
    if grid_factor < 2:
        raise ValueError("grid_factor must be >= 2")
    nx = grid_factor * (2 * jmax + 1)
    x = domain.Lx * np.arange(nx) / nx
    wx = domain.Lx / nx
    band = (grid_factor + 1) * max(lmax, 1)
    y, wy = _calibrated_gl(band)
    ny = y.size

    j = np.arange(jmax + 1)
    arg = 2.0 * np.pi * np.outer(j, x) / domain.Lx
    xc, xs = np.cos(arg), np.sin(arg)

    nl = lmax + 2
    larg = np.pi * np.outer(np.arange(nl), y)
    ycos, ysin = np.cos(larg), np.sin(larg)

    return Grid(
        domain=domain,
        nx=nx,
        ny=ny,
        x=x,
        y=y,
        wx=wx,
        wy=wy,
        weights=np.full((nx, ny), wx) * wy[None, :],
        xc=xc,
        xs=xs,
        ycos=ycos,
        ysin=ysin,
        kappa_x=2.0 * np.pi * j / domain.Lx,
        y_band=band,
    )


class _TensorBasis:
    """Shared machinery: separable synthesis/analysis over the grid tables."""

    grid: Grid
    nj: int
    nl: int

    def _synth(self, a, ytab):
        """Sum_{t,j,l} a[t,j,l] X_{t,j}(x) Y_l(y) on the grid."""
        g = self.grid
        return g.xc[: self.nj].T @ (a[0] @ ytab) + g.xs[: self.nj].T @ (a[1] @ ytab)

    def _analyze(self, f, ytab):
        """Quadrature inner products of grid values f with X_{t,j} Y_l."""
        g = self.grid
        fw = f * g.weights
        yt = ytab.T
        return np.stack([g.xc[: self.nj] @ fw @ yt, g.xs[: self.nj] @ fw @ yt])

    def _dx(self, a):
        """Coefficient-space x-derivative: cos_j -> -k_j sin_j, sin_j -> k_j cos_j."""
        k = self.grid.kappa_x[: self.nj, None]
        return np.stack([k * a[1], -k * a[0]])

    def _dx_pairing(self, m):
        """Turn inner products against X_{t,j} into ones against X'_{t,j}."""
        k = self.grid.kappa_x[: self.nj, None]
        return np.stack([-k * m[1], k * m[0]])


class VelocityBasis(_TensorBasis):
    """Orthonormal divergence-free, wall-tangential velocity modes.

    Mode order: the mean-flow mode first (when included), then streamfunction
    modes (x-channel t, x-wavenumber j, y-index l) with j = 0 carrying only
    the cosine channel.
    """

    def __init__(self, n_modes: int, grid: Grid, include_mean: bool = True):
        if n_modes < 1:
            raise ValueError("need at least one mode per direction")
        self.grid = grid
        self.n_per_dir = n_modes
        self.nj = n_modes
        self.nl = n_modes
        self.include_mean = include_mean

        modes = []
        if include_mean:
            modes.append(("mean", 0, 0))
        for j in range(n_modes):
            for t in (0, 1) if j > 0 else (0,):
                for l in range(1, n_modes + 1):
                    modes.append((t, j, l))
        self.modes = modes
        self.size = len(modes)

        psi = [(t, j, l) for (t, j, l) in modes if t != "mean"]
        self._pt = np.array([m[0] for m in psi], dtype=int)
        self._pj = np.array([m[1] for m in psi], dtype=int)
        self._pl = np.array([m[2] for m in psi], dtype=int)
        self._off = 1 if include_mean else 0

        Lx = grid.domain.Lx
        lpi = self._pl * np.pi
        kj = grid.kappa_x[self._pj]
        raw_sq = np.where(self._pj == 0, 0.5 * Lx * lpi**2, 0.25 * Lx * (lpi**2 + kj**2))
        self._scale = 1.0 / np.sqrt(raw_sq)
        self._mean_scale = 1.0 / np.sqrt(Lx)

        # y tables for l = 1..n and the associated factors
        self._yc = grid.ycos[1 : self.nl + 1]
        self._ys = grid.ysin[1 : self.nl + 1]
        self._lpi = np.pi * np.arange(1, self.nl + 1)
        # wall values of cos(l pi y): 1 at y=0, (-1)^l at y=1
        self._wall0 = np.ones(self.nl)
        self._wall1 = (-1.0) ** np.arange(1, self.nl + 1)

    # -- coefficient packing -------------------------------------------------

    def pack_streamfunction(self, c):
        """Scaled streamfunction coefficient array a[t, j, l-1] from flat c."""
        a = np.zeros((2, self.nj, self.nl))
        a[self._pt, self._pj, self._pl - 1] = c[self._off :] * self._scale
        return a

    def unpack_rows(self, rows, mean_row=0.0):
        """Flat row vector from a raw (t, j, l) row array (applies scaling)."""
        out = np.empty(self.size)
        if self.include_mean:
            out[0] = mean_row
        out[self._off :] = rows[self._pt, self._pj, self._pl - 1] * self._scale
        return out

    def mean_coefficient(self, c):
        return c[0] if self.include_mean else 0.0

    # -- synthesis -----------------------------------------------------------

    def velocity(self, c):
        """Grid values (U, V) of the velocity with coefficients ``c``."""
        a = self.pack_streamfunction(c)
        u = self._synth(a * self._lpi, self._yc)
        v = self._synth(-self._dx(a), self._ys)
        if self.include_mean:
            u = u + c[0] * self._mean_scale
        return u, v

    def velocity_gradients(self, c):
        """(Ux, Uy, Vx, Vy) grid values; Vy is synthesized as -Ux mode-wise.

        The per-mode identity dx(dy psi) + dy(-dx psi) = 0 is exact, so the
        two arrays are built from the same coefficients.
        """
        a = self.pack_streamfunction(c)
        au = a * self._lpi
        av = -self._dx(a)
        ux = self._synth(self._dx(au), self._yc)
        uy = self._synth(-au * self._lpi, self._ys)
        vx = self._synth(self._dx(av), self._ys)
        vy = -ux
        return ux, uy, vx, vy

    def sym_gradient(self, c):
        """Grid values (Dxx, Dxy, Dyy) of the symmetric velocity gradient."""
        ux, uy, vx, vy = self.velocity_gradients(c)
        return ux, 0.5 * (uy + vx), vy

    def divergence(self, c):
        """Honest pointwise divergence (independent synthesis of both terms)."""
        a = self.pack_streamfunction(c)
        au = a * self._lpi
        av = -self._dx(a)
        return self._synth(self._dx(au), self._yc) + self._synth(av * self._lpi, self._yc)

    def wall_tangential(self, c):
        """Tangential velocity u(x) on the two walls (y=0, y=1)."""
        a = self.pack_streamfunction(c)
        au = a * self._lpi
        g = self.grid
        u0 = g.xc[: self.nj].T @ (au[0] @ self._wall0) + g.xs[: self.nj].T @ (au[1] @ self._wall0)
        u1 = g.xc[: self.nj].T @ (au[0] @ self._wall1) + g.xs[: self.nj].T @ (au[1] @ self._wall1)
        if self.include_mean:
            u0 = u0 + c[0] * self._mean_scale
            u1 = u1 + c[0] * self._mean_scale
        return u0, u1

    def wall_normal(self, c):
        """Wall-normal velocity on the walls; identically zero by construction."""
        return np.zeros(self.grid.nx), np.zeros(self.grid.nx)

    # -- row assembly ---------------------------------------------------------

    def rows_tensor(self, nxx, nxy, nyy):
        """Rows integral(N : grad w_i) for a symmetric tensor grid field N."""
        ma = self._analyze(nxx - nyy, self._yc)
        mb = self._analyze(nxy, self._ys)
        kj2 = self.grid.kappa_x[: self.nj, None] ** 2
        rows = self._lpi * self._dx_pairing(ma) + (kj2 - self._lpi**2) * mb
        return self.unpack_rows(rows, mean_row=0.0)

    def rows_vector(self, fx, fy):
        """Rows integral(F . w_i) for a vector grid field F."""
        mu = self._analyze(fx, self._yc)
        mv = self._analyze(fy, self._ys)
        rows = self._lpi * mu - self._dx_pairing(mv)
        mean_row = self._mean_scale * self.grid.integrate(fx) if self.include_mean else 0.0
        return self.unpack_rows(rows, mean_row=mean_row)

    def rows_wall(self, g0, g1):
        """Rows of the wall integral of (g . u_i) for x-profiles g0, g1."""
        g = self.grid
        b0 = np.stack([g.xc[: self.nj] @ g0, g.xs[: self.nj] @ g0]) * g.wx
        b1 = np.stack([g.xc[: self.nj] @ g1, g.xs[: self.nj] @ g1]) * g.wx
        rows = self._lpi * (b0[:, :, None] * self._wall0 + b1[:, :, None] * self._wall1)
        mean_row = 0.0
        if self.include_mean:
            mean_row = self._mean_scale * (np.sum(g0) + np.sum(g1)) * g.wx
        return self.unpack_rows(rows, mean_row=mean_row)

    def project(self, u, v):
        """L2-orthogonal projection of grid values onto the basis."""
        return self.rows_vector(u, v)

    def mode_values(self):
        """(U, V) grid values of every mode, stacked (size, nx, ny). Heavy."""
        g = self.grid
        xsel = np.where(self._pt[:, None] == 0, g.xc[self._pj], g.xs[self._pj])
        dxsel = np.where(
            self._pt[:, None] == 0,
            -g.kappa_x[self._pj, None] * g.xs[self._pj],
            g.kappa_x[self._pj, None] * g.xc[self._pj],
        )
        ysel_c = self._yc[self._pl - 1]
        ysel_s = self._ys[self._pl - 1]
        lpi = (np.pi * self._pl * self._scale)[:, None, None]
        u = lpi * xsel[:, :, None] * ysel_c[:, None, :]
        v = -self._scale[:, None, None] * dxsel[:, :, None] * ysel_s[:, None, :]
        if self.include_mean:
            ones = np.full((1, g.nx, g.ny), self._mean_scale)
            u = np.concatenate([ones, u])
            v = np.concatenate([np.zeros((1, g.nx, g.ny)), v])
        return u, v


class TemperatureBasis(_TensorBasis):
    """Orthonormal Neumann-compatible scalar modes X_j(x) cos(l pi y).

    Mode order: (t=0, j=0, l=0..m-1) first — so index 0 is the constant —
    then the j >= 1 cosine/sine channels.
    """

    def __init__(self, m_modes: int, grid: Grid):
        if m_modes < 1:
            raise ValueError("need at least one mode per direction")
        self.grid = grid
        self.n_per_dir = m_modes
        self.nj = m_modes
        self.nl = m_modes

        modes = []
        for j in range(m_modes):
            for t in (0, 1) if j > 0 else (0,):
                for l in range(m_modes):
                    modes.append((t, j, l))
        self.modes = modes
        self.size = len(modes)

        self._pt = np.array([m[0] for m in modes], dtype=int)
        self._pj = np.array([m[1] for m in modes], dtype=int)
        self._pl = np.array([m[2] for m in modes], dtype=int)

        Lx = grid.domain.Lx
        raw_sq = Lx * np.where(self._pj == 0, 1.0, 0.5) * np.where(self._pl == 0, 1.0, 0.5)
        self._scale = 1.0 / np.sqrt(raw_sq)

        self._yc = grid.ycos[: self.nl]
        self._ys = grid.ysin[: self.nl]
        self._lpi = np.pi * np.arange(self.nl)

    def pack(self, d):
        a = np.zeros((2, self.nj, self.nl))
        a[self._pt, self._pj, self._pl] = d * self._scale
        return a

    def unpack_rows(self, rows):
        return rows[self._pt, self._pj, self._pl] * self._scale

    def values(self, d):
        """Grid values of the scalar field with coefficients ``d``."""
        return self._synth(self.pack(d), self._yc)

    def gradient(self, d):
        """Grid values (Gx, Gy) of the gradient."""
        a = self.pack(d)
        gx = self._synth(self._dx(a), self._yc)
        gy = self._synth(-a * self._lpi, self._ys)
        return gx, gy

    def laplacian_eigenvalues(self):
        """Per-mode eigenvalues lambda with -Lap(phi) = lambda phi."""
        kj = self.grid.kappa_x[self._pj]
        return kj**2 + (np.pi * self._pl) ** 2

    def rows_scalar(self, h):
        """Rows integral(h * phi_j)."""
        return self.unpack_rows(self._analyze(h, self._yc))

    def rows_flux(self, px, py):
        """Rows integral(P . grad phi_j) for a vector grid field P."""
        mx = self._analyze(px, self._yc)
        my = self._analyze(py, self._ys)
        rows = self._dx_pairing(mx) - self._lpi * my
        return self.unpack_rows(rows)

    def project(self, f):
        return self.rows_scalar(f)

    def mode_values(self):
        """Grid values of every mode, stacked (size, nx, ny). Heavy."""
        g = self.grid
        xsel = np.where(self._pt[:, None] == 0, g.xc[self._pj], g.xs[self._pj])
        ysel = self._yc[self._pl]
        return self._scale[:, None, None] * xsel[:, :, None] * ysel[:, None, :]


@dataclass
class SpectralField:
    """Coefficients in one of the bases plus lazily cached grid values."""

    basis: object
    coef: np.ndarray
    _values: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.coef = np.asarray(self.coef, dtype=float)
        expected = self.basis.size
        if self.coef.shape != (expected,):
            raise ValueError(f"expected {expected} coefficients, got {self.coef.shape}")
        if not np.all(np.isfinite(self.coef)):
            raise ValueError("non-finite coefficients")

    @property
    def values(self):
        if self._values is None:
            if isinstance(self.basis, VelocityBasis):
                self._values = self.basis.velocity(self.coef)
            else:
                self._values = self.basis.values(self.coef)
        return self._values


def norms(fields, grid: Grid, q: float, sobolev: int = 0, grad_fields=None):
    """L^q (sobolev=0) or W^{1,q} (sobolev=1) norm from grid values.

    ``fields`` is a grid array or tuple of component arrays; the pointwise
    magnitude is Euclidean over components.  For sobolev=1 the gradient
    component arrays must be supplied.
    """
    if not isinstance(fields, (tuple, list)):
        fields = (fields,)
    mag_sq = sum(f * f for f in fields)
    if q == np.inf:
        out = np.sqrt(mag_sq.max())
        if sobolev:
            out = max(out, np.sqrt(sum(g * g for g in grad_fields).max()))
        return float(out)
    if q < 1:
        raise ValueError(f"norm exponent must satisfy q >= 1, got {q}")
    total = grid.integrate(mag_sq ** (q / 2.0))
    if sobolev:
        if grad_fields is None:
            raise ValueError("gradient values required for a Sobolev norm")
        gmag_sq = sum(g * g for g in grad_fields)
        total += grid.integrate(gmag_sq ** (q / 2.0))
    return float(total ** (1.0 / q))


def build_bases(
    n_modes: int,
    m_modes: int,
    domain: ChannelDomain | None = None,
    *,
    grid_factor: int = 2,
    include_mean: bool = True,
    check_gram: bool = True,
):
    """Construct the velocity/temperature bases on a shared grid.

    With ``check_gram`` the Gram matrices are formed explicitly and their
    deviation from the identity is stored on each basis
    (``gram_deviation``); the build fails if it exceeds 1e-10.
    """
    domain = domain or ChannelDomain()
    jmax = max(n_modes, m_modes) - 1
    lmax = max(n_modes, m_modes - 1)
    grid = make_grid(domain, jmax, lmax, grid_factor=grid_factor)
    vel = VelocityBasis(n_modes, grid, include_mean=include_mean)
    temp = TemperatureBasis(m_modes, grid)

    if check_gram:
        for basis in (vel, temp):
            dev = gram_deviation(basis)
            basis.gram_deviation = dev
            if dev > 1e-10:
                raise RuntimeError(f"basis Gram matrix deviates from identity by {dev:.3e}")
    else:
        vel.gram_deviation = None
        temp.gram_deviation = None
    return vel, temp


def gram_deviation(basis):
    """Max |Gram - I| of a basis under the grid quadrature."""
    g = basis.grid
    sqw = np.sqrt(g.weights).ravel()
    if isinstance(basis, VelocityBasis):
        u, v = basis.mode_values()
        flat = np.concatenate(
            [u.reshape(basis.size, -1) * sqw, v.reshape(basis.size, -1) * sqw], axis=1
        )
    else:
        flat = basis.mode_values().reshape(basis.size, -1) * sqw
    gram = flat @ flat.T
    return float(np.abs(gram - np.eye(basis.size)).max())
