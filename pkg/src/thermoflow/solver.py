"""Two-level Galerkin ODE system for the truncated convection problem.

State: velocity coefficients c (divergence-free tangential basis),
temperature coefficients d (Neumann basis), plus six quadrature
accumulators integrated alongside so that balance residuals are limited
by integrator accuracy only:

    0  wall dissipation     alpha * oint g_cut(|u|) |u|^2
    1  viscous dissipation  int S : D(v)
    2  buoyancy work        int t_cut(theta+) f . v
    3  entropy (conductive) int kappa |grad theta|^2 / (theta + eps)^2
    4  entropy (viscous)    int S : D(v) / (theta + eps)
    5  entropy force term   int t_cut(theta+) / (theta + eps) * (v . f)

Semi-discrete structure (with the L2-orthonormal bases the mass matrix is
the identity):

    dc_i/dt = int (v x v g_cut(|v|^2) - S) : grad(w_i)
              + int t_cut(theta+) f . w_i
              - alpha * oint u g_cut(|u|) u_i
    dd_j/dt = int (t_cut(theta) v - kappa grad theta) . grad(w_j)
              + int (S : D(v) - t_cut(theta+) v . f) w_j

where theta+ = max(theta, 0).  The temperature may dip below zero at
unresolved scales; positivity is monitored, not enforced.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy import interpolate, signal

from . import scenarios
from .constitutive import ConstitutiveParams, stress_components_2d
from .discretization import ChannelDomain, TemperatureBasis, VelocityBasis, build_bases
from .exponents import galerkin_admissible
from .integrators import NumericalFailure, integrate_segment
from .truncation import g_cut, t_cut, validate_level

__all__ = [
    "RunConfig",
    "FluidState",
    "Model",
    "Trajectory",
    "prepare_initial_data",
    "rhs",
    "step",
    "run",
    "NumericalFailure",
    "N_ACC",
]

N_ACC = 6


@dataclass
class RunConfig:
    """Fully resolved run parameters (see io_cli for the file format)."""

    scenario: str = "steady"
    p: float = 2.0
    nu_lo: float = 1.0
    nu_hi: float = 1.0
    kappa_lo: float = 1.0
    kappa_hi: float = 1.0
    eps_reg: float = 0.0
    nu_profile: str = "const"
    kappa_profile: str = "const"
    k: float = np.inf
    n: int = 8
    m: int = 8
    grid_factor: int = 2
    include_mean: bool = True
    Lx: float = 2.0
    d: int = 2
    alpha: float = 0.0
    fx: float = 0.0
    fy: float = -1.0
    t_end: float = 1.0
    dt: float = 0.0
    rtol: float = 1e-8
    atol: float = 1e-10
    integrator: str = "rk45"
    n_samples: int = 33
    seed: int = 0
    moll_radius: float = -1.0  # negative = auto (1/n); 0 disables
    moll_fine: int = 512
    eps_floor: float = 1e-8
    pressure: bool = False
    diag_q: float = 1.5
    diag_r: float = 1.2
    m_ladder: tuple = (1.0, 2.0, 4.0, 8.0)
    fields_stride: int = 8
    blob_amp: float = 0.8
    blob_width: float = 0.18
    blob_x0: float | None = None
    blob_y0: float = 0.4
    shear_amp: float = 1.0
    conduction_amp: float = 0.5

    def __post_init__(self):
        if self.scenario not in scenarios.SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; known: {scenarios.SCENARIOS}")
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if not galerkin_admissible(self.p, self.d):
            raise ValueError(
                f"p={self.p} is not admissible in dimension {self.d}: "
                f"requires p > 2d/(d+2) = {2.0 * self.d / (self.d + 2.0):g}"
            )
        validate_level(self.k)
        if self.n < 1 or self.m < 1:
            raise ValueError("mode counts n, m must be >= 1")
        if not (np.isfinite(self.t_end) and self.t_end > 0.0):
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.alpha < 0.0:
            raise ValueError(f"slip coefficient must be >= 0, got {self.alpha}")
        if not (np.isfinite(self.fx) and np.isfinite(self.fy)):
            raise ValueError("body force components must be finite")
        if self.dt < 0.0:
            raise ValueError("dt must be >= 0 (0 selects the adaptive step)")
        if self.n_samples < 2:
            raise ValueError("need at least 2 output samples")
        if self.eps_floor <= 0.0:
            raise ValueError("eps_floor must be positive")
        if self.integrator not in ("rk45", "backward-euler"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if len(self.m_ladder) and list(self.m_ladder) != sorted(self.m_ladder):
            raise ValueError("m_ladder must be increasing")

    @classmethod
    def for_scenario(cls, scenario: str, **overrides) -> "RunConfig":
        """Config with the preset's defaults applied before overrides."""
        base = scenarios.scenario_defaults(scenario, overrides)
        base.update(overrides)
        return cls(scenario=scenario, **base)

    def constitutive(self) -> ConstitutiveParams:
        return ConstitutiveParams(
            p=self.p,
            nu_lo=self.nu_lo,
            nu_hi=self.nu_hi,
            kappa_lo=self.kappa_lo,
            kappa_hi=self.kappa_hi,
            eps_reg=self.eps_reg,
            nu_profile=self.nu_profile,
            kappa_profile=self.kappa_profile,
            dim=2,
        )

    def resolved_moll_radius(self) -> float:
        if self.moll_radius < 0.0:
            return 1.0 / self.n
        return self.moll_radius

    def to_dict(self) -> dict:
        out = {}
        for f_ in fields(self):
            v = getattr(self, f_.name)
            out[f_.name] = v
        return out


@dataclass
class FluidState:
    """Galerkin unknowns at one instant plus the balance accumulators."""

    t: float
    c: np.ndarray
    d: np.ndarray
    acc: np.ndarray = None

    def __post_init__(self):
        if self.acc is None:
            self.acc = np.zeros(N_ACC)
        for name in ("c", "d", "acc"):
            v = np.asarray(getattr(self, name), dtype=float)
            setattr(self, name, v)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"non-finite entries in state component {name!r}")

    def pack(self):
        return np.concatenate([self.c, self.d, self.acc])


class Model:
    """Bases, material laws and assembled right-hand side for one config."""

    def __init__(self, config: RunConfig, *, check_gram: bool = True):
        self.config = config
        self.domain = ChannelDomain(Lx=config.Lx)
        self.vel, self.temp = build_bases(
            config.n,
            config.m,
            self.domain,
            grid_factor=config.grid_factor,
            include_mean=config.include_mean,
            check_gram=check_gram,
        )
        self.grid = self.vel.grid
        self.params = config.constitutive()
        self.k = float(config.k)
        self.alpha = config.alpha
        self.eps_floor = config.eps_floor
        shape = (self.grid.nx, self.grid.ny)
        self.fx = np.full(shape, config.fx)
        self.fy = np.full(shape, config.fy)
        self.nc = self.vel.size
        self.nd = self.temp.size
        self.dim = self.nc + self.nd + N_ACC
        # coefficients of the constant function 1 in the temperature basis
        self._one_coef = np.zeros(self.nd)
        self._one_coef[0] = np.sqrt(self.domain.Lx)

    # -- state packing ---------------------------------------------------

    def split(self, y):
        return y[: self.nc], y[self.nc : self.nc + self.nd], y[self.nc + self.nd :]

    def state(self, t, y) -> FluidState:
        c, d, acc = self.split(y)
        return FluidState(t=t, c=c.copy(), d=d.copy(), acc=acc.copy())

    # -- pointwise fields --------------------------------------------------

    def grid_fields(self, c, d):
        """All grid values the right-hand side needs, as a dict."""
        u, v = self.vel.velocity(c)
        dxx, dxy, dyy = self.vel.sym_gradient(c)
        theta = self.temp.values(d)
        gx, gy = self.temp.gradient(d)
        theta_pos = np.maximum(theta, 0.0)
        sxx, sxy, syy = stress_components_2d(theta_pos, dxx, dxy, dyy, self.params)
        sd = sxx * dxx + 2.0 * sxy * dxy + syy * dyy
        return {
            "u": u,
            "v": v,
            "dxx": dxx,
            "dxy": dxy,
            "dyy": dyy,
            "theta": theta,
            "theta_pos": theta_pos,
            "gx": gx,
            "gy": gy,
            "sxx": sxx,
            "sxy": sxy,
            "syy": syy,
            "sd": sd,
        }

    # -- right-hand side ---------------------------------------------------

    def rhs(self, t, y):
        dy, _ = self.rhs_and_fields(t, y)
        return dy

    def rhs_and_fields(self, t, y):
        """Right-hand side plus the grid fields it was assembled from."""
        c, d, _ = self.split(y)
        f = self.grid_fields(c, d)
        u, v, theta = f["u"], f["v"], f["theta"]
        k = self.k
        g = self.grid

        gk = g_cut(u * u + v * v, k)
        nxx = u * u * gk - f["sxx"]
        nxy = u * v * gk - f["sxy"]
        nyy = v * v * gk - f["syy"]
        dc = self.vel.rows_tensor(nxx, nxy, nyy)

        tk_pos = t_cut(f["theta_pos"], k)
        dc += self.vel.rows_vector(tk_pos * self.fx, tk_pos * self.fy)

        bdry_rate = 0.0
        f["u0w"] = f["u1w"] = None
        if self.alpha > 0.0:
            u0, u1 = self.vel.wall_tangential(c)
            f["u0w"], f["u1w"] = u0, u1
            gb0 = g_cut(np.abs(u0), k) * u0
            gb1 = g_cut(np.abs(u1), k) * u1
            dc -= self.alpha * self.vel.rows_wall(gb0, gb1)
            bdry_rate = self.alpha * (g.integrate_x(gb0 * u0) + g.integrate_x(gb1 * u1))

        kappa = self.params.kappa(f["theta_pos"])
        qx = -kappa * f["gx"]
        qy = -kappa * f["gy"]
        tk = t_cut(theta, k)
        vf = u * self.fx + v * self.fy
        heat_src = f["sd"] - tk_pos * vf
        dd = self.temp.rows_flux(tk * u + qx, tk * v + qy)
        dd += self.temp.rows_scalar(heat_src)

        denom = theta + self.eps_floor
        if denom.min() <= 0.0:
            raise NumericalFailure(
                "temperature positivity violation: min(theta) <= -eps_floor",
                {"t": t, "min_theta": float(theta.min()), "eps_floor": self.eps_floor},
            )
        dacc = np.array(
            [
                bdry_rate,
                g.integrate(f["sd"]),
                g.integrate(tk_pos * vf),
                g.integrate(kappa * (f["gx"] ** 2 + f["gy"] ** 2) / denom**2),
                g.integrate(f["sd"] / denom),
                g.integrate(t_cut(f["theta_pos"], k) / denom * vf),
            ]
        )
        out = np.concatenate([dc, dd, dacc])
        if not np.all(np.isfinite(out)):
            raise NumericalFailure("non-finite right-hand side", {"t": t})
        return out, f

    # -- derived scalars -----------------------------------------------------

    def total_energy(self, y):
        """Exact int(|v|^2/2 + theta) from coefficients."""
        c, d, _ = self.split(y)
        return 0.5 * float(c @ c) + float(d[0]) * np.sqrt(self.domain.Lx)

    def structural_sums(self, c, d):
        """Galerkin orthogonality / cancellation sums at one state.

        Returns (convective, transport, buoyancy) sums, each of which
        vanishes for the continuous integrals; here they are limited by
        quadrature aliasing (exactly zero when the truncations are inert
        and the in-band products are resolved).
        """
        f = self.grid_fields(c, d)
        u, v, theta = f["u"], f["v"], f["theta"]
        gk = g_cut(u * u + v * v, self.k)
        conv_rows = self.vel.rows_tensor(u * u * gk, u * v * gk, v * v * gk)
        conv = float(c @ conv_rows)

        tk = t_cut(theta, self.k)
        transp_rows = self.temp.rows_flux(tk * u, tk * v)
        transp = float(d @ transp_rows)

        tk_pos = t_cut(f["theta_pos"], self.k)
        work_rows = self.vel.rows_vector(tk_pos * self.fx, tk_pos * self.fy)
        sink_rows = self.temp.rows_scalar(-tk_pos * (u * self.fx + v * self.fy))
        buoy = float(c @ work_rows) + float(self._one_coef @ sink_rows)
        return conv, transp, buoy


# -- initial data -------------------------------------------------------------


def _mollify_log_theta(theta_fn, model: Model, radius: float, n_fine: int):
    """Mollify log(theta0) (extended by zero off the channel) with a bump
    kernel of the given radius, then return exp(...) at the quadrature nodes."""
    g = model.grid
    Lx = model.domain.Lx
    nfx = max(n_fine, 4 * g.nx)
    nfy = max(n_fine, 4 * g.ny)
    hx = Lx / nfx
    hy = 1.0 / nfy
    xf = hx * (np.arange(nfx) + 0.5)
    yf = hy * (np.arange(nfy) + 0.5)
    xx, yy = np.meshgrid(xf, yf, indexing="ij")
    vals = np.asarray(theta_fn(xx, yy), dtype=float)
    if not np.all(np.isfinite(vals)) or vals.min() <= 0.0:
        raise ValueError("initial temperature must be finite and positive")
    eta = np.log(vals)

    rx = int(np.ceil(radius / hx))
    ry = int(np.ceil(radius / hy))
    kx = hx * np.arange(-rx, rx + 1)
    ky = hy * np.arange(-ry, ry + 1)
    s2 = (kx[:, None] ** 2 + ky[None, :] ** 2) / radius**2
    with np.errstate(divide="ignore", over="ignore"):
        kern = np.where(s2 < 1.0, np.exp(-1.0 / np.maximum(1.0 - s2, 1e-300)), 0.0)
    kern /= kern.sum()

    # periodic in x, zero-extended in y
    padded = np.pad(eta, ((rx, rx), (0, 0)), mode="wrap")
    padded = np.pad(padded, ((0, 0), (ry, ry)), mode="constant")
    eta_moll = signal.fftconvolve(padded, kern, mode="valid")
    theta_moll = np.exp(eta_moll)

    # periodic-safe spline interpolation onto the quadrature nodes
    wrap = 4
    xf_ext = np.concatenate([xf[-wrap:] - Lx, xf, xf[:wrap] + Lx])
    th_ext = np.concatenate([theta_moll[-wrap:], theta_moll, theta_moll[:wrap]], axis=0)
    spl = interpolate.RectBivariateSpline(xf_ext, yf, th_ext, kx=5, ky=5)
    return spl(g.x, g.y)


def prepare_initial_data(config: RunConfig, model: Model | None = None) -> FluidState:
    """Sample, mollify and project the scenario's initial data."""
    model = model or Model(config)
    g = model.grid
    v0_fn, theta0_fn = scenarios.initial_fields(config.scenario, config)
    xx, yy = np.meshgrid(g.x, g.y, indexing="ij")

    u0, v0 = v0_fn(xx, yy)
    c0 = model.vel.project(np.asarray(u0, dtype=float), np.asarray(v0, dtype=float))

    radius = config.resolved_moll_radius()
    if radius > 0.0:
        theta_vals = _mollify_log_theta(theta0_fn, model, radius, config.moll_fine)
    else:
        theta_vals = np.asarray(theta0_fn(xx, yy), dtype=float)
        if not np.all(np.isfinite(theta_vals)) or theta_vals.min() <= 0.0:
            raise ValueError("initial temperature must be finite and positive")
    d0 = model.temp.project(theta_vals)
    return FluidState(t=0.0, c=c0, d=d0)


# -- stepping and runs ---------------------------------------------------------


def rhs(state: FluidState, config: RunConfig, model: Model | None = None):
    """Time derivative (dc, dd) of a state (module-level convenience)."""
    model = model or Model(config)
    out = model.rhs(state.t, state.pack())
    c_dot, d_dot, _ = model.split(out)
    return c_dot, d_dot


def step(state: FluidState, config: RunConfig, model: Model | None = None, dt=None) -> FluidState:
    """Advance a state by one reporting interval ``dt`` (default config.dt).

    The configured integrator subdivides the interval internally: adaptively
    for rk45 with ``config.dt == 0``, otherwise with fixed substeps of
    ``config.dt``.
    """
    model = model or Model(config)
    dt = (config.dt or None) if dt is None else dt
    if not dt or dt <= 0:
        raise ValueError("step() needs a positive reporting interval")
    y1, _, _ = integrate_segment(
        model.rhs,
        state.t,
        state.pack(),
        state.t + dt,
        method=config.integrator,
        rtol=config.rtol,
        atol=config.atol,
        dt=config.dt,
    )
    return model.state(state.t + dt, y1)


@dataclass
class Trajectory:
    """Sampled run: times, packed states, and the model that produced them."""

    times: np.ndarray
    states: np.ndarray  # (n_samples, dim)
    model: Model
    stats: dict = field(default_factory=dict)

    def state(self, i) -> FluidState:
        return self.model.state(self.times[i], self.states[i])

    def __len__(self):
        return len(self.times)

    def coefficients(self, i):
        c, d, acc = self.model.split(self.states[i])
        return c, d, acc


def run(config: RunConfig, *, model: Model | None = None, initial: FluidState | None = None):
    """Integrate a configured run and compute its diagnostics report.

    Returns (Trajectory, DiagnosticsReport).
    """
    model = model or Model(config)
    state0 = initial or prepare_initial_data(config, model)
    times = np.linspace(0.0, config.t_end, config.n_samples)
    states = np.empty((config.n_samples, model.dim))
    y = state0.pack()
    states[0] = y
    h = None
    total = {"steps": 0, "rejected": 0}
    wall0 = time.perf_counter()
    for i in range(1, config.n_samples):
        y, h, stats = integrate_segment(
            model.rhs,
            times[i - 1],
            y,
            times[i],
            method=config.integrator,
            rtol=config.rtol,
            atol=config.atol,
            dt=config.dt,
            h0=h,
        )
        states[i] = y
        total["steps"] += stats["steps"]
        total["rejected"] += stats["rejected"]
    total["wall_seconds"] = time.perf_counter() - wall0
    traj = Trajectory(times=times, states=states, model=model, stats=total)

    from .diagnostics import build_report

    report = build_report(traj)
    return traj, report


def with_overrides(config: RunConfig, **kw) -> RunConfig:
    """Copy a config with fields replaced (validation re-runs)."""
    return replace(config, **kw)
