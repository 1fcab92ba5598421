"""Balance residuals, norm monitors, tail checks, empirical inequality
constants and weak-formulation residuals, computed from sampled runs.

The report rows combine exact coefficient-level quantities (total energy,
orthogonality sums) with grid-quadrature monitors.  Balance residuals are
measured against the accumulators the solver integrates along with the
state, so they converge at the integrator's order; the remaining gap at
fixed resolution is the spatial projection/aliasing defect, which is
spectrally small on resolved runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constitutive import stress_components_2d
from .discretization import norms
from .exponents import pressure_exponent
from .pressure import pressure_norm_monitor, reconstruct_pressure, weak_identity_residual
from .truncation import g_cut, g_cut_primitive, t_cut

__all__ = [
    "DiagnosticsReport",
    "build_report",
    "energy_balance",
    "entropy_balance",
    "apriori_monitors",
    "tail_check",
    "weak_residuals",
    "WeakFormRecorder",
    "korn_check",
    "interp_check",
    "initial_attainment",
]


@dataclass
class DiagnosticsReport:
    """Per-sample diagnostic time series plus run-level summary scalars."""

    columns: dict
    column_order: list
    meta: dict = field(default_factory=dict)

    def series(self, name):
        return self.columns[name]

    @property
    def times(self):
        return self.columns["t"]

    def max_energy_residual(self):
        e0 = self.meta["E0"]
        return float(np.abs(self.columns["energy_residual"]).max() / max(abs(e0), 1e-300))

    def row_dict(self, i):
        return {k: self.columns[k][i] for k in self.column_order}


def _state_row(model, y, eps):
    """One diagnostics row from a packed state."""
    c, d, acc = model.split(y)
    f = model.grid_fields(c, d)
    g = model.grid
    u, v, theta = f["u"], f["v"], f["theta"]

    row = {}
    row["E_kin"] = 0.5 * float(c @ c)
    row["int_theta"] = float(d[0]) * np.sqrt(g.domain.Lx)
    row["E_total"] = row["E_kin"] + row["int_theta"]
    for name, val in zip(
        ["acc_bdry", "acc_visc", "acc_force", "acc_ent_cond", "acc_ent_visc", "acc_ent_force"],
        acc,
    ):
        row[name] = float(val)
    row["min_theta"] = float(theta.min())
    row["max_theta"] = float(theta.max())
    row["max_speed_sq"] = float((u * u + v * v).max())
    u0, u1 = model.vel.wall_tangential(c)
    row["max_wall_speed"] = float(max(np.abs(u0).max(), np.abs(u1).max(), 0.0))
    row["entropy"] = g.integrate(np.log(theta + eps))
    row["min_dissipation"] = float(f["sd"].min())
    row["div_max"] = float(np.abs(model.vel.divergence(c)).max())

    p = model.params.p
    pp = p / (p - 1.0)
    grads = model.vel.velocity_gradients(c)
    row["norm_v_L2_sq"] = norms((u, v), g, 2.0) ** 2
    row["norm_v_W1p_p"] = norms((u, v), g, p, sobolev=1, grad_fields=grads) ** p
    row["norm_S_dual"] = norms((f["sxx"], f["sxy"], f["sxy"], f["syy"]), g, pp) ** pp
    row["norm_v_L5p3"] = norms((u, v), g, 5.0 * p / 3.0) ** (5.0 * p / 3.0)

    conv, transp, buoy = model.structural_sums(c, d)
    row["conv_orthogonality"] = conv
    row["transport_orthogonality"] = transp
    row["buoyancy_cancellation"] = buoy
    return row, f


def build_report(traj, *, q=None, r=None, m_ladder=None, with_pressure=None) -> DiagnosticsReport:
    """Assemble the full per-sample diagnostics table for a trajectory."""
    model = traj.model
    cfg = model.config
    q = cfg.diag_q if q is None else q
    r = cfg.diag_r if r is None else r
    m_ladder = tuple(cfg.m_ladder) if m_ladder is None else tuple(m_ladder)
    with_pressure = cfg.pressure if with_pressure is None else with_pressure
    if not (1.0 <= q < 5.0 / 3.0):
        raise ValueError(f"temperature monitor exponent q must lie in [1, 5/3), got {q}")
    if not (1.0 <= r < 5.0 / 4.0):
        raise ValueError(f"temperature gradient exponent r must lie in [1, 5/4), got {r}")
    eps = cfg.eps_floor

    rows = []
    for i in range(len(traj)):
        y = traj.states[i]
        row, fgrid = _state_row(model, y, eps)
        row["t"] = float(traj.times[i])
        c, d, acc = model.split(y)
        g = model.grid
        theta, gx, gy = fgrid["theta"], fgrid["gx"], fgrid["gy"]
        row["norm_theta_Lq_q"] = norms(theta, g, q) ** q
        row["norm_gradtheta_Lr_r"] = norms((gx, gy), g, r) ** r
        row["norm_logtheta_L1"] = g.integrate(np.abs(np.log(theta + eps)))
        for mm in m_ladder:
            above = theta > mm
            tail = np.where(above, mm * (gx * gx + gy * gy) / np.maximum(theta, 1e-300) ** 2, 0.0)
            row[f"tail_T_{mm:g}"] = g.integrate(tail)
        if with_pressure:
            pf = reconstruct_pressure(model, c, d)
            zp = pressure_exponent(model.params.p)
            row["pressure_norm_zp"] = pressure_norm_monitor(pf, zp)
            row["pressure_weak_residual"] = weak_identity_residual(pf, model, c, d)
        rows.append(row)

    order = list(rows[0].keys())
    order.remove("t")
    order = ["t"] + order
    columns = {k: np.array([rw[k] for rw in rows]) for k in order}

    e0 = columns["E_total"][0]
    ent0 = columns["entropy"][0]
    columns["energy_residual"] = columns["E_total"] + columns["acc_bdry"] - e0
    columns["kinetic_residual"] = (
        columns["E_kin"]
        + columns["acc_bdry"]
        + columns["acc_visc"]
        - columns["acc_force"]
        - columns["E_kin"][0]
    )
    columns["entropy_defect"] = (
        columns["entropy"]
        - ent0
        - (columns["acc_ent_cond"] + columns["acc_ent_visc"] - columns["acc_ent_force"])
    )
    order += ["energy_residual", "kinetic_residual", "entropy_defect"]

    meta = {
        "E0": float(e0),
        "entropy0": float(ent0),
        "q": q,
        "r": r,
        "m_ladder": m_ladder,
        "eps_floor": eps,
        "with_pressure": bool(with_pressure),
    }
    meta.update({f"stat_{k}": v for k, v in traj.stats.items()})
    return DiagnosticsReport(columns=columns, column_order=order, meta=meta)


def energy_balance(report: DiagnosticsReport):
    """Total-energy residual series and its max relative magnitude."""
    res = report.columns["energy_residual"]
    return res, float(np.abs(res).max() / max(abs(report.meta["E0"]), 1e-300))


def entropy_balance(report: DiagnosticsReport):
    """Entropy-balance defect series and max |defect|; production columns
    are nonnegative by construction of the integrands."""
    defect = report.columns["entropy_defect"]
    return defect, float(np.abs(defect).max())


def apriori_monitors(report: DiagnosticsReport, q=None, r=None):
    """Sup-in-time and trapezoid time-integrated uniform-estimate monitors."""
    cols = report.columns
    if q is not None and not (1.0 <= q < 5.0 / 3.0):
        raise ValueError(f"temperature monitor exponent q must lie in [1, 5/3), got {q}")
    if r is not None and not (1.0 <= r < 5.0 / 4.0):
        raise ValueError(f"temperature gradient exponent r must lie in [1, 5/4), got {r}")
    t = cols["t"]

    def t_int(name):
        return float(np.trapezoid(cols[name], t))

    return {
        "sup_v_L2_sq": float(cols["norm_v_L2_sq"].max()),
        "sup_theta_L1": float(np.abs(cols["int_theta"]).max()),
        "sup_logtheta_L1": float(cols["norm_logtheta_L1"].max()),
        "int_v_W1p_p": t_int("norm_v_W1p_p"),
        "int_S_dual": t_int("norm_S_dual"),
        "int_v_L5p3": t_int("norm_v_L5p3"),
        "int_theta_Lq_q": t_int("norm_theta_Lq_q"),
        "int_gradtheta_Lr_r": t_int("norm_gradtheta_Lr_r"),
        "boundary_dissipation": float(cols["acc_bdry"][-1]),
        "entropy_production_cond": float(cols["acc_ent_cond"][-1]),
        "entropy_production_visc": float(cols["acc_ent_visc"][-1]),
        "int_pressure_zp": t_int("pressure_norm_zp") if "pressure_norm_zp" in cols else None,
    }


def tail_check(report: DiagnosticsReport):
    """T(m) table: {m: series}; zero once m exceeds max(theta)."""
    ladder = report.meta["m_ladder"]
    return {mm: report.columns[f"tail_T_{mm:g}"] for mm in ladder}


def initial_attainment(traj, n_early=None):
    """|| v(t) - v(0) ||_2 + || theta(t) - theta(0) ||_1 over early samples."""
    model = traj.model
    g = model.grid
    n_early = len(traj) if n_early is None else min(n_early, len(traj))
    c0, d0, _ = traj.coefficients(0)
    th0 = model.temp.values(d0)
    out = []
    for i in range(n_early):
        c, d, _ = traj.coefficients(i)
        dv = float(np.linalg.norm(c - c0))
        dth = g.integrate(np.abs(model.temp.values(d) - th0))
        out.append(dv + dth)
    return np.array(out)


# -- empirical inequality constants -------------------------------------------


def korn_check(vel_basis, coef_samples, p):
    """Empirical Korn ratios ||v||_{1,p} / (||D(v)||_p + ||v||_2)."""
    g = vel_basis.grid
    ratios = []
    for c in coef_samples:
        c = np.asarray(c, dtype=float)
        if not np.any(c):
            continue
        u, v = vel_basis.velocity(c)
        grads = vel_basis.velocity_gradients(c)
        dxx, dxy, dyy = vel_basis.sym_gradient(c)
        lhs = norms((u, v), g, p, sobolev=1, grad_fields=grads)
        rhs = norms((dxx, dxy, dxy, dyy), g, p) + norms((u, v), g, 2.0)
        ratios.append(lhs / rhs)
    ratios = np.array(ratios)
    return {"max_ratio": float(ratios.max()), "ratios": ratios}


def interp_check(temp_basis, coef_samples, p, d=2):
    """Empirical constants of ||u||_s^s <= C ||u||_2^(2p/d) ||u||_{1,p}^p
    with s = p(d+2)/d, on scalar samples."""
    g = temp_basis.grid
    s = p * (d + 2.0) / d
    ratios = []
    for dd in coef_samples:
        dd = np.asarray(dd, dtype=float)
        if not np.any(dd):
            continue
        f = temp_basis.values(dd)
        gx, gy = temp_basis.gradient(dd)
        lhs = norms(f, g, s) ** s
        rhs = norms(f, g, 2.0) ** (2.0 * p / d) * norms(f, g, p, sobolev=1, grad_fields=(gx, gy)) ** p
        ratios.append(lhs / rhs)
    ratios = np.array(ratios)
    return {"max_ratio": float(ratios.max()), "ratios": ratios}


# -- weak-formulation residuals ------------------------------------------------


def _time_profile(times, t_end):
    """Smooth ramp with tau(0)=1, tau(T)=0 and vanishing end slopes."""
    s = times / t_end
    tau = (1.0 - s) ** 2 * (1.0 + 2.0 * s)
    dtau = -6.0 * s * (1.0 - s) / t_end
    return tau, dtau


def _random_temp_coef(temp, rng, decay=2.0):
    lam = temp.laplacian_eigenvalues()
    return rng.normal(size=temp.size) / (1.0 + lam) ** (decay / 2.0)


def _random_vel_coef(vel, rng, decay=2.0):
    pj = np.concatenate([[0], vel._pj]) if vel.include_mean else vel._pj
    pl = np.concatenate([[0], vel._pl]) if vel.include_mean else vel._pl
    lam = vel.grid.kappa_x[pj] ** 2 + (np.pi * pl) ** 2
    return rng.normal(size=vel.size) / (1.0 + lam) ** (decay / 2.0)


def weak_residuals(traj, *, test_bank_size=16, seed=0, with_pressure=True, nonneg_offset=0.1):
    """Space-time residuals of the weak formulations along a trajectory.

    Uses separable test functions tau(t) * Phi(x) with tau(T) = 0.  The
    momentum equality is tested against divergence-free fields and against
    gradient fields (which exercise the pressure term); the local-energy,
    internal-energy and entropy relations are tested against scalar fields,
    the latter two with nonnegative ones.  Time integrals use the trapezoid
    rule on the sampling cadence.

    Returns a dict with per-test arrays: 'momentum_rel' (relative equality
    residuals), 'local_energy_rel', 'internal_energy_slack' and
    'entropy_slack' (signed; nonnegative up to discretization error).
    """
    model = traj.model
    cfg = model.config
    temp, vel, g = model.temp, model.vel, model.grid
    rng = np.random.default_rng(seed)
    times = traj.times
    t_end = times[-1]
    tau, dtau = _time_profile(times, t_end)
    eps = cfg.eps_floor
    k = model.k

    ns = len(traj)
    fields = []
    pressures = []
    for i in range(ns):
        c, d, _ = model.split(traj.states[i])
        f = model.grid_fields(c, d)
        f["c"], f["d"] = c, d
        f["u0w"], f["u1w"] = model.vel.wall_tangential(c)
        fields.append(f)
        if with_pressure:
            pressures.append(reconstruct_pressure(model, c, d).values)

    def trap(series):
        return float(np.trapezoid(series, times))

    def trap_dt(series):
        """integral of tau'(t) * series(t) with the tau factor integrated
        exactly per subinterval (exact for time-constant series)."""
        mid = 0.5 * (series[1:] + series[:-1])
        return float(np.sum(np.diff(tau) * mid))

    out = {
        "momentum_rel": [],
        "local_energy_rel": [],
        "internal_energy_slack": [],
        "entropy_slack": [],
    }

    # --- momentum: divergence-free and gradient test fields -------------------
    for j in range(test_bank_size):
        use_gradient = j % 2 == 1
        if use_gradient:
            dphi = _random_temp_coef(temp, rng)
            dphi[0] = 0.0
            phix, phiy = temp.gradient(dphi)
            div_phi = -temp.values(temp.laplacian_eigenvalues() * dphi)
            a = temp.pack(dphi)
            lpi = temp._lpi
            gxx = temp._synth(temp._dx(temp._dx(a)), temp._yc)
            gxy = temp._synth(-temp._dx(a) * lpi, temp._ys)
            gyy = temp._synth(-a * lpi * lpi, temp._yc)
            gyx = gxy
            dxa = temp._dx(a)
            w0 = np.ones(temp.nl)
            w1 = (-1.0) ** np.arange(temp.nl)
            phi_wall0 = g.xc[: temp.nj].T @ (dxa[0] @ w0) + g.xs[: temp.nj].T @ (dxa[1] @ w0)
            phi_wall1 = g.xc[: temp.nj].T @ (dxa[0] @ w1) + g.xs[: temp.nj].T @ (dxa[1] @ w1)
        else:
            cphi = _random_vel_coef(vel, rng)
            phix, phiy = vel.velocity(cphi)
            div_phi = None
            gxx, gxy, gyx, gyy = vel.velocity_gradients(cphi)
            phi_wall0, phi_wall1 = vel.wall_tangential(cphi)

        terms = np.zeros((6, ns))
        v_pair = np.zeros(ns)
        for i, f in enumerate(fields):
            u, v = f["u"], f["v"]
            gk = g_cut(u * u + v * v, k)
            v_pair[i] = g.integrate(u * phix + v * phiy)
            conv = u * u * gk * gxx + u * v * gk * (gxy + gyx) + v * v * gk * gyy
            terms[1, i] = -tau[i] * g.integrate(conv)
            stress_t = f["sxx"] * gxx + f["sxy"] * (gxy + gyx) + f["syy"] * gyy
            terms[2, i] = tau[i] * g.integrate(stress_t)
            if cfg.alpha > 0.0:
                gb0 = g_cut(np.abs(f["u0w"]), k) * f["u0w"]
                gb1 = g_cut(np.abs(f["u1w"]), k) * f["u1w"]
                terms[3, i] = (
                    cfg.alpha
                    * tau[i]
                    * (g.integrate_x(gb0 * phi_wall0) + g.integrate_x(gb1 * phi_wall1))
                )
            tk_pos = t_cut(f["theta_pos"], k)
            terms[4, i] = -tau[i] * g.integrate(tk_pos * (model.fx * phix + model.fy * phiy))
            if use_gradient and with_pressure:
                terms[5, i] = -tau[i] * g.integrate(pressures[i] * div_phi)
        resid = -trap_dt(v_pair) + sum(trap(terms[jj]) for jj in range(1, 6))
        f0 = fields[0]
        resid -= tau[0] * v_pair[0]
        phi_norm = np.sqrt(g.integrate(phix * phix + phiy * phiy))
        floor = t_end * phi_norm * (1.0 + np.sqrt(2.0 * model.total_energy(traj.states[0])))
        scale = (
            np.abs(v_pair).max()
            + sum(abs(trap(np.abs(terms[jj]))) for jj in range(1, 6))
            + abs(tau[0] * v_pair[0])
        )
        out["momentum_rel"].append(resid / max(scale, 1e-3 * floor, 1e-30))

    # --- scalar-tested relations ------------------------------------------------
    for j in range(test_bank_size):
        dphi = _random_temp_coef(temp, rng)
        phi = temp.values(dphi)
        lo = phi.min()
        span = phi.max() - lo
        shift = -lo + nonneg_offset * (span + 1.0)
        dphi_n = dphi.copy()
        dphi_n[0] += shift * np.sqrt(g.domain.Lx)
        phi_n = phi + shift
        phix, phiy = temp.gradient(dphi)

        le, ie, en = np.zeros(ns), np.zeros(ns), np.zeros(ns)
        le_mag, ie_mag, en_mag = np.zeros(ns), np.zeros(ns), np.zeros(ns)
        half_pair, th_pair, eta_pair = np.zeros(ns), np.zeros(ns), np.zeros(ns)
        for i, f in enumerate(fields):
            u, v, theta = f["u"], f["v"], f["theta"]
            sd = f["sd"]
            kap = model.params.kappa(f["theta_pos"])
            gxt, gyt = f["gx"], f["gy"]
            vf = u * model.fx + v * model.fy
            tk = t_cut(theta, k)
            tk_pos = t_cut(f["theta_pos"], k)

            # local energy identity (truncated form)
            if with_pressure:
                sp = u * u + v * v
                flux = (
                    0.5 * (2.0 * g_cut(sp, k) * sp - g_cut_primitive(sp, k))
                    + tk
                    + pressures[i]
                )
                fxv = -u * flux + kap * gxt + f["sxx"] * u + f["sxy"] * v
                fyv = -v * flux + kap * gyt + f["sxy"] * u + f["syy"] * v
                half_pair[i] = g.integrate((0.5 * sp + theta) * phi)
                t2 = tau[i] * g.integrate(fxv * phix + fyv * phiy)
                t3 = 0.0
                if cfg.alpha > 0.0:
                    phi0w, phi1w = _scalar_walls(temp, dphi, g)
                    t3 = cfg.alpha * tau[i] * (
                        g.integrate_x(g_cut(np.abs(f["u0w"]), k) * f["u0w"] ** 2 * phi0w)
                        + g.integrate_x(g_cut(np.abs(f["u1w"]), k) * f["u1w"] ** 2 * phi1w)
                    )
                le[i] = t2 + t3
                le_mag[i] = tau[i] * g.integrate(np.abs(fxv * phix + fyv * phiy)) + abs(t3)

            # internal energy (nonnegative phi_n)
            th_pair[i] = g.integrate(theta * phi_n)
            i2 = -tau[i] * g.integrate(tk * (u * phix + v * phiy))
            i3 = tau[i] * g.integrate(kap * (gxt * phix + gyt * phiy))
            i4 = -tau[i] * g.integrate(sd * phi_n)
            i5 = tau[i] * g.integrate(tk_pos * vf * phi_n)
            ie[i] = i2 + i3 + i4 + i5
            ie_mag[i] = abs(i2) + abs(i3) + abs(i4) + abs(i5)

            # entropy (nonnegative phi_n); eta = log(theta + eps)
            eta = np.log(theta + eps)
            ex = gxt / (theta + eps)
            ey = gyt / (theta + eps)
            eta_pair[i] = g.integrate(eta * phi_n)
            e2 = -tau[i] * g.integrate(np.log(t_cut(f["theta_pos"], k) + eps) * (u * phix + v * phiy))
            e3 = tau[i] * g.integrate(kap * (ex * phix + ey * phiy))
            e4 = -tau[i] * g.integrate(kap * (ex * ex + ey * ey) * phi_n)
            e5 = -tau[i] * g.integrate(sd / (theta + eps) * phi_n)
            e6 = tau[i] * g.integrate(tk_pos / (theta + eps) * vf * phi_n)
            en[i] = e2 + e3 + e4 + e5 + e6
            en_mag[i] = abs(e2) + abs(e3) + abs(e4) + abs(e5) + abs(e6)

        if with_pressure:
            le_res = -trap_dt(half_pair) + sum_trap(le, times) - tau[0] * half_pair[0]
            le_scale = (
                np.abs(half_pair).max() + sum_trap(le_mag, times) + abs(tau[0] * half_pair[0])
            )
            out["local_energy_rel"].append(le_res / max(le_scale, 1e-30))
        ie_res = -trap_dt(th_pair) + sum_trap(ie, times) - tau[0] * th_pair[0]
        out["internal_energy_slack"].append(ie_res)
        en_res = -trap_dt(eta_pair) + sum_trap(en, times) - tau[0] * eta_pair[0]
        out["entropy_slack"].append(en_res)

    return {kk: np.array(vv) for kk, vv in out.items()}


def sum_trap(series, times):
    return float(np.trapezoid(series, times))


def _scalar_walls(temp, dphi, g):
    a = temp.pack(dphi)
    w0 = np.ones(temp.nl)
    w1 = (-1.0) ** np.arange(temp.nl)
    f0 = g.xc[: temp.nj].T @ (a[0] @ w0) + g.xs[: temp.nj].T @ (a[1] @ w0)
    f1 = g.xc[: temp.nj].T @ (a[0] @ w1) + g.xs[: temp.nj].T @ (a[1] @ w1)
    return f0, f1


# -- integrator-accurate weak residuals ----------------------------------------


class WeakFormRecorder:
    """Accumulates the space-time weak-form integrals through the ODE
    integrator itself, so the residuals are limited by integrator accuracy
    plus spatial projection error rather than the output sampling cadence.

    Momentum is tested against normalized divergence-free fields (the
    pressure term drops out); the internal-energy and entropy relations
    against nonnegative scalar fields.  ``residuals(...)`` integrates a
    fresh copy of the configured run and returns signed totals.
    """

    def __init__(self, model, *, bank_size=16, seed=0, nonneg_offset=0.1):
        self.model = model
        rng = np.random.default_rng(seed)
        vel, temp, g = model.vel, model.temp, model.grid
        self.nb = bank_size

        cph = []
        for _ in range(bank_size):
            cc = _random_vel_coef(vel, rng)
            cph.append(cc / np.linalg.norm(cc))
        self.cph = np.array(cph)
        self.mom_phi = np.array([vel.velocity(cc) for cc in self.cph])  # (nb, 2, nx, ny)
        self.mom_grad = np.array([vel.velocity_gradients(cc) for cc in self.cph])
        self.mom_walls = np.array([vel.wall_tangential(cc) for cc in self.cph])

        dph, phis, grads = [], [], []
        for _ in range(bank_size):
            dd = _random_temp_coef(temp, rng)
            dd /= np.linalg.norm(dd)
            vals = temp.values(dd)
            shift = -vals.min() + nonneg_offset * (vals.max() - vals.min() + 1.0)
            dd_n = dd.copy()
            dd_n[0] += shift * np.sqrt(g.domain.Lx)
            dph.append(dd_n)
            phis.append(vals + shift)
            grads.append(temp.gradient(dd))
        self.dph = np.array(dph)
        self.phi = np.array(phis)  # (nb, nx, ny), nonnegative
        self.phi_grad = np.array(grads)  # (nb, 2, nx, ny)

        self.extra = 3 * bank_size

    def _bank_q(self, stack, field):
        """Quadrature of field against every member of a (nb, nx, ny) stack."""
        return np.tensordot(stack, field * self.model.grid.weights, axes=([1, 2], [0, 1]))

    def rates(self, t, y, f, tau, dtau):
        model = self.model
        g = model.grid
        cfg = model.config
        k = model.k
        eps = cfg.eps_floor
        c, d, _ = model.split(y)
        u, v, theta = f["u"], f["v"], f["theta"]
        gk = g_cut(u * u + v * v, k)
        tk = t_cut(theta, k)
        tk_pos = t_cut(f["theta_pos"], k)
        kap = model.params.kappa(f["theta_pos"])
        vf = u * model.fx + v * model.fy
        sd = f["sd"]

        # momentum (div-free tests)
        mom = -dtau * (self.cph @ c)
        conv = (
            self._bank_q(self.mom_grad[:, 0], u * u * gk)
            + self._bank_q(self.mom_grad[:, 1] + self.mom_grad[:, 2], u * v * gk)
            + self._bank_q(self.mom_grad[:, 3], v * v * gk)
        )
        mom -= tau * conv
        strs = (
            self._bank_q(self.mom_grad[:, 0], f["sxx"])
            + self._bank_q(self.mom_grad[:, 1] + self.mom_grad[:, 2], f["sxy"])
            + self._bank_q(self.mom_grad[:, 3], f["syy"])
        )
        mom += tau * strs
        force = self._bank_q(self.mom_phi[:, 0], tk_pos * model.fx) + self._bank_q(
            self.mom_phi[:, 1], tk_pos * model.fy
        )
        mom -= tau * force
        if cfg.alpha > 0.0 and f["u0w"] is not None:
            gb0 = g_cut(np.abs(f["u0w"]), k) * f["u0w"]
            gb1 = g_cut(np.abs(f["u1w"]), k) * f["u1w"]
            mom += cfg.alpha * tau * g.wx * (self.mom_walls[:, 0] @ gb0 + self.mom_walls[:, 1] @ gb1)

        # internal energy (nonnegative tests, in-band so exact at semi-discrete level)
        ie = -dtau * (self.dph @ d)
        ie -= tau * (
            self._bank_q(self.phi_grad[:, 0], tk * u) + self._bank_q(self.phi_grad[:, 1], tk * v)
        )
        ie += tau * (
            self._bank_q(self.phi_grad[:, 0], kap * f["gx"])
            + self._bank_q(self.phi_grad[:, 1], kap * f["gy"])
        )
        ie -= tau * self._bank_q(self.phi, sd)
        ie += tau * self._bank_q(self.phi, tk_pos * vf)

        # entropy (renormalized; eta = log(theta + eps))
        denom = theta + eps
        eta = np.log(denom)
        ex, ey = f["gx"] / denom, f["gy"] / denom
        en = -dtau * self._bank_q(self.phi, eta)
        en -= tau * (
            self._bank_q(self.phi_grad[:, 0], np.log(tk_pos + eps) * u)
            + self._bank_q(self.phi_grad[:, 1], np.log(tk_pos + eps) * v)
        )
        en += tau * (
            self._bank_q(self.phi_grad[:, 0], kap * ex) + self._bank_q(self.phi_grad[:, 1], kap * ey)
        )
        en -= tau * self._bank_q(self.phi, kap * (ex * ex + ey * ey))
        en -= tau * self._bank_q(self.phi, sd / denom)
        en += tau * self._bank_q(self.phi, tk_pos / denom * vf)

        return np.concatenate([mom, ie, en])

    def residuals(self, initial, t_end, *, dt=0.0, rtol=1e-10, atol=1e-12):
        """Integrate from ``initial`` and return the signed weak-form totals.

        Returns a dict with 'momentum' (equality residuals), and
        'internal_energy' / 'entropy' slacks (>= 0 up to discretization
        error for the truncated system's equalities).
        """
        from .integrators import integrate_segment

        model = self.model
        t_final = float(t_end)

        def f_aug(t, yaug):
            y = yaug[: model.dim]
            dy, f = model.rhs_and_fields(t, y)
            tau, dtau = _profile_scalar(t, t_final)
            return np.concatenate([dy, self.rates(t, y, f, tau, dtau)])

        y0 = np.concatenate([initial.pack(), np.zeros(self.extra)])
        y1, _, stats = integrate_segment(
            f_aug, 0.0, y0, t_final, method="rk45", rtol=rtol, atol=atol, dt=dt
        )
        acc = y1[model.dim :]
        nb = self.nb
        tau0, _ = _profile_scalar(0.0, t_final)
        c0, d0, _ = model.split(initial.pack())
        theta0 = model.temp.values(d0)
        eps = model.config.eps_floor
        mom = acc[:nb] - tau0 * (self.cph @ c0)
        ie = acc[nb : 2 * nb] - tau0 * (self.dph @ d0)
        ent0 = self._bank_q(self.phi, np.log(theta0 + eps))
        en = acc[2 * nb :] - tau0 * ent0
        return {"momentum": mom, "internal_energy": ie, "entropy": en, "stats": stats}


def _profile_scalar(t, t_end):
    s = t / t_end
    tau = (1.0 - s) ** 2 * (1.0 + 2.0 * s)
    dtau = -6.0 * s * (1.0 - s) / t_end
    return tau, dtau
