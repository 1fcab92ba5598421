"""Time integrators for the Galerkin ODE system.

Default is an embedded Dormand-Prince 5(4) pair with PI-free standard step
control (5th-order solution is propagated).  A fixed-step mode reuses the
same tableau for order-of-accuracy studies.  A backward-Euler stepper with
damped Picard iteration (and a finite-difference Newton-Krylov fallback) is
available for stiff runs.
"""

from __future__ import annotations

import numpy as np

__all__ = ["NumericalFailure", "integrate_segment", "INTEGRATORS"]


class NumericalFailure(RuntimeError):
    """Raised when a run cannot be continued (non-finite values, underflow)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


# Dormand-Prince 5(4) extended Butcher tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
RK_ORDER = 5


def _dp_step(f, t, y, h):
    """One Dormand-Prince step; returns (y5, error_estimate)."""
    k = [f(t, y)]
    for i in range(1, 7):
        yi = y + h * sum(a * kk for a, kk in zip(_DP_A[i], k))
        k.append(f(t + _DP_C[i] * h, yi))
    k = np.array(k)
    y5 = y + h * (_DP_B5 @ k)
    err = h * ((_DP_B5 - _DP_B4) @ k)
    return y5, err


def _error_norm(err, y_old, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _advance_rk_adaptive(f, t0, y0, t1, rtol, atol, h0, stats):
    t, y = t0, y0
    h = h0 if h0 and h0 > 0 else _initial_step(f, t0, y0, t1, rtol, atol)
    span = t1 - t0
    while t < t1 - 1e-14 * max(1.0, abs(t1)):
        h = min(h, t1 - t)
        if h < 1e-14 * max(span, abs(t), 1.0):
            raise NumericalFailure(
                "step size underflow",
                {"t": t, "h": h, "max|y|": float(np.abs(y).max())},
            )
        y_new, err = _dp_step(f, t, y, h)
        if not np.all(np.isfinite(y_new)):
            stats["rejected"] += 1
            h *= 0.25
            continue
        enorm = _error_norm(err, y, y_new, rtol, atol)
        if enorm <= 1.0:
            t += h
            y = y_new
            stats["steps"] += 1
            factor = 5.0 if enorm == 0.0 else min(5.0, max(0.2, 0.9 * enorm ** (-0.2)))
            h *= factor
        else:
            stats["rejected"] += 1
            h *= max(0.2, 0.9 * enorm ** (-0.2))
    return y, h


def _advance_rk_fixed(f, t0, y0, t1, dt, stats):
    t, y = t0, y0
    n_whole = int(np.floor((t1 - t0) / dt + 1e-9))
    for _ in range(n_whole):
        y, _ = _dp_step(f, t, y, dt)
        t += dt
        stats["steps"] += 1
        if not np.all(np.isfinite(y)):
            raise NumericalFailure("non-finite state in fixed-step run", {"t": t})
    rem = t1 - t
    if rem > 1e-12 * max(1.0, abs(t1)):
        y, _ = _dp_step(f, t, y, rem)
        stats["steps"] += 1
        if not np.all(np.isfinite(y)):
            raise NumericalFailure("non-finite state in fixed-step run", {"t": t1})
    return y, dt


def _initial_step(f, t0, y0, t1, rtol, atol):
    f0 = f(t0, y0)
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h = 0.01 * d0 / d1 if (d0 > 1e-5 and d1 > 1e-5) else 1e-6
    return min(h, 0.1 * (t1 - t0))


def _advance_backward_euler(f, t0, y0, t1, dt, rtol, atol, stats):
    """Backward Euler with damped Picard iteration per step.

    Falls back to a scipy Newton-Krylov solve when Picard stalls; halves the
    step (recursively, down to an underflow guard) when both fail.
    """
    t, y = t0, y0
    if not dt or dt <= 0:
        dt = (t1 - t0) / 100.0

    def solve_step(t_new, y_prev, h):
        g = lambda z: y_prev + h * f(t_new, z)
        z = y_prev.copy()
        damping = 1.0
        for _ in range(100):
            z_next = g(z)
            if not np.all(np.isfinite(z_next)):
                break
            delta = z_next - z
            z = z + damping * delta
            if np.sqrt(np.mean((delta / (atol + rtol * np.abs(z))) ** 2)) < 0.1:
                return z
            damping = max(0.25, damping * 0.95)
        from scipy.optimize import newton_krylov

        try:
            return newton_krylov(lambda z: z - g(z), y_prev, f_tol=atol + rtol, maxiter=50)
        except Exception:
            return None

    while t < t1 - 1e-14 * max(1.0, abs(t1)):
        h = min(dt, t1 - t)
        z = solve_step(t + h, y, h)
        attempts = 0
        while z is None:
            h *= 0.5
            attempts += 1
            if attempts > 40 or h < 1e-14 * max(1.0, t1 - t0):
                raise NumericalFailure("backward-Euler step failed to converge", {"t": t})
            z = solve_step(t + h, y, h)
        y = z
        t += h
        stats["steps"] += 1
    return y, dt


def integrate_segment(f, t0, y0, t1, *, method="rk45", rtol=1e-8, atol=1e-10, dt=0.0, h0=None):
    """Advance y' = f(t, y) from t0 to exactly t1.

    Returns (y1, h_suggest, stats).  ``dt > 0`` selects fixed-step operation
    for the RK method and the step size for backward Euler.
    """
    if t1 <= t0:
        return y0.copy(), h0, {"steps": 0, "rejected": 0}
    stats = {"steps": 0, "rejected": 0}
    if method == "rk45":
        if dt and dt > 0:
            y1, h = _advance_rk_fixed(f, t0, y0, t1, dt, stats)
        else:
            y1, h = _advance_rk_adaptive(f, t0, y0, t1, rtol, atol, h0, stats)
    elif method == "backward-euler":
        y1, h = _advance_backward_euler(f, t0, y0, t1, dt, rtol, atol, stats)
    else:
        raise ValueError(f"unknown integrator {method!r}")
    return y1, h, stats


INTEGRATORS = ("rk45", "backward-euler")
