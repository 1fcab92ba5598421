"""Initial-data presets.

Each preset supplies callables (on coordinate meshes) for the initial
velocity and temperature plus config defaults that make the scenario
behave as named.  User-provided config keys always win over the preset
defaults.

Note on the buoyancy sign: with the momentum source +theta*f and the
temperature sink -theta*(v.f), a warm anomaly rises (and cools as it
rises) when f points along +e2.  The ``buoyant-blob`` preset therefore
defaults to f = (0, +1); the global config default remains f = (0, -1),
which is the pure-weight convention where a warm anomaly sinks.
"""

from __future__ import annotations

import numpy as np

__all__ = ["SCENARIOS", "scenario_defaults", "initial_fields"]


def _theta_const(value):
    return lambda x, y: np.full_like(x, float(value))


def _v_zero(x, y):
    return np.zeros_like(x), np.zeros_like(x)


def _blob_theta(amp, width, x0, y0, Lx):
    def fn(x, y):
        # periodic x-distance through a sine chord; smooth to machine precision
        dx = (Lx / np.pi) * np.sin(np.pi * (x - x0) / Lx)
        return 1.0 + amp * np.exp(-((dx**2 + (y - y0) ** 2)) / width**2)

    return fn


def _shear_v(amp):
    def fn(x, y):
        # first streamfunction mode: u ~ cos(pi y), v = 0
        return amp * np.cos(np.pi * y), np.zeros_like(x)

    return fn


def _conduction_theta(amp):
    return lambda x, y: 1.5 + amp * np.cos(np.pi * y)


SCENARIOS = ("steady", "buoyant-blob", "shear-decay", "conduction")


def scenario_defaults(name: str, cfg: dict) -> dict:
    """Config defaults contributed by a preset (before user overrides)."""
    if name == "steady":
        return {"fx": 0.0, "fy": -1.0, "alpha": 0.0}
    if name == "buoyant-blob":
        return {"fx": 0.0, "fy": 1.0, "alpha": 0.0}
    if name == "shear-decay":
        return {"fx": 0.0, "fy": 0.0, "alpha": 0.0}
    if name == "conduction":
        return {"fx": 0.0, "fy": -1.0, "alpha": 0.0, "moll_radius": 0.0}
    raise ValueError(f"unknown scenario {name!r}; known: {SCENARIOS}")


def initial_fields(name: str, cfg) -> tuple:
    """(v0_callable, theta0_callable) for a preset under resolved config."""
    if name == "steady":
        return _v_zero, _theta_const(1.0)
    if name == "buoyant-blob":
        x0 = cfg.blob_x0 if cfg.blob_x0 is not None else 0.5 * cfg.Lx
        return _v_zero, _blob_theta(cfg.blob_amp, cfg.blob_width, x0, cfg.blob_y0, cfg.Lx)
    if name == "shear-decay":
        return _shear_v(cfg.shear_amp), _theta_const(1.0)
    if name == "conduction":
        return _v_zero, _conduction_theta(cfg.conduction_amp)
    raise ValueError(f"unknown scenario {name!r}; known: {SCENARIOS}")
