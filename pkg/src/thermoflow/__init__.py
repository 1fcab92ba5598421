"""Spectral Galerkin simulator for an incompressible power-law fluid coupled
to a heat equation with dissipative heating, on a 2D periodic channel with
Navier-slip walls.

Subpackages
-----------
constitutive    power-law stress and Fourier heat flux, assumption checks
truncation      cut-off operators and their closed-form primitives
exponents       regularity-exponent bookkeeping and classification
discretization  divergence-free / Neumann tensor-product spectral bases
solver          two-level Galerkin ODE system and time integration
pressure        mean-zero pressure reconstruction via the Neumann Laplacian
diagnostics     energy/entropy balances, norm monitors, weak-form residuals
io_cli          config files, manifests, report emission, CLI entry point
"""

__version__ = "0.1.0"

from .constitutive import ConstitutiveParams, SymTensor, heat_flux, stress, verify_assumptions
from .exponents import (
    RegularityClassification,
    classify,
    convective_integrability,
    galerkin_admissible,
    pressure_exponent,
    temperature_window,
)
from .truncation import g_cut, g_cut_primitive, t_cut, t_cut_primitive

__all__ = [
    "ConstitutiveParams",
    "SymTensor",
    "stress",
    "heat_flux",
    "verify_assumptions",
    "t_cut",
    "g_cut",
    "t_cut_primitive",
    "g_cut_primitive",
    "classify",
    "RegularityClassification",
    "pressure_exponent",
    "temperature_window",
    "convective_integrability",
    "galerkin_admissible",
    "__version__",
]
