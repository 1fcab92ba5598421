"""Exponent bookkeeping: admissibility, the regularity ladder, pressure and
temperature integrability windows, and the convective-integrability check.

All pure arithmetic.  The d=3 ladder has strict thresholds at 6/5, 8/5, 9/5
and an inclusive one at 11/5; for d != 3 only the Galerkin admissibility
condition p > 2d/(d+2) is meaningful and the remaining flags are None.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "RegularityClassification",
    "classify",
    "galerkin_admissible",
    "pressure_exponent",
    "temperature_window",
    "convective_integrability",
    "convective_lhs",
    "convective_eps_threshold",
]


@dataclass(frozen=True)
class RegularityClassification:
    """Which solution notions are available at a given growth exponent."""

    p: float
    d: int
    admissible: bool
    energy_equality: bool | None
    suitable: bool | None
    internal_energy_equality: bool | None

    def flags(self):
        return (
            self.admissible,
            self.energy_equality,
            self.suitable,
            self.internal_energy_equality,
        )


def galerkin_admissible(p: float, d: int) -> bool:
    """Admissibility of the Galerkin construction: p > 2d/(d+2), strictly."""
    if d not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {d}")
    return p > 2.0 * d / (d + 2.0)


def classify(p: float, d: int = 3) -> RegularityClassification:
    """Classify the solution ladder at exponent ``p``.

    For d=3: weak solution for p > 6/5, energy equality for p > 8/5,
    suitable weak solution for p > 9/5, entropy/internal-energy equalities
    for p >= 11/5 (inclusive).  The flags are nested.
    """
    if not np.isfinite(p) or p <= 1.0:
        raise ValueError(f"growth exponent must satisfy p > 1, got {p}")
    if d != 3:
        return RegularityClassification(
            p=p,
            d=d,
            admissible=galerkin_admissible(p, d),
            energy_equality=None,
            suitable=None,
            internal_energy_equality=None,
        )
    return RegularityClassification(
        p=p,
        d=3,
        admissible=p > 6.0 / 5.0,
        energy_equality=p > 8.0 / 5.0,
        suitable=p > 9.0 / 5.0,
        internal_energy_equality=p >= 11.0 / 5.0,
    )


def pressure_exponent(p: float) -> float:
    """Integrability exponent of the reconstructed pressure:
    z' = min(p/(p-1), 5p/6, 5/3), defined for p > 6/5."""
    if not p > 6.0 / 5.0:
        raise ValueError(f"pressure exponent requires p > 6/5, got {p}")
    return min(p / (p - 1.0), 5.0 * p / 6.0, 5.0 / 3.0)


def temperature_window(r: float) -> tuple[float, float]:
    """Companion exponents (q, sigma) to a gradient exponent r in [1, 5/4):
    q = (5-r)/(3(2-r)) < 5/3 and sigma = 1 - (5-4r)/(3r) < 1."""
    if not (1.0 <= r < 1.25):
        raise ValueError(f"gradient exponent must lie in [1, 5/4), got {r}")
    q = (5.0 - r) / (3.0 * (2.0 - r))
    sigma = 1.0 - (5.0 - 4.0 * r) / (3.0 * r)
    return q, sigma


def convective_lhs(p: float, eps: float, sigma) -> np.ndarray:
    """Left side of the convective-integrability constraint at interpolation
    parameter sigma: 3*eps/(5p-6) + 3*(2 + 2*eps - sigma)/(4*sigma)."""
    sigma = np.asarray(sigma, dtype=float)
    return 3.0 * eps / (5.0 * p - 6.0) + 3.0 * (2.0 + 2.0 * eps - sigma) / (4.0 * sigma)


def convective_eps_threshold(p: float) -> float:
    """Largest eps for which the constraint admits some sigma in (0, 1).

    The left side is strictly decreasing in sigma, so feasibility is decided
    by its limit at sigma -> 1: 3*eps/(5p-6) + 3*(1+2*eps)/4 <= 1, i.e.
    eps < (5p-6)/(30p-24).
    """
    if not p > 6.0 / 5.0:
        raise ValueError(f"requires p > 6/5, got {p}")
    return (5.0 * p - 6.0) / (30.0 * p - 24.0)


def convective_integrability(p: float, eps: float, *, grid: int = 10**4) -> float | None:
    """Return a sigma in (0, 1) satisfying the constraint, or None.

    The left side decreases monotonically in sigma, so the near-1 end of a
    fine grid realizes its infimum; the returned sigma is the grid minimizer
    when feasible.
    """
    if not p > 6.0 / 5.0:
        raise ValueError(f"requires p > 6/5, got {p}")
    if eps <= 0.0:
        raise ValueError(f"requires eps > 0, got {eps}")
    sigmas = np.linspace(1.0 / grid, 1.0 - 1e-12, grid)
    vals = convective_lhs(p, eps, sigmas)
    i = int(np.argmin(vals))
    if vals[i] <= 1.0:
        return float(sigmas[i])
    return None
