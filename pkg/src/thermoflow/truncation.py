"""Cut-off operators used to tame the convective and source terms.

``t_cut`` clamps a scalar at level ``k``; ``g_cut`` is a C^1 cut-off equal
to 1 below ``k`` and 0 above ``2k`` (cubic smoothstep bridge in between).
Both come with closed-form antiderivatives, which the energy bookkeeping
relies on.  All functions accept scalars or numpy arrays and are pure.

``k`` may be any level >= 1; ``k = inf`` is accepted and makes both
operators the identity / constant one, which is convenient for runs where
the truncation is meant to be inert.
"""

from __future__ import annotations

import numpy as np

__all__ = ["t_cut", "g_cut", "t_cut_primitive", "g_cut_primitive", "validate_level"]


def validate_level(k) -> float:
    """Check a truncation level and return it as a float (inf allowed)."""
    k = float(k)
    if np.isnan(k) or k < 1.0:
        raise ValueError(f"truncation level must satisfy k >= 1, got {k}")
    return k


def t_cut(z, k):
    """Clamp ``z`` to [-k, k]: sign(z) * min(k, |z|). Odd and 1-Lipschitz."""
    k = validate_level(k)
    z = np.asarray(z, dtype=float)
    out = np.clip(z, -k, k)
    return out if out.ndim else float(out)


def g_cut(z, k):
    """C^1 cut-off on z >= 0: 1 for z < k, 0 for z > 2k, cubic smoothstep between."""
    k = validate_level(k)
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("g_cut is defined for nonnegative arguments only")
    if np.isinf(k):
        out = np.ones_like(z)
        return out if out.ndim else 1.0
    s = np.clip((z - k) / k, 0.0, 1.0)
    out = 1.0 - s * s * (3.0 - 2.0 * s)
    return out if out.ndim else float(out)


def t_cut_primitive(z, k):
    """Antiderivative of ``t_cut`` with value 0 at 0.

    Equals z^2/2 for |z| <= k and k^2/2 + k(|z| - k) beyond; even in z.
    """
    k = validate_level(k)
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    if np.isinf(k):
        out = 0.5 * z * z
        return out if out.ndim else float(out)
    out = np.where(a <= k, 0.5 * z * z, 0.5 * k * k + k * (a - k))
    return out if out.ndim else float(out)


def g_cut_primitive(z, k):
    """Antiderivative of ``g_cut`` with value 0 at 0 (z for z <= k, 3k/2 for z >= 2k)."""
    k = validate_level(k)
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("g_cut_primitive is defined for nonnegative arguments only")
    if np.isinf(k):
        out = z.copy()
        return out if out.ndim else float(out)
    s = np.clip((z - k) / k, 0.0, 1.0)
    # integral of 1 - 3s^2 + 2s^3 from 0 to s, scaled by k
    bridge = k + k * (s - s**3 + 0.5 * s**4)
    out = np.where(z <= k, z, np.where(z >= 2.0 * k, 1.5 * k, bridge))
    return out if out.ndim else float(out)
