"""Viscous stress and heat flux closures, plus structural-assumption checks.

The stress family is the power-law prototype

    S(theta, D) = nu(theta) * (eps_reg + |D|^2)^((p-2)/2) * D,

which is monotone in D and satisfies the coercivity/growth bounds

    S : D >= nu_lo |D|^p - nu_hi,      |S| <= nu_hi (1 + |D|)^(p-1),

for eps_reg in [0, 1].  The heat flux is Fourier, q = -kappa(theta) grad(theta),
with kappa bounded between kappa_lo and kappa_hi.  ``verify_assumptions``
samples random tensor pairs and reports monotonicity / coercivity / growth
slacks so a configured law can be checked empirically.

Everything here is stateless and vectorized: ``theta`` and the tensor
components may be scalars or arrays of matching shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "ConstitutiveParams",
    "SymTensor",
    "AssumptionReport",
    "stress",
    "stress_components_2d",
    "heat_flux",
    "verify_assumptions",
]


def _profile_const(theta):
    return np.ones_like(np.asarray(theta, dtype=float))


def _profile_rational_bounded(theta):
    theta = np.asarray(theta, dtype=float)
    return 1.0 + 1.0 / (1.0 + theta)


#: name -> (callable, lower bound, upper bound on [0, inf))
PROFILES: dict[str, tuple[Callable, float, float]] = {
    "const": (_profile_const, 1.0, 1.0),
    "rational-bounded": (_profile_rational_bounded, 1.0, 2.0),
}


@dataclass(frozen=True)
class ConstitutiveParams:
    """Growth exponent, bounds and temperature profiles of the material laws.

    ``nu_profile`` / ``kappa_profile`` are tags into :data:`PROFILES`; the
    associated bounds must bracket the profile on [0, inf).
    """

    p: float = 2.0
    nu_lo: float = 1.0
    nu_hi: float = 1.0
    kappa_lo: float = 1.0
    kappa_hi: float = 1.0
    eps_reg: float = 0.0
    nu_profile: str = "const"
    kappa_profile: str = "const"
    dim: int = 2

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p <= 1.0:
            raise ValueError(f"growth exponent must satisfy p > 1, got {self.p}")
        if not (0.0 < self.nu_lo <= self.nu_hi < np.inf):
            raise ValueError("stress bounds must satisfy 0 < nu_lo <= nu_hi < inf")
        if not (0.0 < self.kappa_lo <= self.kappa_hi < np.inf):
            raise ValueError("conductivity bounds must satisfy 0 < kappa_lo <= kappa_hi < inf")
        if not (0.0 <= self.eps_reg <= 1.0):
            raise ValueError("stress regularization must lie in [0, 1]")
        if self.dim not in (2, 3):
            raise ValueError("spatial dimension must be 2 or 3")
        if self.p <= 2.0 * self.dim / (self.dim + 2.0):
            raise ValueError(
                f"p={self.p} is not admissible in dimension {self.dim}: "
                f"requires p > 2d/(d+2) = {2.0 * self.dim / (self.dim + 2.0)}"
            )
        for tag in (self.nu_profile, self.kappa_profile):
            if tag not in PROFILES:
                raise ValueError(f"unknown profile tag {tag!r}; known: {sorted(PROFILES)}")
        # profiles must respect the declared bounds (sampled check)
        thetas = np.concatenate([[0.0], np.logspace(-6, 6, 200)])
        nu_vals = self.nu(thetas)
        if nu_vals.min() < self.nu_lo - 1e-12 or nu_vals.max() > self.nu_hi + 1e-12:
            raise ValueError("nu profile leaves the declared [nu_lo, nu_hi] bounds")
        kp_vals = self.kappa(thetas)
        if kp_vals.min() < self.kappa_lo - 1e-12 or kp_vals.max() > self.kappa_hi + 1e-12:
            raise ValueError("kappa profile leaves the declared [kappa_lo, kappa_hi] bounds")

    def nu(self, theta):
        base, lo, hi = PROFILES[self.nu_profile]
        # scale the unit-amplitude profile so "const" tracks nu_lo exactly
        scale = self.nu_lo if self.nu_profile == "const" else 1.0
        return scale * base(theta)

    def kappa(self, theta):
        base, lo, hi = PROFILES[self.kappa_profile]
        scale = self.kappa_lo if self.kappa_profile == "const" else 1.0
        return scale * base(theta)


class SymTensor:
    """Symmetric d x d tensor stored by its upper triangle (d = 2 or 3)."""

    __slots__ = ("dim", "tri")

    def __init__(self, matrix=None, *, tri=None, dim=None):
        if matrix is not None:
            m = np.asarray(matrix, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 3):
                raise ValueError("SymTensor expects a 2x2 or 3x3 matrix")
            if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * (1.0 + np.abs(m).max())):
                raise ValueError("SymTensor input must be symmetric")
            self.dim = m.shape[0]
            iu = np.triu_indices(self.dim)
            self.tri = 0.5 * (m + m.T)[iu]
        else:
            self.dim = int(dim)
            self.tri = np.asarray(tri, dtype=float)

    @classmethod
    def zero(cls, dim):
        n = dim * (dim + 1) // 2
        return cls(tri=np.zeros(n), dim=dim)

    def as_matrix(self):
        m = np.zeros((self.dim, self.dim))
        iu = np.triu_indices(self.dim)
        m[iu] = self.tri
        return m + np.triu(m, 1).T

    def norm(self):
        """Frobenius norm."""
        return float(np.sqrt(self.ddot(self)))

    def ddot(self, other):
        """Full contraction A : B."""
        return float(np.sum(self.as_matrix() * other.as_matrix()))

    def __add__(self, other):
        return SymTensor(tri=self.tri + other.tri, dim=self.dim)

    def __sub__(self, other):
        return SymTensor(tri=self.tri - other.tri, dim=self.dim)

    def __mul__(self, a):
        return SymTensor(tri=self.tri * float(a), dim=self.dim)

    __rmul__ = __mul__

    def __repr__(self):
        return f"SymTensor(dim={self.dim}, tri={self.tri!r})"


def _check_finite(name, value):
    if not np.all(np.isfinite(value)):
        raise ValueError(f"{name} contains non-finite entries")


def _stress_factor(theta, norm_sq, params: ConstitutiveParams):
    """nu(theta) * (eps_reg + |D|^2)^((p-2)/2), with the 0^negative case forced to 0."""
    base = np.asarray(params.eps_reg + norm_sq, dtype=float)
    expo = 0.5 * (params.p - 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        fac = np.where(base > 0.0, base**expo, 0.0)
    return params.nu(theta) * fac


def stress(theta, D: SymTensor, params: ConstitutiveParams) -> SymTensor:
    """Power-law viscous stress S(theta, D); S(theta, 0) = 0 for every p."""
    theta = float(theta)
    _check_finite("theta", theta)
    if theta < 0.0:
        raise ValueError(f"temperature must be nonnegative, got {theta}")
    _check_finite("D", D.tri)
    norm_sq = D.ddot(D)
    fac = float(_stress_factor(theta, norm_sq, params))
    return SymTensor(tri=fac * D.tri, dim=D.dim)


def stress_components_2d(theta, dxx, dxy, dyy, params: ConstitutiveParams):
    """Vectorized 2D stress on component arrays; returns (sxx, sxy, syy)."""
    norm_sq = dxx * dxx + 2.0 * dxy * dxy + dyy * dyy
    fac = _stress_factor(theta, norm_sq, params)
    return fac * dxx, fac * dxy, fac * dyy


def heat_flux(theta, grad_theta, params: ConstitutiveParams):
    """Fourier heat flux q = -kappa(theta) * grad(theta)."""
    grad_theta = np.asarray(grad_theta, dtype=float)
    _check_finite("theta", theta)
    _check_finite("grad_theta", grad_theta)
    if np.any(np.asarray(theta) < 0.0):
        raise ValueError("temperature must be nonnegative")
    return -params.kappa(theta) * grad_theta


def _random_sym(rng, n, dim, scale):
    a = rng.normal(size=(n, dim, dim), scale=scale)
    return 0.5 * (a + np.transpose(a, (0, 2, 1)))


def _batch_stress(theta, d_mats, params):
    norm_sq = np.einsum("nij,nij->n", d_mats, d_mats)
    fac = _stress_factor(theta, norm_sq, params)
    return fac[:, None, None] * d_mats


@dataclass
class AssumptionReport:
    """Outcome of sampled monotonicity / coercivity / growth checks."""

    samples: int
    monotonicity_violations: int
    coercivity_violations: int
    growth_violations: int
    worst_monotonicity: float
    worst_coercivity: float
    worst_growth: float
    tol: float
    ok: bool = field(init=False)

    def __post_init__(self):
        self.ok = (
            self.monotonicity_violations == 0
            and self.coercivity_violations == 0
            and self.growth_violations == 0
        )


def verify_assumptions(
    params: ConstitutiveParams,
    sample_count: int,
    rng_seed: int = 0,
    *,
    dim: int | None = None,
    scale: float = 3.0,
    tol: float = 1e-12,
    stress_fn=None,
) -> AssumptionReport:
    """Sample (theta, D1, D2) triples and check the structural assumptions.

    Slacks are measured relative to the natural magnitude of each inequality;
    anything below ``-tol`` (relative) counts as a violation.  ``stress_fn``
    may override the law under test (signature: (theta_batch, D_batch) ->
    S_batch on stacked matrices), which the tests use to confirm that broken
    laws are flagged.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    dim = params.dim if dim is None else dim
    rng = np.random.default_rng(rng_seed)
    theta = np.abs(rng.normal(size=sample_count, scale=2.0))
    d1 = _random_sym(rng, sample_count, dim, scale)
    d2 = _random_sym(rng, sample_count, dim, scale)

    law = stress_fn if stress_fn is not None else (lambda t, d: _batch_stress(t, d, params))
    s1 = law(theta, d1)
    s2 = law(theta, d2)

    n1 = np.sqrt(np.einsum("nij,nij->n", d1, d1))
    n2 = np.sqrt(np.einsum("nij,nij->n", d2, d2))

    mono = np.einsum("nij,nij->n", s1 - s2, d1 - d2)
    mono_scale = (1.0 + n1 + n2) ** params.p
    mono_bad = mono < -tol * mono_scale

    sd = np.einsum("nij,nij->n", s1, d1)
    coer = sd - params.nu_lo * n1**params.p + params.nu_hi
    coer_scale = params.nu_lo * n1**params.p + params.nu_hi
    coer_bad = coer < -tol * coer_scale

    s_norm = np.sqrt(np.einsum("nij,nij->n", s1, s1))
    grow_scale = params.nu_hi * (1.0 + n1) ** (params.p - 1.0)
    grow = grow_scale - s_norm
    grow_bad = grow < -tol * grow_scale

    return AssumptionReport(
        samples=sample_count,
        monotonicity_violations=int(mono_bad.sum()),
        coercivity_violations=int(coer_bad.sum()),
        growth_violations=int(grow_bad.sum()),
        worst_monotonicity=float((mono / mono_scale).min()),
        worst_coercivity=float((coer / coer_scale).min()),
        worst_growth=float((grow / grow_scale).min()),
        tol=tol,
    )
