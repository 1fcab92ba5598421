import numpy as np
import pytest

from thermoflow.exponents import (
    classify,
    convective_eps_threshold,
    convective_integrability,
    convective_lhs,
    galerkin_admissible,
    pressure_exponent,
    temperature_window,
)

LADDER = [
    (1.19, (False, False, False, False)),
    (1.20, (False, False, False, False)),
    (1.21, (True, False, False, False)),
    (1.59, (True, False, False, False)),
    (1.60, (True, False, False, False)),
    (1.61, (True, True, False, False)),
    (1.79, (True, True, False, False)),
    (1.80, (True, True, False, False)),
    (1.81, (True, True, True, False)),
    (2.19, (True, True, True, False)),
    (2.20, (True, True, True, True)),
    (2.21, (True, True, True, True)),
]


@pytest.mark.parametrize("p,flags", LADDER)
def test_ladder_thresholds(p, flags):
    assert classify(p, 3).flags() == flags


def test_flags_nested():
    for p in np.linspace(1.01, 4.0, 123):
        a, e, s, i = classify(p, 3).flags()
        assert (not i or s) and (not s or e) and (not e or a)


def test_exact_boundaries():
    # strict at 6/5, 8/5, 9/5; inclusive at 11/5
    assert not classify(6 / 5, 3).admissible
    assert not classify(8 / 5, 3).energy_equality
    assert not classify(9 / 5, 3).suitable
    assert classify(11 / 5, 3).internal_energy_equality


def test_classify_other_dimension():
    cls = classify(1.1, 2)
    assert cls.admissible  # threshold is 1 in 2D
    assert cls.energy_equality is None and cls.suitable is None
    with pytest.raises(ValueError):
        classify(0.9)


def test_galerkin_admissible():
    assert galerkin_admissible(1.1, 2)
    assert not galerkin_admissible(1.1, 3)
    assert not galerkin_admissible(6 / 5, 3)
    with pytest.raises(ValueError):
        galerkin_admissible(2.0, 4)


def test_pressure_exponent_values():
    assert pressure_exponent(2.0) == pytest.approx(5 / 3, rel=1e-15)
    assert pressure_exponent(3.0) == pytest.approx(3 / 2, rel=1e-15)
    assert pressure_exponent(1.3) == pytest.approx(13 / 12, rel=1e-15)
    with pytest.raises(ValueError):
        pressure_exponent(1.2)


def test_pressure_exponent_shape():
    ps = np.linspace(1.21, 6.0, 400)
    zs = np.array([pressure_exponent(p) for p in ps])
    assert np.all(zs <= 5 / 3 + 1e-15)
    assert np.all(zs > 1.0)
    # z' = min(p', 5p/6, 5/3) caps at 5/3 exactly on [2, 5/2]: below 2 the
    # 5p/6 branch binds, above 5/2 the conjugate-exponent branch does
    for p, z in zip(ps, zs):
        if 2.0 <= p <= 2.5:
            assert z == pytest.approx(5 / 3, rel=1e-14)
        else:
            assert z < 5 / 3
    # continuity / piecewise smoothness: small steps give small changes
    assert np.abs(np.diff(zs)).max() < 0.05


def test_temperature_window_values():
    q, sigma = temperature_window(1.0)
    assert q == pytest.approx(4 / 3, rel=1e-15)
    assert sigma == pytest.approx(2 / 3, rel=1e-15)
    q, sigma = temperature_window(1.2)
    assert q == pytest.approx(3.8 / 2.4, rel=1e-12)
    assert sigma == pytest.approx(1 - 0.2 / 3.6, rel=1e-12)
    # cross-check by re-deriving r from q
    r_back = (6 * q - 5) / (3 * q - 1)
    assert r_back == pytest.approx(1.2, rel=1e-12)
    with pytest.raises(ValueError):
        temperature_window(1.25)
    for r in np.linspace(1.0, 1.2499, 50):
        q, sigma = temperature_window(r)
        assert q < 5 / 3 and sigma < 1.0


def _scan_feasible(p, eps, n=10**4):
    sig = np.linspace(1.0 / n, 1.0 - 1e-12, n)
    return bool((convective_lhs(p, eps, sig) <= 1.0).any())


@pytest.mark.parametrize("p", [1.3, 1.5, 2.0, 2.5, 3.0])
def test_convective_integrability_against_scan(p):
    """The returned sigma agrees with a brute-force scan on both sides of
    the sharp feasibility threshold eps < (5p-6)/(30p-24)."""
    eps_max = convective_eps_threshold(p)
    feasible_eps = 0.99 * eps_max
    sigma = convective_integrability(p, feasible_eps)
    assert sigma is not None
    assert 0.0 < sigma < 1.0
    assert convective_lhs(p, feasible_eps, sigma) <= 1.0 + 1e-12
    assert _scan_feasible(p, feasible_eps)

    infeasible_eps = 1.01 * eps_max + 0.05
    assert convective_integrability(p, infeasible_eps) is None
    assert not _scan_feasible(p, infeasible_eps)


def test_convective_integrability_examples():
    # p=2: sharp threshold is 1/9, so eps=0.1 is feasible and eps=0.5 is not
    assert convective_integrability(2.0, 0.1) is not None
    assert convective_integrability(2.0, 0.5) is None
    assert not _scan_feasible(2.0, 0.5)
    with pytest.raises(ValueError):
        convective_integrability(1.1, 0.1)
    with pytest.raises(ValueError):
        convective_integrability(2.0, 0.0)


def test_convective_threshold_is_sharp():
    for p in (1.3, 1.7, 2.0, 2.5, 3.0):
        eps_max = convective_eps_threshold(p)
        assert _scan_feasible(p, 0.995 * eps_max)
        assert not _scan_feasible(p, 1.005 * eps_max)
