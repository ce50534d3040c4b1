import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sumrule_lab import (JacobiCoeffs, add_atoms, canonical_from_jacobi, jacobi_from_canonical,
                         jacobi_from_measure, jacobi_from_z, jacobi_measure, make_reference, mix,
                         z_from_jacobi)
from sumrule_lab.oprl import (SupportError, TrivialMeasureError, evaluate_oprl,
                              finite_jacobi_spectral_measure, gauss_rule)


def _zeta_jacobi(u):
    # oracle: zeta_k = q_{k-1} p_k on [0, 1], rescaled to [-2, 2]
    p = (1 + np.asarray(u)) / 2
    q = np.concatenate([[1.0], 1 - p[:-1]])
    z = q * p
    n = len(u) // 2
    b = np.array([-2 + 4 * ((z[2 * k - 1] if k else 0) + z[2 * k]) for k in range(n)])
    a = np.sqrt(16 * z[0:2 * n - 1:2] * z[1:2 * n:2])
    return b, a


def test_semicircle_and_arcsine_coefficients():
    J = jacobi_from_measure(make_reference("SC"), 30)
    assert np.allclose(J.b, 0, atol=1e-13) and np.allclose(J.a, 1, atol=1e-13)
    J = jacobi_from_measure(make_reference("Arcsine"), 30)
    assert np.allclose(J.b, 0, atol=1e-13)
    assert J.a[0] == pytest.approx(math.sqrt(2), abs=1e-13)
    assert np.allclose(J.a[1:], 1, atol=1e-13)


@pytest.mark.parametrize("tau", [0.2, 0.5, 1.0])
def test_marchenko_pastur_coefficients(tau):
    J = jacobi_from_measure(make_reference("MP", tau=tau), 25)
    assert J.b[0] == pytest.approx(1, abs=1e-12)
    assert np.allclose(J.b[1:], 1 + tau, atol=1e-12)
    assert np.allclose(J.a, math.sqrt(tau), atol=1e-12)
    z = z_from_jacobi(J)
    assert np.allclose(z[:40], np.tile([1, tau], 20), atol=1e-12)


def test_canonical_moments_of_semicircle():
    # Beta(3/2, 3/2) on [0, 1]: p_odd = 1/2, p_2k = k / (2k + 2)
    u = canonical_from_jacobi(jacobi_from_measure(make_reference("SC"), 20))[:38]
    k = np.arange(1, 20)
    assert np.allclose(u[0::2], 0, atol=1e-12)
    assert np.allclose(u[1::2], 2 * k / (2 * k + 2) - 1, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-0.95, 0.95), min_size=4, max_size=30).filter(lambda v: len(v) % 2 == 0))
def test_canonical_against_zeta_oracle(u):
    J = jacobi_from_canonical(np.array(u))
    b, a = _zeta_jacobi(u)
    assert np.allclose(J.b[:len(b)], b, atol=1e-12)
    assert np.allclose(J.a[:len(a)], a, atol=1e-12)
    assert np.allclose(canonical_from_jacobi(J)[:len(u)], u, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.05, 3.0), min_size=2, max_size=30))
def test_z_round_trip(z):
    z = np.array(z[:len(z) // 2 * 2])
    J = jacobi_from_z(z)
    assert np.allclose(z_from_jacobi(J)[:len(z)], z, rtol=1e-10)


def test_canonical_leaving_support_raises():
    with pytest.raises(SupportError):
        canonical_from_jacobi(JacobiCoeffs(np.array([2.5, 0.0]), np.array([1.0])))


def test_finite_measure_examples():
    mu = finite_jacobi_spectral_measure(JacobiCoeffs(np.zeros(3), np.ones(2)))
    x = sorted(x for x, _ in mu.atoms)
    assert x == pytest.approx([-math.sqrt(2), 0, math.sqrt(2)], abs=1e-13)
    assert sorted(m for _, m in mu.atoms) == pytest.approx([0.25, 0.25, 0.5], abs=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10 ** 6))
def test_finite_measure_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    J = JacobiCoeffs(rng.uniform(-1, 1, n), rng.uniform(0.3, 1.5, n - 1))
    back = jacobi_from_measure(finite_jacobi_spectral_measure(J), n)
    assert np.allclose(back.b, J.b, atol=1e-10) and np.allclose(back.a, J.a, atol=1e-10)


def test_too_many_coefficients_for_finite_measure():
    mu = finite_jacobi_spectral_measure(JacobiCoeffs(np.zeros(3), np.ones(2)))
    with pytest.raises(TrivialMeasureError):
        jacobi_from_measure(mu, 5)


def test_evaluate_oprl():
    J = jacobi_from_measure(make_reference("SC"), 10)
    # Chebyshev U_n(x / 2)
    assert evaluate_oprl(J, np.array(2.0), 8) == pytest.approx(np.arange(1, 10), abs=1e-11)
    Ja = jacobi_from_measure(make_reference("Arcsine"), 10)
    x = np.linspace(-2, 2, 7)
    P = evaluate_oprl(Ja, x, 3, monic=True)
    assert np.allclose(P[2], x * x - 2, atol=1e-12)
    assert np.allclose(P[3], x ** 3 - 3 * x, atol=1e-12)


def test_orthonormality_by_gauss_rule():
    mu = make_reference("KMK", kappa1=1, kappa2=0.5)
    J = jacobi_from_measure(mu, 12)
    x, w = gauss_rule(jacobi_measure(J.b, J.a, tail=(J.a[-1], J.b[-1])), 12)
    P = evaluate_oprl(J, x, 10)
    assert np.allclose((P * w) @ P.T, np.eye(11), atol=1e-10)


def test_symmetric_measure_has_zero_b():
    mu = add_atoms(make_reference("SC"), [(2.5, 0.05), (-2.5, 0.05)])
    assert np.allclose(jacobi_from_measure(mu, 20).b, 0, atol=1e-12)


@pytest.mark.parametrize("build", [
    lambda j: j,
    lambda j: add_atoms(j, [(2.4, 0.03), (-3.1, 0.02)]),
    lambda j: mix(0.4, j, jacobi_measure(np.zeros(3), np.ones(3))),
], ids=["coeffs", "atoms", "mixture"])
def test_gauss_rule_route_matches_quadrature_route(build, monkeypatch):
    k = np.arange(1, 41)
    mu = build(jacobi_measure(0.3 / k ** 2, 1 + 0.2 / k ** 2))
    fast = jacobi_from_measure(mu, 50)
    monkeypatch.setattr("sumrule_lab.oprl.gauss_rule", lambda m, M: None)
    slow = jacobi_from_measure(mu, 50)
    assert np.allclose(fast.b, slow.b, atol=1e-12) and np.allclose(fast.a, slow.a, atol=1e-12)


def test_coefficient_measure_recovers_its_coefficients():
    b, a = np.array([0.3, -0.2, 0.1]), np.array([1.2, 0.8])
    J = jacobi_from_measure(jacobi_measure(b, a), 6)
    assert np.allclose(J.b, [0.3, -0.2, 0.1, 0, 0, 0], atol=1e-13)
    assert np.allclose(J.a, [1.2, 0.8, 1, 1, 1, 1], atol=1e-13)
