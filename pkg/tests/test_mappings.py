import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sumrule_lab import (add_atoms, apply_maps, dg_push, dvz_push, from_spec, gw_alpha, jacobi_measure,
                         kl, make_reference, mobius_push, reweight, rotate_pi, szego_pull, szego_push,
                         verblunsky_from_measure, verblunsky_measure)
from sumrule_lab.mappings import (SymmetryError, alpha_from_dvz_jacobi, dg_jacobi, dg_pull, dvz_jacobi,
                                  geronimus_canonical, reflect)
from sumrule_lab.oprl import canonical_from_jacobi, jacobi_from_measure

X = np.linspace(-1.95, 1.95, 17)
real_al = st.lists(st.floats(-0.8, 0.8), min_size=1, max_size=6)


def _close(mu, nu, x=X, atol=1e-11):
    return np.allclose(mu.density(x), nu.density(x), atol=atol)


def test_szego_of_uniform_is_arcsine():
    mu = szego_push(make_reference("UNIF"))
    assert _close(mu, make_reference("Arcsine"))
    assert kl(mu, make_reference("Arcsine")) == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("d", [0.5, 1.0, 2.5])
def test_szego_of_hp_is_kmk(d):
    mu = szego_push(make_reference("HP", d=d))
    ref = make_reference("KMK", kappa1=2 * d, kappa2=0)
    assert mu.support_hull() == pytest.approx(ref.support_hull(), abs=1e-12)
    assert _close(mu, ref, np.linspace(*ref.support_hull(), 11)[1:-1])


@pytest.mark.parametrize("d", [0.5, 1.0, 2.0])
def test_dg_of_hp_is_symmetric_kmk(d):
    mu = dg_push(make_reference("HP", d=d))
    ref = make_reference("KMK", kappa1=d, kappa2=d)
    assert _close(mu, ref, np.linspace(*ref.support_hull(), 11)[1:-1])


@pytest.mark.parametrize("g,d", [(-0.5, 1.0), (-1.0, 1.3), (0.6, 0.7), (-2.0, 1.0)])
def test_dg_jacobi_law_on_gw(g, d):
    J = jacobi_from_measure(dg_push(make_reference("GW", g=g), d), 20)
    b, a = dg_jacobi(gw_alpha(g, np.arange(20)), d)
    assert np.allclose(J.b, b, atol=1e-11) and np.allclose(J.a, a, atol=1e-11)


def test_dvz_of_uniform_is_one_site_perturbation():
    # alpha = 0: a_n = 1, b_1 = 1, b_n = 0 afterwards
    mu = dvz_push(make_reference("UNIF"))
    ref = jacobi_measure([1.0], [])
    assert _close(mu, ref)
    assert mu.atoms == () and ref.atoms == ()


@pytest.mark.parametrize("g", [-1.0, -0.5, 0.4])
def test_dvz_jacobi_law_on_gw(g):
    J = jacobi_from_measure(dvz_push(make_reference("GW", g=g)), 25)
    b, a = dvz_jacobi(gw_alpha(g, np.arange(25)))
    assert np.allclose(J.b, b, atol=1e-10) and np.allclose(J.a, a, atol=1e-10)
    assert np.allclose(alpha_from_dvz_jacobi(J.b), gw_alpha(g, np.arange(25)).real, atol=1e-10)


def test_dvz_minus_is_mirror():
    nu = verblunsky_measure([0.3, -0.2, 0.5])
    plus, minus = dvz_push(nu, "+"), dvz_push(nu, "-")
    assert np.allclose(plus.density(X), minus.density(-X), atol=1e-12)
    J = jacobi_from_measure(minus, 6)
    assert np.allclose(J.b, dvz_jacobi([0.3, -0.2, 0.5, 0, 0, 0], "-")[0], atol=1e-11)


@settings(max_examples=25, deadline=None)
@given(real_al)
def test_geronimus_relation(al):
    nu = verblunsky_measure(al)
    n = len(al) + 2
    u = canonical_from_jacobi(jacobi_from_measure(szego_push(nu), n))[:n]
    assert np.allclose(u, geronimus_canonical(np.concatenate([al, [0, 0]]))[:n], atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(real_al)
def test_szego_pull_inverts_push(al):
    nu = verblunsky_measure(al)
    back = szego_pull(szego_push(nu))
    t = np.linspace(0.05, 6.2, 13)
    assert np.allclose(back.density(t), nu.density(t), atol=1e-10)


def test_dg_pull_inverts_push():
    nu = add_atoms(make_reference("HP", d=1), [(0.3, 0.05), (2 * math.pi - 0.3, 0.05)])
    back = dg_pull(dg_push(nu, 1.5), 1.5)
    t = np.linspace(1.1, 5.1, 9)
    assert np.allclose(back.density(t), nu.density(t), atol=1e-10)
    assert sorted(x for x, _ in back.atoms) == pytest.approx([0.3, 2 * math.pi - 0.3], abs=1e-12)


@settings(max_examples=10, deadline=None)
@given(real_al, real_al)
def test_entropy_is_transported(a1, a2):
    n1, n2 = verblunsky_measure(a1), verblunsky_measure(a2)
    assert kl(szego_push(n1), szego_push(n2)) == pytest.approx(kl(n1, n2), abs=1e-9)
    assert kl(dg_push(n1), dg_push(n2)) == pytest.approx(kl(n1, n2), abs=1e-9)


def test_mobius_maps_harmonic_measure_to_uniform():
    zeta = 0.4 - 0.3j
    mu = mobius_push(make_reference("Pois", zeta=zeta), zeta)
    assert np.allclose(mu.density(np.linspace(0, 6, 13)), 1, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0, 0.7), st.floats(0, 2 * math.pi))
def test_mobius_round_trip(r, t):
    z0 = r * np.exp(1j * t)
    nu = add_atoms(make_reference("GW", g=-0.5), [(1.0, 0.1)])
    back = mobius_push(mobius_push(nu, z0), -z0)
    s = np.linspace(0.1, 6.1, 11)
    assert np.allclose(back.density(s), nu.density(s), atol=1e-10)
    assert back.atoms[0][0] == pytest.approx(1.0, abs=1e-12)
    assert back.mass == pytest.approx(1, abs=1e-10)


def test_rotate_pi_flips_alternate_signs():
    al = np.array([0.3 + 0.1j, -0.2j, 0.4])
    got = verblunsky_from_measure(rotate_pi(verblunsky_measure(al)), 3).alpha
    assert np.allclose(got, al * (-1.0) ** (np.arange(3) + 1), atol=1e-12)


def test_reflect():
    mu = reflect(make_reference("MP", tau=0.5))
    ref = make_reference("MP", tau=0.5)
    x = np.linspace(-2.3, -0.3, 9)
    assert np.allclose(mu.density(x), ref.density(-x))


def test_symmetry_required():
    with pytest.raises(SymmetryError):
        szego_push(make_reference("Pois", zeta=0.3j))
    with pytest.raises(SymmetryError):
        dg_push(verblunsky_measure([0.2j]))


def test_spec_round_trip_through_maps():
    maps = [{"map": "Sz"}]
    mu = apply_maps(make_reference("HP", d=1), maps)
    back = from_spec(mu.spec)
    assert kl(back, mu) == pytest.approx(0, abs=1e-12)
    nu = apply_maps(make_reference("GW", g=-0.5), [{"map": "Mobius", "params": {"z0": [0.2, 0.1]}},
                                                    {"map": "RotPi"}])
    assert kl(from_spec(nu.spec), nu) == pytest.approx(0, abs=1e-12)


def test_reweighted_symmetric_measure_maps():
    nu = reweight(make_reference("UNIF"), lambda t: 1 + 0.5 * np.cos(t), symmetric=True)
    J = jacobi_from_measure(szego_push(nu), 10)
    al = verblunsky_from_measure(nu, 20).alpha.real
    assert np.allclose(canonical_from_jacobi(J)[:19], al[:19], atol=1e-11)
