import mpmath
import numpy as np
import pytest

from nonintegrability import rigidbody as rb
from nonintegrability.errors import InvalidParams

from conftest import BRANCHES, P0, problem

TS = np.linspace(-30, 30, 601)


def test_k_at_p0():
    assert P0.k == pytest.approx(1 / np.sqrt(3), rel=1e-15)


@pytest.mark.parametrize("bad", [dict(I1=2.0), dict(I3=1.5), dict(alpha=-1.0), dict(nu=0.0), dict(delta2=-0.1)])
def test_params_rejected(bad):
    with pytest.raises(InvalidParams):
        P0.replace(**bad)


def test_orbit_point_at_zero():
    np.testing.assert_allclose(rb.orbit(P0, "plus", 0.0, 1.0), [1.0, 0.0, 1 / np.sqrt(3)], atol=1e-15)


def test_psi2_at_zero():
    np.testing.assert_allclose(rb.closed_form_psi2(P0, "plus", 1.0, 0.0), [-1.0, 0.0, np.sqrt(3)], atol=1e-15)


@pytest.mark.parametrize("branch", BRANCHES)
@pytest.mark.parametrize("c", [0.5, 1.0, 3.0])
def test_orbit_solves_euler_equations(branch, c):
    p, system, _, _ = problem(branch)
    W = rb.orbit(p, branch, TS, c)
    V = rb.orbit_velocity(p, branch, TS, c)
    assert np.max(np.abs(V - system.rhs_many(W))) <= 1e-10
    # finite differences guard against a consistent error in both closed forms
    h = 1e-4
    fd = (rb.orbit(p, branch, TS + h, c) - rb.orbit(p, branch, TS - h, c)) / (2 * h)
    assert np.max(np.abs(fd - V)) <= 1e-7


@pytest.mark.parametrize("branch", BRANCHES)
def test_first_integrals_constant_on_orbits(branch):
    c = 1.3
    W = rb.orbit(P0, branch, TS, c)
    E = rb.energy(P0, W)
    assert np.max(np.abs(E - P0.I2 * c**2 / 2)) <= 1e-10
    assert np.max(np.abs(rb.momentum_squared(P0, W) - (P0.I2 * c) ** 2)) <= 1e-10
    assert np.max(np.abs(rb.level_value(P0, W) - c)) <= 1e-10


def test_equilibria_are_fixed_points():
    _, system, _, conn = problem("plus")
    for x in conn.equilibria(1.0):
        assert np.all(system.rhs(x) == 0)


@pytest.mark.parametrize("branch", BRANCHES)
def test_psi2_orthogonal_to_velocity(branch):
    psi = rb.closed_form_psi2(P0, branch, 0.8, TS)
    V = rb.orbit_velocity(P0, branch, TS, 0.8)
    assert np.max(np.abs(np.einsum("ki,ki->k", psi, V))) <= 1e-14


@pytest.mark.parametrize("branch", BRANCHES)
def test_psi2_solves_adjoint_equation(branch):
    p, system, _, conn = problem(branch)
    c, h = 1.0, 1e-4
    psi = lambda t: rb.closed_form_psi2(p, branch, c, t)  # noqa: E731
    dpsi = (psi(TS + h) - psi(TS - h)) / (2 * h)
    J = system.jac_many(conn.states(TS, c))
    assert np.max(np.abs(dpsi + np.einsum("kji,kj->ki", J, psi(TS)))) <= 1e-7


def test_psi2_decays_at_rate_kc():
    c = 2.0
    t = np.array([20.0, 21.0])
    n = np.linalg.norm(rb.closed_form_psi2(P0, "plus", c, t), axis=1)
    assert np.log(n[0] / n[1]) == pytest.approx(P0.k * c, rel=1e-6)


def test_melnikov_constants_values_at_p0():
    M1, M2, M3 = rb.melnikov_constants(P0, 1.0)
    sech = 1 / np.cosh(np.pi * np.sqrt(3) / 2)
    assert M1 == pytest.approx(3 * np.pi * sech, rel=1e-14)
    assert M2 == pytest.approx(np.pi * sech, rel=1e-14)
    assert M3 == pytest.approx(2 * np.sqrt(3), rel=1e-14)
    assert M1 == pytest.approx(1.235488267746513, rel=1e-13)


def _brute_force_melnikov(p, branch, c, theta):
    """High-precision quadrature of psi2 . g along the closed-form orbit."""
    mpmath.mp.dps = 25
    a1 = np.sqrt(p.I2 * (p.I3 - p.I2) / (p.I1 * (p.I3 - p.I1)))
    a3 = np.sqrt(p.I2 * (p.I2 - p.I1) / (p.I3 * (p.I3 - p.I1)))
    s1, s2, s3 = rb._BRANCH_SIGNS[rb.OrbitBranch(branch)]
    kc = p.k * c

    def integrand(t):
        sech, th = 1 / mpmath.cosh(kc * t), mpmath.tanh(kc * t)
        w1, w2, w3 = s1 * c * a1 * sech, s2 * c * th, s3 * c * a3 * sech
        sn = mpmath.sin(p.nu * t + theta)
        g1 = -p.alpha / p.I1 * w2 * sn - p.delta1 * w1
        g3 = p.beta3 / p.I3 * sn - p.delta3 * w3
        return p.I1 * (p.I1 - p.I2) * w1 * g1 + p.I3 * (p.I3 - p.I2) * w3 * g3

    return float(mpmath.quad(integrand, [-mpmath.inf, -5, 0, 5, mpmath.inf]))


@pytest.mark.parametrize("branch", BRANCHES)
def test_closed_form_melnikov_matches_brute_force(branch):
    p = P0.replace(delta1=0.02, delta3=0.07)
    for theta in (0.0, 0.9, np.pi / 2):
        assert rb.closed_form_melnikov(p, branch, 1.0, theta) == pytest.approx(
            _brute_force_melnikov(p, branch, 1.0, theta), abs=1e-12
        )


def test_tilde_branch_flips_whole_oscillating_part():
    # flipping only the cosine term (+-alpha M1 cos -+ beta3 M2 sin) disagrees
    # with direct quadrature; the whole oscillating part changes sign
    M1, M2, _ = rb.melnikov_constants(P0, 1.0)
    theta = 0.0
    cos_only_flip = P0.alpha * M1 * np.cos(theta) - P0.beta3 * M2 * np.sin(theta)
    brute = _brute_force_melnikov(P0, "tilde_plus", 1.0, theta)
    assert abs(cos_only_flip - brute) > 1.0
    assert brute == pytest.approx(-M1, abs=1e-12)


def test_damping_constant_term_vanishes_for_equal_rates():
    p = P0.replace(delta1=0.3, delta3=0.3)
    theta = np.linspace(0, 2 * np.pi, 257)[:-1]
    for branch in BRANCHES:
        assert np.mean(rb.closed_form_melnikov(p, branch, 1.0, theta)) == pytest.approx(0.0, abs=1e-14)
        assert rb.closed_form_coefficients(p, branch, 1.0)[0] == 0


def test_forcing_series_matches_direct_torque(rng):
    p = P0.replace(beta2=0.4, delta1=0.1, delta2=0.2, delta3=0.3)
    _, _, forcing, _ = problem("plus", beta2=0.4, delta1=0.1, delta2=0.2, delta3=0.3)
    X = rng.normal(size=(50, 3))
    for th in np.linspace(0, 2 * np.pi, 7):
        np.testing.assert_allclose(forcing.evaluate(X, th), forcing.evaluate_direct(X, th), atol=1e-14)
    fun = rb.forced_rhs(p, 0.1)
    f = problem("plus", beta2=0.4, delta1=0.1, delta2=0.2, delta3=0.3)[1]
    for x in X[:5]:
        np.testing.assert_allclose(fun(0.7, x), f.rhs(x) + 0.1 * forcing.evaluate(x, p.nu * 0.7), atol=1e-14)


def test_gradient_of_level_integral_nonzero_on_orbit():
    _, system, _, conn = problem("plus")
    G = np.array([system.first_integrals[0].gradient(x) for x in conn.states(TS, 1.0)])
    assert np.min(np.linalg.norm(G, axis=1)) > 0.5
