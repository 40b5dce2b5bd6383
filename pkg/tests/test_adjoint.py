import numpy as np
import pytest

from nonintegrability import rigidbody as rb
from nonintegrability.adjoint import (
    AdjointBoundedSolution,
    AdjointSource,
    check_adjoint_solution,
    compute_psi2,
    default_horizon,
    estimate_decay,
    gradient_basis,
)
from nonintegrability.core import DecayData, DecaySource, FirstIntegral, HeteroclinicConnection, SystemModel
from nonintegrability.errors import DecayMismatch, EigenvectorAmbiguity, MatchFailure
from nonintegrability.integrate import IntegratorConfig

from conftest import P0, problem, psi2_matched


def _deviation(psi, branch, c, n=2001):
    ts = np.linspace(-psi.T, psi.T, n)
    return np.max(np.abs(psi(ts) - rb.closed_form_psi2(P0, branch, c, ts)))


def test_default_horizon():
    d = DecayData(0.5, 1.0, 2.0, 3.0)
    assert default_horizon(d) == pytest.approx(100.0)
    d = DecayData(10.0, 10.0, 10.0, 10.0)
    assert default_horizon(d) == pytest.approx(5.0)
    assert np.exp(-10.0 * default_horizon(d)) < 1e-12
    assert default_horizon(d, tail=1e-40) == pytest.approx(np.log(1e40) / 10)


def test_normalization_convention():
    _, system, _, conn = problem("plus")
    psi = compute_psi2(system, conn, 1.0)
    v = psi(0.0)
    assert np.linalg.norm(v) == pytest.approx(1.0, rel=1e-14)
    assert v[np.flatnonzero(np.abs(v) > 1e-12)[0]] > 0
    assert psi.source is AdjointSource.two_sided_shooting
    assert psi.residual_report.ok


@pytest.mark.parametrize("branch", ["plus", "tilde_minus"])
def test_shooting_matches_closed_form(branch):
    assert _deviation(psi2_matched(branch, 1.0), branch, 1.0) <= 1e-7


def test_residual_report_of_closed_form_is_clean():
    _, system, _, conn = problem("plus")
    exact = AdjointBoundedSolution.from_closed_form(
        lambda t: rb.closed_form_psi2(P0, "plus", 1.0, t), 1.0, conn.decay_at(1.0)
    )
    report = check_adjoint_solution(system, conn, 1.0, exact)
    assert report.max_residual <= 1e-9
    assert report.decay_plus_ok and report.decay_minus_ok
    assert report.max_orthogonality <= 1e-12


def test_orthogonal_to_orbit_velocity():
    _, system, _, conn = problem("minus")
    psi = compute_psi2(system, conn, 2.0)
    ts = np.linspace(-psi.T, psi.T, 3001)
    dots = np.einsum("ki,ki->k", psi(ts), conn.velocities(ts, 2.0, system))
    assert np.max(np.abs(dots)) <= 1e-9


def test_refining_tolerance_changes_little():
    _, system, _, conn = problem("plus")
    cfg = IntegratorConfig(1e-11, 1e-11)
    a = compute_psi2(system, conn, 0.5, cfg)
    b = compute_psi2(system, conn, 0.5, cfg.refined(10))
    ts = np.linspace(-a.T, a.T, 801)
    assert np.max(np.abs(a(ts) - b(ts))) <= 1e-8


def test_horizon_doubling_keeps_direction():
    _, system, _, conn = problem("plus")
    a = compute_psi2(system, conn, 1.0)
    b = compute_psi2(system, conn, 1.0, T=2 * a.T)
    ts = np.linspace(-a.T, a.T, 801)
    assert np.max(np.abs(a(ts) - b(ts))) <= 1e-8


def test_seed_scale_does_not_change_normalized_result():
    _, system, _, conn = problem("plus")
    a = compute_psi2(system, conn, 1.0)
    b = compute_psi2(system, conn, 1.0, seed_scale=7.5)
    ts = np.linspace(-20, 20, 81)
    np.testing.assert_allclose(a(ts), b(ts), atol=1e-12)
    raw = compute_psi2(system, conn, 1.0, normalize=False, seed_scale=7.5)
    assert raw.scale == 7.5


def test_scaled_and_matched():
    psi = psi2_matched("plus", 1.0)
    np.testing.assert_allclose(psi(0.0), [-1.0, 0.0, np.sqrt(3)], atol=1e-9)
    np.testing.assert_allclose(psi.scaled(-2.0)(1.3), -2.0 * psi(1.3), rtol=1e-15)
    with pytest.raises(ValueError):
        psi(2 * psi.T)


def test_gradient_basis_uses_level_integrals_only():
    _, system, _, conn = problem("plus")
    Q = gradient_basis(system, conn.state(0.3, 1.0))
    assert Q.shape == (1, 3)
    g = P0.inertia * conn.state(0.3, 1.0)
    assert abs(abs(Q[0] @ g) - np.linalg.norm(g)) <= 1e-12


def test_estimate_decay_from_spectrum():
    p, system, _, conn = problem("plus")
    bare = HeteroclinicConnection(conn.orbit, conn.x_minus, conn.x_plus, [(0.1, 10.0)], vectorized=True)
    d = estimate_decay(bare, system, 1.5)
    assert d.source is DecaySource.eigenvalue
    for rate in (d.lambda1_plus, d.lambda1_minus, d.lambda2_plus, d.lambda2_minus):
        assert rate == pytest.approx(p.k * 1.5, rel=1e-12)
    assert d.warnings == ()


def test_estimate_decay_warns_when_orbit_decays_at_wrong_rate():
    p, system, _, conn = problem("plus")
    fast = HeteroclinicConnection(
        lambda t, c: rb.orbit(p, "plus", 2 * t, c), conn.x_minus, conn.x_plus, [(0.1, 10.0)], vectorized=True
    )
    with pytest.warns(DecayMismatch):
        d = estimate_decay(fast, system, 1.0)
    assert d.warnings


def test_generic_path_without_closed_form_helpers():
    """Row-wise evaluators, finite-difference Jacobian and spectral decay rates."""
    p = P0
    f, _ = rb._vector_field(p)
    system = SystemModel(
        3,
        lambda w: f(np.asarray(w)),
        [FirstIntegral("energy", lambda w: float(rb.energy(p, w)), lambda w: p.inertia * np.asarray(w))],
        (1, 1, 1),
    )
    conn = HeteroclinicConnection(
        lambda t, c: rb.orbit(p, "plus", t, c),
        lambda c: np.array([0.0, -c, 0.0]),
        lambda c: np.array([0.0, c, 0.0]),
        [(0.1, 10.0)],
    )
    psi = compute_psi2(system, conn, 1.0).matched_to(rb.closed_form_psi2(p, "plus", 1.0, 0.0))
    assert psi.decay.source is DecaySource.eigenvalue
    assert _deviation(psi, "plus", 1.0, n=401) <= 1e-6


def test_ambiguous_seed_is_rejected():
    _, system, _, conn = problem("plus")
    # (c, 0, 0) is a centre: -Df^T has no eigenvalue with positive real part
    centre = HeteroclinicConnection(
        conn.orbit, lambda c: np.array([c, 0.0, 0.0]), conn.x_plus, [(0.1, 10.0)], decay=conn.decay,
        vectorized=True,
    )
    with pytest.raises(EigenvectorAmbiguity):
        compute_psi2(system, centre, 1.0)


def test_match_tolerance_is_enforced():
    _, system, _, conn = problem("plus")
    with pytest.raises(MatchFailure):
        compute_psi2(system, conn, 1.0, match_tol=0.0, T=30.0, cfg=IntegratorConfig(1e-6, 1e-6))
