import numpy as np
import pytest

from nonintegrability import rigidbody as rb
from nonintegrability.autonomize import (
    Variant,
    build_extended,
    circular_state,
    complex_to_real,
    nonautonomous_defect,
    real_to_complex,
    variable_change_defect,
    verify_circular_solution,
)
from nonintegrability.core import FourierForcing
from nonintegrability.errors import ConjugacyViolation

from conftest import problem

DAMPED = dict(beta2=0.4, delta1=0.1, delta2=0.2, delta3=0.3)


def _ext(variant, **overrides):
    p, system, forcing, conn = problem("plus", **overrides)
    return p, build_extended(system, forcing, variant), conn


def test_dimensions_and_rotation_block(rng):
    _, ext, _ = _ext("real_rsys")
    assert ext.dim == 6
    z = rng.normal(size=6)
    dz = ext.rhs(z)
    assert dz[3] == 0
    assert dz[4] == pytest.approx(-z[5]) and dz[5] == pytest.approx(z[4])
    _, cx, _ = _ext("complex_csys")
    y = rng.normal(size=6) + 1j * rng.normal(size=6)
    dy = cx.rhs(y)
    np.testing.assert_allclose(dy[3:], 1j * np.array([-1, 0, 1]) * y[3:])


def test_real_variant_is_real(rng):
    _, ext, _ = _ext("real_rsys", **DAMPED)
    for z in rng.normal(size=(10, ext.dim)):
        assert np.isrealobj(ext.rhs(z))


def test_matches_hand_written_rigid_body_extension(rng):
    p, ext, _ = _ext("real_rsys", **DAMPED)
    hand = rb.extended_rhs(p)
    for z in rng.normal(size=(20, 6)):
        np.testing.assert_allclose(ext.rhs(z), hand(z), atol=1e-14)


def test_state_maps_are_inverse(rng):
    z = rng.normal(size=8)
    np.testing.assert_allclose(complex_to_real(real_to_complex(z, 3, 2), 3, 2), z, atol=1e-15)


def test_variable_change_identity(rng):
    p, system, forcing, _ = problem("plus", **DAMPED)
    real = build_extended(system, forcing, Variant.real_rsys)
    cplx = build_extended(system, forcing, Variant.complex_csys)
    assert variable_change_defect(real, cplx, rng.normal(size=(50, real.dim))) <= 1e-12


def test_extension_reproduces_forced_system(rng):
    _, ext, conn = _ext("real_rsys", **DAMPED)
    X = np.vstack([rng.normal(size=(5, 3)), conn.states(np.linspace(-3, 3, 5), 1.0)])
    assert nonautonomous_defect(ext, X, np.linspace(0, 10, 11), 0.05) <= 1e-12


def test_untimed_forcing_gives_small_extension():
    _, system, forcing, _ = problem("plus", **DAMPED)
    mean_only = FourierForcing(N=0, nu=1.0, coeffs={0: forcing.coeffs[0]}, vectorized=True)
    ext = build_extended(system, mean_only)
    assert ext.dim == 4
    x = np.array([0.2, 0.5, -0.3])
    np.testing.assert_allclose(ext.rhs(np.append(x, 0.1))[:3], system.rhs(x) + 0.1 * mean_only.a0(x), atol=1e-15)


def test_conjugacy_violation_rejected():
    _, system, _, _ = problem("plus")
    bad = FourierForcing(N=1, nu=1.0, coeffs={1: lambda x: np.ones(3) * 1j, -1: lambda x: np.ones(3) * 1j})
    with pytest.raises(ConjugacyViolation):
        build_extended(system, bad)


@pytest.mark.parametrize("variant", list(Variant))
def test_circular_solution(variant):
    _, ext, _ = _ext(variant)
    report = verify_circular_solution(ext, 0.01, (0.0, 20.0))
    assert report.max_circle_deviation <= 1e-9


def test_complex_circle_seed():
    _, ext, _ = _ext("complex_csys")
    z = circular_state(ext, np.zeros(3), 0.02, 0.0)
    np.testing.assert_allclose(z[3:], [0.01, 0.02, 0.01])


@pytest.mark.parametrize("variant", list(Variant))
def test_extended_flow_matches_direct_integration(variant):
    _, ext, conn = _ext(variant, **DAMPED)
    report = verify_circular_solution(ext, 0.05, (0.0, 10.0), x0=conn.state(0.0, 1.0))
    assert report.max_x_deviation <= 1e-7
    assert report.ok()


def test_description_lists_equations():
    _, ext, _ = _ext("real_rsys")
    text = ext.describe()
    assert "u_1' = -1 v_1" in text and "eps' = 0" in text
    _, cx, _ = _ext("complex_csys")
    assert "2 ghat_1(x) y_1" in cx.describe()
