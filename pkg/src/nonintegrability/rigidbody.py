"""Periodically forced rigid body (quadrotor attitude model) with closed forms.

Euler's equations for a free rigid body with principal moments
``I1 < I2 < I3`` are perturbed by a modulated torque and linear damping::

    w1' = (I2 - I3)/I1 w2 w3 - eps (alpha/I1 w2 sin(nu t) + d1 w1)
    w2' = (I3 - I1)/I2 w3 w1 + eps ((alpha w1 + beta2)/I2 sin(nu t) - d2 w2)
    w3' = (I1 - I2)/I3 w1 w2 + eps (beta3/I3 sin(nu t) - d3 w3)

The unperturbed body has the saddles ``(0, +-c, 0)`` on each energy level,
joined by four heteroclinic orbits for which the bounded adjoint solution
and the Melnikov function are available in closed form.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import (
    DecayData,
    DecaySource,
    FirstIntegral,
    FourierForcing,
    HeteroclinicConnection,
    SystemModel,
)
from .errors import InvalidParams

__all__ = [
    "RigidBodyParams",
    "OrbitBranch",
    "make_problem",
    "orbit",
    "orbit_velocity",
    "closed_form_psi2",
    "melnikov_constants",
    "closed_form_melnikov",
    "closed_form_coefficients",
    "forced_rhs",
    "extended_rhs",
    "energy",
    "momentum_squared",
    "level_value",
]


@dataclass(frozen=True)
class RigidBodyParams:
    I1: float = 1.0
    I2: float = 2.0
    I3: float = 3.0
    alpha: float = 1.0
    beta2: float = 0.0
    beta3: float = 1.0
    delta1: float = 0.0
    delta2: float = 0.0
    delta3: float = 0.0
    nu: float = 1.0

    def __post_init__(self):
        if not (0 < self.I1 < self.I2 < self.I3):
            raise InvalidParams(f"need 0 < I1 < I2 < I3, got ({self.I1}, {self.I2}, {self.I3})")
        for name in ("alpha", "beta2", "beta3", "delta1", "delta2", "delta3"):
            if getattr(self, name) < 0:
                raise InvalidParams(f"{name} must be nonnegative")
        if not self.nu > 0:
            raise InvalidParams("nu must be positive")

    @property
    def k(self) -> float:
        return float(np.sqrt((self.I2 - self.I1) * (self.I3 - self.I2) / (self.I3 * self.I1)))

    @property
    def inertia(self) -> np.ndarray:
        return np.array([self.I1, self.I2, self.I3])

    @property
    def damping(self) -> np.ndarray:
        return np.array([self.delta1, self.delta2, self.delta3])

    def replace(self, **changes) -> "RigidBodyParams":
        data = {name: getattr(self, name) for name in self.__dataclass_fields__}
        data.update(changes)
        return RigidBodyParams(**data)


class OrbitBranch(str, enum.Enum):
    plus = "plus"
    minus = "minus"
    tilde_plus = "tilde_plus"
    tilde_minus = "tilde_minus"


# sign of (w1, w2, w3) relative to the "plus" orbit
_BRANCH_SIGNS = {
    OrbitBranch.plus: (1.0, 1.0, 1.0),
    OrbitBranch.minus: (-1.0, 1.0, -1.0),
    OrbitBranch.tilde_plus: (1.0, -1.0, -1.0),
    OrbitBranch.tilde_minus: (-1.0, -1.0, 1.0),
}


def _amplitudes(p: RigidBodyParams) -> tuple[float, float]:
    a1 = np.sqrt(p.I2 * (p.I3 - p.I2) / (p.I1 * (p.I3 - p.I1)))
    a3 = np.sqrt(p.I2 * (p.I2 - p.I1) / (p.I3 * (p.I3 - p.I1)))
    return float(a1), float(a3)


def _vector_field(p: RigidBodyParams):
    A = (p.I2 - p.I3) / p.I1
    B = (p.I3 - p.I1) / p.I2
    C = (p.I1 - p.I2) / p.I3

    def f(w):
        w = np.asarray(w, dtype=float)
        return np.stack([A * w[..., 1] * w[..., 2], B * w[..., 2] * w[..., 0], C * w[..., 0] * w[..., 1]], axis=-1)

    def jac(w):
        w = np.asarray(w, dtype=float)
        z = np.zeros_like(w[..., 0])
        rows = [
            np.stack([z, A * w[..., 2], A * w[..., 1]], axis=-1),
            np.stack([B * w[..., 2], z, B * w[..., 0]], axis=-1),
            np.stack([C * w[..., 1], C * w[..., 0], z], axis=-1),
        ]
        return np.stack(rows, axis=-2)

    return f, jac


def energy(p: RigidBodyParams, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return 0.5 * np.sum(p.inertia * w**2, axis=-1)


def momentum_squared(p: RigidBodyParams, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return np.sum(p.inertia**2 * w**2, axis=-1)


def level_value(p: RigidBodyParams, w) -> np.ndarray:
    """Level-set coordinate ``sqrt(2 E / I2)``; equals ``c`` on the separatrices."""
    return np.sqrt(2.0 * energy(p, w) / p.I2)


def orbit(p: RigidBodyParams, branch: OrbitBranch, t, c: float) -> np.ndarray:
    """Closed-form heteroclinic orbit; ``t`` may be an array."""
    s1, s2, s3 = _BRANCH_SIGNS[OrbitBranch(branch)]
    a1, a3 = _amplitudes(p)
    kc = p.k * c
    t = np.asarray(t, dtype=float)
    sech = 1.0 / np.cosh(kc * t)
    return np.stack([s1 * c * a1 * sech, s2 * c * np.tanh(kc * t), s3 * c * a3 * sech], axis=-1)


def orbit_velocity(p: RigidBodyParams, branch: OrbitBranch, t, c: float) -> np.ndarray:
    s1, s2, s3 = _BRANCH_SIGNS[OrbitBranch(branch)]
    a1, a3 = _amplitudes(p)
    kc = p.k * c
    t = np.asarray(t, dtype=float)
    sech = 1.0 / np.cosh(kc * t)
    th = np.tanh(kc * t)
    return np.stack(
        [-s1 * c * a1 * kc * sech * th, s2 * c * kc * sech**2, -s3 * c * a3 * kc * sech * th], axis=-1
    )


def closed_form_psi2(p: RigidBodyParams, branch: OrbitBranch, c: float, t) -> np.ndarray:
    """Bounded adjoint solution ``(I1 (I1 - I2) w1, 0, I3 (I3 - I2) w3)``."""
    w = orbit(p, branch, t, c)
    return np.stack(
        [p.I1 * (p.I1 - p.I2) * w[..., 0], np.zeros_like(w[..., 1]), p.I3 * (p.I3 - p.I2) * w[..., 2]], axis=-1
    )


def melnikov_constants(p: RigidBodyParams, c: float) -> tuple[float, float, float]:
    """Return ``(M1, M2, M3)`` at level ``c``."""
    I1, I2, I3, nu, k = p.I1, p.I2, p.I3, p.nu, p.k
    sech = 1.0 / np.cosh(np.pi * nu / (2 * k * c))
    M1 = np.pi * nu * np.sqrt(I1 * I2 * I3**2 / ((I3 - I1) * (I3 - I2))) * sech
    M2 = np.pi * np.sqrt(I1 * I2 * (I3 - I2) / (I3 - I1)) * sech
    M3 = 2 * c * I2 * (I2 - I1) * (I3 - I2) / (k * (I3 - I1))
    return float(M1), float(M2), float(M3)


def _oscillation_sign(branch: OrbitBranch) -> float:
    # sign of w1*w2 (and of w3) relative to the "plus" orbit; see module notes
    s1, s2, s3 = _BRANCH_SIGNS[OrbitBranch(branch)]
    assert s1 * s2 == s3
    return s3


def closed_form_melnikov(p: RigidBodyParams, branch: OrbitBranch, c: float, theta) -> np.ndarray:
    """Melnikov function built with :func:`closed_form_psi2`.

    ``M(theta) = s (alpha M1 cos(theta) + beta3 M2 sin(theta)) - (d3 - d1) M3``
    where ``s = +1`` on the ``plus`` and ``tilde_minus`` orbits and ``-1`` on
    ``minus`` and ``tilde_plus``.  The oscillating part only sees the sign of
    ``w1 w2`` and of ``w3`` along the orbit, and these flip together.
    """
    M1, M2, M3 = melnikov_constants(p, c)
    s = _oscillation_sign(branch)
    theta = np.asarray(theta, dtype=float)
    return s * (p.alpha * M1 * np.cos(theta) + p.beta3 * M2 * np.sin(theta)) - (p.delta3 - p.delta1) * M3


def closed_form_coefficients(p: RigidBodyParams, branch: OrbitBranch, c: float) -> dict[int, complex]:
    M1, M2, M3 = melnikov_constants(p, c)
    s = _oscillation_sign(branch)
    m1 = s * (p.alpha * M1 - 1j * p.beta3 * M2) / 2
    return {-1: np.conj(m1), 0: complex(-(p.delta3 - p.delta1) * M3), 1: m1}


def _torque(p: RigidBodyParams, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return np.stack(
        [
            -p.alpha / p.I1 * w[..., 1],
            (p.alpha * w[..., 0] + p.beta2) / p.I2,
            np.full_like(w[..., 0], p.beta3 / p.I3),
        ],
        axis=-1,
    )


def forced_rhs(p: RigidBodyParams, eps: float):
    """Nonautonomous right-hand side ``fun(t, w)`` of the forced body."""
    f, _ = _vector_field(p)
    d = p.damping

    def fun(t, w):
        return f(w) + eps * (_torque(p, w) * np.sin(p.nu * t) - d * w)

    return fun


def extended_rhs(p: RigidBodyParams):
    """Hand-written autonomous form on ``(w1, w2, w3, eps, u1, v1)``.

    The damping on ``w3`` enters as ``-eps * d3 * w3``, matching the other two
    components and the nonautonomous equations.
    """
    f, _ = _vector_field(p)

    def fun(z):
        z = np.asarray(z, dtype=float)
        w, eps, u1, v1 = z[:3], z[3], z[4], z[5]
        wdot = f(w) - eps * p.damping * w + _torque(p, w) * v1
        return np.concatenate([wdot, [0.0, -p.nu * v1, p.nu * u1]])

    return fun


def make_problem(
    p: RigidBodyParams,
    branch: OrbitBranch = OrbitBranch.plus,
    c_range: tuple[float, float] = (0.1, 10.0),
) -> tuple[SystemModel, FourierForcing, HeteroclinicConnection]:
    """Assemble the system, forcing and heteroclinic family for one orbit branch."""
    branch = OrbitBranch(branch)
    f, jac = _vector_field(p)
    integrals = [
        FirstIntegral("energy", lambda w: energy(p, w), lambda w: p.inertia * np.asarray(w, dtype=float)),
        FirstIntegral(
            "momentum_squared", lambda w: momentum_squared(p, w), lambda w: 2 * p.inertia**2 * np.asarray(w, dtype=float)
        ),
    ]
    system = SystemModel(
        n=3, f=f, jacobian=jac, first_integrals=integrals, spectral_counts=(1, 1, 1), name="rigid_body", vectorized=True
    )

    d = p.damping

    def ghat0(w):
        return -(d * np.asarray(w, dtype=float)).astype(complex)

    def ghat1(w):
        return _torque(p, w) / 2j

    def ghat_m1(w):
        return -_torque(p, w) / 2j

    def direct(w, theta):
        w = np.asarray(w, dtype=float)
        return _torque(p, w) * np.sin(np.asarray(theta, dtype=float))[..., None] - d * w

    forcing = FourierForcing(N=1, nu=p.nu, coeffs={-1: ghat_m1, 0: ghat0, 1: ghat1}, direct=direct, vectorized=True)

    s2 = _BRANCH_SIGNS[branch][1]
    conn = HeteroclinicConnection(
        orbit=lambda t, c: orbit(p, branch, t, c),
        x_minus=lambda c: np.array([0.0, -s2 * c, 0.0]),
        x_plus=lambda c: np.array([0.0, s2 * c, 0.0]),
        param_domain=[c_range],
        decay=lambda c: DecayData(p.k * c, p.k * c, p.k * c, p.k * c, source=DecaySource.user_supplied),
        velocity=lambda t, c: orbit_velocity(p, branch, t, c),
        orbit_source="closed_form",
        vectorized=True,
        name=f"rigid_body/{branch.value}",
    )
    return system, forcing, conn
