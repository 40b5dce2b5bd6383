"""Autonomous extensions of the periodically forced system.

Real variant, state ``(x, eps, u_1..u_N, v_1..v_N)``::

    x'   = f(x) + eps a_0(x) + sum_j (a_j(x) u_j + b_j(x) v_j)
    eps' = 0,   u_j' = -j nu v_j,   v_j' = j nu u_j

with ``a_0 = ghat_0``, ``a_j = ghat_j + ghat_{-j}``, ``b_j = i (ghat_j - ghat_{-j})``.
On the circle ``u_j = eps cos(j nu t)``, ``v_j = eps sin(j nu t)`` the ``x``
equation is the forced system ``x' = f(x) + eps g(x, nu t)``.

Complex variant, state ``(x, y_{-N}..y_N)`` with ``y_0 = eps``::

    x'   = f(x) + ghat_0(x) y_0 + 2 sum_{j != 0} ghat_j(x) y_j
    y_j' = i j nu y_j

related to the real one by ``y_j = (u_j + i v_j)/2``, ``y_{-j} = (u_j - i v_j)/2``;
the circle becomes ``y_j = (eps/2) exp(i j nu t)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import FourierForcing, SystemModel
from .errors import ConjugacyViolation, DimensionMismatch
from .integrate import IntegratorConfig, integrate_rhs, perturbed_rhs

__all__ = [
    "Variant",
    "ExtendedSystem",
    "CircularReport",
    "build_extended",
    "real_to_complex",
    "complex_to_real",
    "circular_state",
    "variable_change_defect",
    "nonautonomous_defect",
    "verify_circular_solution",
]


class Variant(str, enum.Enum):
    real_rsys = "real_rsys"
    complex_csys = "complex_csys"


@dataclass(frozen=True)
class ExtendedSystem:
    variant: Variant
    system: SystemModel = field(repr=False)
    forcing: FourierForcing = field(repr=False)
    rhs: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def N(self) -> int:
        return self.forcing.N

    @property
    def nu(self) -> float:
        return self.forcing.nu

    @property
    def dim(self) -> int:
        return self.n + 1 + 2 * self.N

    def split(self, z):
        """``(x, eps, u, v)`` for the real variant, ``(x, y)`` for the complex one."""
        z = np.asarray(z)
        if z.shape != (self.dim,):
            raise DimensionMismatch(f"extended state has shape {z.shape}, expected ({self.dim},)")
        n, N = self.n, self.N
        if self.variant is Variant.real_rsys:
            return z[:n], z[n], z[n + 1 : n + 1 + N], z[n + 1 + N :]
        return z[:n], z[n:]

    def describe(self) -> str:
        """Plain-text listing of the extended equations."""
        n, N, nu = self.n, self.N, self.nu
        name = self.system.name or "f"
        lines = [f"{self.variant.value}: dimension {self.dim} = n ({n}) + 1 + 2N (N = {N}), nu = {nu:g}"]
        if self.variant is Variant.real_rsys:
            coupling = " + ".join(["eps a_0(x)"] + [f"a_{j}(x) u_{j} + b_{j}(x) v_{j}" for j in range(1, N + 1)])
            lines.append(f"  x'   = {name}(x) + {coupling}")
            lines.append("  eps' = 0")
            for j in range(1, N + 1):
                lines.append(f"  u_{j}' = -{j * nu:g} v_{j}")
                lines.append(f"  v_{j}' = {j * nu:g} u_{j}")
        else:
            coupling = " + ".join(["ghat_0(x) y_0"] + [f"2 ghat_{j}(x) y_{j}" for j in range(-N, N + 1) if j])
            lines.append(f"  x'   = {name}(x) + {coupling}")
            lines.append("  y_0' = 0")
            for j in range(-N, N + 1):
                if j:
                    lines.append(f"  y_{j}' = {j * nu:g} i y_{j}")
        return "\n".join(lines)


def _sample_states(n: int, count: int = 32, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).normal(size=(count, n))


def build_extended(
    system: SystemModel,
    forcing: FourierForcing,
    variant: Variant | str = Variant.real_rsys,
    *,
    sample_states=None,
    conj_tol: float = 1e-10,
) -> ExtendedSystem:
    """Assemble the real or complex autonomous extension.

    Raises
    ------
    ConjugacyViolation
        If ``ghat_{-j} != conj(ghat_j)`` beyond ``conj_tol`` at the sample
        states (random normal states by default).
    """
    variant = Variant(variant)
    X = _sample_states(system.n) if sample_states is None else np.atleast_2d(sample_states)
    defect = forcing.conjugacy_defect(X)
    if defect > conj_tol:
        raise ConjugacyViolation(f"forcing coefficients violate ghat_-j = conj(ghat_j) by {defect:.2e}")
    n, N, nu = system.n, forcing.N, forcing.nu
    js = np.arange(1, N + 1)

    if variant is Variant.real_rsys:

        def rhs(z):
            z = np.asarray(z, dtype=float)
            x, eps, u, v = z[:n], z[n], z[n + 1 : n + 1 + N], z[n + 1 + N :]
            xdot = system.rhs(x) + eps * forcing.a0(x)
            for j in range(1, N + 1):
                xdot = xdot + forcing.a(j, x) * u[j - 1] + forcing.b(j, x) * v[j - 1]
            return np.concatenate([xdot, [0.0], -js * nu * v, js * nu * u])

    else:
        ks = np.arange(-N, N + 1)

        def rhs(z):
            z = np.asarray(z, dtype=complex)
            x, y = z[:n], z[n:]
            xr = x.real
            xdot = system.rhs(xr) + forcing.coefficient(0, xr) * y[N]
            for k, j in enumerate(ks):
                if j:
                    xdot = xdot + 2 * forcing.coefficient(int(j), xr) * y[k]
            return np.concatenate([xdot, 1j * ks * nu * y])

    return ExtendedSystem(variant, system, forcing, rhs)


def real_to_complex(z, n: int, N: int) -> np.ndarray:
    """Map ``(x, eps, u, v)`` to ``(x, y_{-N}..y_N)``."""
    z = np.asarray(z, dtype=float)
    x, eps, u, v = z[:n], z[n], z[n + 1 : n + 1 + N], z[n + 1 + N :]
    y_pos = 0.5 * (u + 1j * v)
    y_neg = 0.5 * (u - 1j * v)
    return np.concatenate([x.astype(complex), y_neg[::-1], [eps], y_pos])


def complex_to_real(y_state, n: int, N: int) -> np.ndarray:
    z = np.asarray(y_state, dtype=complex)
    x, y = z[:n], z[n:]
    y_pos, y_neg = y[N + 1 :], y[:N][::-1]
    u = (y_pos + y_neg).real
    v = (-1j * (y_pos - y_neg)).real
    return np.concatenate([x.real, [y[N].real], u, v])


def circular_state(ext: ExtendedSystem, x, eps: float, t: float) -> np.ndarray:
    """Extended state on the circular solution at time ``t``."""
    x = np.asarray(x, dtype=float)
    js = np.arange(1, ext.N + 1)
    z = np.concatenate([x, [eps], eps * np.cos(js * ext.nu * t), eps * np.sin(js * ext.nu * t)])
    if ext.variant is Variant.complex_csys:
        return real_to_complex(z, ext.n, ext.N)
    return z


def variable_change_defect(real_ext: ExtendedSystem, complex_ext: ExtendedSystem, states) -> float:
    """Largest mismatch of ``T(rhs_real(z))`` and ``rhs_complex(T(z))`` over ``states``.

    ``T`` is the linear map :func:`real_to_complex`; the two vector fields
    are conjugate exactly when the defect vanishes.
    """
    n, N = real_ext.n, real_ext.N
    worst = 0.0
    for z in np.atleast_2d(states):
        lhs = real_to_complex(real_ext.rhs(z), n, N)
        rhs = complex_ext.rhs(real_to_complex(z, n, N))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def nonautonomous_defect(ext: ExtendedSystem, x_samples, t_samples, eps: float) -> float:
    """Gap between the extended ``x`` equation on the circle and ``f + eps g``.

    ``g`` is evaluated with the forcing's direct evaluator when one exists.
    """
    fun = perturbed_rhs(ext.system, ext.forcing, eps)
    worst = 0.0
    for x in np.atleast_2d(x_samples):
        for t in np.atleast_1d(t_samples):
            xdot = ext.rhs(circular_state(ext, x, eps, t))[: ext.n]
            worst = max(worst, float(np.max(np.abs(xdot - fun(t, x)))))
    return worst


@dataclass(frozen=True)
class CircularReport:
    variant: Variant
    eps: float
    t_span: tuple[float, float]
    max_circle_deviation: float
    max_x_deviation: float | None
    max_imag_x: float | None = None

    def ok(self, circle_tol: float = 1e-9, x_tol: float = 1e-7) -> bool:
        return self.max_circle_deviation <= circle_tol and (
            self.max_x_deviation is None or self.max_x_deviation <= x_tol
        )


def verify_circular_solution(
    ext: ExtendedSystem,
    eps: float,
    t_span: tuple[float, float] = (0.0, 20.0),
    cfg: IntegratorConfig | None = None,
    x0=None,
    n_grid: int = 401,
) -> CircularReport:
    """Integrate the extension from the circle and compare with closed forms.

    The rotation variables start at ``(eps, 0)`` (``y_j = eps/2``) and are
    compared with the circular solution on a uniform grid.  With ``x0`` the
    extended system is integrated in full and its ``x`` part compared with a
    direct integration of the forced system from the same state.
    """
    cfg = cfg or IntegratorConfig(1e-12, 1e-12)
    t0, t1 = map(float, t_span)
    ts = np.linspace(t0, t1, n_grid)
    n, N = ext.n, ext.N
    x_start = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    z0 = circular_state(ext, x_start, eps, t0)

    if x0 is None:
        # rotation block only; the x part is decoupled from it
        def fun(t, w):
            return ext.rhs(np.concatenate([x_start.astype(w.dtype), w]))[n:]

        traj = integrate_rhs(fun, z0[n:], (t0, t1), cfg)
        W = traj(ts)
        Xext = None
    else:
        traj = integrate_rhs(lambda t, z: ext.rhs(z), z0, (t0, t1), cfg)
        Z = traj(ts)
        W, Xext = Z[:, n:], Z[:, :n]

    exact = np.array([circular_state(ext, x_start, eps, t)[n:] for t in ts])
    circle_dev = float(np.max(np.abs(W - exact)))

    x_dev = imag_x = None
    if Xext is not None:
        direct = integrate_rhs(perturbed_rhs(ext.system, ext.forcing, eps), x_start, (t0, t1), cfg)
        x_dev = float(np.max(np.abs(Xext.real - direct(ts))))
        if np.iscomplexobj(Xext):
            imag_x = float(np.max(np.abs(Xext.imag)))
    return CircularReport(Variant(ext.variant), float(eps), (t0, t1), circle_dev, x_dev, imag_x)
