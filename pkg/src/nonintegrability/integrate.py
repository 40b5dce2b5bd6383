"""Adaptive time integration of the flow and of the (adjoint) variational equations.

All integrations use an embedded Runge-Kutta 5(4) pair with its own
quartic dense output (``scipy.integrate.solve_ivp`` with ``method="RK45"``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .core import FourierForcing, HeteroclinicConnection, SystemModel
from .errors import DimensionMismatch, InvalidParams, NonFiniteState, StepSizeUnderflow, IntegrationError

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "integrate_rhs",
    "flow",
    "perturbed_rhs",
    "solve_ve",
    "solve_ave",
]

_METHODS = {"embedded_rk45": "RK45"}


@dataclass(frozen=True)
class IntegratorConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_step: float = np.inf
    method: str = "embedded_rk45"

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise InvalidParams("integrator tolerances must be positive")
        if not self.max_step > 0:
            raise InvalidParams("max_step must be positive")
        if self.method not in _METHODS:
            raise InvalidParams(f"unknown method {self.method!r}; available: {sorted(_METHODS)}")

    def refined(self, factor: float = 10.0) -> "IntegratorConfig":
        return IntegratorConfig(self.abs_tol / factor, self.rel_tol / factor, self.max_step, self.method)


@dataclass(frozen=True)
class Trajectory:
    """Solution of an initial value problem with dense output.

    ``times`` are stored in increasing order even for backward integrations;
    ``t0`` and ``t1`` keep the direction.
    """

    times: np.ndarray
    states: np.ndarray
    t0: float
    t1: float
    _dense: Callable = field(repr=False)
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, t) -> np.ndarray:
        """Dense evaluation; returns shape ``(n,)`` for scalar ``t`` and ``(K, n)`` for arrays."""
        t = np.asarray(t, dtype=float)
        lo, hi = self.times[0], self.times[-1]
        span = hi - lo
        if np.any(t < lo - 1e-12 * span) or np.any(t > hi + 1e-12 * span):
            raise ValueError(f"requested time outside [{lo}, {hi}]")
        out = self._dense(np.clip(t, lo, hi))
        return np.moveaxis(np.asarray(out), 0, -1)

    dense_eval = __call__

    @property
    def end_state(self) -> np.ndarray:
        return self.states[-1] if self.t1 > self.t0 else self.states[0]

    @property
    def n(self) -> int:
        return self.states.shape[1]


def integrate_rhs(
    fun: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_span: tuple[float, float],
    cfg: IntegratorConfig | None = None,
    meta: dict | None = None,
) -> Trajectory:
    """Integrate ``dy/dt = fun(t, y)`` over ``t_span`` (either direction).

    Raises
    ------
    StepSizeUnderflow
        If the step size collapses, typically near a finite-time singularity.
    NonFiniteState
        If the state or its derivative stops being finite.
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = map(float, t_span)
    if t0 == t1:
        raise InvalidParams("integration span must have nonzero length")
    y0 = np.asarray(y0)
    if not np.all(np.isfinite(y0)):
        raise NonFiniteState("initial state is not finite")
    dtype = complex if np.iscomplexobj(y0) else float
    y0 = y0.astype(dtype)

    def guarded(t, y):
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"state left the finite range at t={t}")
        dy = np.asarray(fun(t, y), dtype=dtype)
        if not np.all(np.isfinite(dy)):
            raise NonFiniteState(f"right-hand side not finite at t={t}")
        return dy

    sol = solve_ivp(
        guarded,
        (t0, t1),
        y0,
        method=_METHODS[cfg.method],
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.max_step,
        dense_output=True,
    )
    if sol.status != 0:
        if "step size" in sol.message.lower():
            raise StepSizeUnderflow(f"{sol.message} (t={sol.t[-1]})")
        raise IntegrationError(sol.message)
    order = np.argsort(sol.t) if t1 < t0 else slice(None)
    times = sol.t[order]
    states = sol.y.T[order]
    keep = np.concatenate([[True], np.diff(times) > 0])
    return Trajectory(times[keep], states[keep], t0, t1, sol.sol, dict(meta or {}, nfev=sol.nfev))


def flow(system: SystemModel, x0, t_span, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Trajectory of the unperturbed system through ``x0``."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (system.n,):
        raise DimensionMismatch(f"initial state has shape {x0.shape}, expected ({system.n},)")
    return integrate_rhs(lambda t, x: system.rhs(x), x0, t_span, cfg, {"system": system.name})


def perturbed_rhs(system: SystemModel, forcing: FourierForcing, eps: float):
    """``fun(t, x) = f(x) + eps * g(x, nu t)`` for use with :func:`integrate_rhs`."""

    def fun(t, x):
        return system.rhs(x) + eps * forcing.evaluate_direct(x, forcing.nu * t)

    return fun



def solve_ve(
    system: SystemModel,
    conn: HeteroclinicConnection,
    c,
    xi0,
    t_span,
    cfg: IntegratorConfig | None = None,
) -> Trajectory:
    """Solve the variational equation ``xi' = Df(x_h(t; c)) xi``."""
    xi0 = np.asarray(xi0, dtype=float)
    if xi0.shape != (system.n,):
        raise DimensionMismatch(f"xi0 has shape {xi0.shape}, expected ({system.n},)")

    def fun(t, xi):
        return system.jac(conn.state(t, c)) @ xi

    return integrate_rhs(fun, xi0, t_span, cfg, {"equation": "ve", "coefficients": conn.orbit_source})


def solve_ave(
    system: SystemModel,
    conn: HeteroclinicConnection,
    c,
    psi0,
    t_span,
    cfg: IntegratorConfig | None = None,
) -> Trajectory:
    """Solve the adjoint variational equation ``psi' = -Df(x_h(t; c))^T psi``."""
    psi0 = np.asarray(psi0, dtype=float)
    if psi0.shape != (system.n,):
        raise DimensionMismatch(f"psi0 has shape {psi0.shape}, expected ({system.n},)")

    def fun(t, psi):
        return -system.jac(conn.state(t, c)).T @ psi

    return integrate_rhs(fun, psi0, t_span, cfg, {"equation": "ave", "coefficients": conn.orbit_source})
