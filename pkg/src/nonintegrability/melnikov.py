"""Melnikov function, its Fourier coefficients and its zeros.

For a bounded adjoint solution ``psi2`` along ``x_h(t; c)``::

    M(theta; c) = int psi2(t) . g(x_h(t), nu t + theta) dt
    Mhat_j(c)   = int psi2(t) . ghat_j(x_h(t)) exp(i j nu t) dt

so that ``M(theta) = sum_j Mhat_j exp(i j theta)``.  Integrals are truncated
to ``[-T, T]`` and evaluated with composite Gauss-Legendre panels; the
truncated tails are bounded with the decay rates of ``psi2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .adjoint import AdjointBoundedSolution
from .core import FourierForcing, HeteroclinicConnection, SystemModel
from .errors import InvalidHarmonic, InvalidParams, QuadratureFailure

__all__ = [
    "MelnikovResult",
    "SimpleZero",
    "melnikov_coeff",
    "melnikov_function",
    "find_simple_zeros",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


@dataclass(frozen=True)
class MelnikovResult:
    """Coefficients ``Mhat_j`` for ``|j| <= N`` and direct samples of ``M``.

    Attributes
    ----------
    coeffs, quad_error : dict
        ``j -> Mhat_j`` and ``j -> error estimate`` (quadrature plus tail).
    theta, samples : ndarray
        Uniform grid on ``[0, 2 pi)`` and ``M(theta_k)`` computed by direct
        quadrature of ``psi2 . g``, independent of the coefficients.
    sample_error : float
        Largest error estimate among the grid samples.
    scale_note : str
        Normalization of the ``psi2`` that was used; ``M`` inherits its scale.
    """

    c: object
    coeffs: dict
    quad_error: dict
    theta: np.ndarray
    samples: np.ndarray
    sample_error: float
    scale_note: str
    N: int
    nu: float
    meta: dict = field(default_factory=dict, compare=False)

    def series(self, theta) -> np.ndarray:
        """``sum_j Mhat_j exp(i j theta)`` (real part)."""
        theta = np.asarray(theta, dtype=float)
        total = np.zeros(theta.shape, dtype=complex)
        for j, m in self.coeffs.items():
            total = total + m * np.exp(1j * j * theta)
        return total.real

    def derivative(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        total = np.zeros(theta.shape, dtype=complex)
        for j, m in self.coeffs.items():
            total = total + 1j * j * m * np.exp(1j * j * theta)
        return total.real

    @property
    def total_error(self) -> float:
        return float(sum(self.quad_error.values()))

    def conjugacy_defect(self) -> float:
        return max(
            (abs(self.coeffs[-j] - np.conj(self.coeffs[j])) for j in range(1, self.N + 1)),
            default=0.0,
        )

    def series_defect(self) -> float:
        """Largest gap between the direct grid samples and the Fourier series."""
        return float(np.max(np.abs(self.samples - self.series(self.theta))))

    def is_identically_zero(self, grid: int = 1024) -> bool:
        th = np.linspace(0.0, 2 * np.pi, grid, endpoint=False)
        return bool(np.max(np.abs(self.series(th))) <= 10 * self.total_error)

    def is_constant(self) -> bool:
        """True when every harmonic with ``j != 0`` is below its error estimate."""
        return all(abs(m) <= 10 * self.quad_error[j] for j, m in self.coeffs.items() if j != 0)


@dataclass(frozen=True)
class SimpleZero:
    theta0: float
    value: float
    derivative: float
    is_simple: bool


def _panel_width(forcing: FourierForcing, max_width: float | None) -> float:
    w = 1.0
    if forcing.N > 0:
        w = min(w, np.pi / (4 * forcing.N * forcing.nu))
    if max_width is not None:
        w = min(w, max_width)
    return w


def _nodes(T: float, width: float, level: int) -> tuple[np.ndarray, np.ndarray]:
    n_panels = int(np.ceil(2 * T / width)) * 2**level
    edges = np.linspace(-T, T, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    ts = (mid[:, None] + half[:, None] * _GL_NODES).ravel()
    ws = (half[:, None] * _GL_WEIGHTS).ravel()
    return ts, ws


def _integrate(columns, T, width, tol, max_levels):
    """Composite Gauss-Legendre with global panel halving.

    ``columns(ts)`` returns a ``(K, ncols)`` integrand matrix.  Refinement
    stops once successive levels agree to ``tol`` in every column.
    """
    prev, err = None, np.array([np.inf])
    for level in range(max_levels + 1):
        ts, ws = _nodes(T, width, level)
        F = columns(ts)
        val = ws @ F
        rounding = np.finfo(float).eps * (np.abs(ws) @ np.abs(F))
        if prev is not None:
            err = np.abs(val - prev) + rounding
            if np.all(err <= tol):
                return val, err, {"levels": level, "nodes": ts.size}
        prev = val
    raise QuadratureFailure(
        f"composite Gauss-Legendre did not reach {tol:.1e} after {max_levels} refinements "
        f"(last change {np.max(err):.2e})"
    )


def _tail_bound(system, conn, forcing, psi2, c, harmonics) -> float:
    """Bound on ``int_{|t| > T} |psi2 . ghat_j|`` shared by all harmonics."""
    T, d = psi2.T, psi2.decay
    ends = np.array([-T, T])
    P = np.linalg.norm(psi2(ends), axis=1)
    X = conn.states(ends, c)
    G = sum(np.linalg.norm(forcing.coefficient(j, X), axis=1) for j in harmonics)
    return float(P[0] * G[0] / d.lambda2_minus + P[1] * G[1] / d.lambda2_plus)


def _check_harmonic(forcing: FourierForcing, j: int) -> int:
    if int(j) != j or abs(j) > forcing.N:
        raise InvalidHarmonic(f"harmonic {j} outside -{forcing.N}..{forcing.N}")
    return int(j)


def melnikov_coeff(
    system: SystemModel,
    conn: HeteroclinicConnection,
    forcing: FourierForcing,
    psi2: AdjointBoundedSolution,
    c,
    j: int,
    *,
    tol: float = 1e-10,
    max_levels: int = 8,
    max_width: float | None = None,
) -> tuple[complex, float]:
    """Single Fourier coefficient ``Mhat_j(c)`` with an error estimate.

    Raises
    ------
    InvalidHarmonic
        If ``|j| > N``.
    QuadratureFailure
        If the quadrature does not settle to ``tol``.
    """
    j = _check_harmonic(forcing, j)
    nu = forcing.nu

    def columns(ts):
        X = conn.states(ts, c)
        return (np.einsum("ki,ki->k", psi2(ts), forcing.coefficient(j, X)) * np.exp(1j * j * nu * ts))[:, None]

    val, err, _ = _integrate(columns, psi2.T, _panel_width(forcing, max_width), tol, max_levels)
    tail = _tail_bound(system, conn, forcing, psi2, c, [j])
    return complex(val[0]), float(err[0] + tail)


def melnikov_function(
    system: SystemModel,
    conn: HeteroclinicConnection,
    forcing: FourierForcing,
    psi2: AdjointBoundedSolution,
    c,
    theta_grid_size: int = 64,
    *,
    tol: float = 1e-10,
    max_levels: int = 8,
    max_width: float | None = None,
) -> MelnikovResult:
    """All coefficients plus direct samples of ``M`` on a uniform grid.

    Every integrand (one per harmonic, one per grid phase) is evaluated on
    the same quadrature nodes so ``psi2`` and the orbit are sampled once per
    refinement level.
    """
    if theta_grid_size < 4 * forcing.N + 1:
        raise InvalidParams(f"theta_grid_size must be at least 4N+1 = {4 * forcing.N + 1}")
    nu = forcing.nu
    harmonics = list(forcing.harmonics)
    theta = 2 * np.pi * np.arange(theta_grid_size) / theta_grid_size

    def columns(ts):
        X = conn.states(ts, c)
        P = psi2(ts)
        cols = [np.einsum("ki,ki->k", P, forcing.coefficient(j, X)) * np.exp(1j * j * nu * ts) for j in harmonics]
        phase = nu * ts[:, None] + theta[None, :]
        G = forcing.evaluate_direct(np.broadcast_to(X[:, None, :], phase.shape + X.shape[-1:]), phase)
        direct = np.einsum("ki,kli->kl", P, G)
        return np.column_stack(cols + [direct.astype(complex)])

    val, err, info = _integrate(columns, psi2.T, _panel_width(forcing, max_width), tol, max_levels)
    tail = _tail_bound(system, conn, forcing, psi2, c, harmonics)
    nh = len(harmonics)
    coeffs = {j: complex(val[i]) for i, j in enumerate(harmonics)}
    quad_error = {j: float(err[i] + tail) for i, j in enumerate(harmonics)}
    samples = val[nh:].real
    return MelnikovResult(
        c=c,
        coeffs=coeffs,
        quad_error=quad_error,
        theta=theta,
        samples=samples,
        sample_error=float(np.max(err[nh:]) + tail),
        scale_note=psi2.normalization,
        N=forcing.N,
        nu=nu,
        meta=dict(info, tail_bound=tail, T=psi2.T),
    )


def find_simple_zeros(
    mr: MelnikovResult,
    grid: int = 1024,
    zero_tol: float | None = None,
    simple_tol: float | None = None,
    xtol: float = 1e-12,
) -> list[SimpleZero]:
    """Zeros of the Fourier series of ``M`` in ``[0, 2 pi)``.

    Sign changes on a uniform grid are refined with Brent's method.  Grid
    minima of ``|M|`` below ``zero_tol`` without a sign change (even-order
    zeros) are refined by bounded minimization and reported as not simple.
    An identically vanishing ``M`` yields an empty list; check
    :meth:`MelnikovResult.is_identically_zero` to tell the cases apart.
    """
    th = np.linspace(0.0, 2 * np.pi, grid + 1)
    vals = mr.series(th)
    scale = float(np.max(np.abs(vals)))
    if scale == 0.0 or mr.is_identically_zero(grid):
        return []
    dscale = float(np.max(np.abs(mr.derivative(th))))
    zero_tol = 1e-9 * scale if zero_tol is None else zero_tol
    simple_tol = 1e-6 * dscale if simple_tol is None else simple_tol
    # round-off level grid values count as exact hits, otherwise a zero on a node can slip between signs
    vals = np.where(np.abs(vals) <= 16 * np.finfo(float).eps * scale, 0.0, vals)

    def M(t):
        return float(mr.series(t))

    found = []
    for k in range(grid):
        a, b = th[k], th[k + 1]
        fa, fb = vals[k], vals[k + 1]
        if fa == 0.0:
            found.append(a)
        elif fa * fb < 0:
            found.append(brentq(M, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps))
    # even-order zeros: local minima of |M| that touch zero without crossing
    absv = np.abs(vals[:-1])
    for k in range(grid):
        left, right = absv[k - 1], absv[(k + 1) % grid]
        if absv[k] <= left and absv[k] <= right and vals[k - 1] * vals[(k + 1) % grid] > 0:
            res = minimize_scalar(lambda t: abs(M(t)), bounds=(th[k] - th[1], th[k] + th[1]), method="bounded",
                                  options={"xatol": xtol})
            if abs(res.fun) <= zero_tol:
                found.append(res.x)

    zeros = []
    for t0 in sorted(float(np.mod(t, 2 * np.pi)) for t in found):
        if zeros and abs(t0 - zeros[-1].theta0) < 10 * xtol:
            continue
        value = M(t0)
        if abs(value) > zero_tol:
            continue
        d = float(mr.derivative(t0))
        zeros.append(SimpleZero(t0, value, d, abs(d) > simple_tol))
    if len(zeros) > 1 and abs(zeros[0].theta0 + 2 * np.pi - zeros[-1].theta0) < 10 * xtol:
        zeros.pop()
    return zeros
