"""Bounded solution of the adjoint variational equation along a heteroclinic orbit.

The adjoint equation ``psi' = -Df(x_h(t; c))^T psi`` has, under the standing
assumptions, a single (up to scale) solution ``psi2`` decaying in both time
directions.  It is computed by two-sided shooting: one half-solution grows
out of ``x_-(c)`` forward in time, the other out of ``x_+(c)`` backward in
time, and the two are matched by a scalar at ``t = 0``.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .core import DecayData, DecaySource, HeteroclinicConnection, SystemModel, eigen_split
from .errors import DecayMismatch, EigenvectorAmbiguity, MatchFailure, NonintegrabilityError
from .integrate import IntegratorConfig, integrate_rhs

__all__ = [
    "AdjointSource",
    "AdjointResidualReport",
    "AdjointBoundedSolution",
    "default_horizon",
    "estimate_decay",
    "compute_psi2",
    "check_adjoint_solution",
    "gradient_basis",
]


class AdjointSource(str, enum.Enum):
    closed_form = "closed_form"
    two_sided_shooting = "two_sided_shooting"


@dataclass(frozen=True)
class AdjointResidualReport:
    max_residual: float
    decay_plus_ok: bool
    decay_minus_ok: bool
    max_orthogonality: float
    match_angle: float | None = None

    @property
    def ok(self) -> bool:
        return self.max_residual <= 1e-7 and self.decay_plus_ok and self.decay_minus_ok


@dataclass(frozen=True)
class AdjointBoundedSolution:
    """``psi2(t; c)`` on ``[-T, T]``.

    Calling the object evaluates it: a scalar time gives an ``(n,)`` vector,
    an array of times gives ``(K, n)``.  ``scale`` is the factor applied to
    the raw shooting output; ``normalization`` names the convention.
    """

    c: object
    T: float
    decay: DecayData
    source: AdjointSource
    normalization: str
    scale: float
    _eval: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    residual_report: AdjointResidualReport | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(np.abs(t) > self.T * (1 + 1e-12)):
            raise ValueError(f"psi2 is only available on [-{self.T}, {self.T}]")
        out = self._eval(np.atleast_1d(t))
        return out[0] if t.ndim == 0 else out

    def scaled(self, sigma: float) -> "AdjointBoundedSolution":
        base = self._eval
        return replace(
            self,
            _eval=lambda t: sigma * base(t),
            scale=self.scale * sigma,
            normalization=f"{self.normalization}, rescaled by {sigma!r}",
            residual_report=None,
        )

    def matched_to(self, target_at_zero) -> "AdjointBoundedSolution":
        """Rescale so that ``psi2(0)`` best matches ``target_at_zero`` in least squares."""
        target = np.asarray(target_at_zero, dtype=float)
        v = self(0.0)
        return self.scaled(float(v @ target / (v @ v)))

    @classmethod
    def from_closed_form(cls, fn, c, decay: DecayData, T: float | None = None) -> "AdjointBoundedSolution":
        T = default_horizon(decay) if T is None else T
        return cls(
            c=c,
            T=T,
            decay=decay,
            source=AdjointSource.closed_form,
            normalization="closed form",
            scale=1.0,
            _eval=lambda t: np.asarray(fn(t), dtype=float),
        )


def default_horizon(decay: DecayData, tail: float = 1e-12) -> float:
    """Smallest ``T`` with ``exp(-lambda_min T) < tail`` and ``T >= 50 / lambda_min``."""
    lam = decay.min_rate
    return max(np.log(1.0 / tail) / lam, 50.0 / lam)


def gradient_basis(system: SystemModel, x) -> np.ndarray:
    """Orthonormal rows spanning the level-set gradients ``DF_j(x)``, ``j <= m``.

    Only the ``m`` level-set integrals are used: further integrals may have
    gradients that combine into the decaying solution itself.
    """
    G = np.array([np.asarray(F.gradient(x), dtype=float) for F in system.level_integrals])
    if G.size == 0:
        return np.zeros((0, system.n))
    _, s, vt = np.linalg.svd(G, full_matrices=False)
    keep = s > 1e-10 * max(s[0], 1e-300)
    return vt[keep]


# --------------------------------------------------------------------------
# decay rates


def _fit_rate(conn, system, c, t_lo, t_hi) -> float:
    ts = np.linspace(t_lo, t_hi, 41)
    v = np.linalg.norm(conn.velocities(ts, c, system), axis=1)
    slope = np.polyfit(ts, np.log(v), 1)[0]
    return float(-slope if t_hi > 0 else slope)


def _pick(cands: np.ndarray, target: float | None, what: str) -> float:
    if cands.size == 0:
        raise NonintegrabilityError(f"no eigenvalue available for {what}")
    if cands.size == 1 or target is None:
        return float(np.min(cands))
    return float(cands[np.argmin(np.abs(cands - target))])


def estimate_decay(
    conn: HeteroclinicConnection,
    system: SystemModel,
    c,
    fit_horizon: float | None = None,
    rel_tol: float = 0.05,
) -> DecayData:
    """Decay rates from the spectra of ``Df(x_-(c))`` and ``Df(x_+(c))``.

    ``-lambda1_plus`` is a stable eigenvalue at ``x_+``, ``lambda1_minus`` an
    unstable one at ``x_-``; ``lambda2_plus`` and ``-lambda2_minus`` are the
    slowest unstable/stable eigenvalues at ``x_+``/``x_-``.  The decay of
    ``|dx_h/dt|`` over ``[T/2, T]`` is fitted and compared with
    ``lambda1_plus``; a disagreement above ``rel_tol`` raises a
    :class:`~nonintegrability.errors.DecayMismatch` warning that is also
    stored on the result.
    """
    xm, xp = conn.equilibria(c)
    sp = eigen_split(system, xp, check_counts=False)
    sm = eigen_split(system, xm, check_counts=False)
    stable_p = -sp.stable.real
    unstable_p = sp.unstable.real
    stable_m = -sm.stable.real
    unstable_m = sm.unstable.real
    if stable_p.size == 0:
        raise NonintegrabilityError(f"Df(x_+) has no stable eigenvalue at c={c}")

    T = fit_horizon if fit_horizon is not None else 20.0 / float(np.min(stable_p))
    fit_plus = _fit_rate(conn, system, c, T / 2, T)
    fit_minus = None
    if unstable_m.size > 1:
        fit_minus = _fit_rate(conn, system, c, -T, -T / 2)

    lam1p = _pick(stable_p, fit_plus, "lambda1_plus")
    lam1m = _pick(unstable_m, fit_minus, "lambda1_minus")
    lam2p = _pick(unstable_p, None, "lambda2_plus")
    lam2m = _pick(stable_m, None, "lambda2_minus")

    notes = []
    if abs(fit_plus - lam1p) > rel_tol * lam1p:
        msg = f"fitted orbit decay {fit_plus:.6g} differs from eigenvalue rate {lam1p:.6g} by more than {rel_tol:.0%}"
        warnings.warn(msg, DecayMismatch, stacklevel=2)
        notes.append(msg)
    return DecayData(lam1p, lam1m, lam2p, lam2m, source=DecaySource.eigenvalue, warnings=tuple(notes))


# --------------------------------------------------------------------------
# two-sided shooting


def _seed(system: SystemModel, x_eq, growing: bool) -> tuple[np.ndarray, float]:
    """Unit eigenvector of ``-Df(x_eq)^T`` for the eigenvalue with Re > 0 (or < 0)."""
    A = -system.jac(x_eq).T
    mu, V = np.linalg.eig(A)
    band = 1e-9 * float(np.max(np.abs(mu), initial=0.0))
    sel = np.flatnonzero(mu.real > band) if growing else np.flatnonzero(mu.real < -band)
    side = "positive" if growing else "negative"
    if sel.size != 1:
        raise EigenvectorAmbiguity(f"{sel.size} eigenvalues of -Df^T with {side} real part at {x_eq}")
    k = sel[0]
    if abs(mu[k].imag) > band:
        raise EigenvectorAmbiguity(f"eigenvalue {mu[k]} at {x_eq} is not real")
    v = V[:, k].real
    v = v / np.linalg.norm(v)
    if v[np.flatnonzero(np.abs(v) > 1e-12)[0]] < 0:
        v = -v
    return v, abs(float(mu[k].real))


class _WeightedHalf:
    """Adjoint solution stored as ``psi(t) = exp(r t) * phi(t)`` with ``phi`` of order one."""

    def __init__(self, traj, rate, nfev):
        self.traj = traj
        self.rate = rate
        self.nfev = nfev

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(self.rate * t)[..., None] * self.traj(t)


def _weighted_half(system, conn, c, phi0, rate, t_span, cfg):
    # phi' = (-Df^T - r I) phi keeps the growing half-solution well scaled for step control
    def fun(t, phi):
        return -system.jac(conn.state(t, c)).T @ phi - rate * phi

    traj = integrate_rhs(fun, phi0, t_span, cfg)
    return _WeightedHalf(traj, rate, traj.meta["nfev"])


def _sign_fix(v: np.ndarray) -> float:
    nz = np.flatnonzero(np.abs(v) > 1e-12 * np.linalg.norm(v))
    return -1.0 if nz.size and v[nz[0]] < 0 else 1.0


def compute_psi2(
    system: SystemModel,
    conn: HeteroclinicConnection,
    c,
    cfg: IntegratorConfig | None = None,
    *,
    decay: DecayData | None = None,
    T: float | None = None,
    match_tol: float = 1e-6,
    normalize: bool = True,
    seed_scale: float = 1.0,
    check: bool = True,
) -> AdjointBoundedSolution:
    """Bounded decaying solution of the adjoint equation by two-sided shooting.

    The forward half starts at ``t = -T`` on the eigenvector of
    ``-Df(x_-)^T`` with positive eigenvalue, the backward half at ``t = +T``
    on the eigenvector of ``-Df(x_+)^T`` with negative eigenvalue.  Each half
    is integrated in the weighted variable ``phi = exp(-r t) psi``, with ``r``
    the seed eigenvalue, so that the step control sees an order-one solution
    over the whole half-range.  At ``t = 0`` the halves are compared after
    projecting out the first-integral gradients (exact, non-decaying adjoint
    solutions of the level-set integrals) and joined by a least-squares scalar.

    With ``normalize`` the result has ``|psi2(0)| = 1`` and a positive first
    nonzero component.

    Raises
    ------
    MatchFailure
        If the projected halves differ in direction by more than ``match_tol``
        radians.
    EigenvectorAmbiguity
        If a seed eigenvector is not unique up to scale.
    """
    # the adjoint residual bound needs integrator errors well below 1e-7
    cfg = cfg or IntegratorConfig().refined(100.0)
    if decay is None:
        decay = conn.decay_at(c) or estimate_decay(conn, system, c)
    if T is None:
        T = default_horizon(decay)
    xm, xp = conn.equilibria(c)
    v_minus, rate_m = _seed(system, xm, growing=True)
    v_plus, rate_p = _seed(system, xp, growing=False)

    fwd = _weighted_half(system, conn, c, seed_scale * v_minus, rate_m, (-T, 0.0), cfg)
    bwd = _weighted_half(system, conn, c, seed_scale * v_plus, -rate_p, (T, 0.0), cfg)

    a, b = fwd(0.0), bwd(0.0)
    Q = gradient_basis(system, conn.state(0.0, c))
    P = np.eye(system.n) - Q.T @ Q
    pa, pb = P @ a, P @ b
    na, nb = np.linalg.norm(pa), np.linalg.norm(pb)
    if na == 0 or nb == 0:
        raise MatchFailure("a half-solution lies in the span of the first-integral gradients at t = 0")
    ub = pb / nb
    perp = pa - (pa @ ub) * ub
    angle = float(np.arcsin(min(1.0, np.linalg.norm(perp) / na)))
    if angle > match_tol:
        raise MatchFailure(f"half-solutions meet at an angle of {angle:.3e} rad (tolerance {match_tol:.1e})")
    join = float(pa @ pb / (pb @ pb))

    scale = seed_scale
    normalization = "seed eigenvectors of size exp(-rate * T) at t = -T and t = +T"
    sigma = 1.0
    if normalize:
        sigma = _sign_fix(a) / np.linalg.norm(a)
        normalization = "|psi2(0)| = 1, first nonzero component positive"

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (system.n,))
        neg = t < 0
        if np.any(neg):
            out[neg] = fwd(t[neg])
        if np.any(~neg):
            out[~neg] = join * bwd(t[~neg])
        return sigma * out

    sol = AdjointBoundedSolution(
        c=c,
        T=float(T),
        decay=decay,
        source=AdjointSource.two_sided_shooting,
        normalization=normalization,
        scale=float(sigma if normalize else scale),
        _eval=evaluate,
        meta={
            "match_angle": angle,
            "coefficients": conn.orbit_source,
            "nfev": fwd.nfev + bwd.nfev,
            "seed_rates": (rate_m, rate_p),
        },
    )
    if check:
        sol = replace(sol, residual_report=check_adjoint_solution(system, conn, c, sol, match_angle=angle))
    return sol


def check_adjoint_solution(
    system: SystemModel,
    conn: HeteroclinicConnection,
    c,
    psi2: AdjointBoundedSolution,
    n_grid: int = 401,
    h: float | None = None,
    match_angle: float | None = None,
) -> AdjointResidualReport:
    """Residual, two-sided decay and orthogonality to the orbit velocity.

    The derivative is a five-point difference of the dense output with step
    ``h`` (default ``5e-3 / max(1, fastest rate)``).
    """
    T = psi2.T
    d = psi2.decay
    if h is None:
        fastest = max(d.lambda1_plus, d.lambda1_minus, d.lambda2_plus, d.lambda2_minus)
        h = 5e-3 / max(1.0, fastest)
    ts = np.linspace(-T + 3 * h, T - 3 * h, n_grid)
    ts = ts[np.abs(ts) > 3 * h]
    P = psi2(ts)
    # five-point stencil on the dense output
    dP = (psi2(ts - 2 * h) - 8 * psi2(ts - h) + 8 * psi2(ts + h) - psi2(ts + 2 * h)) / (12 * h)
    J = system.jac_many(conn.states(ts, c))
    resid = dP + np.einsum("kji,kj->ki", J, P)
    max_res = float(np.max(np.linalg.norm(resid, axis=1) / (1.0 + np.linalg.norm(P, axis=1))))

    n_T = np.linalg.norm(psi2(np.array([T, T / 2, -T, -T / 2])), axis=1)
    plus_ok = bool(n_T[0] <= 10 * np.exp(-d.lambda2_plus * T / 2) * n_T[1])
    minus_ok = bool(n_T[2] <= 10 * np.exp(-d.lambda2_minus * T / 2) * n_T[3])

    V = conn.velocities(ts, c, system)
    ortho = float(np.max(np.abs(np.einsum("ki,ki->k", P, V))))
    return AdjointResidualReport(max_res, plus_ok, minus_ok, ortho, match_angle)
