"""Problem data model and numerical checks of the standing assumptions.

A problem is described by three objects:

* :class:`SystemModel` -- the unperturbed vector field ``f`` with its
  Jacobian and first integrals,
* :class:`FourierForcing` -- the time-periodic perturbation ``g(x, theta)``
  given by a finite set of complex Fourier coefficients,
* :class:`HeteroclinicConnection` -- a family of orbits ``x_h(t; c)``
  joining two equilibria ``x_-(c)`` and ``x_+(c)``.

Evaluators are plain callables.  When ``vectorized`` is set on the owning
object they receive stacked states of shape ``(..., n)`` (and stacked times)
and must broadcast; otherwise they are called one point at a time.
"""
from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .errors import (
    AssumptionViolation,
    DimensionMismatch,
    EvaluationFailure,
    InvalidParams,
    NotAnEquilibrium,
)

__all__ = [
    "FirstIntegral",
    "SystemModel",
    "FourierForcing",
    "DecaySource",
    "DecayData",
    "HeteroclinicConnection",
    "SpectralSplit",
    "CheckStatus",
    "AssumptionCheck",
    "ValidationReport",
    "finite_difference_jacobian",
    "eigen_split",
    "validate_assumptions",
]


def _rowwise(fn: Callable, X: np.ndarray, vectorized: bool, dtype=float) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if vectorized:
        return np.asarray(fn(X), dtype=dtype)
    flat = X.reshape(-1, X.shape[-1])
    out = np.array([np.asarray(fn(x), dtype=dtype) for x in flat])
    return out.reshape(X.shape[:-1] + out.shape[1:])


def finite_difference_jacobian(f: Callable, x: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian with step ``1e-6 * (1 + |x|)``."""
    x = np.asarray(x, dtype=float)
    h = 1e-6 * (1.0 + np.linalg.norm(x))
    n = x.size
    J = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        J[:, i] = (np.asarray(f(x + e), dtype=float) - np.asarray(f(x - e), dtype=float)) / (2 * h)
    return J


@dataclass(frozen=True)
class FirstIntegral:
    """A scalar conserved quantity and its gradient."""

    name: str
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SystemModel:
    """Unperturbed autonomous system ``dx/dt = f(x)``.

    Parameters
    ----------
    n : int
        State dimension, at least 3.
    f : callable
        Vector field.
    first_integrals : sequence of FirstIntegral
        Known first integrals.  The first ``m`` of them (``m`` taken from
        ``spectral_counts``) define the level sets ``F(x) = c`` on which the
        heteroclinic family lives; any further entries are only used for
        conservation checks.
    spectral_counts : (n_s, n_u, m)
        Expected numbers of stable and unstable eigenvalues of ``Df`` at the
        equilibria, and the number of level-set integrals.
    jacobian : callable, optional
        Analytic Jacobian.  A central-difference approximation is used when
        omitted.
    """

    n: int
    f: Callable[[np.ndarray], np.ndarray]
    first_integrals: Sequence[FirstIntegral]
    spectral_counts: tuple[int, int, int]
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""
    vectorized: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise InvalidParams(f"state dimension must be an integer >= 3, got {self.n}")
        n_s, n_u, m = self.spectral_counts
        if min(n_s, n_u, m) < 0 or n_s + n_u + m != self.n:
            raise InvalidParams(f"spectral counts {self.spectral_counts} do not add up to n={self.n}")
        if m < 1 or m > self.n - 2:
            raise InvalidParams(f"need 1 <= m <= n - 2, got m={m}")
        if len(self.first_integrals) < m:
            raise InvalidParams(f"{m} level-set integrals required, {len(self.first_integrals)} given")
        object.__setattr__(self, "first_integrals", tuple(self.first_integrals))

    @property
    def m(self) -> int:
        return self.spectral_counts[2]

    @property
    def level_integrals(self) -> tuple[FirstIntegral, ...]:
        return self.first_integrals[: self.m]

    def rhs(self, x) -> np.ndarray:
        return np.asarray(self.f(np.asarray(x, dtype=float)), dtype=float)

    def jac(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(x), dtype=float)
        return finite_difference_jacobian(self.f, x)

    def rhs_many(self, X) -> np.ndarray:
        return _rowwise(self.f, X, self.vectorized)

    def jac_many(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.jacobian is not None and self.vectorized:
            return np.asarray(self.jacobian(X), dtype=float)
        flat = X.reshape(-1, X.shape[-1])
        out = np.array([self.jac(x) for x in flat])
        return out.reshape(X.shape[:-1] + out.shape[1:])


@dataclass(frozen=True)
class FourierForcing:
    """Perturbation ``g(x, theta) = sum_j ghat_j(x) exp(i j theta)``, ``|j| <= N``.

    ``coeffs`` maps a harmonic index to an evaluator returning a complex
    ``n``-vector; missing indices are treated as identically zero.  The
    optional ``direct`` evaluator ``g(x, theta)`` is used for
    cross-validation of the Fourier representation.
    """

    N: int
    nu: float
    coeffs: Mapping[int, Callable[[np.ndarray], np.ndarray]]
    direct: Callable[[np.ndarray, Any], np.ndarray] | None = None
    vectorized: bool = False

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise InvalidParams(f"Fourier order must be a nonnegative integer, got {self.N}")
        if not self.nu > 0:
            raise InvalidParams(f"forcing frequency must be positive, got {self.nu}")
        bad = [j for j in self.coeffs if abs(j) > self.N]
        if bad:
            raise InvalidParams(f"harmonics {bad} exceed the Fourier order N={self.N}")
        object.__setattr__(self, "coeffs", dict(self.coeffs))

    @property
    def harmonics(self) -> range:
        return range(-self.N, self.N + 1)

    def coefficient(self, j: int, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        fn = self.coeffs.get(j)
        if fn is None:
            return np.zeros(X.shape, dtype=complex)
        return _rowwise(fn, X, self.vectorized, dtype=complex)

    def a0(self, X) -> np.ndarray:
        return self.coefficient(0, X).real

    def a(self, j: int, X) -> np.ndarray:
        return (self.coefficient(j, X) + self.coefficient(-j, X)).real

    def b(self, j: int, X) -> np.ndarray:
        return (1j * (self.coefficient(j, X) - self.coefficient(-j, X))).real

    def series(self, X, theta) -> np.ndarray:
        """Complex Fourier sum at states ``X`` and phases ``theta`` (broadcast)."""
        X = np.asarray(X, dtype=float)
        theta = np.asarray(theta, dtype=float)[..., None]
        total = np.zeros(np.broadcast_shapes(X.shape, theta.shape), dtype=complex)
        for j in self.harmonics:
            total = total + self.coefficient(j, X) * np.exp(1j * j * theta)
        return total

    def evaluate(self, X, theta) -> np.ndarray:
        """Real perturbation ``g(x, theta)`` reconstructed from the coefficients."""
        return self.series(X, theta).real

    def evaluate_direct(self, X, theta) -> np.ndarray:
        if self.direct is None:
            return self.evaluate(X, theta)
        X = np.asarray(X, dtype=float)
        if self.vectorized:
            return np.asarray(self.direct(X, theta), dtype=float)
        Xb, Tb = np.broadcast_arrays(X, np.asarray(theta, dtype=float)[..., None])
        flat_x = Xb.reshape(-1, X.shape[-1])
        flat_t = Tb[..., 0].reshape(-1)
        out = np.array([np.asarray(self.direct(x, t), dtype=float) for x, t in zip(flat_x, flat_t)])
        return out.reshape(Xb.shape)

    def conjugacy_defect(self, X) -> float:
        """Largest ``|ghat_{-j}(x) - conj(ghat_j(x))|`` over the sample states."""
        worst = 0.0
        for j in range(0, self.N + 1):
            d = self.coefficient(-j, X) - np.conj(self.coefficient(j, X))
            worst = max(worst, float(np.max(np.abs(d), initial=0.0)))
        return worst


class DecaySource(str, enum.Enum):
    eigenvalue = "eigenvalue"
    empirical_fit = "empirical_fit"
    user_supplied = "user_supplied"


@dataclass(frozen=True)
class DecayData:
    """Exponential rates of the orbit velocity (``lambda1``) and of the bounded
    adjoint solution (``lambda2``) as ``t -> +inf`` and ``t -> -inf``."""

    lambda1_plus: float
    lambda1_minus: float
    lambda2_plus: float
    lambda2_minus: float
    source: DecaySource = DecaySource.user_supplied
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("lambda1_plus", "lambda1_minus", "lambda2_plus", "lambda2_minus"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidParams(f"{name} must be a positive finite rate, got {v}")
        object.__setattr__(self, "source", DecaySource(self.source))

    @property
    def min_rate(self) -> float:
        return min(self.lambda1_plus, self.lambda1_minus, self.lambda2_plus, self.lambda2_minus)


@dataclass(frozen=True)
class HeteroclinicConnection:
    """Family of orbits ``x_h(t; c)`` from ``x_-(c)`` (t -> -inf) to ``x_+(c)``.

    ``param_domain`` is a box given as ``m`` rows of ``(low, high)``.  The
    parameter ``c`` is passed to evaluators as a float when ``m == 1`` and as
    a 1-d array otherwise.  ``decay`` may be a fixed :class:`DecayData` or a
    callable of ``c``.  ``velocity``, if supplied, is the closed-form
    ``d x_h / dt``; otherwise ``f(x_h)`` is used.
    """

    orbit: Callable[[Any, Any], np.ndarray]
    x_minus: Callable[[Any], np.ndarray]
    x_plus: Callable[[Any], np.ndarray]
    param_domain: Any
    decay: DecayData | Callable[[Any], DecayData] | None = None
    velocity: Callable[[Any, Any], np.ndarray] | None = None
    orbit_source: str = "closed_form"
    vectorized: bool = False
    name: str = ""

    def __post_init__(self):
        box = np.atleast_2d(np.asarray(self.param_domain, dtype=float))
        if box.ndim != 2 or box.shape[1] != 2:
            raise InvalidParams("param_domain must be a sequence of (low, high) pairs")
        if np.any(box[:, 0] >= box[:, 1]):
            raise InvalidParams("param_domain must have nonempty interior")
        box.setflags(write=False)
        object.__setattr__(self, "param_domain", box)

    @property
    def m(self) -> int:
        return self.param_domain.shape[0]

    def params(self, c):
        arr = np.atleast_1d(np.asarray(c, dtype=float))
        if arr.size != self.m:
            raise DimensionMismatch(f"parameter has {arr.size} entries, expected {self.m}")
        return float(arr[0]) if self.m == 1 else arr

    def contains(self, c) -> bool:
        arr = np.atleast_1d(np.asarray(c, dtype=float))
        return bool(np.all(arr >= self.param_domain[:, 0]) and np.all(arr <= self.param_domain[:, 1]))

    def sample_params(self, per_axis: int = 3) -> list:
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in self.param_domain]
        return [self.params(np.array(p)) for p in itertools.product(*axes)]

    def state(self, t: float, c) -> np.ndarray:
        return np.asarray(self.orbit(float(t), self.params(c)), dtype=float)

    def states(self, ts, c) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        cc = self.params(c)
        if self.vectorized:
            return np.asarray(self.orbit(ts, cc), dtype=float)
        return np.array([np.asarray(self.orbit(float(t), cc), dtype=float) for t in ts.ravel()]).reshape(
            ts.shape + (-1,)
        )

    def velocities(self, ts, c, system: SystemModel) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if self.velocity is None:
            return system.rhs_many(self.states(ts, c))
        cc = self.params(c)
        if self.vectorized:
            return np.asarray(self.velocity(ts, cc), dtype=float)
        return np.array([np.asarray(self.velocity(float(t), cc), dtype=float) for t in ts.ravel()]).reshape(
            ts.shape + (-1,)
        )

    def equilibria(self, c) -> tuple[np.ndarray, np.ndarray]:
        cc = self.params(c)
        return np.asarray(self.x_minus(cc), dtype=float), np.asarray(self.x_plus(cc), dtype=float)

    def decay_at(self, c) -> DecayData | None:
        if self.decay is None or isinstance(self.decay, DecayData):
            return self.decay
        return self.decay(self.params(c))


# --------------------------------------------------------------------------
# spectral split


@dataclass(frozen=True)
class SpectralSplit:
    eigenvalues: np.ndarray
    stable: np.ndarray
    unstable: np.ndarray
    zero: np.ndarray
    zero_tol: float
    expected: tuple[int, int, int] | None = None

    @property
    def counts(self) -> tuple[int, int, int]:
        return (self.stable.size, self.unstable.size, self.zero.size)

    @property
    def matches_expected(self) -> bool:
        return self.expected is None or self.counts == tuple(self.expected)


def eigen_split(
    system: SystemModel,
    x_eq,
    zero_tol: float | None = None,
    eq_tol: float = 1e-8,
    check_counts: bool = True,
) -> SpectralSplit:
    """Partition the spectrum of ``Df(x_eq)`` by the sign of the real part.

    An eigenvalue belongs to the zero class when ``|Re mu| <= zero_tol``; the
    default band is ``1e-9`` times the spectral radius.  A mismatch with
    ``system.spectral_counts`` is reported through an
    :class:`~nonintegrability.errors.AssumptionViolation` warning.

    Raises
    ------
    NotAnEquilibrium
        If ``|f(x_eq)| > eq_tol * (1 + |x_eq|)``.
    """
    x_eq = np.asarray(x_eq, dtype=float)
    if x_eq.shape != (system.n,):
        raise DimensionMismatch(f"equilibrium has shape {x_eq.shape}, expected ({system.n},)")
    resid = np.linalg.norm(system.rhs(x_eq))
    if resid > eq_tol * (1.0 + np.linalg.norm(x_eq)):
        raise NotAnEquilibrium(f"|f(x_eq)| = {resid:.3e} at {x_eq}")
    mu = np.linalg.eigvals(system.jac(x_eq))
    mu = mu[np.lexsort((mu.imag, mu.real))]
    if zero_tol is None:
        zero_tol = 1e-9 * float(np.max(np.abs(mu), initial=0.0))
    re = mu.real
    zero = np.abs(re) <= zero_tol
    split = SpectralSplit(
        eigenvalues=mu,
        stable=mu[(re < 0) & ~zero],
        unstable=mu[(re > 0) & ~zero],
        zero=mu[zero],
        zero_tol=zero_tol,
        expected=tuple(system.spectral_counts) if check_counts else None,
    )
    if not split.matches_expected:
        warnings.warn(
            f"eigenvalue counts {split.counts} at {x_eq} differ from declared {system.spectral_counts}",
            AssumptionViolation,
            stacklevel=2,
        )
    return split


# --------------------------------------------------------------------------
# assumption validation


class CheckStatus(str, enum.Enum):
    passed = "pass"
    failed = "fail"
    declared = "declared, not verified"


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    status: CheckStatus
    detail: str
    value: float | None = None


@dataclass
class ValidationReport:
    checks: list[AssumptionCheck] = field(default_factory=list)

    def add(self, name, ok, detail, value=None):
        status = CheckStatus.passed if ok else CheckStatus.failed
        self.checks.append(AssumptionCheck(name, status, detail, None if value is None else float(value)))

    def declare(self, name, detail):
        self.checks.append(AssumptionCheck(name, CheckStatus.declared, detail))

    def entry(self, name: str) -> AssumptionCheck:
        for chk in self.checks:
            if chk.name == name:
                return chk
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(chk.status != CheckStatus.failed for chk in self.checks)

    @property
    def failures(self) -> list[AssumptionCheck]:
        return [chk for chk in self.checks if chk.status == CheckStatus.failed]

    def summary(self) -> str:
        return "\n".join(f"{chk.name:<22} {chk.status.value:<22} {chk.detail}" for chk in self.checks)


def _time_derivative(conn: HeteroclinicConnection, ts: np.ndarray, c, h: float) -> np.ndarray:
    # five-point stencil
    xs = [conn.states(ts + k * h, c) for k in (-2, -1, 1, 2)]
    return (xs[0] - 8 * xs[1] + 8 * xs[2] - xs[3]) / (12 * h)


def _guarded(what: str, fn, *args):
    try:
        return fn(*args)
    except (DimensionMismatch, NotAnEquilibrium):
        raise
    except Exception as exc:  # noqa: BLE001 - user evaluators may raise anything
        raise EvaluationFailure(f"{what} failed: {exc!r}") from exc


def validate_assumptions(
    system: SystemModel,
    conn: HeteroclinicConnection,
    forcing: FourierForcing,
    c_samples: Sequence | None = None,
    n_times: int = 201,
) -> ValidationReport:
    """Check the numerically verifiable standing assumptions on sample grids.

    First integrals, equilibria and gradient independence, eigenvalue counts,
    the orbit equation and its limits, and the finite Fourier structure of
    the forcing are tested.  Commutative vector fields, the local invariant
    curves near the equilibria and the uniqueness of the decaying
    variational solution are recorded as declared only.
    """
    n = system.n
    report = ValidationReport()
    if c_samples is None:
        c_samples = conn.sample_params(3)

    a1_worst = a2_eq_worst = a5_res_worst = conj_worst = recon_worst = direct_worst = 0.0
    rank_ok = counts_ok = limits_ok = True
    rank_detail = counts_detail = limits_detail = ""
    for c in c_samples:
        xm, xp = _guarded("equilibrium evaluator", conn.equilibria, c)
        for x_eq in (xm, xp):
            if x_eq.shape != (n,):
                raise DimensionMismatch(f"equilibrium has shape {x_eq.shape}, expected ({n},)")
            fx = _guarded("vector field", system.rhs, x_eq)
            if fx.shape != (n,):
                raise DimensionMismatch(f"f returned shape {fx.shape}, expected ({n},)")
            a2_eq_worst = max(a2_eq_worst, np.linalg.norm(fx) / (1.0 + np.linalg.norm(x_eq)))

            grads = np.array([_guarded("first-integral gradient", F.gradient, x_eq) for F in system.level_integrals])
            grads = grads.reshape(system.m, -1)
            if grads.shape[1] != n:
                raise DimensionMismatch(f"gradient has {grads.shape[1]} entries, expected {n}")
            sv = np.linalg.svd(grads, compute_uv=False)
            ok = sv[0] > 1e-12 and sv[-1] > 1e-8 * sv[0]
            if not ok:
                rank_ok = False
                rank_detail = f"level-set gradients rank-deficient at {x_eq} (singular values {sv})"

            try:
                split = eigen_split(system, x_eq, check_counts=False)
                if split.counts != tuple(system.spectral_counts):
                    counts_ok = False
                    counts_detail = f"counts {split.counts} at {x_eq}, declared {tuple(system.spectral_counts)}"
            except NotAnEquilibrium as exc:
                counts_ok = False
                counts_detail = str(exc)

        rates = _equilibrium_rates(system, xm, xp)
        lam = min(rates) if rates else 1.0
        t_half = 20.0 / lam
        ts = np.linspace(-t_half, t_half, n_times)
        X = _guarded("orbit evaluator", conn.states, ts, c)
        if X.shape != (n_times, n):
            raise DimensionMismatch(f"orbit returned shape {X.shape[1:]}, expected ({n},)")
        F = _guarded("vector field", system.rhs_many, X)

        for integral in system.first_integrals:
            G = np.array([_guarded("first-integral gradient", integral.gradient, x) for x in X])
            dot = np.abs(np.einsum("ij,ij->i", G, F))
            scale = 1.0 + np.linalg.norm(G, axis=1) * np.linalg.norm(F, axis=1)
            a1_worst = max(a1_worst, float(np.max(dot / scale)))

        h = 1e-3 / max(1.0, lam)
        dX = _time_derivative(conn, ts, c, h)
        res = np.linalg.norm(dX - F, axis=1) / (1.0 + np.linalg.norm(F, axis=1))
        a5_res_worst = max(a5_res_worst, float(np.max(res)))

        for sign, x_lim in ((+1, xp), (-1, xm)):
            horizons = np.array([5.0, 10.0, 20.0]) / lam
            d = np.linalg.norm(conn.states(sign * horizons, c) - x_lim, axis=1)
            if not (np.all(np.diff(d) < 0) or d[-1] == 0) or d[-1] > 1e-6 * (1.0 + np.linalg.norm(x_lim)):
                limits_ok = False
                limits_detail = f"distance to equilibrium at t = {sign}*(5,10,20)/lambda: {d}"

        XF = np.vstack([X[:: max(1, n_times // 20)], xm, xp])
        conj_worst = max(conj_worst, _guarded("Fourier coefficient", forcing.conjugacy_defect, XF))
        thetas = np.linspace(0, 2 * np.pi, 9)[:-1]
        for th in thetas:
            s = forcing.series(XF, th)
            recon_worst = max(recon_worst, float(np.max(np.abs(s.imag) / (1.0 + np.abs(s.real)))))
            if forcing.direct is not None:
                g = forcing.evaluate_direct(XF, th)
                direct_worst = max(direct_worst, float(np.max(np.abs(g - s.real) / (1.0 + np.abs(g)))))

    report.add("A1.first_integrals", a1_worst <= 1e-10, f"max relative |grad F . f| on orbit = {a1_worst:.2e}", a1_worst)
    report.add("A2.equilibria", a2_eq_worst <= 1e-10, f"max relative |f(x_pm)| = {a2_eq_worst:.2e}", a2_eq_worst)
    report.add("A2.gradient_rank", rank_ok, rank_detail or "level-set gradients independent at x_pm")
    report.declare("A3.integrable", "commuting vector fields and extra integrals are metadata only")
    report.add("A4.eigen_counts", counts_ok, counts_detail or f"(n_s, n_u, m) = {tuple(system.spectral_counts)}")
    report.add("A5.orbit_residual", a5_res_worst <= 1e-8, f"max relative |dx_h/dt - f(x_h)| = {a5_res_worst:.2e}", a5_res_worst)
    report.add("A5.limits", limits_ok, limits_detail or "x_h(t) -> x_pm monotonically")
    report.declare("A6.invariant_curves", "local invariant curves near x_pm are analytic objects")
    report.declare("A7.unique_decaying", "uniqueness of the decaying variational solution is not sampled")
    a8_ok = conj_worst <= 1e-10 and recon_worst <= 1e-12 and direct_worst <= 1e-12
    report.add(
        "A8.fourier",
        a8_ok,
        f"N={forcing.N}, conjugacy defect {conj_worst:.1e}, imaginary residue {recon_worst:.1e}, "
        f"direct mismatch {direct_worst:.1e}",
        max(conj_worst, recon_worst, direct_worst),
    )
    return report


def _equilibrium_rates(system: SystemModel, xm, xp) -> list[float]:
    rates = []
    for x_eq in (xm, xp):
        try:
            split = eigen_split(system, x_eq, check_counts=False)
        except NotAnEquilibrium:
            continue
        rates += [abs(mu.real) for mu in np.concatenate([split.stable, split.unstable])]
    return rates
