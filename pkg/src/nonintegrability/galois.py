"""Monodromy of the reduced linear system and the nonintegrability certificate.

Along the heteroclinic orbit the normal part of the variational equation of
the extended system reduces, for a harmonic ``l``, to a 2x2 triangular
system whose monodromy around the two singular points is::

    M_-  = diag(1, a),                 a = exp(-2 pi l nu / lambda1_-)
    M_+  = B0^{-1} diag(1, b) B0,      b = exp( 2 pi l nu / lambda1_+)
    B0   = [[1, Mhat_l], [0, 1]]

The commutator ``M_+ M_- - M_- M_+`` has the single nonzero entry
``(1 - b) Mhat_l (a - 1)`` in position (1, 2), so the monodromy group (and
with it the identity component of the differential Galois group) is
non-commutative exactly when ``Mhat_l != 0``.

``b`` grows like ``exp(2 pi |l| nu / lambda)`` and overflows doubles for slow
decay rates, so the matrices are formed in extended precision with mpmath.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .core import DecayData
from .errors import InvalidHarmonic, InvalidParams
from .melnikov import MelnikovResult

__all__ = ["MonodromyPair", "Verdict", "Witness", "Certificate", "monodromy_pair", "certify"]

_DPS = 30


@dataclass(frozen=True)
class MonodromyPair:
    """Monodromy matrices for one harmonic; matrices are ``mpmath.matrix``.

    ``commutator_norm`` is the largest entry modulus of ``M_+ M_- - M_- M_+``
    from direct multiplication; ``closed_form_entry`` is ``(1-b) Mhat (a-1)``.
    """

    ell: int
    nu: float
    lambda1_plus: float
    lambda1_minus: float
    m_hat: complex
    M_minus: mpmath.matrix = field(repr=False)
    M_plus: mpmath.matrix = field(repr=False)
    B0: mpmath.matrix = field(repr=False)
    commutator: mpmath.matrix = field(repr=False)
    commutator_norm: mpmath.mpf
    closed_form_entry: mpmath.mpc

    @property
    def commutes(self) -> bool:
        return self.commutator_norm == 0

    def as_complex(self, name: str) -> np.ndarray:
        """A matrix as a numpy array (entries may overflow to ``inf``)."""
        m = getattr(self, name)
        return np.array([[complex(m[i, j]) for j in range(2)] for i in range(2)])


class Verdict(str, enum.Enum):
    CERTIFIED_NONINTEGRABLE = "CERTIFIED_NONINTEGRABLE"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class Witness:
    ell: int
    m_hat: complex
    commutator_norm: mpmath.mpf
    threshold: float


@dataclass(frozen=True)
class Certificate:
    verdict: Verdict
    witnesses: tuple[Witness, ...]
    c: object
    neighborhood_note: str
    thresholds: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.verdict is Verdict.CERTIFIED_NONINTEGRABLE) != bool(self.witnesses):
            raise ValueError("verdict must be CERTIFIED_NONINTEGRABLE exactly when witnesses exist")

    @property
    def witness_harmonics(self) -> list[int]:
        return sorted(w.ell for w in self.witnesses)


def monodromy_pair(
    decay: DecayData,
    nu: float,
    ell: int,
    m_hat: complex,
    cross_check_rtol: float = 1e-12,
) -> MonodromyPair:
    """Monodromy matrices ``M_-``, ``M_+`` for harmonic ``ell``.

    Raises
    ------
    InvalidHarmonic
        If ``ell == 0``.
    """
    if int(ell) != ell or ell == 0:
        raise InvalidHarmonic(f"monodromy needs a nonzero integer harmonic, got {ell}")
    if not nu > 0:
        raise InvalidParams(f"frequency must be positive, got {nu}")
    ell = int(ell)
    lp, lm = float(decay.lambda1_plus), float(decay.lambda1_minus)
    with mpmath.workdps(_DPS):
        mh = mpmath.mpc(complex(m_hat))
        a = mpmath.exp(-2 * mpmath.pi * ell * nu / lm)
        b = mpmath.exp(2 * mpmath.pi * ell * nu / lp)
        M_minus = mpmath.matrix([[1, 0], [0, a]])
        B0 = mpmath.matrix([[1, mh], [0, 1]])
        B0_inv = mpmath.matrix([[1, -mh], [0, 1]])
        M_plus = B0_inv * mpmath.matrix([[1, 0], [0, b]]) * B0
        comm = M_plus * M_minus - M_minus * M_plus
        norm = max(abs(comm[i, j]) for i in range(2) for j in range(2))
        entry = (1 - b) * mh * (a - 1)
        gap = abs(comm[0, 1] - entry)
        if gap > cross_check_rtol * abs(entry) and gap > 0:
            raise ArithmeticError(f"commutator does not match its closed form (gap {mpmath.nstr(gap, 5)})")
    return MonodromyPair(ell, float(nu), lp, lm, complex(m_hat), M_minus, M_plus, B0, comm, +norm, entry)


def _neighborhood_note(c) -> str:
    return (
        f"Gamma_hat(c={c}): a neighborhood of the closure of the heteroclinic orbit x_h(t; c) "
        "together with its limiting equilibria x_-(c), x_+(c), in the extended phase space at eps = 0 "
        "(u = v = 0)"
    )


def certify(mr: MelnikovResult, decay: DecayData, nu: float, floor: float = 1e-8) -> Certificate:
    """Non-integrability certificate from the Melnikov coefficients.

    A harmonic ``l != 0`` is a witness when ``|Mhat_l|`` exceeds
    ``max(floor, 10 * quad_error[l])`` and its monodromy pair does not
    commute.  ``INCONCLUSIVE`` makes no claim of integrability.
    """
    witnesses = []
    thresholds = {}
    for ell in sorted(mr.coeffs):
        if ell == 0:
            continue
        m_hat = mr.coeffs[ell]
        threshold = max(floor, 10.0 * mr.quad_error[ell])
        thresholds[ell] = threshold
        if abs(m_hat) <= threshold:
            continue
        pair = monodromy_pair(decay, nu, ell, m_hat)
        if pair.commutator_norm > 0:
            witnesses.append(Witness(ell, m_hat, pair.commutator_norm, threshold))
    verdict = Verdict.CERTIFIED_NONINTEGRABLE if witnesses else Verdict.INCONCLUSIVE
    return Certificate(verdict, tuple(witnesses), mr.c, _neighborhood_note(mr.c), thresholds)
