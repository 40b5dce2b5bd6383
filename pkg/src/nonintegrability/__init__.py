"""Melnikov-based nonintegrability certificates for periodically forced systems.

A system ``x' = f(x) + eps g(x, nu t)`` whose unperturbed part has a family of
heteroclinic orbits is analysed along one orbit: the bounded solution of the
adjoint variational equation gives the Melnikov function, and any nonzero
Fourier coefficient of it yields non-commuting monodromy matrices, hence a
certificate that the autonomous extension is not real-meromorphically
integrable near the orbit.
"""
__version__ = "0.1.0"

from .adjoint import AdjointBoundedSolution, compute_psi2, estimate_decay
from .autonomize import ExtendedSystem, Variant, build_extended, verify_circular_solution
from .core import (
    DecayData,
    DecaySource,
    FirstIntegral,
    FourierForcing,
    HeteroclinicConnection,
    SystemModel,
    eigen_split,
    validate_assumptions,
)
from .errors import (
    NonintegrabilityError,
    EvaluationFailure,
    DimensionMismatch,
    InvalidParams,
    NotAnEquilibrium,
    IntegrationError,
    StepSizeUnderflow,
    NonFiniteState,
    MatchFailure,
    EigenvectorAmbiguity,
    QuadratureFailure,
    InvalidHarmonic,
    ConjugacyViolation,
    ConfigError,
    AssumptionViolation,
    DecayMismatch,
)
from .galois import Certificate, MonodromyPair, Verdict, certify, monodromy_pair
from .integrate import IntegratorConfig, Trajectory, flow, integrate_rhs, solve_ave, solve_ve
from .melnikov import MelnikovResult, SimpleZero, find_simple_zeros, melnikov_coeff, melnikov_function

__all__ = [
    "NonintegrabilityError",
    "EvaluationFailure",
    "DimensionMismatch",
    "InvalidParams",
    "NotAnEquilibrium",
    "IntegrationError",
    "StepSizeUnderflow",
    "NonFiniteState",
    "MatchFailure",
    "EigenvectorAmbiguity",
    "QuadratureFailure",
    "InvalidHarmonic",
    "ConjugacyViolation",
    "ConfigError",
    "AssumptionViolation",
    "DecayMismatch",
    "AdjointBoundedSolution",
    "Certificate",
    "DecayData",
    "DecaySource",
    "ExtendedSystem",
    "FirstIntegral",
    "FourierForcing",
    "HeteroclinicConnection",
    "IntegratorConfig",
    "MelnikovResult",
    "MonodromyPair",
    "SimpleZero",
    "SystemModel",
    "Trajectory",
    "Variant",
    "Verdict",
    "build_extended",
    "certify",
    "compute_psi2",
    "eigen_split",
    "estimate_decay",
    "find_simple_zeros",
    "flow",
    "integrate_rhs",
    "melnikov_coeff",
    "melnikov_function",
    "monodromy_pair",
    "solve_ave",
    "solve_ve",
    "validate_assumptions",
    "verify_circular_solution",
]
