"""Named problem definitions used by the command-line front end."""
from __future__ import annotations

import importlib
from dataclasses import dataclass, field, fields
from typing import Callable

from . import rigidbody as rb
from .core import FourierForcing, HeteroclinicConnection, SystemModel
from .errors import ConfigError, InvalidParams
from .integrate import perturbed_rhs

__all__ = ["Problem", "PROBLEMS", "load_problem", "rigid_body_problem"]


@dataclass(frozen=True)
class Problem:
    """A system with its forcing and heteroclinic family, plus optional oracles.

    ``closed_form_psi2(c, t)``, ``closed_form_melnikov(c, theta)`` and
    ``closed_form_coefficients(c)`` are used for comparison columns only.
    """

    name: str
    system: SystemModel
    forcing: FourierForcing
    conn: HeteroclinicConnection
    params: dict = field(default_factory=dict)
    branch: str | None = None
    closed_form_psi2: Callable | None = None
    closed_form_melnikov: Callable | None = None
    closed_form_coefficients: Callable | None = None

    def forced_rhs(self, eps: float):
        return perturbed_rhs(self.system, self.forcing, eps)


def rigid_body_problem(params: dict, branch: str | None = None) -> Problem:
    known = {f.name for f in fields(rb.RigidBodyParams)}
    unknown = sorted(set(params) - known)
    if unknown:
        raise ConfigError(f"unknown rigid_body parameters {unknown}; expected a subset of {sorted(known)}")
    try:
        p = rb.RigidBodyParams(**{k: float(v) for k, v in params.items()})
        br = rb.OrbitBranch(branch or "plus")
    except (InvalidParams, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    system, forcing, conn = rb.make_problem(p, br)
    return Problem(
        name="rigid_body",
        system=system,
        forcing=forcing,
        conn=conn,
        params={f.name: getattr(p, f.name) for f in fields(p)},
        branch=br.value,
        closed_form_psi2=lambda c, t: rb.closed_form_psi2(p, br, c, t),
        closed_form_melnikov=lambda c, theta: rb.closed_form_melnikov(p, br, c, theta),
        closed_form_coefficients=lambda c: rb.closed_form_coefficients(p, br, c),
    )


PROBLEMS: dict[str, Callable[[dict, str | None], Problem]] = {"rigid_body": rigid_body_problem}


def load_problem(name: str, params: dict | None = None, branch: str | None = None) -> Problem:
    """Build a registered problem, or call a ``"package.module:factory"``.

    A factory receives ``(params, branch)`` and returns a :class:`Problem`
    or a ``(system, forcing, connection)`` triple.
    """
    params = dict(params or {})
    if name in PROBLEMS:
        return PROBLEMS[name](params, branch)
    if ":" not in name:
        raise ConfigError(f"unknown problem {name!r}; registered: {sorted(PROBLEMS)} or use 'module:function'")
    mod_name, func_name = name.split(":", 1)
    try:
        factory = getattr(importlib.import_module(mod_name), func_name)
    except (ImportError, AttributeError) as exc:
        raise ConfigError(f"cannot import problem factory {name!r}: {exc}") from exc
    out = factory(params, branch)
    if isinstance(out, Problem):
        return out
    try:
        system, forcing, conn = out
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"factory {name!r} must return a Problem or (system, forcing, connection)") from exc
    return Problem(name, system, forcing, conn, params, branch)

