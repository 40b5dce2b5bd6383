"""Command-line front end.

Subcommands: certify, melnikov, coeffs, monodromy, simulate,
autonomize-check, validate.  Exit status is 0 on success (whatever the
verdict), 2 for configuration errors and 3 for numerical failures.

Configuration files are INI-style::

    [problem]
    name = rigid_body          ; or package.module:factory
    branch = plus

    [params]
    I1 = 1
    alpha = 1

    [sweep]
    c_values = 0.5, 1.0, 2.0

    [integrator]               ; abs_tol, rel_tol, max_step
    [melnikov]                 ; quad_tol, theta_grid_size
    [certificate]              ; cert_floor
    [simulate]                 ; eps, t_end, x0, poincare, poincare_phase, n_samples
    [output]                   ; dir, format
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import mpmath
import numpy as np

from . import __version__
from .adjoint import compute_psi2, estimate_decay
from .autonomize import (
    Variant,
    build_extended,
    nonautonomous_defect,
    variable_change_defect,
    verify_circular_solution,
)
from .core import validate_assumptions
from .errors import ConfigError, InvalidParams, NonintegrabilityError
from .galois import certify, monodromy_pair
from .integrate import IntegratorConfig, integrate_rhs
from .melnikov import find_simple_zeros, melnikov_function
from .problems import Problem, load_problem

__all__ = ["RunConfig", "main", "build_parser"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_SECTIONS = {
    "problem": {"name", "branch"},
    "params": None,
    "sweep": {"c_values"},
    "integrator": {"abs_tol", "rel_tol", "max_step"},
    "melnikov": {"quad_tol", "theta_grid_size"},
    "certificate": {"cert_floor"},
    "simulate": {"eps", "t_end", "x0", "poincare", "poincare_phase", "n_samples"},
    "output": {"dir", "format"},
}

MELNIKOV_COLUMNS = ["c", "theta", "M_numeric", "M_closed_form", "abs_error"]
COEFF_COLUMNS = ["c", "j", "re", "im", "abs", "quad_error", "closed_form_re", "closed_form_im", "abs_error"]
MONODROMY_COLUMNS = ["c", "ell", "m_hat_re", "m_hat_im", "a", "b", "commutator_norm", "closed_form_entry_abs"]


@dataclass(frozen=True)
class RunConfig:
    problem: str = "rigid_body"
    branch: str | None = None
    params: dict = field(default_factory=dict)
    c_values: tuple = (1.0,)
    integrator: IntegratorConfig | None = None
    quad_tol: float = 1e-10
    theta_grid_size: int = 64
    cert_floor: float = 1e-8
    eps: float = 0.0
    t_end: float | None = None
    x0: tuple | None = None
    poincare: bool = False
    poincare_phase: float = 0.0
    n_samples: int = 1001
    out_dir: str | None = None
    fmt: str | None = None

    @classmethod
    def from_ini(cls, path) -> "RunConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        parser.optionxform = str
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_sections({s: dict(parser[s]) for s in parser.sections()})

    @classmethod
    def from_sections(cls, sections: dict) -> "RunConfig":
        for name, keys in sections.items():
            if name not in _SECTIONS:
                raise ConfigError(f"unknown config section [{name}]")
            allowed = _SECTIONS[name]
            if allowed is not None and set(keys) - allowed:
                raise ConfigError(f"unknown keys {sorted(set(keys) - allowed)} in [{name}]")
        get = lambda s, k: sections.get(s, {}).get(k)  # noqa: E731
        kw: dict = {}
        try:
            if get("problem", "name"):
                kw["problem"] = get("problem", "name").strip()
            if get("problem", "branch"):
                kw["branch"] = get("problem", "branch").strip()
            kw["params"] = {k: float(v) for k, v in sections.get("params", {}).items()}
            if get("sweep", "c_values"):
                kw["c_values"] = _float_list(get("sweep", "c_values"))
            integ = {k: float(v) for k, v in sections.get("integrator", {}).items()}
            if integ:
                kw["integrator"] = IntegratorConfig(**integ)
            for key, conv, section in [
                ("quad_tol", float, "melnikov"),
                ("theta_grid_size", int, "melnikov"),
                ("cert_floor", float, "certificate"),
                ("eps", float, "simulate"),
                ("t_end", float, "simulate"),
                ("poincare_phase", float, "simulate"),
                ("n_samples", int, "simulate"),
            ]:
                if get(section, key) is not None:
                    kw[key] = conv(get(section, key))
            if get("simulate", "x0"):
                kw["x0"] = _float_list(get("simulate", "x0"))
            if get("simulate", "poincare") is not None:
                kw["poincare"] = _boolean(get("simulate", "poincare"))
            if get("output", "dir"):
                kw["out_dir"] = get("output", "dir").strip()
            if get("output", "format"):
                kw["fmt"] = get("output", "format").strip()
        except (ValueError, InvalidParams) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc
        return cls(**kw)

    def echo(self) -> dict:
        out = {
            "problem": self.problem,
            "branch": self.branch,
            "params": dict(sorted(self.params.items())),
            "c_values": list(self.c_values),
            "integrator": None if self.integrator is None else {
                "abs_tol": self.integrator.abs_tol,
                "rel_tol": self.integrator.rel_tol,
                "max_step": self.integrator.max_step,
                "method": self.integrator.method,
            },
            "quad_tol": self.quad_tol,
            "theta_grid_size": self.theta_grid_size,
            "cert_floor": self.cert_floor,
        }
        return out


def _float_list(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _boolean(text: str) -> bool:
    t = text.strip().lower()
    if t in {"1", "true", "yes", "on"}:
        return True
    if t in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: {text!r}")


# ---------------------------------------------------------------- serialization


def _plain(obj):
    """Convert results to JSON-ready primitives deterministically."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, mpmath.mpf):
        # values beyond double range (monodromy growth factors) stay textual
        return _fmt(obj) if abs(obj) > 1e300 else _plain(float(obj))
    if isinstance(obj, (complex, np.complexfloating, mpmath.mpc)):
        z = complex(obj)
        return {"re": _plain(z.real), "im": _plain(z.imag)}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, 17, min_fixed=-1, max_fixed=-1)
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x) + 0.0, ".17g")


def dumps_report(report: dict) -> str:
    return json.dumps(_plain(report), indent=2, allow_nan=False) + "\n"


def dumps_table(header: list[str], rows: list[list], fmt: str = "csv") -> str:
    if fmt == "json":
        return dumps_report({"columns": header, "rows": rows})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow([_fmt(v) for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------- pipeline


def _problem(cfg: RunConfig) -> Problem:
    prob = load_problem(cfg.problem, cfg.params, cfg.branch)
    bad = [c for c in cfg.c_values if not prob.conn.contains(c)]
    if bad:
        raise ConfigError(f"c values {bad} outside the declared parameter domain {prob.conn.param_domain.tolist()}")
    return prob


def _decay(prob: Problem, c):
    return prob.conn.decay_at(c) or estimate_decay(prob.conn, prob.system, c)


def _melnikov(prob: Problem, cfg: RunConfig, c, match_closed_form: bool):
    decay = _decay(prob, c)
    psi2 = compute_psi2(prob.system, prob.conn, c, cfg.integrator, decay=decay)
    if match_closed_form and prob.closed_form_psi2 is not None:
        psi2 = psi2.matched_to(prob.closed_form_psi2(c, 0.0))
    mr = melnikov_function(prob.system, prob.conn, prob.forcing, psi2, c, cfg.theta_grid_size, tol=cfg.quad_tol)
    return decay, psi2, mr


def run_certify(cfg: RunConfig) -> tuple[dict, str]:
    prob = _problem(cfg)
    sections, summary = [], []
    for c in sorted(cfg.c_values):
        validation = validate_assumptions(prob.system, prob.conn, prob.forcing, c_samples=[c])
        decay, psi2, mr = _melnikov(prob, cfg, c, match_closed_form=False)
        zeros = find_simple_zeros(mr)
        cert = certify(mr, decay, prob.forcing.nu, floor=cfg.cert_floor)
        ident_zero = mr.is_identically_zero()
        sections.append(
            {
                "c": c,
                "validation": [
                    {"name": chk.name, "status": chk.status, "detail": chk.detail, "value": chk.value}
                    for chk in validation.checks
                ],
                "decay": {
                    "lambda1_plus": decay.lambda1_plus,
                    "lambda1_minus": decay.lambda1_minus,
                    "lambda2_plus": decay.lambda2_plus,
                    "lambda2_minus": decay.lambda2_minus,
                    "source": decay.source,
                },
                "psi2": {
                    "T": psi2.T,
                    "normalization": psi2.normalization,
                    "max_residual": psi2.residual_report.max_residual,
                    "decay_ok": psi2.residual_report.decay_plus_ok and psi2.residual_report.decay_minus_ok,
                    "max_orthogonality": psi2.residual_report.max_orthogonality,
                    "match_angle": psi2.residual_report.match_angle,
                },
                "melnikov": {
                    "coeffs": {j: mr.coeffs[j] for j in sorted(mr.coeffs)},
                    "quad_error": {j: mr.quad_error[j] for j in sorted(mr.quad_error)},
                    "series_defect": mr.series_defect(),
                    "identically_zero": ident_zero,
                    "scale_note": mr.scale_note,
                },
                "zeros": [
                    {"theta0": z.theta0, "derivative": z.derivative, "is_simple": z.is_simple} for z in zeros
                ],
                "certificate": {
                    "verdict": cert.verdict,
                    "witnesses": [
                        {"ell": w.ell, "m_hat": w.m_hat, "commutator_norm": w.commutator_norm, "threshold": w.threshold}
                        for w in cert.witnesses
                    ],
                    "neighborhood_note": cert.neighborhood_note,
                },
            }
        )
        wit = ", ".join(str(w.ell) for w in cert.witnesses) or "none"
        zdesc = "M identically zero" if ident_zero else f"{sum(z.is_simple for z in zeros)} simple zeros"
        summary.append(
            f"c = {c:g}: {cert.verdict.value} (witness harmonics: {wit}; {zdesc}; "
            f"assumption checks {'passed' if validation.passed else 'FAILED'})"
        )
    report = _header("certify", cfg)
    report["results"] = sections
    return report, "\n".join(summary) + "\n"


def _header(command: str, cfg: RunConfig) -> dict:
    return {"tool": "nonintegrability", "version": __version__, "command": command, "config": cfg.echo()}


def melnikov_table(cfg: RunConfig) -> tuple[list[str], list[list]]:
    prob = _problem(cfg)
    rows = []
    for c in sorted(cfg.c_values):
        _, _, mr = _melnikov(prob, cfg, c, match_closed_form=True)
        exact = None if prob.closed_form_melnikov is None else prob.closed_form_melnikov(c, mr.theta)
        for k, th in enumerate(mr.theta):
            ref = None if exact is None else float(exact[k])
            err = None if ref is None else abs(mr.samples[k] - ref)
            rows.append([c, th, mr.samples[k], ref, err])
    return MELNIKOV_COLUMNS, rows


def coeffs_table(cfg: RunConfig) -> tuple[list[str], list[list]]:
    prob = _problem(cfg)
    rows = []
    for c in sorted(cfg.c_values):
        _, _, mr = _melnikov(prob, cfg, c, match_closed_form=True)
        ref = None if prob.closed_form_coefficients is None else prob.closed_form_coefficients(c)
        for j in sorted(mr.coeffs):
            m = mr.coeffs[j]
            r = None if ref is None else complex(ref.get(j, 0.0))
            rows.append(
                [c, j, m.real, m.imag, abs(m), mr.quad_error[j],
                 None if r is None else r.real, None if r is None else r.imag,
                 None if r is None else abs(m - r)]
            )
    return COEFF_COLUMNS, rows


def monodromy_table(cfg: RunConfig) -> tuple[list[str], list[list]]:
    prob = _problem(cfg)
    rows = []
    for c in sorted(cfg.c_values):
        decay, _, mr = _melnikov(prob, cfg, c, match_closed_form=False)
        for ell in sorted(mr.coeffs):
            if ell == 0:
                continue
            pair = monodromy_pair(decay, prob.forcing.nu, ell, mr.coeffs[ell])
            rows.append(
                [c, ell, pair.m_hat.real, pair.m_hat.imag, +pair.M_minus[1, 1], +pair.M_plus[1, 1].real,
                 pair.commutator_norm, abs(pair.closed_form_entry)]
            )
    return MONODROMY_COLUMNS, rows


def simulate_table(cfg: RunConfig, sink: dict | None = None) -> tuple[list[str], list[list]]:
    """Time series or stroboscopic samples of the forced system.

    The header and the rows of each finished segment are stored in ``sink``
    so that a caller can flush them if a later segment fails.
    """
    prob = _problem(cfg)
    if cfg.eps < 0:
        raise ConfigError("eps must be nonnegative")
    t_end = 100.0 if cfg.t_end is None else cfg.t_end
    if not t_end > 0:
        raise ConfigError("t_end must be positive")
    c = sorted(cfg.c_values)[0]
    x0 = prob.conn.state(0.0, c) if cfg.x0 is None else np.asarray(cfg.x0, dtype=float)
    if x0.shape != (prob.system.n,):
        raise ConfigError(f"x0 must have {prob.system.n} entries")
    nu = prob.forcing.nu
    names = [f"x{i + 1}" for i in range(prob.system.n)]
    conserved = cfg.eps == 0 and not cfg.poincare
    integrals = prob.system.first_integrals if conserved else ()
    F0 = [float(fi.value(x0)) for fi in integrals]

    if cfg.poincare:
        period = 2 * np.pi / nu
        start = (cfg.poincare_phase / nu) % period
        ts = np.arange(start, t_end + 1e-12 * t_end, period)
        header = ["sample_index", "t"] + names
    else:
        ts = np.linspace(0.0, t_end, cfg.n_samples)
        header = ["t"] + names + [fi.name for fi in integrals] + [f"{fi.name}_drift" for fi in integrals]

    sink = {} if sink is None else sink
    sink["header"], sink["rows"] = header, []
    rows = sink["rows"]
    fun = prob.forced_rhs(cfg.eps)
    integ = cfg.integrator or IntegratorConfig(1e-12, 1e-12)
    n_seg = max(1, int(np.ceil(t_end / 10.0)))
    edges = np.linspace(0.0, t_end, n_seg + 1)
    x, k = x0, 0
    for a, b in zip(edges[:-1], edges[1:]):
        traj = integrate_rhs(fun, x, (a, b), integ)
        while k < len(ts) and ts[k] <= b:
            xs = traj(min(max(ts[k], a), b))
            if cfg.poincare:
                rows.append([k, ts[k], *xs])
            else:
                vals = [float(fi.value(xs)) for fi in integrals]
                rows.append([ts[k], *xs, *vals, *[v - v0 for v, v0 in zip(vals, F0)]])
            k += 1
        x = traj.end_state
    return header, rows


def run_autonomize_check(cfg: RunConfig) -> tuple[dict, str]:
    prob = _problem(cfg)
    c = sorted(cfg.c_values)[0]
    real = build_extended(prob.system, prob.forcing, Variant.real_rsys)
    cplx = build_extended(prob.system, prob.forcing, Variant.complex_csys)
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(32, real.dim))
    ts = np.linspace(-5.0, 5.0, 9)
    X = prob.conn.states(ts, c)
    eps_circle = cfg.eps if cfg.eps > 0 else 0.01
    eps_x = cfg.eps if cfg.eps > 0 else 0.05
    circle_span = (0.0, cfg.t_end or 20.0)
    x_span = (0.0, cfg.t_end or 10.0)
    x0 = prob.conn.state(0.0, c) if cfg.x0 is None else np.asarray(cfg.x0, dtype=float)
    cfg_int = cfg.integrator or IntegratorConfig(1e-12, 1e-12)
    report = _header("autonomize-check", cfg)
    report["description"] = {"real_rsys": real.describe(), "complex_csys": cplx.describe()}
    checks = {
        "variable_change_defect": variable_change_defect(real, cplx, Z),
        "real_nonautonomous_defect": nonautonomous_defect(real, X, ts, eps_x),
        "complex_nonautonomous_defect": nonautonomous_defect(cplx, X, ts, eps_x),
    }
    for ext in (real, cplx):
        circ = verify_circular_solution(ext, eps_circle, circle_span, cfg_int)
        full = verify_circular_solution(ext, eps_x, x_span, cfg_int, x0=x0)
        checks[f"{ext.variant.value}_circle_deviation"] = circ.max_circle_deviation
        checks[f"{ext.variant.value}_x_deviation"] = full.max_x_deviation
    report["c"] = c
    report["eps_circle"] = eps_circle
    report["eps_x"] = eps_x
    report["checks"] = checks
    summary = "\n".join(f"{k:<34} {v:.3e}" for k, v in checks.items()) + "\n"
    return report, summary


def run_validate(cfg: RunConfig) -> tuple[dict, str]:
    prob = _problem(cfg)
    rep = validate_assumptions(prob.system, prob.conn, prob.forcing, c_samples=sorted(cfg.c_values))
    report = _header("validate", cfg)
    report["passed"] = rep.passed
    report["checks"] = [
        {"name": chk.name, "status": chk.status, "detail": chk.detail, "value": chk.value} for chk in rep.checks
    ]
    return report, rep.summary() + "\n"


# ---------------------------------------------------------------- entry point

_TABLES = {
    "melnikov": melnikov_table,
    "coeffs": coeffs_table,
    "monodromy": monodromy_table,
    "simulate": simulate_table,
}
_REPORTS = {
    "certify": run_certify,
    "autonomize-check": run_autonomize_check,
    "validate": run_validate,
}


_HELP = {
    "certify": "Melnikov coefficients and a non-integrability certificate per c (JSON)",
    "autonomize-check": "residuals of the autonomized extensions (JSON)",
    "validate": "check the standing assumptions of the problem (JSON)",
    "melnikov": "M(theta; c) on a phase grid, with closed-form comparison",
    "coeffs": "Fourier coefficients of M with quadrature error bounds",
    "monodromy": "local monodromy commutators for each nonzero harmonic",
    "simulate": "integrate the forced system",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--out", help="output directory (default: standard output)")
    common.add_argument("--c", action="append", type=float, dest="c", help="level parameter (repeatable)")
    common.add_argument("--eps", type=float, help="perturbation size (simulate, autonomize-check)")
    common.add_argument("--t-end", type=float, dest="t_end", help="final time (simulate)")
    common.add_argument("--branch", help="heteroclinic branch: plus, minus, tilde_plus, tilde_minus")
    common.add_argument("--problem", help="registered problem name or module:factory")
    common.add_argument("--poincare", action="store_true", default=None, help="emit one row per forcing period")
    common.add_argument("--format", choices=["csv", "json"], dest="fmt", help="table format (default csv)")
    parser = argparse.ArgumentParser(prog="nonintegrability", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in [*_REPORTS, *_TABLES]:
        sub.add_parser(name, parents=[common], help=_HELP[name])
    return parser


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig.from_ini(args.config) if args.config else RunConfig()
    overrides = {}
    if args.c:
        overrides["c_values"] = tuple(args.c)
    for key in ("eps", "t_end", "branch", "problem", "fmt", "poincare"):
        val = getattr(args, key)
        if val is not None:
            overrides[key] = val
    if args.out:
        overrides["out_dir"] = args.out
    return replace(cfg, **overrides)


def _write(cfg: RunConfig, filename: str, text: str, summary: str | None = None) -> None:
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / filename).write_text(text)
        if summary:
            sys.stdout.write(summary)
    else:
        sys.stdout.write(text)
        if summary:
            sys.stderr.write(summary)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    stem = args.command.replace("-", "_")
    try:
        cfg = _config_from_args(args)
        if args.command in _REPORTS:
            if cfg.fmt == "csv":
                raise ConfigError(f"{args.command} emits a JSON report; csv is not available")
            report, summary = _REPORTS[args.command](cfg)
            _write(cfg, f"{stem}.json", dumps_report(report), summary)
        else:
            fmt = cfg.fmt or "csv"
            sink: dict = {}
            try:
                if args.command == "simulate":
                    header, rows = simulate_table(cfg, sink)
                else:
                    header, rows = _TABLES[args.command](cfg)
            except NonintegrabilityError:
                if sink.get("rows"):
                    _write(cfg, f"{stem}.{fmt}", dumps_table(sink["header"], sink["rows"], fmt))
                raise
            _write(cfg, f"{stem}.{fmt}", dumps_table(header, rows, fmt))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonintegrabilityError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
