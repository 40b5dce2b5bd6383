import functools
import time

import numpy as np
import pytest

from nonintegrability import rigidbody as rb
from nonintegrability.adjoint import compute_psi2
from nonintegrability.melnikov import melnikov_function

BRANCHES = [b.value for b in rb.OrbitBranch]
P0 = rb.RigidBodyParams()

# acceptance criteria report lines, filled by tests/test_acceptance.py
ACCEPTANCE_LINES: dict = {}
SUITE_BUDGET = 120.0
_START = {}


@functools.lru_cache(maxsize=None)
def problem(branch="plus", **overrides):
    p = P0.replace(**overrides) if overrides else P0
    return (p, *rb.make_problem(p, branch))


@functools.lru_cache(maxsize=None)
def psi2_matched(branch="plus", c=1.0, **overrides):
    """Numerical psi2 rescaled so that psi2(0) matches the closed form."""
    p, system, forcing, conn = problem(branch, **overrides)
    psi = compute_psi2(system, conn, c)
    return psi.matched_to(rb.closed_form_psi2(p, branch, c, 0.0))


@functools.lru_cache(maxsize=None)
def melnikov(branch="plus", c=1.0, grid=16, **overrides):
    p, system, forcing, conn = problem(branch, **overrides)
    return melnikov_function(system, conn, forcing, psi2_matched(branch, c, **overrides), c, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_sessionstart(session):
    _START["t"] = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    elapsed = time.perf_counter() - _START.get("t", time.perf_counter())
    if not ACCEPTANCE_LINES:
        return
    ok9 = elapsed < SUITE_BUDGET
    ACCEPTANCE_LINES[9] = (ok9, f"full suite wall time {elapsed:.1f} s (budget {SUITE_BUDGET:.0f} s)")
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        ok, detail = ACCEPTANCE_LINES[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - _START.get("t", time.perf_counter())
    if ACCEPTANCE_LINES and elapsed >= SUITE_BUDGET and exitstatus == 0:
        session.exitstatus = 1
