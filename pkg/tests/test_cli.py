import csv
import io
import json

import numpy as np
import pytest

from nonintegrability import rigidbody as rb
from nonintegrability.cli import COEFF_COLUMNS, MELNIKOV_COLUMNS, MONODROMY_COLUMNS, RunConfig, main
from nonintegrability.core import FourierForcing, HeteroclinicConnection
from nonintegrability.problems import Problem, load_problem


# inline problem factories, referenced as "test_cli:<name>"
def constant_forcing_problem(params, branch):
    base = load_problem("rigid_body", params, branch)
    p = rb.RigidBodyParams(**base.params)
    forcing = FourierForcing(
        N=0, nu=1.0, vectorized=True,
        coeffs={0: lambda w: np.broadcast_to(np.array([0.0, 0.0, p.beta3 / p.I3], complex), np.shape(w))},
    )
    return base.system, forcing, base.conn


def broken_orbit_problem(params, branch):
    base = load_problem("rigid_body", params, branch)

    def orbit(t, c):
        return np.full(np.shape(t) + (3,), np.nan)

    conn = HeteroclinicConnection(orbit, base.conn.x_minus, base.conn.x_plus, [(0.1, 10.0)], vectorized=True)
    return base.system, base.forcing, conn


def late_blow_up_problem(params, branch):
    base = load_problem("rigid_body", params, branch)

    def direct(w, theta):
        if np.max(theta) > 15.0:
            return np.full(np.shape(w), np.nan)
        return base.forcing.direct(w, theta)

    forcing = FourierForcing(base.forcing.N, base.forcing.nu, base.forcing.coeffs, direct=direct, vectorized=True)
    return Problem("late_blow_up", base.system, forcing, base.conn)


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], [[float(v) if v else None for v in r] for r in rows[1:]]


def _write_ini(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_certify_p0_sweep(tmp_path, capsys):
    code, out, _ = _run(capsys, "certify", "--c", "2.0", "--c", "0.5", "--c", "1.0", "--out", str(tmp_path))
    assert code == 0
    report = json.loads((tmp_path / "certify.json").read_text())
    assert [s["c"] for s in report["results"]] == [0.5, 1.0, 2.0]
    for section in report["results"]:
        assert section["certificate"]["verdict"] == "CERTIFIED_NONINTEGRABLE"
        assert [w["ell"] for w in section["certificate"]["witnesses"]] == [-1, 1]
        assert all(chk["status"] != "fail" for chk in section["validation"])
    assert out.count("CERTIFIED_NONINTEGRABLE") == 3


def test_certify_unperturbed_is_inconclusive(tmp_path, capsys):
    ini = _write_ini(tmp_path, "[params]\nalpha = 0\nbeta2 = 0\nbeta3 = 0\n")
    code, out, err = _run(capsys, "certify", "--config", ini)
    assert code == 0
    report = json.loads(out)
    assert report["results"][0]["certificate"]["verdict"] == "INCONCLUSIVE"
    assert report["results"][0]["melnikov"]["identically_zero"]
    assert "INCONCLUSIVE" in err


def test_reports_are_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    _run(capsys, "certify", "--c", "1", "--out", str(a))
    _run(capsys, "certify", "--c", "1", "--out", str(b))
    assert (a / "certify.json").read_bytes() == (b / "certify.json").read_bytes()


def test_melnikov_csv_against_closed_form(tmp_path, capsys):
    ini = _write_ini(tmp_path, "[sweep]\nc_values = 1.0\n[melnikov]\ntheta_grid_size = 64\n")
    code, out, _ = _run(capsys, "melnikov", "--config", ini)
    assert code == 0
    header, rows = _csv(out)
    assert header == MELNIKOV_COLUMNS
    assert len(rows) == 64
    assert max(r[4] for r in rows) <= 1e-6


def test_tilde_plus_flips_oscillation(capsys):
    _, plus, _ = _run(capsys, "melnikov", "--c", "1")
    _, tilde, _ = _run(capsys, "melnikov", "--c", "1", "--branch", "tilde_plus")
    _, a = _csv(plus)
    _, b = _csv(tilde)
    np.testing.assert_allclose([r[2] for r in b], [-r[2] for r in a], atol=1e-9)


def test_inline_problem_with_constant_forcing(capsys):
    code, out, _ = _run(capsys, "melnikov", "--problem", "test_cli:constant_forcing_problem")
    assert code == 0
    _, rows = _csv(out)
    values = [r[2] for r in rows]
    assert max(values) - min(values) <= 1e-12
    assert rows[0][3] is None


def test_coeffs_and_monodromy_tables(capsys):
    code, out, _ = _run(capsys, "coeffs", "--c", "1")
    header, rows = _csv(out)
    assert code == 0 and header == COEFF_COLUMNS
    assert [int(r[1]) for r in rows] == [-1, 0, 1]
    assert max(r[8] for r in rows) <= 1e-7
    code, out, _ = _run(capsys, "monodromy", "--c", "1")
    header, rows = _csv(out)
    assert code == 0 and header == MONODROMY_COLUMNS
    assert [int(r[1]) for r in rows] == [-1, 1]
    assert all(r[6] > 0 for r in rows)


def test_json_table_format(capsys):
    code, out, _ = _run(capsys, "coeffs", "--c", "1", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["columns"] == COEFF_COLUMNS


def test_simulate_conserves_integrals(capsys):
    code, out, _ = _run(capsys, "simulate", "--eps", "0", "--t-end", "100")
    header, rows = _csv(out)
    assert code == 0
    assert header == ["t", "x1", "x2", "x3", "energy", "momentum_squared", "energy_drift", "momentum_squared_drift"]
    assert max(abs(r[6]) for r in rows) <= 1e-8


def test_simulate_orbit_reaches_saddle(tmp_path, capsys):
    ini = _write_ini(tmp_path, "[simulate]\nx0 = 1, 0, 0.5773502691896257\nn_samples = 31\n")
    code, out, _ = _run(capsys, "simulate", "--config", ini, "--eps", "0", "--t-end", "30")
    _, rows = _csv(out)
    assert code == 0
    assert rows[-1][0] == 30.0
    assert np.linalg.norm(np.array(rows[-1][1:4]) - [0.0, 1.0, 0.0]) <= 1e-5


def test_simulate_poincare_rows(capsys):
    code, out, _ = _run(capsys, "simulate", "--eps", "0.05", "--t-end", "40", "--poincare")
    header, rows = _csv(out)
    assert code == 0
    assert header == ["sample_index", "t", "x1", "x2", "x3"]
    assert len(rows) == 7
    np.testing.assert_allclose(np.diff([r[1] for r in rows]), 2 * np.pi, rtol=1e-14)
    assert all(np.all(np.isfinite(r[2:])) for r in rows)


def test_simulate_flushes_partial_output(tmp_path, capsys):
    code, out, err = _run(
        capsys, "simulate", "--problem", "test_cli:late_blow_up_problem", "--eps", "0.1", "--t-end", "40",
        "--out", str(tmp_path),
    )
    assert code == 3
    assert "NonFiniteState" in err
    _, rows = _csv((tmp_path / "simulate.csv").read_text())
    assert rows and rows[-1][0] <= 15.0


def test_autonomize_check(capsys):
    code, out, _ = _run(capsys, "autonomize-check")
    report = json.loads(out)
    checks = report["checks"]
    assert code == 0
    assert checks["variable_change_defect"] <= 1e-12
    assert checks["real_nonautonomous_defect"] <= 1e-12
    assert checks["real_rsys_circle_deviation"] <= 1e-9
    assert checks["complex_csys_circle_deviation"] <= 1e-9
    assert checks["real_rsys_x_deviation"] <= 1e-7


def test_validate_command(capsys):
    code, out, err = _run(capsys, "validate", "--c", "0.5", "--c", "3")
    assert code == 0
    assert json.loads(out)["passed"]
    assert "A7.unique_decaying" in err


@pytest.mark.parametrize(
    "ini",
    [
        "[bogus]\nx = 1\n",
        "[params]\nI1 = 5\n",
        "[params]\ngamma = 1\n",
        "[sweep]\nc_values = 50\n",
        "[melnikov]\ntheta_grid_size = many\n",
        "[integrator]\nabs_tol = -1\n",
    ],
)
def test_configuration_errors(tmp_path, capsys, ini):
    code, _, err = _run(capsys, "certify", "--config", _write_ini(tmp_path, ini))
    assert code == 2
    assert "configuration error" in err


def test_report_commands_reject_csv(capsys):
    assert _run(capsys, "certify", "--format", "csv")[0] == 2


def test_unknown_problem(capsys):
    assert _run(capsys, "certify", "--problem", "nowhere")[0] == 2
    assert _run(capsys, "certify", "--problem", "no_such_module:f")[0] == 2


def test_numerical_failure_exit_code(capsys):
    code, _, err = _run(capsys, "certify", "--problem", "test_cli:broken_orbit_problem")
    assert code == 3
    assert "numerical failure" in err


def test_run_config_from_ini(tmp_path):
    cfg = RunConfig.from_ini(
        _write_ini(
            tmp_path,
            "[problem]\nname = rigid_body\nbranch = minus\n[params]\nI1 = 1\n[sweep]\nc_values = 0.5 1 2\n"
            "[integrator]\nrel_tol = 1e-9\n[simulate]\npoincare = yes\n[output]\nformat = json\n",
        )
    )
    assert cfg.branch == "minus" and cfg.c_values == (0.5, 1.0, 2.0)
    assert cfg.integrator.rel_tol == 1e-9 and cfg.poincare and cfg.fmt == "json"
