import json
import subprocess
import sys

import numpy as np
import pytest

from spraymetric import cli
from spraymetric.errors import ConfigError


def _check(tmp_path, *args, name="r.json"):
    out = tmp_path / name
    status = cli.main(["check", *args, "--out", str(out)])
    return status, json.loads(out.read_text()), out


def test_spiral_certified_run(tmp_path):
    status, rep, _ = _check(tmp_path, "--spray", "spiral", "--finsler", "spiral",
                            "--suite", "helmholtz,bm,twoform,example", "--points", "1000", "--seed", "3")
    assert status == 0
    s = rep["summary"]
    assert s["passed"] and s["evaluated"] == 1000 and s["domain_errors"] == 0
    for key, c in s["conditions"].items():
        assert c["failures"] == 0 and c["pass_rate"] == 1.0
        if not key.endswith(("rank_dtheta", "positivity")):
            assert c["max_residual"] <= 1e-8, key
    assert rep["schema"] == cli.SCHEMA
    assert len(rep["per_point"]) == 4000


def test_flat_identity_fails(tmp_path):
    status, rep, _ = _check(tmp_path, "--spray", "flat", "--dim", "3", "--multiplier", "identity",
                            "--suite", "helmholtz", "--points", "50")
    assert status == 1
    assert rep["summary"]["conditions"]["helmholtz.annihilates_y"]["failures"] == 50


def test_circle_positivity_window(tmp_path):
    ok, _, _ = _check(tmp_path, "--spray", "circle", "--finsler", "circle", "--suite", "bm", "--points", "300",
                      "--xbox=-1.39,1.39")
    assert ok == 0
    bad, rep, _ = _check(tmp_path, "--spray", "circle", "--finsler", "circle", "--suite", "bm", "--points", "300",
                         "--xbox=-3,3")
    assert bad == 1
    assert rep["summary"]["conditions"]["bm.positivity"]["failures"] > 0
    assert rep["summary"]["conditions"]["bm.dJ"]["failures"] == 0


def test_determinism_and_workers(tmp_path):
    args = ["--spray", "spiral", "--finsler", "spiral", "--suite", "helmholtz,grassmann", "--points", "40",
            "--seed", "11"]
    _, _, a = _check(tmp_path, *args, name="a.json")
    _, _, b = _check(tmp_path, *args, name="b.json")
    _, _, c = _check(tmp_path, *args, "--workers", "2", name="c.json")
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()
    _, _, d = _check(tmp_path, *args[:-1], "12", name="d.json")
    assert a.read_bytes() != d.read_bytes()


def test_report_schema_and_reader(tmp_path):
    _, rep, path = _check(tmp_path, "--spray", "spiral", "--theta", "t1 = 0; t2 = 0; t3 = 1", "--suite", "bm",
                          "--points", "3")
    row = rep["per_point"][0]
    assert set(row) >= {"index", "point", "suite", "entries"}
    for e in row["entries"]:
        assert {"name", "residual", "relative", "tolerance", "pass"} <= set(e)
        assert e["pass"] == (e["residual"] <= e["tolerance"])
    assert rep["config"]["seed"] == 0 and "prng" in rep["config"]
    r = cli.read_report(str(path))
    assert r.schema == cli.SCHEMA and r.summary == rep["summary"]
    rep["future_field"] = {"x": 1}
    rep["summary"]["new_stat"] = 5
    r2 = cli.read_report(json.dumps(rep))
    assert r2.extra == {"future_field": {"x": 1}} and r2.summary["new_stat"] == 5
    with pytest.raises(ConfigError):
        cli.read_report(json.dumps({"schema": "other/1"}))
    with pytest.raises(ConfigError):
        cli.read_report("{not json")


@pytest.mark.parametrize("args", [
    ["--points", "0"],
    ["--suite", "bogus"],
    ["--suite", ""],
    ["--fibre-shell", "1e-9,1"],
    ["--suite", "bm"],  # no certificate
    ["--xbox=1,-1"],
    ["--suite", "helmholtz", "--suite-tol", "nonsense"],
])
def test_config_errors_exit_2(args, capsys):
    base = ["check", "--spray", "spiral", "--multiplier", "identity", "--points", "2"]
    if args == ["--suite", "bm"]:
        base = ["check", "--spray", "spiral", "--points", "2"]
    assert cli.main(base + args) == 2
    assert "error:" in capsys.readouterr().err


def test_run_config_validation():
    with pytest.raises(ConfigError):
        cli.RunConfig("spiral", finsler="spiral", theta="x").validate()
    with pytest.raises(ConfigError):
        cli.RunConfig("spiral", workers=0).validate()
    cfg = cli.RunConfig("spiral", tol=1e-6, suite_tols={"bm": 1e-9})
    assert cfg.tolerance("bm") == 1e-9 and cfg.tolerance("helmholtz") == 1e-6
    assert cli.RunConfig("spiral").tolerance("grassmann") == 1e-10


def test_parse_error_exit_2(capsys):
    assert cli.main(["check", "--spray", "G1 = u*; G2 = 0", "--dim", "2", "--multiplier", "identity"]) == 2
    assert cli.main(["check", "--spray", "G1 = u; G2 = v", "--dim", "2", "--multiplier", "h13 = 1"]) == 2


def test_example_suite_needs_builtin(capsys):
    assert cli.main(["check", "--spray", "flat", "--dim", "3", "--finsler", "euclidean", "--suite", "example"]) == 2


def test_skip_domain_errors(tmp_path):
    theta = "t1 = 0*sqrt(x) + u/sqrt(u^2+v^2); t2 = v/sqrt(u^2+v^2)"
    args = ["--spray", "flat", "--dim", "2", "--theta", theta, "--suite", "bm", "--points", "40"]
    status, rep, _ = _check(tmp_path, *args)
    assert status == 1
    n_err = rep["summary"]["domain_errors"]
    assert 0 < n_err < 40 and len(rep["errors"]) == n_err
    assert rep["summary"]["evaluated"] == 40 - n_err
    assert rep["summary"]["conditions"]["bm.dJ"]["count"] == 40 - n_err
    status, rep, _ = _check(tmp_path, *args, "--skip-domain-errors", name="s.json")
    assert status == 0 and rep["summary"]["domain_errors_skipped"]


def test_spray_from_file(tmp_path):
    f = tmp_path / "spiral.txt"
    f.write_text("# spiral\nG1 = v*sqrt(u^2+v^2+w^2)/2\nG2 = -u*sqrt(u^2+v^2+w^2)/2\nG3 = 0\n")
    g = tmp_path / "F.txt"
    g.write_text("F = sqrt(u^2+v^2+w^2) + (y*u - x*v)/2\n")
    status, rep, _ = _check(tmp_path, "--spray", str(f), "--finsler", str(g), "--suite", "helmholtz,bm",
                            "--points", "20")
    assert status == 0 and rep["summary"]["evaluated"] == 20


def test_dynamics_and_grassmann_suites(tmp_path):
    status, rep, _ = _check(tmp_path, "--spray", "spiral", "--finsler", "spiral", "--suite", "dynamics,grassmann",
                            "--points", "4", "--t-end", "2")
    assert status == 0
    assert {"dynamics.jacobi_velocity", "dynamics.jacobi_linear", "dynamics.pairing",
            "grassmann.two_plane_definiteness"} <= set(rep["summary"]["conditions"])


def test_geodesic_csv(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.main(["geodesic", "--spray", "spiral", "--from", "0,0,0;1,0,0", "--t-end", "1.5707963267948966",
                     "--tol", "1e-10", "--samples", "5", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,x1,x2,x3,y1,y2,y3"
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert data.shape == (5, 7)
    assert np.allclose(data[-1, 1:], [1, 1, 0, 0, 1, 0], atol=1e-6)


def test_jacobi_csv_stdout(capsys):
    assert cli.main(["jacobi", "--spray", "spiral", "--from", "0,0,0;1,0,1", "--t-end", "2", "--samples", "3",
                     "--zeta0", "0,0,0", "--nabla-zeta0", "1,0,1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split(",")[7:] == ["zeta_1", "zeta_2", "zeta_3", "nabla_zeta_1", "nabla_zeta_2", "nabla_zeta_3"]
    last = np.array([float(v) for v in lines[-1].split(",")])
    assert np.allclose(last[7:10], 2.0 * last[4:7], atol=1e-6)  # t * gamma-dot


def test_geodesic_bad_input(capsys):
    assert cli.main(["geodesic", "--spray", "spiral", "--from", "0,0,0;0,0,0", "--t-end", "1"]) == 2
    assert cli.main(["geodesic", "--spray", "spiral", "--from", "0,0;1,0,0", "--t-end", "1"]) == 2


def test_example_verify(capsys):
    assert cli.main(["example", "spiral", "--verify", "--points", "5"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") >= 10 and "FAIL" not in out
    assert cli.main(["example", "circle", "--verify", "--points", "5"]) == 0


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "spraymetric.cli", "example", "circle"], capture_output=True,
                       text=True, timeout=120)
    assert r.returncode == 0 and "all checks passed" in r.stdout
