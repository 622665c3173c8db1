import csv
import io
import json
import math
import re

import numpy as np
import pytest

from hjrate.cli import main
from hjrate.config import parse_config
from hjrate.plot import render_svg
from hjrate.rates import RateFit, RateTable, fit_rate_model
from hjrate.runner import run_experiment

EPS2 = "0.0078125,0.00390625,0.001953125,0.0009765625,0.00048828125,0.000244140625,0.0001220703125"


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_radial_k2_artifacts(tmp_path):
    code, out, _ = run(["radial", "--k", "2", "--tau", "1", "--eps-list", EPS2, "--out",
                        str(tmp_path), "--plot"])
    assert code == 0, out
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert 0.45 <= fit["coef_eps_log_eps"] <= 0.55
    checks = json.loads((tmp_path / "checks.json").read_text())
    assert checks["pass"] and checks["bounds"]["pass"] and checks["supconv"]["pass"]
    rows = list(csv.reader(io.StringIO((tmp_path / "rates.csv").read_text())))
    assert rows[0] == ["epsilon", "phi_eps", "phi_zero", "gap"]
    assert len(rows) == 8
    assert (tmp_path / "rates.svg").read_text().startswith("<svg")
    raw = (tmp_path / "checks.json").read_bytes()
    assert b"\r\n" not in raw


def test_radial_default_eps(tmp_path):
    code, _, _ = run(["radial", "--k", "1", "--tau", "1", "--out", str(tmp_path)])
    assert code == 0
    assert len((tmp_path / "rates.csv").read_text().splitlines()) == 8


def test_zero_config_passes(tmp_path):
    cfg = write(tmp_path, '[problem]\ng = "zero"\n[grid]\nlo = -2.0\nhi = 2.0\nn = 201\n'
                          '[sweep]\neps = [0.1, 0.01]\n')
    code, _, _ = run(["sweep", "--config", cfg, "--out", str(tmp_path / "o")])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO((tmp_path / "o" / "rates.csv").read_text())))
    assert all(float(r["gap"]) == 0.0 for r in rows)


def test_coarse_grid_reports_failed_clause(tmp_path):
    cfg = write(tmp_path, '[problem]\ng = "cosine"\nomega = 3.0\n[grid]\nlo = -2.0\nhi = 2.0\n'
                          'n = 9\n[sweep]\nt = 0.25\neps = [0.1, 0.05, 0.025, 0.0125]\n')
    code, out, _ = run(["sweep", "--config", cfg, "--out", str(tmp_path)])
    assert code == 1
    assert "FAIL" in out
    checks = json.loads((tmp_path / "checks.json").read_text())
    assert checks["pass"] is False
    d = checks["bounds"]["d_lower_bound"]
    assert d["pass"] is False and d["min_slack"] < 0
    region = checks["supconv"]["reports"]["delta=0.1"]["clauses"]["trusted_region"]
    assert region["pass"] is False and region["slack"] < 0


def test_config_error_exit_code(tmp_path):
    cfg = write(tmp_path, '[problem]\ng = "zero"\nT = -1.0\n')
    code, _, err = run(["sweep", "--config", cfg, "--out", str(tmp_path)])
    assert code == 2
    assert "line 3" in err and "'T'" in err


def test_missing_config_file(tmp_path):
    code, _, err = run(["sweep", "--config", str(tmp_path / "nope.ini")])
    assert code == 2 and "cannot read" in err


def test_solver_error_exit_code(tmp_path):
    # the radial backend cannot evaluate off the origin
    cfg = write(tmp_path, '[problem]\ng = "neg_proj_norm"\n[sweep]\nx = [0.5]\nbackend = "radial"\n')
    code, _, err = run(["sweep", "--config", cfg, "--out", str(tmp_path)])
    assert code == 2 and "ValueError" in err


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(["radial", "--k", "1", "--tau", "1", "--out", str(blocker / "sub")])
    assert code == 2


def test_mc_command(tmp_path):
    cfg = write(tmp_path, '[problem]\ng = "linear"\nc = [0.5]\n[sweep]\nx = [0.2]\n'
                          '[mc]\nN = 2000\nM = 10\n')
    code, _, _ = run(["mc", "--config", cfg, "--out", str(tmp_path), "--seed", "9", "--threads", "2"])
    assert code == 0
    summary = json.loads((tmp_path / "mc.json").read_text())
    assert summary["seed"] == 9
    assert summary["reference"] == pytest.approx(0.1 - 0.125)
    lines = (tmp_path / "samples.csv").read_text().splitlines()
    assert lines[0] == "x_1" and len(lines) == 2001


def test_mc_samples_header_multi_dim(tmp_path):
    cfg = write(tmp_path, '[problem]\ng = "zero"\nd = 3\n[mc]\nN = 100\nM = 2\ndrift = "zero"\n')
    code, _, _ = run(["mc", "--config", cfg, "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "samples.csv").read_text().splitlines()[0] == "x_1,x_2,x_3"


def test_check_suites(tmp_path):
    cfg = write(tmp_path, '[problem]\ng = "abs_norm"\n[grid]\nlo = -3.0\nhi = 3.0\nn = 301\n'
                          '[sweep]\neps = [0.05]\nt = 0.5\n'
                          '[mc]\nN = 5000\nM = 20\neps = 0.1\ntau = 0.5\ndelta = 0.1\ndrift = "half_sum"\n')
    code, _, _ = run(["check", "--suite", "all", "--config", cfg, "--out", str(tmp_path)])
    assert code == 0
    checks = json.loads((tmp_path / "checks.json").read_text())
    assert set(checks) == {"bounds", "supconv", "semiconcavity", "entropy", "pass"}
    code, _, _ = run(["check", "--suite", "semiconcavity", "--config", cfg, "--out", str(tmp_path)])
    assert code == 0
    assert set(json.loads((tmp_path / "checks.json").read_text())) == {"semiconcavity", "pass"}


def test_seed_is_reproducible(tmp_path):
    cfg = write(tmp_path, '[problem]\ng = "neg_proj_norm"\n[mc]\nN = 500\nM = 10\n')
    run(["mc", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "4"])
    run(["mc", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "4", "--threads", "3"])
    assert (tmp_path / "a" / "samples.csv").read_bytes() == (tmp_path / "b" / "samples.csv").read_bytes()


def test_bad_cli_arguments():
    with pytest.raises(SystemExit) as info:
        main(["radial", "--k", "1", "--tau", "1", "--eps-list", "a,b"])
    assert info.value.code == 2
    with pytest.raises(SystemExit):
        main(["check", "--suite", "nonsense", "--config", "x"])


def two_row_table():
    return RateTable({}, (0.0,), 0.0, [0.01, 0.001], [-0.51, -0.5011], [-0.5, -0.5])


def test_svg_markers_and_overlay():
    table = two_row_table()
    svg = render_svg(table, fit_rate_model(table, ("eps",)))
    assert svg.count("<circle") == 2
    assert svg.count("<polyline") == 1


def test_svg_without_basis_has_no_overlay():
    svg = render_svg(two_row_table(), RateFit((), {}, 0.0))
    assert svg.count("<circle") == 2 and "<polyline" not in svg


def test_svg_is_deterministic():
    table = two_row_table()
    fit = fit_rate_model(table, ("eps",))
    assert render_svg(table, fit) == render_svg(two_row_table(), fit_rate_model(two_row_table(), ("eps",)))


def test_svg_overlay_linear_in_log_eps(tmp_path):
    cfg = parse_config('[problem]\ng = "neg_proj_norm"\nk = 2\nd = 2\n[sweep]\nbackend = "radial"\n'
                       '[grid]\nn = 81\n')
    res = run_experiment(cfg, out=str(tmp_path), plot=True)
    svg = (tmp_path / "rates.svg").read_text()
    pts = re.search(r'<polyline points="([^"]+)"', svg).group(1).split()
    xy = np.array([[float(v) for v in p.split(",")] for p in pts])
    # pixel coordinates are affine in (log eps, gap/eps): residual of a line fit is sub-pixel
    coef = np.polyfit(xy[:, 0], xy[:, 1], 1)
    assert np.max(np.abs(np.polyval(coef, xy[:, 0]) - xy[:, 1])) < 0.5
    assert res.fit.coefficients["eps_log_eps"] == pytest.approx(0.5, rel=0.05)
    with pytest.raises(ValueError):
        render_svg(RateTable({}, (0.0,), 0.0, [], [], []), RateFit((), {}, 0.0))


def test_console_entry_point_via_module(tmp_path):
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "hjrate", "radial", "--k", "1", "--tau", "0.5",
                           "--eps-list", "0.01,0.005", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert math.isfinite(json.loads((tmp_path / "fit.json").read_text())["coef_eps"])
