import json

import pytest

from curvcert.cli import EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_USAGE, main


def test_curvature_flat(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert main(["curvature", "--metric", "flat4", "--point", "0,0,0,0", "--output", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["scalar"] == 0.0
    assert all(v == 0.0 for v in data["max_abs"].values())


def test_curvature_sphere(tmp_path):
    out = tmp_path / "c.json"
    assert main(["curvature", "--metric", "sphere4", "--point", "0.1,0,0,0", "--output", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["scalar"] == pytest.approx(12.0)


@pytest.mark.parametrize("argv", [
    ["curvature", "--metric", "nope"],
    ["curvature", "--metric", "flat4", "--point", "0,0,0"],
    ["curvature", "--metric", "flat4", "--point", "a,b,c,d"],
    ["bogus"],
    ["deform", "--kind", "cotton", "--alpha", "1,1,3/2,2"],
    ["deform", "--kind", "nope"],
    ["deform", "--lam", "3"],
    ["validate", "--check", "nope"],
    ["validate", "--tolerance", "closed_weyl"],
])
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_deform_scans(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["deform", "--kind", "weyl", "--kind", "wplus", "--count", "200", "--format", "csv",
                 "--output", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("kind,") and len(lines) > 200
    assert main(["deform", "--kind", "cotton", "--region", "annulus", "--count", "200"]) == EXIT_OK
    # the deformed Cotton tensor vanishes at the centre, which the ball sample contains
    assert main(["deform", "--kind", "cotton", "--region", "ball", "--count", "200"]) == EXIT_FAIL


def test_coeffs(tmp_path):
    out = tmp_path / "k.json"
    assert main(["coeffs", "--family", "weyl", "--output", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert "5/48" in json.dumps(data)
    assert main(["coeffs", "--family", "bach"]) == EXIT_OK


def test_obstruction_commands(tmp_path):
    out = tmp_path / "o.json"
    assert main(["obstruction", "--system", "wplus", "--output", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["status"] == "infeasible"
    assert main(["obstruction", "--system", "bach", "--no-spot"]) == EXIT_OK
    assert main(["obstruction", "--system", "bach", "--budget", "1", "--no-spot"]) == EXIT_INCONCLUSIVE


def test_validate(tmp_path):
    out = tmp_path / "v.json"
    assert main(["validate", "--check", "coeffs", "--check", "sphere", "--output", str(out)]) == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["verdict"] == "pass" and len(rep["checks"]) == 2
    assert main(["validate", "--check", "sphere", "--tolerance", "sphere_scalar=0"]) == EXIT_FAIL


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"metric": "sphere4", "point": [0, 0, 0, 0]}))
    out = tmp_path / "c.json"
    assert main(["curvature", "--config", str(cfg), "--output", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["metric"] == "sphere4"
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["curvature", "--config", str(bad)]) == EXIT_USAGE
