import json
import subprocess
import sys
from pathlib import Path

import pytest

from diskpattern import __version__
from diskpattern.cli import EXIT_INVALID, EXIT_NONCONVERGED, EXIT_OK, EXIT_PARSE, main

SPECS = Path(__file__).resolve().parent.parent / "specs"


def run(capsys, *argv):
    code = main([str(x) for x in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == EXIT_OK, err
    data = json.loads(out)
    assert data["tool"] == "diskpattern" and data["version"] == __version__
    assert "solver_max_curvature" in data["tolerances"]
    return data


def test_validate(capsys):
    d = report(capsys, "validate", "--spec", SPECS / "square4.json")
    assert d["passed"] and d["euler_characteristic"] == 1 and d["completed_edges"]


def test_solve_hex(capsys):
    d = report(capsys, "solve", "--spec", SPECS / "hex3.json")
    assert d["report"]["converged"]
    assert all(abs(r - 1) < 1e-8 for r in d["radii"].values())


def test_solve_tolerance_flag(capsys):
    d = report(capsys, "solve", "--spec", SPECS / "hex3.json", "--tol", "1e-6")
    assert d["tolerances"]["solver_max_curvature"] == 1e-6


def test_layout_euclidean_and_hyperbolic(capsys):
    d = report(capsys, "layout", "--spec", SPECS / "hex3.json")
    assert d["checks"]["holonomy_residual"] < 1e-9
    d = report(capsys, "layout", "--spec", SPECS / "wheel.json")
    assert d["checks"]["tangency_residual"] < 1e-6
    radii = [x["radius"] for x in d["pattern"]["disks"]]
    assert max(abs(r - 1 / 3) for r in radii) < 1e-6


def test_render_to_file(tmp_path, capsys):
    out = tmp_path / "hex.svg"
    code, _, err = run(capsys, "render", "--spec", SPECS / "hex3.json", "--out", out,
                       "--style", "show_segments=true", "--style", "labels=on")
    assert code == EXIT_OK, err
    text = out.read_text()
    assert text.count("<circle") == 37 and "<line" in text and "<text" in text


def test_render_bad_style(capsys):
    code, _, err = run(capsys, "render", "--spec", SPECS / "hex3.json", "--style", "glow=1")
    assert code == EXIT_PARSE and "usage" in err


def test_network(capsys):
    d = report(capsys, "network", "--spec", SPECS / "square4.json")
    assert d["bounds"]["sum_bound_holds"] and d["bounds"]["completed_edges_zero"]


def test_vel(capsys):
    d = report(capsys, "vel", "--spec", SPECS / "hex3.json")
    assert d["vel"] > 1 and d["mod_separating"] is None
    d = report(capsys, "vel", "--spec", SPECS / "wheel.json", "--v1", "0", "--v2", "1,2,3,4,5,6")
    assert d["vel"] == pytest.approx(1 + 1 / 6, abs=1e-8)
    assert d["mod_separating"] == pytest.approx(d["vel"], abs=1e-8)


def test_classify(capsys):
    d = report(capsys, "classify", "--spec", SPECS / "hex3.json", "--depth", "6")
    assert len(d["trace"]) == 6 and "thresholds" in d


def test_uniformize(capsys):
    d = report(capsys, "uniformize", "--spec", SPECS / "degree7.json")
    assert d["delta_monotone"] is True
    assert "ring_lemma" in d


def test_rigidity(capsys):
    d = report(capsys, "rigidity", "--spec", SPECS / "hex5.json", "--time-steps", "11")
    assert len(d["times"]) == 11
    assert "harmonicity_residual" in d
    assert d["max_harmonicity_residual"] < 1e-5


def test_rigidity_random_profile(capsys):
    d = report(capsys, "rigidity", "--spec", SPECS / "hex3.json", "--time-steps", "5", "--seed", "3")
    assert d["verdicts"]["rate_bounded"]


def test_unknown_command(capsys):
    code, _, err = run(capsys, "frobnicate")
    assert code == EXIT_PARSE and "usage" in err


def test_missing_spec_and_file(capsys, tmp_path):
    assert run(capsys, "solve")[0] == EXIT_PARSE
    assert run(capsys, "solve", "--spec", tmp_path / "absent.json")[0] == EXIT_PARSE


def test_parse_error_exit(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"faces": [[0, 1, 2]],}')
    code, _, err = run(capsys, "validate", "--spec", bad)
    assert code == EXIT_PARSE and "line 1" in err


def test_validation_failure_exit(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"faces": [[0, 1, 2]], "theta": [[0, 1, 1.7], [0, 2, 0], [1, 2, 0]]}))
    code, out, _ = run(capsys, "validate", "--spec", bad)
    assert code == EXIT_INVALID and json.loads(out)["passed"] is False
    assert run(capsys, "network", "--spec", SPECS / "wheel.json")[0] == EXIT_INVALID


def test_nonconvergence_exit(capsys, tmp_path):
    spec = tmp_path / "wild.json"
    spec.write_text(json.dumps({"generator": {"name": "hex", "depth": 4},
                                "boundary": {}, "boundary_default": 1.0}))
    assert run(capsys, "solve", "--spec", spec, "--tol", "1e-30")[0] == EXIT_NONCONVERGED


def test_geometry_override(capsys):
    d = report(capsys, "solve", "--spec", SPECS / "hex3.json", "--geometry", "hyperbolic")
    assert d["geometry"] == "hyperbolic"
    assert set(v for k, v in d["radii"].items() if v == "horocyclic")


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "diskpattern", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
