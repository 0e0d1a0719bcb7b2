import json
from pathlib import Path

import numpy as np
import pytest

from tdgame.cli import EXIT_DOMAIN, EXIT_OK, EXIT_USAGE, ScenarioFileError, load_scenario, main, parse_scenario, scenario_file_from
from tdgame.simulator import Scenario
from tdgame.strategies import DirectTo, PurePursuit, RandomHeading

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

FAST_2D = {
    "dimension": 2,
    "gamma": 0.5,
    "target": {"type": "ball", "center": [0, 0], "radius": 0.5},
    "x_P0": [0, 1.0],
    "x_E0": [1.5, 1.5],
    "dt": 0.01,
    "capture_radius": 0.01,
}


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc, indent=2) if isinstance(doc, dict) else doc)
    return p


def test_classify_bundled_scenarios(capsys):
    assert main(["classify", "--scenario", str(SCENARIOS / "capture_optimal.json")]) == EXIT_OK
    assert "region: CaptureRegion" in capsys.readouterr().out
    assert main(["classify", "--scenario", str(SCENARIOS / "attack_optimal.json")]) == EXIT_OK
    assert "region: AttackRegion" in capsys.readouterr().out


def test_simulate_writes_outputs(tmp_path, capsys):
    p = write(tmp_path, FAST_2D)
    stem = tmp_path / "out" / "run"
    assert main(["simulate", "--scenario", str(p), "--out", str(stem)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "outcome=Captured" in out and "capture_radius=0.01" in out
    doc = json.loads(stem.with_suffix(".json").read_text())
    assert doc["outcome"] == "Captured"
    assert stem.with_suffix(".csv").read_text().startswith("t,x_P0")


def test_simulate_several_scenarios_into_directory(tmp_path, capsys):
    a = write(tmp_path, FAST_2D, "a.json")
    b = write(tmp_path, dict(FAST_2D, x_E0=[0.8, 0.3]), "b.json")
    outdir = tmp_path / "runs"
    assert main(["simulate", "--scenario", str(a), str(b), "--out", str(outdir), "--workers", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "outcome=Captured" in out and "outcome=Attacked" in out
    assert (outdir / "a.json").exists() and (outdir / "b.csv").exists()


def test_pbs_2d_svg(tmp_path, capsys):
    stem = tmp_path / "pbs"
    assert main(["pbs", "--scenario", str(SCENARIOS / "pbs_ball_2d.json"), "--resolution", "16", "--out", str(stem)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "method=analytic" in out and "vertices=16" in out
    assert stem.with_suffix(".svg").read_text().startswith("<svg")


def test_pbs_smooth_target(tmp_path, capsys):
    stem = tmp_path / "q"
    assert main(["pbs", "--scenario", str(SCENARIOS / "pbs_quartic_cube.json"), "--resolution", "6", "--out", str(stem)]) == EXIT_OK
    assert "method=transformation-map" in capsys.readouterr().out
    assert len(json.loads(stem.with_suffix(".json").read_text())["vertices"]) == 36


def test_pbs_polytope_is_domain_error(tmp_path, capsys):
    doc = dict(FAST_2D, target={"type": "polytope", "A": [[1, 0], [-1, 0], [0, 1], [0, -1]], "b": [1, 1, 1, 1]},
               x_P0=[3, 0], x_E0=[0, 3])
    p = write(tmp_path, doc)
    assert main(["pbs", "--scenario", str(p), "--out", str(tmp_path / "x")]) == EXIT_DOMAIN
    assert "polytope" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    bad = write(tmp_path, dict(FAST_2D, gamma=1.2))
    assert main(["classify", "--scenario", str(bad)]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert f"{bad}:3: gamma" in err
    unknown = write(tmp_path, dict(FAST_2D, colour="red"), "u.json")
    assert main(["classify", "--scenario", str(unknown)]) == EXIT_USAGE
    assert "colour" in capsys.readouterr().err
    broken = write(tmp_path, '{\n  "dimension": 2,\n  "gamma": ,\n}', "b.json")
    assert main(["classify", "--scenario", str(broken)]) == EXIT_USAGE
    assert f"{broken}:3" in capsys.readouterr().err
    missing = write(tmp_path, {"dimension": 2}, "m.json")
    assert main(["classify", "--scenario", str(missing)]) == EXIT_USAGE
    assert main(["classify", "--scenario", str(tmp_path / "nope.json")]) == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["pbs", "--scenario", str(bad), "--resolution", "0"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--suite", "nope"])
    assert exc.value.code == EXIT_USAGE


def test_bad_target_line_anchored(tmp_path, capsys):
    doc = dict(FAST_2D, target={"type": "ball", "center": [0, 0], "radius": -1})
    p = write(tmp_path, doc)
    assert main(["classify", "--scenario", str(p)]) == EXIT_USAGE
    assert f"{p}:4: target" in capsys.readouterr().err


def test_direct_to_outside_target_rejected(tmp_path):
    doc = dict(FAST_2D, policy_E="direct_to", direct_to=[3, 3])
    with pytest.raises(ScenarioFileError):
        parse_scenario(json.dumps(doc, indent=2)).build()


def test_scenario_round_trip():
    for path in sorted(SCENARIOS.glob("*.json")):
        sf = load_scenario(path)
        again = parse_scenario(sf.to_json())
        assert again == sf
        # building normalizes the target (defaults made explicit); after
        # that, file -> scenario -> file is a fixed point
        norm = scenario_file_from(sf.build())
        assert norm.target["type"] == sf.target["type"]
        assert scenario_file_from(norm.build()) == norm
        assert parse_scenario(norm.to_json()) == norm
        assert (norm.x_P0, norm.x_E0, norm.gamma, norm.seed) == (sf.x_P0, sf.x_E0, sf.gamma, sf.seed)


def test_policies_built():
    doc = dict(FAST_2D, policy_P="pure_pursuit", policy_E="direct_to", direct_to=[0, 0.2])
    sc = parse_scenario(json.dumps(doc)).build()
    assert isinstance(sc, Scenario) and isinstance(sc.policy_P, PurePursuit)
    assert isinstance(sc.policy_E, DirectTo) and np.allclose(sc.policy_E.point, [0, 0.2])
    sc = parse_scenario(json.dumps(dict(FAST_2D, policy_P="random", policy_E="random", seed=7))).build()
    assert sc.policy_E == RandomHeading(7) and sc.policy_P == RandomHeading(8)


def test_verify_small_suite(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["verify", "--suite", "projection", "--seed", "1", "--out", str(out), "--format", "json"]) == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed == json.loads(out.read_text())
    assert printed["passed"] and printed["seed"] == 1
