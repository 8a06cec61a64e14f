import copy
import json

import numpy as np
import pytest

from twistorcheck import cli
from twistorcheck.errors import ConfigError
from twistorcheck.scenarios import (
    BUILTIN,
    builtin_scenarios,
    exit_code,
    get_builtin,
    parse_f,
    parse_scenario,
    run_scenario,
    with_sampling,
)

BASE = {
    "manifold": {"id": "flat_torus", "params": {"dim": 4}},
    "structure": {"dplus": "lambda+", "dminus": "lambda+", "f": {"theta": 0.3}},
    "checks": ["prop3", "g_tensors"],
    "sampling": {"points": 3, "sphere": 10, "h": 1e-4, "seed": 1},
}


def mutated(path, value):
    obj = copy.deepcopy(BASE)
    node = obj
    for key in path[:-1]:
        node = node.setdefault(key, {})
    node[path[-1]] = value
    return obj


@pytest.mark.parametrize(
    "path",
    [("colour",), ("manifold", "chart"), ("structure", "g"), ("sampling", "points_per_chart"), ("expect", "verdicts"), ("expect", "types", "poles")],
)
def test_unknown_fields_rejected(path):
    with pytest.raises(ConfigError):
        parse_scenario(mutated(path, 1))


@pytest.mark.parametrize(
    "path, value",
    [
        (("structure", "dplus"), "lambda0"),
        (("structure", "f"), {"theta": 1, "axis": [0, 0, 1]}),
        (("structure", "f"), {"matrix": [[1, 0, 0], [0, 1, 0], [0, 0, -1]]}),
        (("checks",), ["prop3", "holonomy"]),
        (("sampling", "h"), -1.0),
        (("expect", "checks"), {"prop3": "sometimes"}),
    ],
)
def test_invalid_values_rejected(path, value):
    with pytest.raises(ConfigError):
        parse_scenario(mutated(path, value))


def test_missing_sections():
    with pytest.raises(ConfigError):
        parse_scenario({"manifold": {"id": "flat_torus"}})


def test_bundle_dimension_mismatch():
    sc = parse_scenario(mutated(("manifold", "params"), {"dim": 8}))
    with pytest.raises(ConfigError):
        run_scenario(sc)


def test_parse_f_forms():
    assert parse_f("identity").is_identity()
    assert np.allclose(parse_f({"axis": [1, 0, 0], "angle": np.pi}).F, np.diag([1, -1, -1]), atol=1e-15)


def test_report_format_and_determinism():
    sc = parse_scenario(BASE)
    a, b = run_scenario(sc), run_scenario(sc)
    for key in ("scenario", "conventions", "checks", "verdict", "seed", "h", "version", "runtime"):
        assert key in a
    for c in a["checks"]:
        assert {"name", "max_residual", "witness", "threshold", "pass"} <= set(c)
    a.pop("runtime"), b.pop("runtime")
    assert json.dumps(a) == json.dumps(b)


def test_echoed_config_reproduces():
    rep = run_scenario(get_builtin("s2xt2-negative"))
    again = run_scenario(parse_scenario(rep["scenario"]))
    for c1, c2 in zip(rep["checks"], again["checks"]):
        assert abs(c1["max_residual"] - c2["max_residual"]) <= 1e-12


def test_seed_changes_points():
    sc = parse_scenario(BASE)
    r1 = run_scenario(sc)
    r2 = run_scenario(with_sampling(sc, seed=7))
    assert r1["checks"][0]["witness"]["point"] != r2["checks"][0]["witness"]["point"]


def test_builtin_examples():
    rep = run_scenario(get_builtin("hyperelliptic-3-ftheta-0.7"))
    checks = {c["name"]: c for c in rep["checks"]}
    assert checks["prop3"]["pass"] and checks["g_tensors"]["max_residual"] <= 1e-4
    assert rep["verdict"]["classification"] == "Thm4" and rep["verdict"]["measured_integrable"]
    rep = run_scenario(get_builtin("s2xt2-negative"))
    assert rep["verdict"]["classification"] == "NonIntegrable"
    wit = {c["name"]: c for c in rep["checks"]}["g_tensors"]["witness"]
    assert wit["tensor"] == "G1" and len(wit["pair"]) == 2


def test_exit_codes_from_reports():
    assert exit_code({"verdict": {"classification": "Thm3a"}, "pass": True}) == 0
    assert exit_code({"verdict": {"classification": "Thm3a"}, "pass": False}) == 1
    assert exit_code({"verdict": {"classification": "Inconclusive"}, "pass": False}) == 3


def test_cli_run_and_errors(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(BASE))
    assert cli.main(["run", "--scenario", str(good)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["verdict"]["classification"] == "Thm3a"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(mutated(("sampling", "bogus"), 1)))
    assert cli.main(["run", "--scenario", str(bad)]) == 2
    assert cli.main(["run", "--scenario", str(tmp_path / "missing.json")]) == 2
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps(mutated(("expect",), {"verdict": "Thm3b"})))
    assert cli.main(["run", "--scenario", str(wrong)]) == 1


def test_cli_out_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert cli.main(["run", "--scenario", "example4-ftheta0-T4", "--samples", "2", "--sphere-samples", "8", "--out", str(out)]) == 0
    assert capsys.readouterr().out.startswith("PASS")
    rep = json.loads(out.read_text())
    assert rep["scenario"]["sampling"]["points"] == 2 and rep["conventions"]["sphere_samples"] == 14


def test_cli_list_and_describe(capsys):
    assert cli.main(["list"]) == 0
    names = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
    assert names == builtin_scenarios() and len(names) == len(BUILTIN)
    assert cli.main(["describe", "example2-twisted-T4"]) == 0
    desc = json.loads(capsys.readouterr().out)
    assert desc["structure"]["f"] == {"matrix": [[1, 0, 0], [0, -1, 0], [0, 0, -1]]}
