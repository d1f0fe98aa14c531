from __future__ import annotations

import json

import pytest

from cli_scenarios import invoke, replay_matches, run_all_verbs
from unitrig.cli import MANIFEST
from unitrig.config import ConfigError, RunConfig, apply_env, validate_config
from unitrig.formats import FormatError, parse_pointset, read_json


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    return run_all_verbs(tmp_path_factory.mktemp("cli"))


def test_generate_and_unitcount(tmp_path, capsys):
    assert invoke(["generate", "--kind", "integer_grid", "--m", 3, "--out", tmp_path / "g"]) == 0
    text = (tmp_path / "g" / "points.tsv").read_text()
    rows = [ln for ln in text.splitlines() if not ln.startswith("#")]
    assert len(rows) == 9
    capsys.readouterr()
    assert invoke(["unitcount", "--in", tmp_path / "g" / "points.tsv", "--out", tmp_path / "u"]) == 0
    assert capsys.readouterr().out.strip() == "12"


def test_every_verb_writes_manifest(runs):
    for verb, d in runs.items():
        man = read_json(d / MANIFEST)
        assert man["config"]["verb"] == verb
        assert man["artifacts"]
        assert {"unitrig", "python", "numpy", "scipy"} <= set(man["versions"])
        assert man["wall_time_s"] >= 0


def test_artifact_contents(runs):
    assert read_json(runs["unitcount"] / "unitcount.json")["u"] > 0
    inc = read_json(runs["incidence"] / "incidences.json")
    assert inc["count"] == 2 * read_json(runs["unitcount"] / "unitcount.json")["u"]
    assert read_json(runs["rigidity"] / "rigidity.json")["verdict"]["verdict"] == "rigid"
    rep = read_json(runs["extract"] / "report.json")
    assert rep["params"]["r"] == 2 and rep["checks"]["unit_edges"]["pass"]
    pig = read_json(runs["congruence"] / "pigeonhole.json")
    assert {"two_index_ok", "derived_lower_bound", "direct_count", "violations"} <= set(pig)
    tsv = (runs["report"] / "bounds_vs_h.tsv").read_text().splitlines()
    assert tsv[0].startswith("n\th\tr\tt") and len(tsv) == 2
    assert len((runs["report"] / "u_vs_n.tsv").read_text().splitlines()) == 2
    assert len((runs["report"] / "witness_vs_alpha.tsv").read_text().splitlines()) == 2


@pytest.mark.parametrize("verb", ["generate", "unitcount", "incidence", "partition", "extract",
                                  "rigidity", "conjecture", "congruence", "report"])
def test_manifest_replay_is_byte_identical(runs, tmp_path, verb):
    ok, bad = replay_matches(runs[verb], tmp_path / "again")
    assert ok, bad


def test_extract_twice_identical(tmp_path):
    for name in ("a", "b"):
        assert invoke(["extract", "--m", 16, "--h", 1.0, "--seed", 7, "--out", tmp_path / name]) == 0
    for art in ("graphs.json", "report.json", "summary.tsv", "pprime.tsv"):
        assert (tmp_path / "a" / art).read_bytes() == (tmp_path / "b" / art).read_bytes()


def test_inputs_not_mutated(runs):
    p = runs["generate"] / "points.tsv"
    before = p.read_bytes()
    invoke(["unitcount", "--in", p, "--out", runs["generate"].parent / "u2"])
    assert p.read_bytes() == before


def _err(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_unknown_verb(capsys):
    assert invoke(["frobnicate"]) == 2
    assert _err(capsys)["error"] == "usage"


def test_missing_input(tmp_path, capsys):
    assert invoke(["unitcount", "--in", tmp_path / "nope.tsv", "--out", tmp_path]) == 3
    assert _err(capsys)["error"] == "missing_input"


def test_bad_config_reports_all_errors(tmp_path, capsys):
    code = invoke(["extract", "--h", -1, "--tol", -1, "--out", tmp_path])
    assert code == 2
    body = _err(capsys)
    assert body["error"] == "config"
    assert any("tol" in e for e in body["details"]) and any("h must" in e for e in body["details"])


def test_malformed_manifest(tmp_path, capsys):
    bad = tmp_path / "m.json"
    bad.write_text("{not json")
    assert invoke(["generate", "--config", bad]) == 2
    bad.write_text(json.dumps({"config": {"verb": "generate", "bogus": 1}}))
    assert invoke(["generate", "--config", bad]) == 2
    assert "bogus" in _err(capsys)["message"]


def test_validate_config_fills_degrees():
    cfg = validate_config(RunConfig("extract"), n=1000)
    assert cfg.params["r"] == cfg.params["t"] == 10
    with pytest.raises(ConfigError) as e:
        validate_config(RunConfig("extract", tol=0, params={"h": 0}))
    assert len(e.value.errors) == 2


def test_env_overrides():
    cfg = RunConfig("extract")
    assert apply_env(cfg, {"UNITRIG_C_THRESH": "0.5", "UNITRIG_SEED": "9"}) == []
    assert cfg.params["c_thresh"] == 0.5 and cfg.seed == 9
    assert apply_env(cfg, {"UNITRIG_C5": "abc"})


def test_pointset_parsing():
    P = parse_pointset("# mode: exact\n# unit_sq: 5\n0\t0\n1\t2\n3/2 1\n")
    assert P.unit_sq == 5 and len(P) == 3
    assert parse_pointset("0.5 0.25\n1 1\n").mode == "float"
    with pytest.raises(FormatError):
        parse_pointset("1 2 3\n")
