# tests/test_parser.py
from __future__ import annotations

import os

import pytest

from src.core.errors import ConfigError, ParameterError, ScenarioError
from src.core.parser import (
    filter_by_keyword,
    find_scenario,
    load_catalog,
    parse_scenario,
    scenario_from_dict,
)

from tests.conftest import HOPF_TC

SCENARIOS = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def _doc(**overrides):
    doc = {"name": "t", "params": dict(HOPF_TC), "steps": [{"action": "threshold"}]}
    doc.update(overrides)
    return doc


def test_json5_file_with_comments(tmp_path):
    path = tmp_path / "s.json5"
    path.write_text(
        "// 주석\n{name: 'demo', topic: 'demo topic', params: {%s},\n"
        " steps: [{action: 'simulate', t_max: 5,}],}\n"
        % ", ".join(f"{k}: {v}" for k, v in HOPF_TC.items()),
        encoding="utf-8",
    )
    spec = parse_scenario(str(path))
    assert spec.name == "demo"
    assert spec.topic == "demo topic"
    assert spec.params.k1 == pytest.approx(0.99)
    assert spec.actions == ["simulate"]


def test_missing_parameter_is_rejected():
    params = dict(HOPF_TC)
    params.pop("d3")
    with pytest.raises(ParameterError):
        scenario_from_dict(_doc(params=params))


@pytest.mark.parametrize("step", [
    {"action": "fly"},
    {"action": "simulate", "set": {"zz": 1.0}},
    {"action": "simulate", "expected": [{"type": "vibes"}]},
    {"action": "simulate", "expected": {"type": "metric"}},
    "simulate",
])
def test_bad_steps(step):
    with pytest.raises(ScenarioError):
        scenario_from_dict(_doc(steps=[step]))


def test_empty_steps_and_missing_name():
    with pytest.raises(ScenarioError):
        scenario_from_dict(_doc(steps=[]))
    with pytest.raises(ScenarioError):
        scenario_from_dict(_doc(name=""))


def test_syntax_error_and_missing_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{name: ", encoding="utf-8")
    with pytest.raises(ScenarioError):
        parse_scenario(str(bad))
    with pytest.raises(ConfigError):
        parse_scenario(str(tmp_path / "none.json"))


def test_duplicate_names(tmp_path):
    import json

    for f in ("a.json", "b.json"):
        (tmp_path / f).write_text(json.dumps(_doc(name="same")), encoding="utf-8")
    with pytest.raises(ScenarioError):
        load_catalog(str(tmp_path))


def test_catalog_contents():
    names = {s.name for s in load_catalog(SCENARIOS)}
    assert names == {
        "fig1-sn", "fig2-hopf-tc", "fig3-fear-k1", "fig4-fear-k2", "fig5-fte",
        "fig6-selective-predation", "codim2-zh-sntc",
    }
    specs = load_catalog(SCENARIOS)
    assert any("continue2" in s.actions for s in specs)


def test_catalog_has_one_scenario_per_figure():
    figures = [s.figure for s in load_catalog(SCENARIOS) if s.figure is not None]
    assert sorted(figures) == [1, 2, 3, 4, 5, 6]
    for s in load_catalog(SCENARIOS):
        if s.figure is not None:
            assert s.name.startswith(f"fig{s.figure}-")
            assert s.caption


@pytest.mark.parametrize("figure", [0, -2, "1", 1.5, True])
def test_bad_figure_number_is_rejected(figure):
    with pytest.raises(ScenarioError):
        scenario_from_dict(_doc(figure=figure))


def test_find_and_filter():
    specs = load_catalog(SCENARIOS)
    assert find_scenario("fig5-fte", SCENARIOS).params.b0 == 10.0
    with pytest.raises(ConfigError):
        find_scenario("nope", SCENARIOS)
    assert {s.name for s in filter_by_keyword(specs, "continue2")} == {"codim2-zh-sntc"}
    assert {s.name for s in filter_by_keyword(specs, "SADDLE-NODE")} == {"fig1-sn"}
    assert {s.name for s in filter_by_keyword(specs, "hopf")} == {"fig2-hopf-tc"}
