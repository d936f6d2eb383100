# tests/test_fold_curve.py
from __future__ import annotations

import os

import numpy as np
import pytest

from src.analyses import fold_curve
from src.analyses.continuation import FOLD, SN, ZH, BifurcationPoint
from src.analyses.equilibria import find
from src.analyses.fold_curve import continue_fold_curve
from src.core.errors import ConfigError, SeedResidualError
from src.core.model import State
from src.core.parser import parse_scenario
from src.core.runner import compare_expected

SCENARIO = os.path.join(os.path.dirname(__file__), "..", "scenarios", "codim2-zh-sntc.json")


@pytest.fixture(scope="module")
def spec():
    return parse_scenario(SCENARIO)


def test_sntc_points_are_matched_by_passage(spec):
    # 보고된 SNTC 상태는 I > 0 이라 I* = 0 교차로는 잡히지 않는다
    assert "curve passage" in spec.caption
    goldens = spec.steps[1]["expected"]
    passes = [e for e in goldens if e["type"] == "passes"]
    assert [e["params"] for e in passes] == [{"k2": 0.4508, "K": 3.9784}, {"k2": 0.2271, "K": 5.7454}]
    assert all(e["state"][1] > 0.5 for e in passes)
    assert not any(e.get("kind") == "SNTC" for e in goldens)


@pytest.mark.slow
def test_zh_on_k2_d0_curve(spec, quiet_ctx):
    step = spec.steps[0]
    result = fold_curve.check(spec.params, step, quiet_ctx)
    zh = [b for b in result["bifurcations"] if b["kind"] == ZH]
    assert any(abs(b["params"]["k2"] - 0.9917) < 1e-2 and abs(b["params"]["d0"] - 1.4225) < 1e-2 for b in zh)
    (curve,) = result["_branches"]
    assert curve.kind == FOLD
    assert all(pt.equilibrium.kind == "E4" for pt in curve.points if pt.equilibrium.location.I > 0.0)
    # fold 곡선 위 점들은 평형점이고 야코비안이 특이하다
    for pt in curve.points[::10]:
        assert abs(pt.report.psi3) < 1e-5


@pytest.mark.slow
def test_k2_K_curve_goldens(spec, quiet_ctx):
    step = spec.steps[1]
    result = fold_curve.check(spec.params, step, quiet_ctx)
    checks = compare_expected(2, result, step["expected"])
    assert all(c.passed for c in checks), [c.label for c in checks if not c.passed]


def test_rejects_non_sn_seed(fear_sn):
    hopf = BifurcationPoint("Hopf", {"k2": 1.0}, State(0.5, 1.0, 1.0))
    with pytest.raises(ConfigError):
        continue_fold_curve(fear_sn, ("k2", "d0"), hopf)


def test_rejects_unknown_parameter(fear_sn):
    sn = BifurcationPoint(SN, {"k2": 1.0}, State(0.5, 1.0, 1.0))
    with pytest.raises(ConfigError):
        continue_fold_curve(fear_sn, ("k2", "zz"), sn)


def test_rejects_regular_equilibrium_as_seed(fear_sn):
    eq = find(fear_sn, "E4")
    fake = BifurcationPoint(SN, {"k2": fear_sn.k2}, eq.location)
    with pytest.raises(SeedResidualError):
        continue_fold_curve(fear_sn, ("k2", "d0"), fake)


def test_check_requires_two_free(spec, quiet_ctx):
    with pytest.raises(ConfigError):
        fold_curve.check(spec.params, {"action": "continue2", "free": ["k2"]}, quiet_ctx)
    with pytest.raises(ConfigError):
        fold_curve.check(spec.params, {"action": "continue2", "free": ["k2", "d0"], "seed": {}}, quiet_ctx)
