# tests/test_runner.py
from __future__ import annotations

import json
from types import SimpleNamespace

import pytest

from src.core.errors import GoldenMismatchError
from src.core.model import State
from src.core.parser import scenario_from_dict
from src.core.runner import compare_expected, run_scenario

from tests.conftest import HOPF_TC


def _branch(free, rows):
    pts = [SimpleNamespace(params={free: lam}, equilibrium=SimpleNamespace(location=State(*xyz)))
           for lam, xyz in rows]
    return SimpleNamespace(points=pts)


RESULT = {
    "equilibria": [{"kind": "E3", "state": [4.06, 0.0, 0.407], "verdict": "stable"}],
    "bifurcations": [
        {"kind": "Hopf", "params": {"k1": 2.5071}, "state": [1.618, 0.76, 0.331], "l1": -0.02},
        {"kind": "TC", "params": {"k1": 0.4220}, "state": [4.06, 0.0, 0.998]},
    ],
    "events": [{"kind": "FTE", "time": 14.21}],
    "endpoint": {"tag": "converged-E4", "detail": {"location": (2.5031, 0.4596, 0.6076)}},
    "metrics": {"threshold": 1.6},
    "cells": {"0": "converged-E3", "4": "oscillatory"},
    "_branches": [_branch("k2", [(0.4, (0.60, 0.96, 1.50)), (0.5, (0.70, 0.96, 1.70))])],
}


@pytest.mark.parametrize("expected", [
    {"type": "equilibrium", "kind": "E3", "state": [4.06, 0, 0.407]},
    {"type": "verdict", "kind": "E3", "state": [4.06, 0, 0.407], "verdict": "stable"},
    {"type": "bifurcation", "kind": "Hopf", "params": {"k1": 2.5075}, "state": [1.6184, 0.7596, 0.3308]},
    {"type": "sign", "kind": "Hopf", "field": "l1", "sign": -1},
    {"type": "event", "kind": "FTE", "time": 14.3},
    {"type": "endpoint", "tag": "converged-E4", "state": [2.503, 0.4596, 0.6076]},
    {"type": "metric", "name": "threshold", "value": 1.6, "tol": 1e-12},
    {"type": "cells", "values": {"0": "converged-E3"}},
    {"type": "passes", "params": {"k2": 0.45}, "state": [0.65, 0.96, 1.60]},
])
def test_each_checker_accepts(expected):
    (c,) = compare_expected(1, RESULT, [expected])
    assert c.passed, c.label


@pytest.mark.parametrize("expected", [
    {"type": "equilibrium", "kind": "E3", "state": [4.06, 0, 0.5]},
    {"type": "verdict", "kind": "E3", "state": [4.06, 0, 0.407], "verdict": "unstable"},
    {"type": "bifurcation", "kind": "Hopf", "params": {"k1": 2.52}},
    {"type": "bifurcation", "kind": "SN", "params": {"k1": 2.5075}},
    {"type": "sign", "kind": "Hopf", "field": "l1", "sign": 1},
    {"type": "event", "kind": "FTE", "time": 15.0},
    {"type": "endpoint", "tag": "converged-E3"},
    {"type": "metric", "name": "threshold", "value": 1.7},
    {"type": "cells", "values": {"4": "converged-E4"}},
    {"type": "passes", "params": {"k2": 0.45}, "state": [0.65, 1.20, 1.60]},
    {"type": "passes", "params": {"d0": 0.45}},
])
def test_each_checker_rejects(expected):
    (c,) = compare_expected(1, RESULT, [expected])
    assert not c.passed


def test_missing_result_fails_every_check():
    checks = compare_expected(2, None, [{"type": "metric", "name": "threshold", "value": 1.6}])
    assert [c.passed for c in checks] == [False]
    assert checks[0].step == 2


def _spec(expected_threshold):
    return scenario_from_dict({
        "name": "thr",
        "topic": "selective predation",
        "params": dict(HOPF_TC, k1=2.8, k2=2.0, d1=0.8),
        "steps": [
            {"action": "threshold",
             "expected": [{"type": "metric", "name": "threshold", "value": expected_threshold, "tol": 1e-9}]},
            {"action": "threshold", "set": {"d1": 6.0},
             "expected": [{"type": "metric", "name": "predicted_extinct", "value": 1.0, "tol": 0.0}]},
        ],
    })


def test_run_scenario_writes_summary(tmp_path):
    result = run_scenario(_spec(1.6), str(tmp_path), quiet=True)
    assert result.passed
    summary = json.load(open(tmp_path / "thr" / "summary.json", encoding="utf-8"))
    assert summary["passed"] is True
    assert summary["topic"] == "selective predation"
    assert summary["figure"] is None
    assert [c["passed"] for c in summary["checks"]] == [True, True]


def test_run_scenario_mismatch_raises(tmp_path):
    with pytest.raises(GoldenMismatchError) as info:
        run_scenario(_spec(2.0), str(tmp_path), quiet=True)
    assert len(info.value.checks) == 1
    summary = json.load(open(tmp_path / "thr" / "summary.json", encoding="utf-8"))
    assert summary["passed"] is False


def test_run_scenario_without_out_dir():
    result = run_scenario(_spec(1.6), None, quiet=True)
    assert result.files == []
