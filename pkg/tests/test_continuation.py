# tests/test_continuation.py
from __future__ import annotations

import os

import numpy as np
import pytest

from src.analyses import continuation
from src.analyses.continuation import (
    HOPF,
    SN,
    TC,
    continue_branch,
    find_seed,
    sn_diagnostics,
    switch_at_tc,
)
from src.analyses.equilibria import equilibrium_E4, find
from src.core.errors import ConfigError, NoInteriorEquilibriumError
from src.core.model import rhs
from src.core.parser import parse_scenario
from src.core.runner import compare_expected

SCENARIOS = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def _scenario(name: str):
    return parse_scenario(os.path.join(SCENARIOS, f"{name}.json"))


@pytest.fixture(scope="module")
def k1_branch():
    """Hopf/TC 설정의 k1 방향 E4 분지 (k1 ∈ [0, 4])."""
    spec = _scenario("fig2-hopf-tc")
    p = spec.params.replace(k1=1.2)
    seed = find(p, "E4")
    return p, continue_branch(p, "k1", (0.0, 4.0), seed)


def test_sn_in_k1(fear_sn):
    p, seed = find_seed(fear_sn.replace(k2=1.0), "k1", (0.0, 1.5), "E4", (0.4615, 1.0565, 0.8523))
    branch = continue_branch(p, "k1", (0.0, 1.5), seed, compute_l1=False)
    sns = branch.of_kind(SN)
    assert sns
    best = min(sns, key=lambda b: abs(b.param_values["k1"] - 0.4181))
    assert best.param_values["k1"] == pytest.approx(0.4181, abs=5e-3)
    assert np.allclose(best.location.as_tuple(), (0.4615, 1.0565, 0.8523), atol=1e-2)
    diag = best.diagnostics
    assert abs(diag["w_dot_G_lambda"]) > 1e-8
    assert abs(diag["w_dot_D2G_vv"]) > 1e-8


def _e4_count(p):
    try:
        return len(equilibrium_E4(p, subintervals=8192))
    except NoInteriorEquilibriumError:
        return 0


@pytest.mark.parametrize("step_idx", [0, 1])
def test_e4_pair_appears_and_vanishes_across_sn(step_idx):
    spec = _scenario("fig1-sn")
    step = spec.steps[step_idx]
    free, lam_range = step["free"], tuple(step["range"])
    base = spec.params.replace(**step.get("set", {}))
    p, seed = find_seed(base, free, lam_range, "E4", tuple(step["seed_state"]))
    branch = continue_branch(p, free, lam_range, seed, compute_l1=False)
    sns = branch.of_kind(SN)
    assert sns
    for sn in sns:
        k = sn.param_values[free]
        counts = {_e4_count(p.with_value(free, k - 1e-3)), _e4_count(p.with_value(free, k + 1e-3))}
        assert counts == {0, 2}, (free, k, counts)


def test_sn_diagnostics_at_located_point(fear_sn):
    p, seed = find_seed(fear_sn, "k1", (0.0, 1.5), "E4", (0.4615, 1.0565, 0.8523))
    branch = continue_branch(p, "k1", (0.0, 1.5), seed, compute_l1=False)
    sn = branch.of_kind(SN)[0]
    ps = p.replace(**sn.param_values)
    diag = sn_diagnostics(ps, sn.location.array(), "k1")
    assert min(abs(ev) for ev in diag["eigenvalues"]) < 1e-4


def test_tc_and_hopf_on_k1_branch(k1_branch):
    _, branch = k1_branch
    (tc,) = branch.of_kind(TC)
    assert tc.param_values["k1"] == pytest.approx(0.4219, abs=5e-3)
    assert np.allclose(tc.location.as_tuple(), (4.06, 0.0, 0.9978), atol=1e-2)

    (hopf,) = branch.of_kind(HOPF)
    assert hopf.param_values["k1"] == pytest.approx(2.5075, abs=5e-3)
    assert np.allclose(hopf.location.as_tuple(), (1.6184, 0.7596, 0.3308), atol=1e-2)
    assert hopf.diagnostics["omega"] > 0.0
    assert hopf.diagnostics["l1"] < 0.0
    assert abs(hopf.diagnostics["transversality"]) > 1e-6


def test_branch_stability_changes_at_hopf(k1_branch):
    _, branch = k1_branch
    before = [pt for pt in branch.points if 1.5 < pt.params["k1"] < 2.4]
    after = [pt for pt in branch.points if 2.6 < pt.params["k1"] < 4.0]
    assert before and after
    assert all(pt.report.stable for pt in before)
    assert not any(pt.report.stable for pt in after)


def test_branch_points_are_equilibria(k1_branch):
    p, branch = k1_branch
    for pt in branch.points[::5]:
        ps = p.replace(**pt.params)
        assert np.max(np.abs(rhs(ps, pt.equilibrium.location.array()))) < 1e-8


def test_e3_branch_tc_and_switch(hopf_tc):
    p = hopf_tc.replace(k1=0.1)
    seed = find(p, "E3")
    e3 = continue_branch(p, "k1", (0.0, 4.0), seed, compute_l1=False)
    (tc,) = e3.of_kind(TC)
    assert tc.param_values["k1"] == pytest.approx(0.4219, abs=5e-3)

    e4 = switch_at_tc(p, "k1", (0.0, 4.0), tc, compute_l1=False)
    assert e4.kind == "E4"
    assert all(pt.equilibrium.location.I > -1e-9 for pt in e4.points)
    assert max(pt.equilibrium.location.I for pt in e4.points) > 0.1


def test_check_matches_scenario_goldens(quiet_ctx):
    spec = _scenario("fig2-hopf-tc")
    step = spec.steps[2]
    assert step["free"] == "k2"
    result = continuation.check(spec.params, step, quiet_ctx)
    checks = compare_expected(3, result, step["expected"])
    assert all(c.passed for c in checks), [c.label for c in checks if not c.passed]
    assert result["files"] == []


def test_unknown_free_parameter(hopf_tc):
    seed = find(hopf_tc, "E4")
    with pytest.raises(ConfigError):
        continue_branch(hopf_tc, "q9", (0.0, 1.0), seed)


def test_seed_outside_range(hopf_tc):
    seed = find(hopf_tc, "E4")
    with pytest.raises(ConfigError):
        continue_branch(hopf_tc, "k1", (2.0, 3.0), seed)


def test_check_requires_free_and_range(hopf_tc, quiet_ctx):
    with pytest.raises(ConfigError):
        continuation.check(hopf_tc, {"action": "continue1", "range": [0, 1]}, quiet_ctx)
    with pytest.raises(ConfigError):
        continuation.check(hopf_tc, {"action": "continue1", "free": "k1", "range": [0]}, quiet_ctx)
