# tests/test_dynamics.py
from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from src.analyses import dynamics
from src.analyses.dynamics import (
    BOUND_VIOLATION,
    CONVERGED,
    FTE,
    NONCONVERGENT,
    Event,
    IntegrateOptions,
    check_selective_predation_threshold,
    classify_endpoint,
    integrate,
    outcome_tag,
)
from src.core.config import DEFAULT_TOLERANCES
from src.core.errors import ConfigError, StepSizeUnderflowError
from src.core.model import State
from tests.conftest import random_params

IC = State(0.8, 0.9, 1.1)


def _fte_time(p, tol=DEFAULT_TOLERANCES):
    traj = integrate(p, State(3.0, 2.0, 4.0), 100.0, tol=tol)
    (ev,) = traj.events_of(FTE)
    return ev.time, traj


# -------------------------------
# 유한시간 멸종
# -------------------------------
def test_fte_time_matches_published(fte_params):
    t_star, traj = _fte_time(fte_params.replace(k1=0.2))
    assert t_star == pytest.approx(14.3, abs=0.5)
    assert traj.terminated_by == "fte"
    assert traj.t[-1] == pytest.approx(t_star)
    assert traj.final.S <= DEFAULT_TOLERANCES.eps_ext
    assert outcome_tag(classify_endpoint(fte_params.replace(k1=0.2), traj)) == "fte"


def test_fte_time_insensitive_to_threshold_and_tolerance(fte_params):
    p = fte_params.replace(k1=0.2)
    t_ref, _ = _fte_time(p)
    t_coarse, _ = _fte_time(p, replace(DEFAULT_TOLERANCES, eps_ext=1e-5))
    t_fine, _ = _fte_time(p, replace(DEFAULT_TOLERANCES, eps_ext=1e-8))
    t_tight, _ = _fte_time(p, replace(DEFAULT_TOLERANCES, rtol=1e-10, atol=1e-13))
    assert abs(t_coarse - t_fine) < 0.05
    assert abs(t_tight - t_ref) < 1e-4


def test_samples_are_monotone_and_nonnegative(fte_params):
    _, traj = _fte_time(fte_params.replace(k1=0.2))
    assert np.all(np.diff(traj.t) > 0.0)
    assert np.all(traj.y >= 0.0)


def test_continue_after_fte_pins_susceptibles(fte_params):
    p = fte_params.replace(k1=0.2)
    traj = integrate(p, State(3.0, 2.0, 4.0), 30.0, IntegrateOptions(continue_after_fte=True))
    assert traj.reduced
    (ev,) = traj.events_of(FTE)
    after = traj.t > ev.time
    assert np.all(traj.y[after, 0] == 0.0)
    assert traj.t[-1] == pytest.approx(30.0)
    # S = 0 이면 I 와 P 는 지수적으로 감소
    assert traj.final.I < traj.y[np.argmax(after), 1]


def test_no_fte_without_fear_converges_to_e4(fte_params):
    traj = integrate(fte_params, State(3.0, 2.0, 4.0), 1000.0)
    assert not traj.events_of(FTE)
    ep = classify_endpoint(fte_params, traj)
    assert outcome_tag(ep) == "converged-E4"
    assert ep.detail["location"] == pytest.approx((2.8194, 0.5925, 4.5959), abs=5e-4)


# -------------------------------
# 끝점 분류
# -------------------------------
@pytest.mark.parametrize("k1, tag, expected", [
    (0.0, "converged-E3", (4.06, 0.0, 1.7382)),
    (1.2, "converged-E4", (2.5030, 0.4596, 0.6076)),
])
def test_fear_sweep_endpoints(hopf_tc, k1, tag, expected):
    p = hopf_tc.replace(k1=k1)
    traj = integrate(p, IC, 1000.0)
    ep = classify_endpoint(p, traj)
    assert outcome_tag(ep) == tag
    assert ep.detail["location"] == pytest.approx(expected, abs=5e-4)
    assert not traj.events_of(BOUND_VIOLATION)


@pytest.mark.parametrize("k2, tag", [
    (0.0, "oscillatory"),
    (2.0, "converged-E4"),
    (7.0, "converged-E3"),
])
def test_fear_k2_sweep_outcomes(hopf_tc, k2, tag):
    p = hopf_tc.replace(k1=2.8, k2=k2)
    ep = classify_endpoint(p, integrate(p, IC, 1000.0))
    assert outcome_tag(ep) == tag


def test_oscillatory_coexistence(hopf_tc):
    p = hopf_tc.replace(k1=4.0)
    traj = integrate(p, IC, 500.0)
    ep = classify_endpoint(p, traj)
    assert ep.kind == NONCONVERGENT
    assert outcome_tag(ep) == "oscillatory"
    assert max(ep.detail["amplitude"]) > 1e-2


def test_stationary_origin(hopf_tc):
    p = hopf_tc
    traj = integrate(p, State(0.0, 0.0, 0.0), 50.0)
    assert traj.events == ()
    assert np.all(traj.y == 0.0)
    ep = classify_endpoint(p, traj)
    assert outcome_tag(ep) == "converged-E0"


def test_integrate_rejects_bad_input(hopf_tc):
    with pytest.raises(ConfigError):
        integrate(hopf_tc, State(-0.1, 1.0, 1.0))
    with pytest.raises(ConfigError):
        integrate(hopf_tc, IC, 0.0)


# -------------------------------
# 음수/유계 감시
# -------------------------------
@pytest.mark.slow
def test_bound_monitors_stay_silent_on_bounded_draws():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 100:
        p = random_params(rng)
        if not p.bounded:
            continue
        x0 = State(rng.uniform(0.05, p.K), rng.uniform(0.05, 3.0), rng.uniform(0.05, 3.0))
        try:
            traj = integrate(p, x0, 100.0, IntegrateOptions(stop_on_converged=False))
        except StepSizeUnderflowError:
            continue
        checked += 1
        assert not traj.events_of(BOUND_VIOLATION), p
        assert np.all(traj.y >= -DEFAULT_TOLERANCES.clamp)


def test_boundedness_monitor_fires_past_bound(hopf_tc, monkeypatch):
    # 상한을 초기 총량보다 낮게 잡으면 첫 스텝에서 걸린다
    monkeypatch.setattr(dynamics, "boundedness_bound", lambda p, q0: (0.4, 1.0, 0.5 * q0))
    traj = integrate(hopf_tc, IC, 50.0)
    (ev,) = traj.events_of(BOUND_VIOLATION)
    assert ev.detail["monitor"] == "boundedness"
    assert traj.terminated_by == "bound-violation"
    assert traj.t[-1] == pytest.approx(ev.time)
    assert outcome_tag(classify_endpoint(hopf_tc, traj)) == "bound-violation"


def test_boundedness_monitor_off_when_disabled(hopf_tc, monkeypatch):
    monkeypatch.setattr(dynamics, "boundedness_bound", lambda p, q0: (0.4, 1.0, 0.5 * q0))
    traj = integrate(hopf_tc, IC, 50.0, IntegrateOptions(monitor_bounds=False))
    assert not traj.events_of(BOUND_VIOLATION)


def test_outcome_tags():
    x = State(1.0, 1.0, 1.0)
    assert outcome_tag(Event(CONVERGED, 1.0, x, {"equilibrium": "E3"})) == "converged-E3"
    assert outcome_tag(Event(FTE, 1.0, x)) == "fte"
    assert outcome_tag(Event(NONCONVERGENT, 1.0, x)) == "oscillatory"
    assert outcome_tag(Event("IExtinct", 1.0, x)) == "I-extinct"
    assert outcome_tag(Event(BOUND_VIOLATION, 1.0, x)) == "bound-violation"


# -------------------------------
# 선택적 포식
# -------------------------------
def test_selective_predation_threshold(hopf_tc):
    p = hopf_tc.replace(k1=2.8, k2=2.0)
    threshold, extinct = check_selective_predation_threshold(p.replace(d1=0.8))
    assert threshold == pytest.approx(1.6, abs=1e-12)
    assert not extinct
    assert check_selective_predation_threshold(p.replace(d1=6.0))[1]


def test_selective_predation_clears_infection(hopf_tc):
    p = hopf_tc.replace(k1=2.8, k2=2.0, d1=6.0)
    traj = integrate(p, IC, 1000.0)
    ep = classify_endpoint(p, traj)
    assert outcome_tag(ep) == "converged-E3"
    assert ep.detail["location"] == pytest.approx((4.06, 0.0, 0.4070), abs=5e-4)
