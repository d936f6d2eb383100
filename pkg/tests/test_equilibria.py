# tests/test_equilibria.py
from __future__ import annotations

import numpy as np
import pytest

from src.analyses.equilibria import (
    all_equilibria,
    e1_eigenvalues,
    e4_reduction,
    equilibrium_E1,
    equilibrium_E2,
    equilibrium_E3,
    equilibrium_E4,
    find,
    scan_e4_sign_changes,
)
from src.core.errors import ConfigError, InfeasibleError, NoInteriorEquilibriumError, NoPositiveRootError
from src.core.model import rhs


def _close(eq, expected, tol=5e-4):
    return np.max(np.abs(eq.array() - np.asarray(expected))) <= tol


# -------------------------------
# 경계 평형점
# -------------------------------
def test_e1_and_e2_closed_forms(hopf_tc):
    e1 = equilibrium_E1(hopf_tc)
    assert e1.location.as_tuple() == pytest.approx((6.8, 0.0, 0.0))
    e2 = equilibrium_E2(hopf_tc)
    assert e2.location.as_tuple() == pytest.approx((0.8, 2.0, 0.0))
    assert e1.residual < 1e-12 and e2.residual < 1e-12


def test_e1_eigenvalues(hopf_tc):
    l1, l2, l3 = e1_eigenvalues(hopf_tc)
    assert l1 == pytest.approx(-1.7)
    assert l2 == pytest.approx(3.0)
    assert l3 == pytest.approx(0.3478, abs=1e-4)


def test_e1_e2_infeasible(hopf_tc):
    with pytest.raises(InfeasibleError):
        equilibrium_E1(hopf_tc.replace(a0=2.5))
    # a1 이 크면 E2 가 사라진다
    with pytest.raises(InfeasibleError):
        equilibrium_E2(hopf_tc.replace(a1=3.9))


@pytest.mark.parametrize("k1, P3", [(0.0, 1.7382), (2.8, 0.4070), (0.4219, 0.9978)])
def test_e3_predator_level(hopf_tc, k1, P3):
    (e3,) = equilibrium_E3(hopf_tc.replace(k1=k1))
    assert e3.location.S == pytest.approx(4.06, abs=5e-4)
    assert e3.location.I == 0.0
    assert e3.location.P == pytest.approx(P3, abs=5e-4)
    assert e3.residual <= 1e-10


def test_e3_no_positive_root(hopf_tc):
    # S3 > K 이면 h3 < 0 이고 양의 근이 없다
    with pytest.raises(NoPositiveRootError):
        equilibrium_E3(hopf_tc.replace(K=3.0))


# -------------------------------
# 공존 평형점
# -------------------------------
@pytest.mark.parametrize("changes, expected", [
    ({"k1": 1.2}, (2.5030, 0.4596, 0.6076)),
    ({"k1": 4.0}, (1.2898, 0.8830, 0.2102)),
    ({"k1": 2.8, "k2": 0.0}, (1.1172, 0.9516, 0.2265)),
    ({"k1": 2.8, "k2": 2.0}, (2.3524, 0.5080, 0.3816)),
    ({"k1": 2.8, "k2": 2.0, "d1": 0.8}, (2.3492, 0.5091, 0.3758)),
])
def test_e4_matches_published_states(hopf_tc, changes, expected):
    found = equilibrium_E4(hopf_tc.replace(**changes))
    assert any(_close(e, expected) for e in found)
    for e in found:
        assert e.residual <= 1e-10
        assert min(e.location.as_tuple()) > 0.0


def test_e4_fte_parameters(fte_params):
    found = equilibrium_E4(fte_params)
    assert any(_close(e, (2.8194, 0.5925, 4.5959)) for e in found)


def test_e4_count_matches_sign_changes(fear_sn):
    # k1 = 0.1, k2 = 1: SN 안쪽이라 E4 가 두 개
    p = fear_sn
    brackets = scan_e4_sign_changes(p)
    found = equilibrium_E4(p)
    assert len(found) == len(brackets)
    assert len(found) == 2
    for e in found:
        assert abs(e4_reduction(p, e.location.I)) < 1e-8


def test_e4_absent_past_fold(fear_sn):
    # SN (k1* = 0.4181, k2 = 1) 너머에서는 E4 가 없다
    p = fear_sn.replace(k1=1.5)
    with pytest.raises(NoInteriorEquilibriumError):
        equilibrium_E4(p)


def test_all_equilibria_skip_missing(hopf_tc):
    eqs = all_equilibria(hopf_tc.replace(a1=3.9, k1=1.2))
    kinds = [e.kind for e in eqs]
    assert "E2" not in kinds
    assert "E1" in kinds
    for e in eqs:
        assert np.max(np.abs(rhs(hopf_tc.replace(a1=3.9, k1=1.2), e.array()))) <= 1e-10


def test_find_nearest_and_unknown_kind(hopf_tc):
    p = hopf_tc.replace(k1=1.2)
    e = find(p, "E4", near=(2.5, 0.46, 0.6))
    assert _close(e, (2.5030, 0.4596, 0.6076))
    with pytest.raises(ConfigError):
        find(p, "E9")
