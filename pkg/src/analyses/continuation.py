# src/analyses/continuation.py
"""
========== 1-파라미터 연속법 Continuation ==========

| 타입 | Types |
- BranchPoint       : 분지 위 한 점 (파라미터 값, 평형점, 안정성, 검사함수 값)
- BifurcationPoint  : SN | Hopf | TC | ZH | SNTC
- Branch            : 자유 파라미터, 점 목록, 분기점 목록

| 연산 | Operations |
- continue_branch   : 유사 호길이(pseudo-arclength) 예측-보정 연속 + 검사함수 부호 변화 이분
- find_seed         : 구간을 훑어 시작 평형점 탐색
- switch_at_tc      : E3 분지의 TC 점에서 E4 분지로 갈아타기

검사함수:
  SN : psi3 (E2/E3 분지는 자유 블록의 -det)
  H  : psi1*psi2 - psi3 (psi2 > 0 이고 허수 쌍이 확인될 때만 Hopf)
  TC : E3 분지는 B22 (= J[1,1]), E2 분지는 A33 (= J[2,2]), E4 분지는 I* 의 부호 변화

- check             : 러너 진입점 (action = "continue1")
====================================================
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.analyses import equilibria
from src.analyses.equilibria import Equilibrium, residual_of
from src.analyses.stability import (
    MARGINAL,
    StabilityReport,
    characteristic_coefficients,
    classify_array,
    cubic_roots,
    hopf_transversality,
)
from src.core.config import DEFAULT_TOLERANCES, RunContext, Tolerances
from src.core.errors import (
    ConfigError,
    DegenerateHopfError,
    FoldTurnError,
    NoInteriorEquilibriumError,
    NumericalError,
    SeedResidualError,
)
from src.core.model import PARAM_NAMES, ParamSet, State, jacobian_array, parameter_derivative, rhs
from src.core.report import fmt, log, print_block

TAG = "CONTINUATION"

SN = "SN"
HOPF = "Hopf"
TC = "TC"
ZH = "ZH"
SNTC = "SNTC"
# 2-파라미터 fold 곡선의 Branch.kind
FOLD = "fold"

SPECTRAL_TOL = 1e-6
MIN_IMAG = 1e-4
BOUNDARY_S = 1e-8
EASY_ITERATIONS = 3
GROW = 1.3
SWITCH_OFFSET = 1e-4
CORRECTOR_TOL = 1e-12
BISECT_NEWTON_MAX = 20
SEED_SCAN = 41

# 평형점 종류별 자유 상태 성분 (나머지는 0 으로 고정)
FREE_COMPONENTS = {
    "E2": (0, 1),
    "E3": (0, 2),
    "E4": (0, 1, 2),
}


@dataclass(frozen=True)
class BranchPoint:
    params: Dict[str, float]
    equilibrium: Equilibrium
    report: StabilityReport
    tests: Dict[str, float] = field(default_factory=dict)

    def as_row(self) -> Dict[str, Any]:
        loc = self.equilibrium.location
        row: Dict[str, Any] = dict(self.params)
        row.update({
            "S": loc.S, "I": loc.I, "P": loc.P,
            "psi1": self.report.psi1, "psi2": self.report.psi2, "psi3": self.report.psi3,
            "stable": self.report.stable,
        })
        return row


@dataclass(frozen=True)
class BifurcationPoint:
    kind: str
    param_values: Dict[str, float]
    location: State
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def as_row(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {"kind": self.kind}
        row.update(self.param_values)
        row.update({"S": self.location.S, "I": self.location.I, "P": self.location.P})
        for k, v in self.diagnostics.items():
            if isinstance(v, (list, tuple)):
                row[k] = [complex(x) if isinstance(x, complex) else x for x in v]
            else:
                row[k] = v
        return row


@dataclass(frozen=True)
class Branch:
    free_params: Tuple[str, ...]
    points: Tuple[BranchPoint, ...]
    bif_points: Tuple[BifurcationPoint, ...]
    kind: str = "E4"

    def of_kind(self, kind: str) -> List[BifurcationPoint]:
        return [b for b in self.bif_points if b.kind == kind]


# =====================================================================
# 분지 위 기하 (u = (x_free, λ))
# =====================================================================
class _Equations:
    """자유 상태 성분과 자유 파라미터 하나에 대한 평형 방정식 F(u) = G_free(x, λ)."""

    def __init__(self, p: ParamSet, free: str, kind: str, template: np.ndarray):
        if kind not in FREE_COMPONENTS:
            raise ConfigError(f"[{TAG}] {kind} 분지는 연속하지 않습니다 (E2, E3, E4 만 지원)")
        self.p = p
        self.free = free
        self.kind = kind
        self.idx = np.array(FREE_COMPONENTS[kind])
        self.template = np.where(np.isin(np.arange(3), self.idx), 0.0, np.asarray(template, dtype=float))

    def params(self, lam: float) -> ParamSet:
        return self.p.with_value(self.free, lam)

    def state(self, u: np.ndarray) -> np.ndarray:
        y = self.template.copy()
        y[self.idx] = u[:-1]
        return y

    def pack(self, y: np.ndarray, lam: float) -> np.ndarray:
        return np.append(np.asarray(y, dtype=float)[self.idx], lam)

    def residual(self, u: np.ndarray) -> np.ndarray:
        return rhs(self.params(u[-1]), self.state(u))[self.idx]

    def jacobian(self, u: np.ndarray) -> np.ndarray:
        ps = self.params(u[-1])
        y = self.state(u)
        J = jacobian_array(ps, y)[np.ix_(self.idx, self.idx)]
        g_lam = parameter_derivative(ps, y, self.free)[self.idx]
        return np.column_stack([J, g_lam])

    def admissible(self, u: np.ndarray) -> bool:
        if not u[0] > BOUNDARY_S:
            return False
        if self.free in ("k1", "k2"):
            return u[-1] >= 0.0
        if self.free == "r":
            return 0.0 < u[-1] < 1.0
        return u[-1] > 0.0


def _tangent(Fu: np.ndarray, prev: Optional[np.ndarray]) -> np.ndarray:
    if prev is None:
        _, _, vt = np.linalg.svd(Fu)
        t = vt[-1]
    else:
        M = np.vstack([Fu, prev])
        rhs_vec = np.zeros(M.shape[0])
        rhs_vec[-1] = 1.0
        t = np.linalg.solve(M, rhs_vec)
    t = t / np.linalg.norm(t)
    if prev is not None and float(np.dot(t, prev)) < 0.0:
        t = -t
    return t


def _correct(eqs: _Equations, u_pred: np.ndarray, t: np.ndarray, max_iter: int,
             tol: float = CORRECTOR_TOL) -> Tuple[Optional[np.ndarray], int]:
    """[F(u); t·(u - u_pred)] = 0 뉴턴. (수렴한 u 또는 None, 반복 횟수)."""
    u = u_pred.copy()
    for it in range(1, max_iter + 1):
        if not eqs.admissible(u):
            return None, it
        F = eqs.residual(u)
        H = np.append(F, float(np.dot(t, u - u_pred)))
        try:
            M = np.vstack([eqs.jacobian(u), t])
            du = np.linalg.solve(M, -H)
        except (np.linalg.LinAlgError, NumericalError):
            return None, it
        u = u + du
        if not np.all(np.isfinite(u)):
            return None, it
        if float(np.max(np.abs(du))) <= 1e-11 * max(1.0, float(np.max(np.abs(u)))):
            if eqs.admissible(u) and float(np.max(np.abs(eqs.residual(u)))) <= tol:
                return u, it
    if eqs.admissible(u) and float(np.max(np.abs(eqs.residual(u)))) <= tol:
        return u, max_iter
    return None, max_iter


# =====================================================================
# 검사함수
# =====================================================================
def _tests(eqs: _Equations, u: np.ndarray, rep: StabilityReport) -> Dict[str, float]:
    y = eqs.state(u)
    if eqs.kind == "E4":
        sn = rep.psi3
        tc = float(y[1])
    else:
        J = jacobian_array(eqs.params(u[-1]), y)
        sn = -float(np.linalg.det(J[np.ix_(eqs.idx, eqs.idx)]))
        zero = int(np.setdiff1d(np.arange(3), eqs.idx)[0])
        tc = float(J[zero, zero])
    return {SN: sn, "H": rep.psi1 * rep.psi2 - rep.psi3, TC: tc}


def _report(eqs: _Equations, u: np.ndarray, tol: Tolerances) -> StabilityReport:
    return classify_array(eqs.params(u[-1]), eqs.state(u), eqs.kind, tol.tol_marginal, check_theorem=False)


def _make_point(eqs: _Equations, u: np.ndarray, tol: Tolerances) -> BranchPoint:
    ps = eqs.params(u[-1])
    y = eqs.state(u)
    eq = Equilibrium(kind=eqs.kind, location=State.of(y), residual=residual_of(ps, y))
    rep = _report(eqs, u, tol)
    return BranchPoint({eqs.free: float(u[-1])}, eq, rep, _tests(eqs, u, rep))


# =====================================================================
# 분기점 진단
# =====================================================================
def _null_vectors(J: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    U, _, Vt = np.linalg.svd(J)
    return Vt[-1], U[:, -1]


def sn_diagnostics(p: ParamSet, y: np.ndarray, free: str) -> Dict[str, Any]:
    """SN 점의 횡단성 값: 좌/우 영벡터 w, v 로 wᵀ G_λ 와 wᵀ D²G(v, v)."""
    J = jacobian_array(p, y)
    v, w = _null_vectors(J)
    g_lam = parameter_derivative(p, y, free)
    h = 1e-4 * max(1.0, float(np.max(np.abs(y))))
    d2 = (rhs(p, y + h * v) - 2.0 * rhs(p, y) + rhs(p, y - h * v)) / (h * h)
    return {
        "eigenvalues": list(cubic_roots(*characteristic_coefficients(J))),
        "w_dot_G_lambda": float(np.dot(w, g_lam)),
        "w_dot_D2G_vv": float(np.dot(w, d2)),
    }


def hopf_diagnostics(p: ParamSet, y: np.ndarray, free: str, bif_params: Dict[str, float],
                     compute_l1: bool = True) -> Dict[str, Any]:
    from src.analyses.lyapunov import first_lyapunov_coefficient

    J = jacobian_array(p, y)
    psi = characteristic_coefficients(J)
    eigs = cubic_roots(*psi)
    diag: Dict[str, Any] = {"eigenvalues": list(eigs), "omega": math.sqrt(max(psi[1], 0.0))}

    # 분지를 따라 d(psi)/dμ: x(μ ± δ) 를 dx/dμ = -J⁻¹ G_μ 예측 후 뉴턴 보정
    delta = 1e-6 * max(1.0, abs(p.get(free)))
    try:
        dx = -np.linalg.solve(J, parameter_derivative(p, y, free))
        side = []
        for sgn in (1.0, -1.0):
            ps = p.with_value(free, p.get(free) + sgn * delta)
            ys = equilibria.newton_polish(ps, y + sgn * delta * dx)
            side.append(characteristic_coefficients(jacobian_array(ps, ys)))
        dpsi = [(a - b) / (2.0 * delta) for a, b in zip(side[0], side[1])]
        diag["transversality"] = hopf_transversality(psi, dpsi)
    except (np.linalg.LinAlgError, NumericalError) as exc:
        log(TAG, f"Hopf 횡단성 계산 실패: {exc}", "DEBUG")

    if compute_l1:
        try:
            bif = BifurcationPoint(HOPF, bif_params, State.of(y), diag)
            diag["l1"] = first_lyapunov_coefficient(p, bif)
        except DegenerateHopfError as exc:
            log(TAG, str(exc), "WARN")
    return diag


def _pair_is_imaginary(eigs: Sequence[complex]) -> bool:
    pair = [ev for ev in eigs if abs(ev.imag) > MIN_IMAG]
    return len(pair) == 2 and all(abs(ev.real) <= SPECTRAL_TOL for ev in pair)


# =====================================================================
# 부호 변화 위치 찾기
# =====================================================================
def _bisect_on_step(eqs: _Equations, u0: np.ndarray, t0: np.ndarray, ds: float,
                    func: Callable[[np.ndarray], float], tol: Tolerances) -> Optional[np.ndarray]:
    """u0 에서 t0 방향으로 호길이 s ∈ [0, ds] 위 func 의 영점."""
    def at(s: float) -> Optional[np.ndarray]:
        u, _ = _correct(eqs, u0 + s * t0, t0, BISECT_NEWTON_MAX)
        return u

    lo, hi = 0.0, ds
    f_lo = func(u0)
    u_hi = at(hi)
    if u_hi is None:
        return None
    best = u_hi
    while hi - lo > tol.bisect_tol:
        mid = 0.5 * (lo + hi)
        u_mid = at(mid)
        if u_mid is None:
            break
        f_mid = func(u_mid)
        if f_mid == 0.0:
            return u_mid
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi, best = mid, u_mid
    return best


def _sign_change(a: float, b: float) -> bool:
    return math.isfinite(a) and math.isfinite(b) and a * b < 0.0


def _locate(eqs: _Equations, prev: BranchPoint, cur: BranchPoint, u_prev: np.ndarray,
            t_prev: np.ndarray, ds: float, tol: Tolerances, compute_l1: bool) -> List[BifurcationPoint]:
    found: List[BifurcationPoint] = []
    tc_here = False

    if _sign_change(prev.tests[TC], cur.tests[TC]):
        if eqs.kind == "E4":
            func = lambda u: float(eqs.state(u)[1])
        else:
            func = lambda u: _tests(eqs, u, _report(eqs, u, tol))[TC]
        u = _bisect_on_step(eqs, u_prev, t_prev, ds, func, tol)
        if u is not None:
            tc_here = True
            ps, y = eqs.params(u[-1]), eqs.state(u)
            if eqs.kind == "E4":
                y = y.copy()
                y[1] = max(y[1], 0.0)
            found.append(BifurcationPoint(TC, {eqs.free: float(u[-1])}, State.of(y),
                                          {"eigenvalues": list(cubic_roots(*characteristic_coefficients(
                                              jacobian_array(ps, eqs.state(u)))))}))

    if _sign_change(prev.tests[SN], cur.tests[SN]) and not (tc_here and eqs.kind == "E4"):
        u = _bisect_on_step(eqs, u_prev, t_prev, ds,
                            lambda w: _tests(eqs, w, _report(eqs, w, tol))[SN], tol)
        if u is not None:
            ps, y = eqs.params(u[-1]), eqs.state(u)
            if eqs.kind == "E4" and abs(y[1]) <= SPECTRAL_TOL:
                log(TAG, "I* ≈ 0 에서의 det J = 0 은 TC 로 처리", "DEBUG")
            else:
                found.append(BifurcationPoint(SN, {eqs.free: float(u[-1])}, State.of(y),
                                              sn_diagnostics(ps, y, eqs.free)))

    if _sign_change(prev.tests["H"], cur.tests["H"]):
        u = _bisect_on_step(eqs, u_prev, t_prev, ds,
                            lambda w: _tests(eqs, w, _report(eqs, w, tol))["H"], tol)
        if u is not None:
            ps, y = eqs.params(u[-1]), eqs.state(u)
            rep = classify_array(ps, y, eqs.kind, tol.tol_marginal, check_theorem=False)
            if rep.psi2 > 0.0 and _pair_is_imaginary(rep.eigenvalues):
                found.append(BifurcationPoint(HOPF, {eqs.free: float(u[-1])}, State.of(y),
                                              hopf_diagnostics(ps, y, eqs.free, {eqs.free: float(u[-1])},
                                                               compute_l1)))
            else:
                log(TAG, f"{eqs.free}={u[-1]:.6g} 의 φ_H 영점은 중립 안장점으로 무시", "DEBUG")
    return found


# =====================================================================
# 한 방향 추적
# =====================================================================
def _trace(eqs: _Equations, u0: np.ndarray, t0: np.ndarray, lam_range: Tuple[float, float],
           tol: Tolerances, max_points: int, compute_l1: bool) -> Tuple[List[BranchPoint], List[BifurcationPoint]]:
    lo, hi = lam_range
    u = u0.copy()
    t = t0.copy()
    prev = _make_point(eqs, u, tol)
    points = [prev]
    bifs: List[BifurcationPoint] = []
    ds = tol.ds_init
    easy = 0

    while len(points) < max_points:
        u_new, iters = _correct(eqs, u + ds * t, t, tol.corrector_max)
        if u_new is None:
            if ds <= tol.ds_min:
                if not eqs.admissible(u + ds * t):
                    break
                raise FoldTurnError(
                    f"[{TAG}] {eqs.free}={u[-1]:.6g} 에서 보정기가 최소 스텝 {tol.ds_min:g} 로도 수렴하지 않음")
            ds = max(tol.ds_min, 0.5 * ds)
            easy = 0
            log(TAG, f"스텝 거절 → ds = {ds:.3g}", "DEBUG")
            continue

        cur = _make_point(eqs, u_new, tol)
        flips = prev.report.verdict != cur.report.verdict and MARGINAL not in (prev.report.verdict, cur.report.verdict)
        changes = any(_sign_change(prev.tests[k], cur.tests[k]) for k in (SN, "H", TC))
        if flips and not changes and ds > tol.ds_min:
            ds = max(tol.ds_min, 0.5 * ds)
            log(TAG, "검사함수 영점 없는 안정성 변화 → 스텝 세분", "DEBUG")
            continue

        if changes:
            bifs.extend(b for b in _locate(eqs, prev, cur, u, t, ds, tol, compute_l1)
                        if lo <= b.param_values[eqs.free] <= hi)

        lam = float(u_new[-1])
        if eqs.kind == "E4" and u_new[1] < 0.0:
            break
        if lam < lo or lam > hi:
            break

        points.append(cur)
        try:
            t = _tangent(eqs.jacobian(u_new), t)
        except np.linalg.LinAlgError:
            log(TAG, f"{eqs.free}={lam:.6g} 에서 접선 계산 실패, 추적 종료", "WARN")
            break
        u = u_new
        prev = cur
        easy = easy + 1 if iters <= EASY_ITERATIONS else 0
        if easy >= 2:
            ds = min(tol.ds_max, GROW * ds)
            easy = 0
    return points, bifs


def _dedupe(bifs: List[BifurcationPoint]) -> List[BifurcationPoint]:
    out: List[BifurcationPoint] = []
    for b in bifs:
        dup = any(b.kind == o.kind
                  and all(abs(b.param_values[k] - o.param_values[k]) < 1e-7 for k in b.param_values)
                  for o in out)
        if not dup:
            out.append(b)
    return out


def continue_branch(p: ParamSet, free: str, lam_range: Tuple[float, float], seed: Equilibrium,
                    tol: Tolerances = DEFAULT_TOLERANCES, max_points: Optional[int] = None,
                    directions: Sequence[int] = (1, -1), compute_l1: bool = True) -> Branch:
    """
    seed (p 의 free 값에서의 평형점) 부터 양/음 방향으로 분지를 추적한다.
    범위를 벗어나거나, E4 분지에서 I* < 0, 또는 점 개수 상한에서 멈춘다.
    """
    if free not in PARAM_NAMES:
        raise ConfigError(f"[{TAG}] 알 수 없는 자유 파라미터: {free}")
    lo, hi = float(min(lam_range)), float(max(lam_range))
    lam0 = p.get(free)
    if not lo <= lam0 <= hi:
        raise ConfigError(f"[{TAG}] 시작값 {free}={lam0} 가 범위 [{lo}, {hi}] 밖입니다")
    y0 = seed.array()
    res = residual_of(p, y0)
    if res > tol.residual:
        raise SeedResidualError(f"[{TAG}] 시작점 잔차 {res:.2e} > {tol.residual:.0e}")

    eqs = _Equations(p, free, seed.kind, y0)
    u0 = eqs.pack(y0, lam0)
    t_base = _tangent(eqs.jacobian(u0), None)
    if t_base[-1] < 0.0:
        t_base = -t_base
    budget = max_points or tol.max_points

    halves: Dict[int, Tuple[List[BranchPoint], List[BifurcationPoint]]] = {}
    for d in directions:
        halves[d] = _trace(eqs, u0, d * t_base, (lo, hi), tol, budget, compute_l1)

    points: List[BranchPoint] = []
    bifs: List[BifurcationPoint] = []
    if -1 in halves:
        back, b_bifs = halves[-1]
        points.extend(reversed(back[1:] if 1 in halves else back))
        bifs.extend(b_bifs)
    if 1 in halves:
        fwd, f_bifs = halves[1]
        points.extend(fwd)
        bifs.extend(f_bifs)
    bifs = _dedupe(bifs)
    for b in bifs:
        log(TAG, f"{b.kind} at {fmt(b.param_values, 6)} {fmt(b.location.as_tuple(), 5)}", "DEBUG")
    return Branch((free,), tuple(points), tuple(bifs), seed.kind)


# =====================================================================
# 시작점 / 분지 전환
# =====================================================================
def find_seed(p: ParamSet, free: str, lam_range: Tuple[float, float], kind: str = "E4",
              near: Optional[Tuple[float, float, float]] = None, n: int = SEED_SCAN) -> Tuple[ParamSet, Equilibrium]:
    lo, hi = float(min(lam_range)), float(max(lam_range))
    for lam in np.linspace(lo, hi, n):
        ps = p.with_value(free, float(lam))
        try:
            return ps, equilibria.find(ps, kind, near)
        except NumericalError:
            continue
    raise NoInteriorEquilibriumError(f"[{TAG}] {free} ∈ [{lo}, {hi}] 에서 {kind} 시작점을 찾지 못함")


def switch_at_tc(p: ParamSet, free: str, lam_range: Tuple[float, float], tc: BifurcationPoint,
                 tol: Tolerances = DEFAULT_TOLERANCES, compute_l1: bool = True) -> Branch:
    """E3 분지의 TC 점에서 I > 0 쪽으로 나가는 E4 분지를 추적한다."""
    lam = tc.param_values[free]
    eqs = _Equations(p, free, "E4", tc.location.array())
    u_tc = eqs.pack(tc.location.array(), lam)
    _, _, vt = np.linalg.svd(eqs.jacobian(u_tc))
    n1, n2 = vt[-2], vt[-1]
    # 영공간 안에서 I 성분이 0 인 방향이 E3 분지, 그에 직교하는 방향으로 나간다
    e3_dir = n2[1] * n1 - n1[1] * n2
    e3_dir = e3_dir / np.linalg.norm(e3_dir)
    other = n1 if abs(n1[1]) >= abs(n2[1]) else n2
    v = other - np.dot(other, e3_dir) * e3_dir
    v = v / np.linalg.norm(v)
    if v[1] < 0.0:
        v = -v
    u_start, _ = _correct(eqs, u_tc + SWITCH_OFFSET * v, v, BISECT_NEWTON_MAX)
    if u_start is None:
        raise FoldTurnError(f"[{TAG}] TC {free}={lam:.6g} 에서 E4 분지로 전환 실패")
    t0 = _tangent(eqs.jacobian(u_start), v)
    points, bifs = _trace(eqs, u_start, t0, (min(lam_range), max(lam_range)), tol, tol.max_points, compute_l1)
    # 시작 쪽 TC 는 전환점 자체
    bifs = [b for b in bifs if not (b.kind == TC and abs(b.param_values[free] - lam) < 1e-6)]
    return Branch((free,), tuple(points), tuple(_dedupe(bifs)), "E4")


# =====================================================================
# 엔트리 포인트
# =====================================================================
def _seed_from_step(params: ParamSet, free: str, lam_range: Tuple[float, float],
                    step: Dict[str, Any]) -> Tuple[ParamSet, Equilibrium]:
    kind = step.get("seed_kind", "E4")
    near = tuple(step["seed_state"]) if step.get("seed_state") else None
    if "seed_value" in step:
        ps = params.with_value(free, float(step["seed_value"]))
        return ps, equilibria.find(ps, kind, near)
    return find_seed(params, free, lam_range, kind, near)


def bifurcation_row(b: BifurcationPoint) -> Dict[str, Any]:
    row = {"kind": b.kind, "params": dict(b.param_values),
           "state": list(b.location.as_tuple())}
    for k in ("omega", "l1", "transversality", "w_dot_G_lambda", "w_dot_D2G_vv"):
        if k in b.diagnostics:
            row[k] = b.diagnostics[k]
    if "eigenvalues" in b.diagnostics:
        row["eigenvalues"] = [complex(v) for v in b.diagnostics["eigenvalues"]]
    return row


def check(params: ParamSet, step: Dict[str, Any], ctx: RunContext) -> Dict[str, Any]:
    from src.core import export

    free = step.get("free")
    if not isinstance(free, str):
        raise ConfigError(f"[{TAG}] continue1 에는 자유 파라미터 'free' 가 필요합니다")
    lam_range = tuple(float(v) for v in step.get("range", ()))
    if len(lam_range) != 2:
        raise ConfigError(f"[{TAG}] 'range' 는 [min, max] 여야 합니다")
    ps, seed = _seed_from_step(params, free, lam_range, step)
    compute_l1 = bool(step.get("lyapunov", True))

    branches = [continue_branch(ps, free, lam_range, seed, ctx.tol,
                                step.get("max_points"), compute_l1=compute_l1)]
    if step.get("switch_at_tc") and seed.kind == "E3":
        for tc in branches[0].of_kind(TC):
            try:
                branches.append(switch_at_tc(ps, free, lam_range, tc, ctx.tol, compute_l1))
            except NumericalError as exc:
                log(TAG, f"TC 분지 전환 실패: {exc}", "WARN")

    files: List[str] = []
    for i, br in enumerate(branches):
        path = ctx.path(f"branch_{free}_{br.kind}" + (f"_{i}" if i else ""))
        if path:
            export.write_branch(path, br, ctx.fmt)
            files.append(path)

    bifs = [b for br in branches for b in br.bif_points]
    if not ctx.quiet:
        print_block(TAG, "continue1", "PASS",
                    reason=f"{sum(len(b.points) for b in branches)}개 점, 분기점 {len(bifs)}개",
                    evidence=[f"{b.kind} {free}={b.param_values[free]:.6f} {fmt(b.location.as_tuple(), 5)}"
                              + (f" l1={b.diagnostics['l1']:.4e}" if "l1" in b.diagnostics else "")
                              for b in bifs])
    return {
        "action": "continue1",
        "status": "PASS",
        "bifurcations": [bifurcation_row(b) for b in bifs],
        "metrics": {"points": float(sum(len(b.points) for b in branches)), "branches": float(len(branches))},
        "files": files,
        "_branches": branches,
    }
