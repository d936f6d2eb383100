# src/analyses/equilibria.py
"""
========== 평형점 Equilibria ==========

| 경계 평형점 | Boundary equilibria |
- equilibrium_E1      : 감수성 먹이만 존재 (S1, 0, 0)
- equilibrium_E2      : 포식자 없음 (S2, I2, 0)
- equilibrium_E3      : 감염 먹이 없음 (S3, 0, P3), P3 는 이차식의 양의 근

| 공존 평형점 | Interior equilibrium |
- equilibrium_E4      : I* 에 대한 스칼라 축약 → 구간 분할 + 이분법 → 3차원 뉴턴 보정
+ e4_reduction        : 축약 함수 F(I*) (S-등경선 잔차)
+ scan_e4_sign_changes: 격자 위 F 부호 변화 위치 (근 개수 오라클)
+ newton_polish       : 해석적 야코비안을 쓰는 감쇠 뉴턴
+ all_equilibria      : 존재하는 E1..E4 전부

- check               : 러너 진입점 (action = "equilibria")
=======================================
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.core.config import DEFAULT_TOLERANCES, RunContext
from src.core.errors import (
    ConfigError,
    InfeasibleError,
    NoInteriorEquilibriumError,
    NoPositiveRootError,
    NumericalError,
)
from src.core.model import ParamSet, State, jacobian_array, rhs, spow
from src.core.report import fmt, log, print_block

TAG = "EQUILIBRIA"

KINDS = ("E1", "E2", "E3", "E4")

E4_SUBINTERVALS = 512
BISECT_TOL = 1e-13
DEDUP_TOL = 1e-8


@dataclass(frozen=True)
class Equilibrium:
    kind: str
    location: State
    residual: float
    feasible: bool = True
    # 이차식 근의 부호 가지: "+" 는 근의 공식의 +√ 가지, "-" 는 반대 가지, None 은 닫힌 형태
    root: Optional[str] = None

    def array(self) -> np.ndarray:
        return self.location.array()

    def as_row(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "S": self.location.S,
            "I": self.location.I,
            "P": self.location.P,
            "residual": self.residual,
            "feasible": self.feasible,
            "root": self.root or "",
        }


def residual_of(p: ParamSet, y: np.ndarray) -> float:
    return float(np.max(np.abs(rhs(p, y))))


def _make(p: ParamSet, kind: str, y: np.ndarray, root: Optional[str] = None) -> Equilibrium:
    y = np.asarray(y, dtype=float)
    return Equilibrium(kind=kind, location=State.of(y), residual=residual_of(p, y), root=root)


# =====================================================================
# 뉴턴 보정
# =====================================================================
def newton_polish(p: ParamSet, y0: np.ndarray, max_iter: int = DEFAULT_TOLERANCES.newton_max,
                  tol: float = 1e-14, free: Optional[np.ndarray] = None) -> np.ndarray:
    """
    G(y) = 0 감쇠 뉴턴. free 가 주어지면 True 인 성분만 갱신 (경계 평형점의 0 성분 고정).
    잔차가 줄지 않으면 스텝을 반으로 줄이고, 더 이상 줄지 않으면 현재 값을 돌려준다.
    """
    y = np.array(y0, dtype=float)
    mask = np.ones(3, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    idx = np.flatnonzero(mask)
    g = rhs(p, y)
    res = float(np.max(np.abs(g)))
    for _ in range(max_iter):
        if res <= tol:
            break
        J = jacobian_array(p, y)
        try:
            step = np.linalg.solve(J[np.ix_(idx, idx)], -g[idx])
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        improved = False
        while lam > 1e-6:
            trial = y.copy()
            trial[idx] += lam * step
            if trial[0] > 0.0:
                g_t = rhs(p, trial)
                res_t = float(np.max(np.abs(g_t)))
                if res_t < res:
                    y, g, res = trial, g_t, res_t
                    improved = True
                    break
            lam *= 0.5
        if not improved:
            break
    return y


# =====================================================================
# E1, E2
# =====================================================================
def equilibrium_E1(p: ParamSet) -> Equilibrium:
    if not p.b0 > p.a0:
        raise InfeasibleError(f"[{TAG}] E1 존재 조건 b0 > a0 불만족 (b0={p.b0}, a0={p.a0})")
    S1 = p.K * (1.0 - p.a0 / p.b0)
    return _make(p, "E1", np.array([S1, 0.0, 0.0]))


def e1_eigenvalues(p: ParamSet) -> Tuple[float, float, float]:
    """E1 에서의 닫힌 형태 고유값 (삼각 야코비안의 대각)."""
    S1 = p.K - p.a0 * p.K / p.b0
    return (p.a0 - p.b0,
            p.e0 * p.K * (1.0 - p.a0 / p.b0) - p.a1,
            p.d2 * spow(S1, p.r) - p.a2)


def equilibrium_E2(p: ParamSet) -> Equilibrium:
    if not p.a0 < p.b0 * (1.0 - p.a1 / (p.e0 * p.K)):
        raise InfeasibleError(
            f"[{TAG}] E2 존재 조건 a0 < b0(1 - a1/(e0 K)) 불만족")
    S2 = p.a1 / p.e0
    I2 = (p.e0 * p.K * (p.b0 - p.a0) - p.a1 * p.b0) / (p.e0 * (p.b0 + p.e0 * p.K))
    return _make(p, "E2", np.array([S2, I2, 0.0]))


# =====================================================================
# E3
# =====================================================================
def e3_susceptible(p: ParamSet) -> float:
    return (p.a2 / p.d2) ** (1.0 / p.r)


def e3_coefficients(p: ParamSet) -> Tuple[float, float, float]:
    """h1 P^2 + h2 P + h3 = 0 의 계수."""
    S3 = e3_susceptible(p)
    s_rm1 = S3 ** (p.r - 1.0)
    h1 = -p.k1 * p.d0 * s_rm1
    h2 = -p.d0 * s_rm1 - p.a0 * p.k1
    h3 = p.b0 * (1.0 - S3 / p.K) - p.a0
    return h1, h2, h3


def _quadratic_roots(a: float, b: float, c: float) -> List[Tuple[float, str]]:
    """a x^2 + b x + c = 0 의 실근과 (+√ / -√) 가지 표식. a == 0 이면 일차식."""
    if a == 0.0:
        if b == 0.0:
            return []
        return [(-c / b, "+")]
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return []
    sq = math.sqrt(disc)
    # 소거 오차를 피하는 형태: q = -(b + sign(b) sq)/2
    q = -0.5 * (b + math.copysign(sq, b))
    roots: List[Tuple[float, str]] = []
    if q != 0.0:
        x_q = q / a
        x_c = c / q
        # q/a 는 b >= 0 이면 (-b - sq)/(2a), 아니면 (-b + sq)/(2a)
        roots.append((x_q, "-" if b >= 0.0 else "+"))
        roots.append((x_c, "+" if b >= 0.0 else "-"))
    else:
        roots.append((0.0, "+"))
    return roots


def equilibrium_E3(p: ParamSet) -> List[Equilibrium]:
    S3 = e3_susceptible(p)
    h1, h2, h3 = e3_coefficients(p)
    out: List[Equilibrium] = []
    for P3, branch in _quadratic_roots(h1, h2, h3):
        if P3 > 0.0 and math.isfinite(P3):
            if any(abs(e.location.P - P3) < DEDUP_TOL for e in out):
                continue
            y = newton_polish(p, np.array([S3, 0.0, P3]), free=np.array([True, False, True]))
            out.append(_make(p, "E3", y, root=branch))
    if not out:
        raise NoPositiveRootError(f"[{TAG}] E3 의 P3 양의 근이 없습니다 (h = {h1:.4g}, {h2:.4g}, {h3:.4g})")
    out.sort(key=lambda e: e.location.P)
    return out


# =====================================================================
# E4
# =====================================================================
def e4_profile(p: ParamSet, I: float) -> Optional[Tuple[float, float]]:
    """I* 후보에 대해 포식자 등경선에서 S*, 감염 등경선의 양의 근에서 P* 를 얻는다."""
    base = (p.a2 - p.d3 * I) / p.d2
    if base <= 0.0:
        return None
    S = base ** (1.0 / p.r)
    w1 = p.d1 * p.k2
    w2 = p.d1 + p.a1 * p.k2
    w3 = p.a1 - p.e0 * S
    if w3 >= 0.0:
        return None
    if w1 == 0.0:
        P = -w3 / w2
    else:
        disc = w2 * w2 - 4.0 * w1 * w3
        P = -2.0 * w3 / (w2 + math.sqrt(disc))
    if not P > 0.0:
        return None
    return S, P


def e4_reduction(p: ParamSet, I: float) -> float:
    """S-등경선 잔차. 정의되지 않는 I* 에서는 NaN."""
    prof = e4_profile(p, I)
    if prof is None:
        return float("nan")
    S, P = prof
    return (p.b0 / (1.0 + p.k1 * P) * (1.0 - (S + I) / p.K)
            - p.a0
            - p.d0 * spow(S, p.r) / S * P
            - p.e0 * I / (1.0 + p.k2 * P))


def e4_interval(p: ParamSet) -> Tuple[float, float]:
    upper = p.a2 / p.d3
    eps = 1e-9 * upper
    return eps, upper - eps


def scan_e4_sign_changes(p: ParamSet, n: int = 10_000) -> List[Tuple[float, float]]:
    """격자 n 점 위에서 F 부호가 바뀌는 구간 목록 (오라클/브래킷 공용)."""
    lo, hi = e4_interval(p)
    grid = np.linspace(lo, hi, n)
    vals = np.array([e4_reduction(p, float(I)) for I in grid])
    out: List[Tuple[float, float]] = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if not (math.isfinite(fa) and math.isfinite(fb)):
            continue
        if fa == 0.0 or fa * fb < 0.0:
            out.append((float(a), float(b)))
    return out


def _bisect_e4(p: ParamSet, a: float, b: float) -> float:
    fa = e4_reduction(p, a)
    if fa == 0.0:
        return a
    while b - a > BISECT_TOL:
        m = 0.5 * (a + b)
        fm = e4_reduction(p, m)
        if not math.isfinite(fm):
            break
        if fm == 0.0:
            return m
        if (fm < 0.0) == (fa < 0.0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def equilibrium_E4(p: ParamSet, subintervals: int = E4_SUBINTERVALS,
                   residual_tol: float = DEFAULT_TOLERANCES.residual) -> List[Equilibrium]:
    brackets = scan_e4_sign_changes(p, subintervals + 1)
    if not brackets:
        raise NoInteriorEquilibriumError(f"[{TAG}] E4 축약식의 부호 변화가 없습니다")

    found: List[Equilibrium] = []
    for a, b in brackets:
        I = _bisect_e4(p, a, b)
        prof = e4_profile(p, I)
        if prof is None:
            continue
        S, P = prof
        y = newton_polish(p, np.array([S, I, P]))
        if not np.all(y > 0.0):
            log(TAG, f"E4 보정 결과가 양의 팔분공간을 벗어나 제외: {fmt(tuple(y))}", "DEBUG")
            continue
        eq = _make(p, "E4", y, root="+")
        if eq.residual > residual_tol:
            log(TAG, f"E4 후보 잔차 {eq.residual:.2e} > {residual_tol:.0e}, 제외", "DEBUG")
            continue
        if any(np.max(np.abs(eq.array() - e.array())) < DEDUP_TOL for e in found):
            continue
        found.append(eq)

    if not found:
        raise NoInteriorEquilibriumError(f"[{TAG}] E4 후보가 잔차 조건을 통과하지 못했습니다")
    found.sort(key=lambda e: e.location.I)
    return found


# =====================================================================
# 전체
# =====================================================================
def all_equilibria(p: ParamSet, kinds: Tuple[str, ...] = KINDS) -> List[Equilibrium]:
    out: List[Equilibrium] = []
    for kind in kinds:
        try:
            if kind == "E1":
                out.append(equilibrium_E1(p))
            elif kind == "E2":
                out.append(equilibrium_E2(p))
            elif kind == "E3":
                out.extend(equilibrium_E3(p))
            elif kind == "E4":
                out.extend(equilibrium_E4(p))
        except NumericalError as e:
            log(TAG, str(e), "DEBUG")
    return out


def find(p: ParamSet, kind: str, near: Optional[Tuple[float, float, float]] = None) -> Equilibrium:
    """kind 평형점 하나. near 가 주어지면 가장 가까운 것."""
    if kind == "E1":
        return equilibrium_E1(p)
    if kind == "E2":
        return equilibrium_E2(p)
    if kind == "E3":
        cands = equilibrium_E3(p)
    elif kind == "E4":
        cands = equilibrium_E4(p)
    else:
        raise ConfigError(f"[{TAG}] 알 수 없는 평형점 종류: {kind}")
    if near is None:
        return cands[0]
    target = np.asarray(near, dtype=float)
    return min(cands, key=lambda e: float(np.max(np.abs(e.array() - target))))


# =====================================================================
# 엔트리 포인트
# =====================================================================
def check(params: ParamSet, step: Dict[str, Any], ctx: RunContext) -> Dict[str, Any]:
    from src.analyses import stability
    from src.core import export

    kinds = tuple(step.get("kinds") or KINDS)
    unknown = [k for k in kinds if k not in KINDS]
    if unknown:
        raise ConfigError(f"[{TAG}] 알 수 없는 평형점 종류: {unknown}")

    eqs = all_equilibria(params, kinds)
    rows: List[Dict[str, Any]] = []
    for e in eqs:
        row = e.as_row()
        try:
            rep = stability.classify(params, e, tol_marginal=ctx.tol.tol_marginal)
            row.update(stability.report_row(rep))
        except NumericalError as exc:
            row["verdict"] = f"error:{type(exc).__name__}"
        rows.append(row)

    files: List[str] = []
    path = ctx.path("equilibria")
    if path:
        export.write_rows(path, rows, ctx.fmt)
        files.append(path)

    if not ctx.quiet:
        print_block(TAG, "equilibria", "PASS" if rows else "WARN",
                    reason=f"{len(rows)}개 평형점",
                    evidence=[f"{r['kind']} ({r['S']:.4f}, {r['I']:.4f}, {r['P']:.4f}) "
                              f"res={r['residual']:.1e} {r.get('verdict', '')}" for r in rows])
    return {
        "action": "equilibria",
        "status": "PASS",
        "equilibria": rows,
        "metrics": {"count": float(len(rows))},
        "files": files,
    }
