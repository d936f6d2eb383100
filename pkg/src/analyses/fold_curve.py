# src/analyses/fold_curve.py
"""
========== 2-파라미터 fold 곡선 Fold curve ==========

미지수 z = (S, I, P, α, β), 방정식 {G = 0, g = 0}.
g 는 테두리(bordered) 시스템 [[J, b], [cᵀ, 0]] [v; g] = [0; 1] 의 마지막 성분으로,
J 가 특이할 때 정확히 0 이 된다.

- continue_fold_curve : SN 시작점에서 유사 호길이로 fold 곡선 추적
    ψ_ZH   = psi1 (psi2 > 0 일 때만, ω = √psi2)
    ψ_SNTC = I*
- check               : 러너 진입점 (action = "continue2")
====================================================
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.analyses.continuation import (
    FOLD,
    SN,
    SNTC,
    ZH,
    BifurcationPoint,
    Branch,
    BranchPoint,
    bifurcation_row,
    find_seed,
)
from src.analyses.equilibria import Equilibrium, residual_of
from src.analyses.stability import characteristic_coefficients, classify_array, cubic_roots
from src.core.config import DEFAULT_TOLERANCES, RunContext, Tolerances
from src.core.errors import (
    AugmentedSingularError,
    ConfigError,
    FoldTurnError,
    NumericalError,
    SeedResidualError,
)
from src.core.model import PARAM_NAMES, ParamSet, State, jacobian_array, rhs
from src.core.report import fmt, log, print_block

TAG = "FOLD"

BORDER_SEED = 20240611
FD_STEP = 1e-7
COND_LIMIT = 1e12
BOUNDARY_S = 1e-8
SEED_DET_TOL = 1e-6
CORRECTOR_TOL = 1e-11
BISECT_NEWTON_MAX = 20
SPECTRAL_TOL = 1e-6


@dataclass
class _Border:
    b: np.ndarray
    c: np.ndarray

    @classmethod
    def seeded(cls) -> "_Border":
        rng = np.random.default_rng(BORDER_SEED)
        b = rng.standard_normal(3)
        c = rng.standard_normal(3)
        return cls(b / np.linalg.norm(b), c / np.linalg.norm(c))

    @classmethod
    def from_null(cls, J: np.ndarray) -> "_Border":
        U, _, Vt = np.linalg.svd(J)
        return cls(U[:, -1].copy(), Vt[-1].copy())


class _FoldSystem:
    def __init__(self, p: ParamSet, names: Tuple[str, str], border: _Border):
        self.p = p
        self.names = names
        self.border = border

    def params(self, z: np.ndarray) -> ParamSet:
        return self.p.replace(**{self.names[0]: float(z[3]), self.names[1]: float(z[4])})

    def g(self, z: np.ndarray) -> float:
        J = jacobian_array(self.params(z), z[:3])
        M = np.zeros((4, 4))
        M[:3, :3] = J
        M[:3, 3] = self.border.b
        M[3, :3] = self.border.c
        if np.linalg.cond(M) > COND_LIMIT:
            raise AugmentedSingularError(f"[{TAG}] 테두리 행렬 조건수 > {COND_LIMIT:.0e}")
        sol = np.linalg.solve(M, np.array([0.0, 0.0, 0.0, 1.0]))
        return float(sol[3])

    def residual(self, z: np.ndarray) -> np.ndarray:
        return np.append(rhs(self.params(z), z[:3]), self.g(z))

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        cols = []
        for k in range(5):
            h = FD_STEP * max(1.0, abs(z[k]))
            e = np.zeros(5)
            e[k] = h
            cols.append((self.residual(z + e) - self.residual(z - e)) / (2.0 * h))
        return np.column_stack(cols)

    def admissible(self, z: np.ndarray) -> bool:
        if not z[0] > BOUNDARY_S:
            return False
        for k, name in enumerate(self.names):
            v = z[3 + k]
            if name in ("k1", "k2"):
                if v < 0.0:
                    return False
            elif name == "r":
                if not 0.0 < v < 1.0:
                    return False
            elif v <= 0.0:
                return False
        return True


def _tangent(Fz: np.ndarray, prev: Optional[np.ndarray]) -> np.ndarray:
    if prev is None:
        _, _, vt = np.linalg.svd(Fz)
        t = vt[-1]
    else:
        rhs_vec = np.zeros(5)
        rhs_vec[-1] = 1.0
        t = np.linalg.solve(np.vstack([Fz, prev]), rhs_vec)
    t = t / np.linalg.norm(t)
    if prev is not None and float(np.dot(t, prev)) < 0.0:
        t = -t
    return t


def _correct(sys_: _FoldSystem, z_pred: np.ndarray, t: np.ndarray, max_iter: int) -> Tuple[Optional[np.ndarray], int]:
    z = z_pred.copy()
    for it in range(1, max_iter + 1):
        if not sys_.admissible(z):
            return None, it
        H = np.append(sys_.residual(z), float(np.dot(t, z - z_pred)))
        try:
            dz = np.linalg.solve(np.vstack([sys_.jacobian(z), t]), -H)
        except np.linalg.LinAlgError:
            return None, it
        z = z + dz
        if not np.all(np.isfinite(z)):
            return None, it
        if float(np.max(np.abs(dz))) <= 1e-10 * max(1.0, float(np.max(np.abs(z)))):
            break
    if sys_.admissible(z) and float(np.max(np.abs(sys_.residual(z)))) <= CORRECTOR_TOL:
        return z, it
    return None, max_iter


def _tests(sys_: _FoldSystem, z: np.ndarray) -> Dict[str, float]:
    psi = characteristic_coefficients(jacobian_array(sys_.params(z), z[:3]))
    # psi2 <= 0 이면 허수 쌍이 아니므로 ZH 검사 대상이 아님
    return {ZH: psi[0] if psi[1] > 0.0 else float("nan"), SNTC: float(z[1])}


def _point(sys_: _FoldSystem, z: np.ndarray, tol: Tolerances) -> BranchPoint:
    ps = sys_.params(z)
    y = z[:3]
    eq = Equilibrium(kind="E4" if y[1] > 0.0 else FOLD, location=State.of(y), residual=residual_of(ps, y))
    rep = classify_array(ps, y, None, tol.tol_marginal, check_theorem=False)
    return BranchPoint({sys_.names[0]: float(z[3]), sys_.names[1]: float(z[4])}, eq, rep, _tests(sys_, z))


def _bisect(sys_: _FoldSystem, z0: np.ndarray, t0: np.ndarray, ds: float,
            func: Callable[[np.ndarray], float], tol: Tolerances) -> Optional[np.ndarray]:
    def at(s: float) -> Optional[np.ndarray]:
        try:
            z, _ = _correct(sys_, z0 + s * t0, t0, BISECT_NEWTON_MAX)
        except AugmentedSingularError:
            return None
        return z

    lo, hi = 0.0, ds
    f_lo = func(z0)
    best = at(hi)
    if best is None:
        return None
    while hi - lo > tol.bisect_tol:
        mid = 0.5 * (lo + hi)
        z_mid = at(mid)
        if z_mid is None:
            break
        f_mid = func(z_mid)
        if not np.isfinite(f_mid):
            break
        if f_mid == 0.0:
            return z_mid
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi, best = mid, z_mid
    return best


def _bif(sys_: _FoldSystem, kind: str, z: np.ndarray) -> BifurcationPoint:
    ps = sys_.params(z)
    J = jacobian_array(ps, z[:3])
    psi = characteristic_coefficients(J)
    eigs = list(cubic_roots(*psi))
    diag: Dict[str, Any] = {"eigenvalues": eigs, "det": float(np.linalg.det(J))}
    if kind == ZH:
        diag["omega"] = float(np.sqrt(max(psi[1], 0.0)))
        diag["pair"] = [ev for ev in eigs if abs(ev.imag) > 0.0]
    return BifurcationPoint(kind, {sys_.names[0]: float(z[3]), sys_.names[1]: float(z[4])},
                            State.of(z[:3]), diag)


def _zh_signature(b: BifurcationPoint) -> bool:
    eigs = b.diagnostics["eigenvalues"]
    real = [ev for ev in eigs if ev.imag == 0.0]
    pair = [ev for ev in eigs if ev.imag != 0.0]
    return (len(real) == 1 and abs(real[0].real) <= SPECTRAL_TOL
            and len(pair) == 2 and all(abs(ev.real) <= SPECTRAL_TOL for ev in pair))


def _trace(sys_: _FoldSystem, z0: np.ndarray, t0: np.ndarray, bounds: Dict[str, Tuple[float, float]],
           tol: Tolerances, max_points: int) -> Tuple[List[BranchPoint], List[BifurcationPoint], bool]:
    z = z0.copy()
    t = t0.copy()
    prev = _point(sys_, z, tol)
    points = [prev]
    bifs: List[BifurcationPoint] = []
    ds = tol.ds_init
    easy = 0
    travelled = 0.0
    closed = False

    while len(points) < max_points:
        try:
            z_new, iters = _correct(sys_, z + ds * t, t, tol.corrector_max)
        except AugmentedSingularError as exc:
            log(TAG, f"{exc} → SVD 영벡터로 테두리 갱신", "WARN")
            sys_.border = _Border.from_null(jacobian_array(sys_.params(z), z[:3]))
            ds = max(tol.ds_min, 0.5 * ds)
            continue
        if z_new is None:
            if ds <= tol.ds_min:
                if not sys_.admissible(z + ds * t):
                    break
                raise FoldTurnError(f"[{TAG}] {fmt(tuple(z[3:]), 6)} 에서 fold 곡선 보정 실패")
            ds = max(tol.ds_min, 0.5 * ds)
            easy = 0
            continue

        cur = _point(sys_, z_new, tol)
        for kind in (ZH, SNTC):
            a, b = prev.tests[kind], cur.tests[kind]
            if np.isfinite(a) and np.isfinite(b) and a * b < 0.0:
                zb = _bisect(sys_, z, t, ds, lambda w, k=kind: _tests(sys_, w)[k], tol)
                if zb is None:
                    continue
                bp = _bif(sys_, kind, zb)
                if kind == ZH and not _zh_signature(bp):
                    log(TAG, f"ψ_ZH 영점 {fmt(bp.param_values, 6)} 의 스펙트럼이 ZH 가 아님", "DEBUG")
                    continue
                bifs.append(bp)

        out = any(not (bounds[n][0] <= z_new[3 + k] <= bounds[n][1])
                  for k, n in enumerate(sys_.names) if n in bounds)
        if out:
            break
        points.append(cur)
        travelled += float(np.linalg.norm(z_new - z))
        z = z_new
        prev = cur
        if travelled > 20.0 * tol.ds_max and float(np.linalg.norm(z - z0)) < 2.0 * ds:
            closed = True
            log(TAG, "fold 곡선이 시작점으로 닫힘", "DEBUG")
            break
        try:
            t = _tangent(sys_.jacobian(z), t)
        except (np.linalg.LinAlgError, AugmentedSingularError):
            sys_.border = _Border.from_null(jacobian_array(sys_.params(z), z[:3]))
            t = _tangent(sys_.jacobian(z), t)
        easy = easy + 1 if iters <= 3 else 0
        if easy >= 2:
            ds = min(tol.ds_max, 1.3 * ds)
            easy = 0
    return points, bifs, closed


def continue_fold_curve(p: ParamSet, free: Sequence[str], seed: BifurcationPoint,
                        bounds: Optional[Dict[str, Tuple[float, float]]] = None,
                        tol: Tolerances = DEFAULT_TOLERANCES,
                        max_points: Optional[int] = None) -> Branch:
    """
    SN 점 seed 에서 (free[0], free[1]) 평면의 fold 곡선을 양방향으로 추적한다.
    곡선이 닫히면 한 방향만으로 끝낸다.
    """
    if seed.kind != SN:
        raise ConfigError(f"[{TAG}] fold 곡선의 시작점은 SN 이어야 합니다 (받은 값: {seed.kind})")
    names = (str(free[0]), str(free[1]))
    for n in names:
        if n not in PARAM_NAMES:
            raise ConfigError(f"[{TAG}] 알 수 없는 자유 파라미터: {n}")
    ps = p.replace(**seed.param_values)
    z0 = np.concatenate([seed.location.array(), [ps.get(names[0]), ps.get(names[1])]])
    sys_ = _FoldSystem(ps, names, _Border.seeded())

    res = float(np.max(np.abs(rhs(ps, z0[:3]))))
    det = abs(float(np.linalg.det(jacobian_array(ps, z0[:3]))))
    if res > tol.residual or det > SEED_DET_TOL:
        raise SeedResidualError(f"[{TAG}] SN 시작점 잔차 {res:.2e}, |det J| {det:.2e}")
    try:
        sys_.g(z0)
    except AugmentedSingularError:
        log(TAG, "초기 테두리 벡터가 특이 → SVD 영벡터로 교체", "WARN")
        sys_.border = _Border.from_null(jacobian_array(ps, z0[:3]))

    # 시작점을 확장계 위로 보정 (g = 0 을 함께 만족)
    t_base = _tangent(sys_.jacobian(z0), None)
    z_fix, _ = _correct(sys_, z0, t_base, BISECT_NEWTON_MAX)
    if z_fix is not None:
        z0 = z_fix
    bounds = dict(bounds or {})
    budget = max_points or tol.max_points

    fwd, f_bifs, closed = _trace(sys_, z0, t_base, bounds, tol, budget)
    points = list(fwd)
    bifs = list(f_bifs)
    if not closed:
        back, b_bifs, _ = _trace(sys_, z0, -t_base, bounds, tol, budget)
        points = list(reversed(back[1:])) + points
        bifs = b_bifs + bifs

    uniq: List[BifurcationPoint] = []
    for b in bifs:
        if not any(b.kind == o.kind and all(abs(b.param_values[k] - o.param_values[k]) < 1e-6
                                            for k in b.param_values) for o in uniq):
            uniq.append(b)
    return Branch(names, tuple(points), tuple(uniq), FOLD)


# =====================================================================
# 엔트리 포인트
# =====================================================================
def _sn_seed(params: ParamSet, step: Dict[str, Any], tol: Tolerances) -> Tuple[ParamSet, BifurcationPoint]:
    """시나리오의 seed 블록: 1-파라미터 연속으로 SN 을 먼저 찾는다."""
    from src.analyses.continuation import continue_branch

    seed = step.get("seed") or {}
    free1 = seed.get("free")
    lam_range = tuple(float(v) for v in seed.get("range", ()))
    if not isinstance(free1, str) or len(lam_range) != 2:
        raise ConfigError(f"[{TAG}] continue2 의 seed 에는 free 와 range 가 필요합니다")
    near = tuple(seed["seed_state"]) if seed.get("seed_state") else None
    ps, eq = find_seed(params, free1, lam_range, "E4", near)
    branch = continue_branch(ps, free1, lam_range, eq, tol, compute_l1=False)
    sns = branch.of_kind(SN)
    if not sns:
        raise NumericalError(f"[{TAG}] {free1} ∈ {lam_range} 에서 SN 점을 찾지 못함")
    target = seed.get("near_value")
    sn = sns[0] if target is None else min(sns, key=lambda b: abs(b.param_values[free1] - float(target)))
    return params, sn


def check(params: ParamSet, step: Dict[str, Any], ctx: RunContext) -> Dict[str, Any]:
    from src.core import export

    free = step.get("free")
    if not (isinstance(free, list) and len(free) == 2):
        raise ConfigError(f"[{TAG}] continue2 에는 자유 파라미터 두 개 'free' 가 필요합니다")
    base, sn = _sn_seed(params, step, ctx.tol)
    bounds = {k: (float(v[0]), float(v[1])) for k, v in (step.get("bounds") or {}).items()}
    curve = continue_fold_curve(base, free, sn, bounds, ctx.tol, step.get("max_points"))

    files: List[str] = []
    path = ctx.path(f"fold_{free[0]}_{free[1]}")
    if path:
        export.write_branch(path, curve, ctx.fmt)
        files.append(path)

    if not ctx.quiet:
        print_block(TAG, "continue2", "PASS",
                    reason=f"{len(curve.points)}개 점, 분기점 {len(curve.bif_points)}개",
                    details={"seed": f"SN {fmt(sn.param_values, 6)}"},
                    evidence=[f"{b.kind} {fmt(b.param_values, 6)} {fmt(b.location.as_tuple(), 5)}"
                              + (f" ω={b.diagnostics['omega']:.4f}" if "omega" in b.diagnostics else "")
                              for b in curve.bif_points])
    return {
        "action": "continue2",
        "status": "PASS",
        "bifurcations": [bifurcation_row(b) for b in curve.bif_points],
        "metrics": {"points": float(len(curve.points))},
        "files": files,
        "_branches": [curve],
    }
