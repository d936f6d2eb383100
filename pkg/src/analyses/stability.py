# src/analyses/stability.py
"""
========== 국소 안정성 Stability ==========

| 특성다항식 | Characteristic polynomial |
- characteristic_coefficients : J → (Ψ1, Ψ2, Ψ3),  λ^3 + Ψ1 λ^2 + Ψ2 λ + Ψ3
- cubic_roots                 : 삼차식 닫힌 해 (Cardano/삼각) + 근당 뉴턴 1회
- routh_hurwitz               : Ψ1 > 0, Ψ3 > 0, Ψ1Ψ2 > Ψ3

| 분류 | Classification |
- classify                    : 고유값 판정 + 평형점 종류별 정리 조건 대조
+ e2_block / e3_block         : A_ij / B_ij 닫힌 형태
+ hopf_transversality         : Hopf 점에서 d(Re λ)/dμ

- check                       : 러너 진입점 (action = "classify")
===========================================
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.config import DEFAULT_TOLERANCES, RunContext
from src.core.errors import NumericalError
from src.core.model import ParamSet, jacobian_array, spow
from src.core.report import fmt, log, print_block

TAG = "STABILITY"

STABLE = "stable"
UNSTABLE = "unstable"
MARGINAL = "marginal"


@dataclass(frozen=True)
class StabilityReport:
    eigenvalues: Tuple[complex, complex, complex]
    psi1: float
    psi2: float
    psi3: float
    verdict: str
    margin: float
    kind: Optional[str] = None
    conditions: Dict[str, float] = field(default_factory=dict)
    theorem_stable: Optional[bool] = None
    agrees: Optional[bool] = None

    @property
    def max_real(self) -> float:
        return max(ev.real for ev in self.eigenvalues)

    @property
    def stable(self) -> bool:
        return self.verdict == STABLE


# =====================================================================
# 특성다항식
# =====================================================================
def characteristic_coefficients(J: np.ndarray) -> Tuple[float, float, float]:
    J = np.asarray(J, dtype=float)
    psi1 = -float(np.trace(J))
    psi2 = float(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
                 + J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
                 + J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
    psi3 = -float(np.linalg.det(J))
    return psi1, psi2, psi3


def _poly(a: float, b: float, c: float, lam: complex) -> complex:
    return ((lam + a) * lam + b) * lam + c


def _dpoly(a: float, b: float, lam: complex) -> complex:
    return (3.0 * lam + 2.0 * a) * lam + b


def _polish(a: float, b: float, c: float, lam: complex) -> complex:
    d = _dpoly(a, b, lam)
    if abs(d) < 1e-14:
        return lam
    new = lam - _poly(a, b, c, lam) / d
    return new if abs(_poly(a, b, c, new)) <= abs(_poly(a, b, c, lam)) else lam


def cubic_roots(a: float, b: float, c: float,
                disc_tol: float = DEFAULT_TOLERANCES.disc_tol) -> Tuple[complex, complex, complex]:
    """
    λ^3 + a λ^2 + b λ + c = 0 의 세 근. 판별식 (q/2)^2 + (p/3)^3 > disc_tol 이면
    실근 1개 + 켤레쌍, 아니면 실근 3개.
    """
    shift = a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3

    if disc > disc_tol:
        sq = math.sqrt(disc)
        u = float(np.cbrt(-q / 2.0 + sq))
        v = float(np.cbrt(-q / 2.0 - sq))
        t1 = u + v
        re = -0.5 * t1 - shift
        im = 0.5 * math.sqrt(3.0) * abs(u - v)
        real_root = _polish(a, b, c, complex(t1 - shift, 0.0)).real
        pair = _polish(a, b, c, complex(re, im))
        if pair.imag < 0.0:
            pair = pair.conjugate()
        return (complex(real_root, 0.0), pair, pair.conjugate())

    if p >= 0.0:
        u = float(np.cbrt(-q / 2.0))
        roots = [2.0 * u - shift, -u - shift, -u - shift]
    else:
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = min(1.0, max(-1.0, 3.0 * q / (p * m)))
        theta = math.acos(arg) / 3.0
        roots = [m * math.cos(theta - 2.0 * math.pi * k / 3.0) - shift for k in range(3)]
    polished = sorted((_polish(a, b, c, complex(x, 0.0)).real for x in roots), reverse=True)
    return tuple(complex(x, 0.0) for x in polished)  # type: ignore[return-value]


def eigenvalues(J: np.ndarray, disc_tol: float = DEFAULT_TOLERANCES.disc_tol) -> Tuple[complex, complex, complex]:
    psi1, psi2, psi3 = characteristic_coefficients(J)
    return cubic_roots(psi1, psi2, psi3, disc_tol)


def routh_hurwitz(psi1: float, psi2: float, psi3: float) -> bool:
    return psi1 > 0.0 and psi3 > 0.0 and psi1 * psi2 > psi3


def verdict_of(eigs: Sequence[complex], tol_marginal: float = DEFAULT_TOLERANCES.tol_marginal) -> str:
    top = max(ev.real for ev in eigs)
    if top < -tol_marginal:
        return STABLE
    if abs(top) <= tol_marginal:
        return MARGINAL
    return UNSTABLE


def hopf_transversality(psi: Sequence[float], dpsi: Sequence[float]) -> float:
    """Hopf 점에서 d(Re λ)/dμ = (Ψ3' - Ψ2Ψ1' - Ψ1Ψ2') / (2(Ψ2 + Ψ1^2))."""
    psi1, psi2, _ = psi
    d1, d2, d3 = dpsi
    return (d3 - psi2 * d1 - psi1 * d2) / (2.0 * (psi2 + psi1 * psi1))


# =====================================================================
# 경계 평형점의 블록 성분
# =====================================================================
def e2_block(p: ParamSet) -> Dict[str, float]:
    denom = p.b0 + p.e0 * p.K
    I2 = (p.e0 * p.K * (p.b0 - p.a0) - p.a1 * p.b0) / (p.e0 * denom)
    return {
        "A11": -p.a1 * p.b0 / (p.e0 * p.K),
        "A12": -p.a1 * (p.b0 / (p.e0 * p.K) + 1.0),
        "A21": (p.e0 * p.K * (p.b0 - p.a0) - p.a1 * p.b0) / denom,
        "A33": p.d3 * I2 + p.d2 * spow(p.a1 / p.e0, p.r) - p.a2,
    }


def e3_block(p: ParamSet, S3: float, P3: float) -> Dict[str, float]:
    u1 = 1.0 + p.k1 * P3
    u2 = 1.0 + p.k2 * P3
    Sr = spow(S3, p.r)
    return {
        "B11": p.b0 * (p.K - 2.0 * S3) / (p.K * u1) - p.a0 - p.r * p.d0 * Sr / S3 * P3,
        "B13": p.k1 * p.b0 * S3 * (-p.K + S3) / (p.K * u1 * u1) - p.d0 * Sr,
        "B22": p.e0 * S3 / u2 - p.a1 - p.d1 * P3,
        "B31": p.r * p.d2 * Sr / S3 * P3,
        "B33": -p.a2 + p.d2 * Sr,
    }


def _theorem_conditions(p: ParamSet, kind: Optional[str], loc: np.ndarray,
                        psi: Tuple[float, float, float]) -> Tuple[Dict[str, float], Optional[bool]]:
    if kind == "E1":
        l1, l2, l3 = (p.a0 - p.b0,
                      p.e0 * p.K * (1.0 - p.a0 / p.b0) - p.a1,
                      p.d2 * spow(p.K - p.a0 * p.K / p.b0, p.r) - p.a2)
        conds = {"lambda1": l1, "lambda2": l2, "lambda3": l3}
        return conds, (l1 < 0.0 and l2 < 0.0 and l3 < 0.0)
    if kind == "E2":
        A = e2_block(p)
        prod = A["A12"] * A["A21"]
        if not (A["A12"] < 0.0 and A["A21"] > 0.0):
            log(TAG, f"E2 블록 부호가 예상과 다릅니다: A12={A['A12']:.4g}, A21={A['A21']:.4g}", "WARN")
        conds = dict(A, A12A21=prod)
        return conds, (A["A33"] < 0.0 and A["A11"] < 0.0 and prod < 0.0)
    if kind == "E3":
        B = e3_block(p, float(loc[0]), float(loc[2]))
        det2 = B["B11"] * B["B33"] - B["B13"] * B["B31"]
        conds = dict(B, B11pB33=B["B11"] + B["B33"], B11B33mB13B31=det2)
        return conds, (B["B22"] < 0.0 and B["B11"] + B["B33"] < 0.0 and det2 > 0.0)
    if kind == "E4":
        psi1, psi2, psi3 = psi
        conds = {"psi1": psi1, "psi2": psi2, "psi3": psi3, "psi1psi2mpsi3": psi1 * psi2 - psi3}
        return conds, routh_hurwitz(psi1, psi2, psi3)
    return {}, None


# =====================================================================
# 분류
# =====================================================================
def classify_array(p: ParamSet, y: np.ndarray, kind: Optional[str] = None,
                   tol_marginal: float = DEFAULT_TOLERANCES.tol_marginal,
                   check_theorem: bool = True) -> StabilityReport:
    J = jacobian_array(p, y)
    psi = characteristic_coefficients(J)
    eigs = cubic_roots(*psi)
    verdict = verdict_of(eigs, tol_marginal)
    margin = min(-ev.real for ev in eigs)

    conds: Dict[str, float] = {}
    theorem_stable: Optional[bool] = None
    agrees: Optional[bool] = None
    if check_theorem:
        conds, theorem_stable = _theorem_conditions(p, kind, y, psi)
        if theorem_stable is not None and verdict != MARGINAL:
            agrees = theorem_stable == (verdict == STABLE)
            if not agrees:
                log(TAG, f"{kind} 정리 조건({theorem_stable})과 고유값 판정({verdict})이 다릅니다", "WARN")
    return StabilityReport(
        eigenvalues=eigs, psi1=psi[0], psi2=psi[1], psi3=psi[2],
        verdict=verdict, margin=margin, kind=kind,
        conditions=conds, theorem_stable=theorem_stable, agrees=agrees,
    )


def classify(p: ParamSet, e: Any, tol_marginal: float = DEFAULT_TOLERANCES.tol_marginal) -> StabilityReport:
    """e 는 Equilibrium (kind, location). S = 0 이면 SingularStateError 전파."""
    return classify_array(p, e.location.array(), e.kind, tol_marginal)


def report_row(rep: StabilityReport) -> Dict[str, Any]:
    row: Dict[str, Any] = {
        "verdict": rep.verdict,
        "margin": rep.margin,
        "psi1": rep.psi1,
        "psi2": rep.psi2,
        "psi3": rep.psi3,
    }
    for i, ev in enumerate(rep.eigenvalues, start=1):
        row[f"eig{i}_re"] = ev.real
        row[f"eig{i}_im"] = ev.imag
    if rep.theorem_stable is not None:
        row["theorem_stable"] = rep.theorem_stable
    return row


# =====================================================================
# 엔트리 포인트
# =====================================================================
def check(params: ParamSet, step: Dict[str, Any], ctx: RunContext) -> Dict[str, Any]:
    from src.analyses import equilibria
    from src.core import export

    kinds = tuple(step.get("kinds") or equilibria.KINDS)
    rows: List[Dict[str, Any]] = []
    evidence: List[str] = []
    disagreements = 0
    for e in equilibria.all_equilibria(params, kinds):
        row = e.as_row()
        try:
            rep = classify(params, e, ctx.tol.tol_marginal)
        except NumericalError as exc:
            row["verdict"] = f"error:{type(exc).__name__}"
            rows.append(row)
            continue
        row.update(report_row(rep))
        if rep.agrees is False:
            disagreements += 1
        rows.append(row)
        evidence.append(f"{e.kind} {fmt(e.location.as_tuple(), 5)} → {rep.verdict} "
                        f"λ={fmt(list(rep.eigenvalues), 4)}")

    files: List[str] = []
    path = ctx.path("classify")
    if path:
        export.write_rows(path, rows, ctx.fmt)
        files.append(path)

    status = "PASS" if disagreements == 0 else "WARN"
    if not ctx.quiet:
        print_block(TAG, "classify", status, reason=f"정리 조건 불일치 {disagreements}건", evidence=evidence)
    return {
        "action": "classify",
        "status": status,
        "equilibria": rows,
        "metrics": {"count": float(len(rows)), "disagreements": float(disagreements)},
        "files": files,
    }
