# src/analyses/lyapunov.py
"""
========== 제1 랴푸노프 계수 Lyapunov coefficient ==========

- first_lyapunov_coefficient : Hopf 점에서 l1 (음수면 초임계, 양수면 아임계)
+ bilinear / cubic_diag      : 벡터장의 2/3차 방향 미분 (중심차분, 텐서를 만들지 않음)

l1 = 1/(2ω) Re[ <p, C(q,q,q̄)> - 2<p, B(q, A⁻¹B(q,q̄))> + <p, B(q̄, (2iω - A)⁻¹B(q,q))> ]
Aq = iωq, Aᵀp = -iωp, <p,q> = 1, <q,q> = 1.
============================================================
"""
from __future__ import annotations

from typing import Any, Callable, Optional

import numpy as np

from src.core.errors import DegenerateHopfError, NumericalError
from src.core.model import ParamSet, jacobian_array, rhs

TAG = "LYAPUNOV"

DEGENERATE_L1 = 1e-10
STEP = 1e-4
# 3차 차분은 반올림 오차가 h^-3 로 커져 2차 차분보다 큰 스텝을 쓴다
THIRD_ORDER_FACTOR = 10.0

Field = Callable[[np.ndarray], np.ndarray]


def _second(F: Field, x0: np.ndarray, d: np.ndarray, h: float) -> np.ndarray:
    """B(d, d)."""
    return (F(x0 + h * d) - 2.0 * F(x0) + F(x0 - h * d)) / (h * h)


def _third(F: Field, x0: np.ndarray, d: np.ndarray, h: float) -> np.ndarray:
    """C(d, d, d)."""
    return (F(x0 + 2.0 * h * d) - 2.0 * F(x0 + h * d) + 2.0 * F(x0 - h * d) - F(x0 - 2.0 * h * d)) / (2.0 * h ** 3)


def bilinear(F: Field, x0: np.ndarray, u: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    """복소 벡터에 대한 B(u, v), 실수 대칭형 B(a, b) = [b(a+b) - b(a-b)]/4 로 분해."""
    def real_b(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return (_second(F, x0, a + b, h) - _second(F, x0, a - b, h)) / 4.0

    ur, ui = np.real(u), np.imag(u)
    vr, vi = np.real(v), np.imag(v)
    re = real_b(ur, vr) - real_b(ui, vi)
    im = real_b(ur, vi) + real_b(ui, vr)
    return re + 1j * im


def cubic_diag(F: Field, x0: np.ndarray, q: np.ndarray, h: float) -> np.ndarray:
    """C(q, q, q̄), q = u + iv: C(u,u,u) + C(u,v,v) + i[C(u,u,v) + C(v,v,v)]."""
    u, v = np.real(q), np.imag(q)
    cu = _third(F, x0, u, h)
    cv = _third(F, x0, v, h)
    cp = _third(F, x0, u + v, h)
    cm = _third(F, x0, u - v, h)
    c_uuv = (cp - cm - 2.0 * cv) / 6.0
    c_uvv = (cp + cm - 2.0 * cu) / 6.0
    return (cu + c_uvv) + 1j * (c_uuv + cv)


def _eigvec(M: np.ndarray, target: complex) -> np.ndarray:
    vals, vecs = np.linalg.eig(M)
    k = int(np.argmin(np.abs(vals - target)))
    return vecs[:, k]


def first_lyapunov_coefficient(p: ParamSet, hopf: Any, field: Optional[Field] = None,
                               jac: Optional[np.ndarray] = None) -> float:
    """
    hopf 는 BifurcationPoint (param_values, location). field 를 주면 그 벡터장으로 계산
    (시간 역전 검증 등); 이때 jac 를 함께 주지 않으면 중심차분 야코비안을 쓴다.
    """
    ps = p.replace(**hopf.param_values) if hopf.param_values else p
    x0 = hopf.location.array()
    F: Field = field or (lambda x: rhs(ps, x))
    h = STEP * max(1.0, float(np.linalg.norm(x0)))

    if jac is not None:
        A = np.asarray(jac, dtype=float)
    elif field is None:
        A = jacobian_array(ps, x0)
    else:
        A = np.column_stack([(F(x0 + h * e) - F(x0 - h * e)) / (2.0 * h) for e in np.eye(3)])

    vals = np.linalg.eigvals(A)
    pair = [v for v in vals if v.imag > 0.0]
    if not pair:
        raise NumericalError(f"[{TAG}] 허수 고유값 쌍이 없어 l1 을 계산할 수 없습니다")
    lam = min(pair, key=lambda v: abs(v.real))
    omega = float(lam.imag)

    q = _eigvec(A, 1j * omega)
    q = q / np.linalg.norm(q)
    pv = _eigvec(A.T, -1j * omega)
    pv = pv / np.conj(np.vdot(pv, q))  # np.vdot(pv, q) = Σ conj(pv) q

    b_qqbar = bilinear(F, x0, q, np.conj(q), h)
    b_qq = bilinear(F, x0, q, q, h)
    h11 = np.linalg.solve(A, b_qqbar)
    h20 = np.linalg.solve(2j * omega * np.eye(3) - A, b_qq)
    c = cubic_diag(F, x0, q, THIRD_ORDER_FACTOR * h)

    total = (np.vdot(pv, c)
             - 2.0 * np.vdot(pv, bilinear(F, x0, q, h11, h))
             + np.vdot(pv, bilinear(F, x0, np.conj(q), h20, h)))
    l1 = float(np.real(total)) / (2.0 * omega)
    if abs(l1) < DEGENERATE_L1:
        raise DegenerateHopfError(f"[{TAG}] |l1| = {abs(l1):.2e} < {DEGENERATE_L1:.0e} (Bautin 가능성)")
    return l1
