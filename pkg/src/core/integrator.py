# src/core/integrator.py
"""
========== 적분기 Integrator ==========

Dormand–Prince 5(4) 임베디드 쌍 (FSAL) + 4차 연속 보간(dense output).

- DenseSegment   : 한 스텝 구간 [t0, t1] 의 보간 다항식
- Dopri5         : 적응 스텝 적분기 (step() 호출마다 수락된 구간 하나)
- solve_fixed    : 고정 스텝 모드 (수렴 차수 검증용)
=======================================
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from src.core.errors import StepSizeUnderflowError

Rhs = Callable[[float, np.ndarray], np.ndarray]

# Butcher 표
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# 5차 - 4차 (7번째 단계는 FSAL 값)
E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# 연속 보간 계수: y(t0 + θh) = y0 + h K^T P [θ, θ^2, θ^3, θ^4]
P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERROR_EXPONENT = -1.0 / 5.0


@dataclass(frozen=True)
class DenseSegment:
    t0: float
    t1: float
    y0: np.ndarray
    Q: np.ndarray

    def __call__(self, t: float) -> np.ndarray:
        h = self.t1 - self.t0
        x = (t - self.t0) / h
        powers = np.cumprod(np.full(4, x))
        return self.y0 + h * (self.Q @ powers)


def rk_step(f: Rhs, t: float, y: np.ndarray, f0: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """한 스텝. (y_new, f_new, K), K 는 7개 단계 기울기."""
    K = np.empty((7, y.size), dtype=float)
    K[0] = f0
    for s in range(1, 6):
        dy = K[:s].T @ A[s] * h
        K[s] = f(t + C[s] * h, y + dy)
    y_new = y + h * (K[:6].T @ B)
    f_new = f(t + h, y_new)
    K[6] = f_new
    return y_new, f_new, K


def _initial_step(f: Rhs, t0: float, y0: np.ndarray, f0: np.ndarray,
                  rtol: float, atol: float, max_step: float) -> float:
    scale = atol + np.abs(y0) * rtol
    d0 = float(np.sqrt(np.mean((y0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
    return min(100.0 * h0, h1, max_step)


class Dopri5:
    """
    적응 스텝 DOPRI5. step() 은 수락된 구간의 DenseSegment 를 돌려주고,
    스텝 크기가 하한(시간 스케일 대비 상대 1e-14) 아래로 떨어지면 StepSizeUnderflowError.
    """

    def __init__(self, f: Rhs, t0: float, y0: np.ndarray, t_end: float,
                 rtol: float = 1e-9, atol: float = 1e-12,
                 max_step: float = math.inf, first_step: Optional[float] = None):
        self.f = f
        self.t = float(t0)
        self.y = np.array(y0, dtype=float)
        self.t_end = float(t_end)
        self.rtol = rtol
        self.atol = atol
        self.max_step = min(max_step, abs(self.t_end - self.t))
        self.fy = f(self.t, self.y)
        self.h = first_step or _initial_step(f, self.t, self.y, self.fy, rtol, atol, self.max_step)
        self.rejected = 0

    @property
    def finished(self) -> bool:
        return self.t >= self.t_end

    def reset(self, y: np.ndarray) -> None:
        """외부에서 상태를 바꾼 뒤 (예: S 를 0 으로 고정) FSAL 값을 다시 계산."""
        self.y = np.array(y, dtype=float)
        self.fy = self.f(self.t, self.y)

    def step(self) -> DenseSegment:
        h_min = 10.0 * np.spacing(max(1.0, abs(self.t)))
        h = min(self.h, self.max_step, self.t_end - self.t)
        while True:
            if h < h_min:
                raise StepSizeUnderflowError(
                    f"[INTEGRATOR] t = {self.t:.6g} 에서 스텝 크기 {h:.3e} 가 하한 {h_min:.3e} 미만")
            y_new, f_new, K = rk_step(self.f, self.t, self.y, self.fy, h)
            scale = self.atol + np.maximum(np.abs(self.y), np.abs(y_new)) * self.rtol
            err_vec = h * (K.T @ E)
            err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
            if not math.isfinite(err):
                h *= MIN_FACTOR
                self.rejected += 1
                continue
            if err <= 1.0:
                factor = MAX_FACTOR if err == 0.0 else min(MAX_FACTOR, SAFETY * err ** ERROR_EXPONENT)
                break
            h *= max(MIN_FACTOR, SAFETY * err ** ERROR_EXPONENT)
            self.rejected += 1

        seg = DenseSegment(self.t, self.t + h, self.y.copy(), K.T @ P)
        self.t = self.t + h if self.t_end - self.t - h > h_min else self.t_end
        self.y = y_new
        self.fy = f_new
        self.h = h * factor
        return seg


def solve_fixed(f: Rhs, t0: float, y0: np.ndarray, t_end: float, n_steps: int) -> np.ndarray:
    """고정 스텝 DOPRI5 (5차 해). 오차 추정/보간 없이 끝값만."""
    y = np.array(y0, dtype=float)
    h = (t_end - t0) / n_steps
    t = float(t0)
    fy = f(t, y)
    for _ in range(n_steps):
        y, fy, _ = rk_step(f, t, y, fy, h)
        t += h
    return y
