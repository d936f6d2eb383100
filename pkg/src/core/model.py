# src/core/model.py
"""
========== 모델 코어 Model core ==========

| 타입 | Types |
- ParamSet            : 13개 양수 모델 파라미터 (k1, k2 는 0 허용, 0 < r < 1)
- State               : 음이 아닌 (S, I, P) 상태
- VectorFieldValue    : (dS, dI, dP)

| 연산 | Operations |
- fear                : 공포 함수 1/(1 + kP)
- vector_field        : 모델 우변 (G1, G2, G3)
- jacobian            : 해석적 야코비안 (S > 0 에서만)
+ spow                : S^r (S <= 0 이면 0)
+ rhs                 : numpy 배열용 우변 (적분기/뉴턴 내부용)
+ parameter_derivative: ∂G/∂(파라미터) 중심차분
+ boundedness_bound   : 유계성 정리의 (ξ, W, 상한)

==========================================
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Iterable, Mapping, NamedTuple, Optional, Tuple

import numpy as np

from src.core.errors import ParameterError, SingularStateError


PARAM_NAMES: Tuple[str, ...] = (
    "b0", "r", "e0", "K", "a0", "a1", "a2", "d0", "d1", "d2", "d3", "k1", "k2",
)

# 공포 수준은 0 허용
NONNEGATIVE_PARAMS = frozenset({"k1", "k2"})


# =====================================================================
# 타입
# =====================================================================
@dataclass(frozen=True)
class ParamSet:
    b0: float
    r: float
    e0: float
    K: float
    a0: float
    a1: float
    a2: float
    d0: float
    d1: float
    d2: float
    d3: float
    k1: float
    k2: float

    def __post_init__(self) -> None:
        for f in fields(self):
            raw = getattr(self, f.name)
            try:
                val = float(raw)
            except (TypeError, ValueError):
                raise ParameterError(f"[MODEL] {f.name} 값이 숫자가 아닙니다: {raw!r}") from None
            if not math.isfinite(val):
                raise ParameterError(f"[MODEL] {f.name} 값이 유한하지 않습니다: {val}")
            if f.name in NONNEGATIVE_PARAMS:
                if val < 0.0:
                    raise ParameterError(f"[MODEL] {f.name} 는 0 이상이어야 합니다: {val}")
            elif val <= 0.0:
                raise ParameterError(f"[MODEL] {f.name} 는 양수여야 합니다: {val}")
            object.__setattr__(self, f.name, val)
        if not (0.0 < self.r < 1.0):
            raise ParameterError(f"[MODEL] 집합 지수 r 은 (0, 1) 범위여야 합니다: {self.r}")

    # -----------------------------------------------------------------
    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "ParamSet":
        """13개 키가 모두 명시된 매핑에서 생성 (숨은 기본값 없음)."""
        keys = set(mapping)
        missing = [n for n in PARAM_NAMES if n not in keys]
        extra = sorted(keys - set(PARAM_NAMES))
        if missing:
            raise ParameterError(f"[MODEL] 누락된 파라미터: {', '.join(missing)}")
        if extra:
            raise ParameterError(f"[MODEL] 알 수 없는 파라미터: {', '.join(extra)}")
        return cls(**{n: mapping[n] for n in PARAM_NAMES})

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)

    def replace(self, **changes: float) -> "ParamSet":
        unknown = [k for k in changes if k not in PARAM_NAMES]
        if unknown:
            raise ParameterError(f"[MODEL] 알 수 없는 파라미터: {', '.join(unknown)}")
        return replace(self, **changes)

    def with_value(self, name: str, value: float) -> "ParamSet":
        return self.replace(**{name: value})

    def get(self, name: str) -> float:
        if name not in PARAM_NAMES:
            raise ParameterError(f"[MODEL] 알 수 없는 파라미터: {name}")
        return getattr(self, name)

    @property
    def bounded(self) -> bool:
        """유계성 정리의 전제 d2 < d0, d3 < d1."""
        return self.d2 < self.d0 and self.d3 < self.d1


@dataclass(frozen=True)
class State:
    S: float
    I: float
    P: float

    def __post_init__(self) -> None:
        for name in ("S", "I", "P"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def of(cls, values: Iterable[float]) -> "State":
        s, i, p = (float(v) for v in values)
        return cls(s, i, p)

    def array(self) -> np.ndarray:
        return np.array([self.S, self.I, self.P], dtype=float)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.S, self.I, self.P)

    @property
    def nonnegative(self) -> bool:
        return self.S >= 0.0 and self.I >= 0.0 and self.P >= 0.0


class VectorFieldValue(NamedTuple):
    dS: float
    dI: float
    dP: float

    def max_abs(self) -> float:
        return max(abs(self.dS), abs(self.dI), abs(self.dP))


# =====================================================================
# 연산
# =====================================================================
def fear(k: float, P: float) -> float:
    return 1.0 / (1.0 + k * P)


def spow(S: float, r: float) -> float:
    """S^r, 단 S <= 0 이면 0 (0^r = 0 규약, 음수는 반올림 오차로 간주)."""
    if S <= 0.0:
        return 0.0
    return math.exp(r * math.log(S))


def _field(p: ParamSet, S: float, I: float, P: float) -> Tuple[float, float, float]:
    Sr = spow(S, p.r)
    f1 = fear(p.k1, P)
    f2 = fear(p.k2, P)
    g1 = p.b0 * S * f1 * (1.0 - (S + I) / p.K) - p.a0 * S - p.d0 * Sr * P - p.e0 * S * I * f2
    g2 = -p.a1 * I + p.e0 * S * I * f2 - p.d1 * I * P
    g3 = -p.a2 * P + p.d2 * Sr * P + p.d3 * I * P
    return g1, g2, g3


def vector_field(p: ParamSet, x: State) -> VectorFieldValue:
    return VectorFieldValue(*_field(p, x.S, x.I, x.P))


def rhs(p: ParamSet, y: np.ndarray) -> np.ndarray:
    return np.array(_field(p, y[0], y[1], y[2]), dtype=float)


def jacobian_array(p: ParamSet, y: np.ndarray) -> np.ndarray:
    S, I, P = float(y[0]), float(y[1]), float(y[2])
    if S <= 0.0:
        raise SingularStateError(
            f"[MODEL] S = {S} 에서는 야코비안을 계산하지 않습니다 (S^(r-1) 특이점).")
    r, K = p.r, p.K
    Sr = spow(S, r)
    Srm1 = Sr / S
    u1 = 1.0 + p.k1 * P
    u2 = 1.0 + p.k2 * P

    J = np.empty((3, 3), dtype=float)
    J[0, 0] = p.b0 * (K - 2.0 * S - I) / (K * u1) - p.a0 - r * p.d0 * Srm1 * P - p.e0 * I / u2
    J[0, 1] = -p.b0 * S / (K * u1) - p.e0 * S / u2
    J[0, 2] = (p.k1 * p.b0 * S * (-K + S + I) / (K * u1 * u1)
               - p.d0 * Sr
               + p.k2 * p.e0 * S * I / (u2 * u2))
    J[1, 0] = p.e0 * I / u2
    J[1, 1] = p.e0 * S / u2 - p.a1 - p.d1 * P
    J[1, 2] = -p.k2 * p.e0 * S * I / (u2 * u2) - p.d1 * I
    J[2, 0] = r * p.d2 * Srm1 * P
    J[2, 1] = p.d3 * P
    J[2, 2] = -p.a2 + p.d2 * Sr + p.d3 * I
    return J


def jacobian(p: ParamSet, x: State) -> np.ndarray:
    return jacobian_array(p, x.array())


def parameter_derivative(p: ParamSet, y: np.ndarray, name: str, rel_step: float = 1e-7) -> np.ndarray:
    """∂G/∂(name) 중심차분. 정의역 경계(k=0, r→1) 근처에서는 한쪽 차분."""
    value = p.get(name)
    h = rel_step * max(1.0, abs(value))
    can_lower = value - h > 0.0 or (name in NONNEGATIVE_PARAMS and value - h >= 0.0)
    can_raise = name != "r" or value + h < 1.0
    if can_lower and can_raise:
        hi = rhs(p.with_value(name, value + h), y)
        lo = rhs(p.with_value(name, value - h), y)
        return (hi - lo) / (2.0 * h)
    if can_raise:
        return (rhs(p.with_value(name, value + h), y) - rhs(p, y)) / h
    return (rhs(p, y) - rhs(p.with_value(name, value - h), y)) / h


def boundedness_bound(p: ParamSet, q0: float) -> Optional[Tuple[float, float, float]]:
    """
    유계성 정리의 불변집합: ξ = min(a1, a2), W = (b0 K / 4)(1 - (a0 - ξ)/b0)^2,
    S+I+P <= max(Q(0), W/ξ). 전제(d2 < d0, d3 < d1, ξ > a0 - b0)가 깨지면 None.
    """
    if not p.bounded:
        return None
    xi = min(p.a1, p.a2)
    if not xi > p.a0 - p.b0:
        return None
    W = (p.b0 * p.K / 4.0) * (1.0 - (p.a0 - xi) / p.b0) ** 2
    return xi, W, max(q0, W / xi)
