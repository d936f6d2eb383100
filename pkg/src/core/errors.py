# src/core/errors.py
"""
========== 예외 계층 Errors ==========

- SipError                      : 모든 예외의 루트
  - ConfigError (exit 2)        : 시나리오/파라미터 설정 오류
    - ParameterError            : ParamSet 필드 검증 실패
    - ScenarioError             : 시나리오 파일 형식 오류
  - GoldenMismatchError (exit 3): 기준값(golden) 허용오차 초과
  - NumericalError (exit 4)     : 수치 계산 실패
    - SingularStateError, InfeasibleError, NoPositiveRootError,
      NoInteriorEquilibriumError, StepSizeUnderflowError,
      AmbiguousEndpointError, SeedResidualError, FoldTurnError,
      AugmentedSingularError, DegenerateHopfError

+ exit_code_for : 예외 → 프로세스 종료 코드(0/2/3/4)
======================================
"""
from __future__ import annotations

from typing import Any, List, Optional


class SipError(Exception):
    """패키지 공통 예외."""
    exit_code = 4


# ---------------------------------------------------------------------
# 설정 오류
# ---------------------------------------------------------------------
class ConfigError(SipError):
    exit_code = 2


class ParameterError(ConfigError):
    pass


class ScenarioError(ConfigError):
    pass


# ---------------------------------------------------------------------
# 기준값 불일치
# ---------------------------------------------------------------------
class GoldenMismatchError(SipError):
    exit_code = 3

    def __init__(self, message: str, checks: Optional[List[Any]] = None):
        super().__init__(message)
        self.checks = list(checks or [])


# ---------------------------------------------------------------------
# 수치 오류
# ---------------------------------------------------------------------
class NumericalError(SipError):
    exit_code = 4


class SingularStateError(NumericalError):
    """S = 0 에서 선형화 시도 (원점은 선형화하지 않는다)."""


class InfeasibleError(NumericalError):
    """평형점 존재 조건(엄격 부등식) 불만족."""


class NoPositiveRootError(NumericalError):
    """E3 의 P3 이차식에 양의 실근 없음."""


class NoInteriorEquilibriumError(NumericalError):
    """E4 스칼라 축약식의 구간 내 근 없음."""


class StepSizeUnderflowError(NumericalError):
    """적분기 스텝 크기가 하한 아래로 떨어짐."""


class AmbiguousEndpointError(NumericalError):
    """궤적 끝점이 두 개 이상의 평형점과 동시에 일치."""


class SeedResidualError(NumericalError):
    """연속법 시작점이 평형 잔차 조건을 만족하지 않음."""


class FoldTurnError(NumericalError):
    """아크길이 스텝이 하한에 도달하도록 보정기가 수렴하지 않음."""


class AugmentedSingularError(NumericalError):
    """fold 확장계의 테두리(bordered) 행렬이 특이함."""


class DegenerateHopfError(NumericalError):
    """|l1| 이 너무 작아 Hopf 임계성 판정 불가 (Bautin 가능성)."""


def exit_code_for(exc: Optional[BaseException]) -> int:
    if exc is None:
        return 0
    if isinstance(exc, SipError):
        return exc.exit_code
    return 4
