# tests/conftest.py
"""재현 대상 파라미터 묶음과 공용 헬퍼."""
from __future__ import annotations

from typing import Dict

import numpy as np
import pytest

from src.core.config import RunContext
from src.core.model import ParamSet

# 안장-마디 설정 (b0 = 8, K = 4)
FEAR_SN: Dict[str, float] = dict(b0=8.0, K=4.0, a0=0.5, d0=0.7, r=0.5, e0=4.0, a1=0.4, d1=0.7,
                                  a2=0.8, d2=0.4, d3=0.5, k1=0.1, k2=1.0)
# Hopf / TC 설정 (b0 = 2, K = 8)
HOPF_TC: Dict[str, float] = dict(b0=2.0, k1=0.99, k2=0.85, K=8.0, a0=0.3, d0=0.6, r=0.7, e0=0.5,
                                 a1=0.4, d1=0.7, a2=0.8, d2=0.3, d3=0.5)
# 유한시간 멸종 설정 (b0 = 10, K = 5)
FTE: Dict[str, float] = dict(b0=10.0, K=5.0, a0=0.5, d0=0.7, r=0.5, e0=6.0, a1=0.4, d1=0.7,
                             a2=0.8, k2=0.8, d2=0.3, d3=0.5, k1=0.0)


@pytest.fixture
def fear_sn() -> ParamSet:
    return ParamSet.from_mapping(FEAR_SN)


@pytest.fixture
def hopf_tc() -> ParamSet:
    return ParamSet.from_mapping(HOPF_TC)


@pytest.fixture
def fte_params() -> ParamSet:
    return ParamSet.from_mapping(FTE)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def quiet_ctx() -> RunContext:
    """파일을 쓰지 않고 콘솔 출력도 없는 실행 문맥."""
    return RunContext(out_dir=None, quiet=True)


def random_params(rng: np.random.Generator) -> ParamSet:
    """정의역 안의 무작위 파라미터 (속성 검사용)."""
    return ParamSet(
        b0=rng.uniform(0.5, 10.0), r=rng.uniform(0.1, 0.9), e0=rng.uniform(0.1, 5.0),
        K=rng.uniform(1.0, 10.0), a0=rng.uniform(0.05, 1.0), a1=rng.uniform(0.05, 1.0),
        a2=rng.uniform(0.05, 1.0), d0=rng.uniform(0.05, 2.0), d1=rng.uniform(0.05, 2.0),
        d2=rng.uniform(0.05, 2.0), d3=rng.uniform(0.05, 2.0), k1=rng.uniform(0.0, 3.0),
        k2=rng.uniform(0.0, 3.0),
    )
