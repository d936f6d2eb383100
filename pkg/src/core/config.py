# src/core/config.py
"""
========== 설정 Config ==========

- load_env            : .env / 환경변수 로드 (python-dotenv)
- output_dir          : SIP_OUT_DIR (기본 out)
- scenario_dir        : SIP_SCENARIO_DIR (기본 scenarios)
- verbose             : SIP_VERBOSE=1 이면 DEBUG 로그 출력
- Tolerances          : 수치 허용오차/스텝 설정 묶음
- parse_tol_overrides : "rtol=1e-10,eps_ext=1e-8" 또는 json5 파일 경로 → Tolerances
=================================
"""
from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, Optional

import json5
from dotenv import load_dotenv

from src.core.errors import ConfigError


DEFAULT_OUT_DIR = "out"
DEFAULT_SCENARIO_DIR = "scenarios"

_ENV_LOADED = False


def load_env() -> None:
    global _ENV_LOADED
    if not _ENV_LOADED:
        load_dotenv()
        _ENV_LOADED = True


def output_dir(override: Optional[str] = None) -> str:
    if override:
        return override
    load_env()
    return os.environ.get("SIP_OUT_DIR") or DEFAULT_OUT_DIR


def scenario_dir(override: Optional[str] = None) -> str:
    if override:
        return override
    load_env()
    return os.environ.get("SIP_SCENARIO_DIR") or DEFAULT_SCENARIO_DIR


def verbose() -> bool:
    load_env()
    return os.environ.get("SIP_VERBOSE", "0").strip().lower() in ("1", "true", "yes", "on")


@dataclass(frozen=True)
class Tolerances:
    # 적분
    rtol: float = 1e-9
    atol: float = 1e-12
    eps_ext: float = 1e-6
    clamp: float = 1e-10
    event_time_tol: float = 1e-6
    converge_tol: float = 1e-9
    t_max: float = 500.0
    n_samples: int = 2000
    # 평형/안정성
    residual: float = 1e-10
    newton_max: int = 50
    tol_marginal: float = 1e-7
    disc_tol: float = 1e-12
    # 연속법
    ds_min: float = 1e-5
    ds_max: float = 0.05
    ds_init: float = 0.01
    bisect_tol: float = 1e-8
    corrector_max: int = 6
    max_points: int = 6000
    # 끝점 매칭
    match_rel: float = 1e-3


DEFAULT_TOLERANCES = Tolerances()


@dataclass
class RunContext:
    """분석 모듈의 check() 에 전달되는 실행 문맥 (드라이버 역할)."""
    tol: Tolerances = DEFAULT_TOLERANCES
    out_dir: Optional[str] = None
    fmt: str = "csv"
    scenario: str = "adhoc"
    step_index: int = 1
    quiet: bool = False

    def folder(self) -> Optional[str]:
        if not self.out_dir:
            return None
        folder = os.path.join(self.out_dir, self.scenario)
        os.makedirs(folder, exist_ok=True)
        return folder

    def path(self, stem: str, ext: Optional[str] = None) -> Optional[str]:
        """산출물 경로 <out>/<scenario>/<step>_<stem>.<ext>; out_dir 이 없으면 None (파일 미생성)."""
        folder = self.folder()
        if folder is None:
            return None
        return os.path.join(folder, f"{self.step_index:02d}_{stem}.{ext or self.fmt}")


def parse_tol_overrides(expr: Optional[str], base: Tolerances = DEFAULT_TOLERANCES) -> Tolerances:
    """`key=value,...` 문자열 또는 json5 파일 경로를 받아 Tolerances 사본을 돌려준다."""
    if not expr:
        return base
    raw: Dict[str, Any]
    if os.path.isfile(expr):
        with open(expr, "r", encoding="utf-8") as f:
            raw = json5.load(f)
        if not isinstance(raw, dict):
            raise ConfigError(f"[CONFIG] 허용오차 파일은 매핑이어야 합니다: {expr}")
    else:
        raw = {}
        for token in expr.split(","):
            token = token.strip()
            if not token:
                continue
            if "=" not in token:
                raise ConfigError(f"[CONFIG] 잘못된 허용오차 항목: {token!r} (key=value 형식)")
            k, v = token.split("=", 1)
            raw[k.strip()] = v.strip()

    known = {f.name for f in fields(Tolerances)}
    changes: Dict[str, Any] = {}
    for k, v in raw.items():
        if k not in known:
            raise ConfigError(f"[CONFIG] 알 수 없는 허용오차 키: {k}")
        try:
            current = getattr(base, k)
            changes[k] = int(float(v)) if isinstance(current, int) else float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"[CONFIG] 허용오차 값이 숫자가 아닙니다: {k}={v!r}") from None
    return replace(base, **changes)
