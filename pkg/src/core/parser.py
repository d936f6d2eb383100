# src/core/parser.py
"""
========== 시나리오 파서 Parser ==========

- ScenarioSpec        : 이름, 그림 번호, 기준 ParamSet, steps (action + 옵션 + expected)
- parse_scenario      : json5 파일 하나 → ScenarioSpec
- scenario_from_dict  : dict → ScenarioSpec (검증 포함)
- load_catalog        : 폴더의 모든 시나리오 (이름 중복 금지)
- find_scenario       : 이름으로 찾기
- filter_by_keyword   : 이름/주제/action/소스 경로에 키워드 포함
==========================================
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import json5

from src.core.errors import ConfigError, ScenarioError
from src.core.model import PARAM_NAMES, ParamSet

ACTIONS = ("simulate", "equilibria", "classify", "continue1", "continue2", "sweep", "threshold")

EXPECTED_TYPES = ("equilibrium", "verdict", "bifurcation", "event", "endpoint", "metric", "sign", "cells", "passes")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    params: ParamSet
    steps: Tuple[Dict[str, Any], ...]
    topic: str = ""
    caption: str = ""
    figure: Optional[int] = None
    source: str = ""
    notes: Dict[str, Any] = field(default_factory=dict)

    @property
    def actions(self) -> List[str]:
        return [s["action"] for s in self.steps]


def list_scenario_files(base_dir: str) -> List[str]:
    paths: List[str] = []
    for root, _, files in os.walk(base_dir):
        for f in files:
            if f.lower().endswith((".json", ".json5")):
                paths.append(os.path.join(root, f))
    return sorted(paths)


def _check_step(idx: int, step: Any, where: str) -> Dict[str, Any]:
    if not isinstance(step, dict):
        raise ScenarioError(f"[PARSER] {where}: step {idx} 가 객체가 아닙니다: {step!r}")
    action = step.get("action")
    if action not in ACTIONS:
        raise ScenarioError(f"[PARSER] {where}: step {idx} 의 action 이 올바르지 않습니다: {action!r}")
    overrides = step.get("set") or {}
    if not isinstance(overrides, dict):
        raise ScenarioError(f"[PARSER] {where}: step {idx} 의 set 은 매핑이어야 합니다")
    unknown = [k for k in overrides if k not in PARAM_NAMES]
    if unknown:
        raise ScenarioError(f"[PARSER] {where}: step {idx} 의 알 수 없는 파라미터: {', '.join(unknown)}")
    expected = step.get("expected") or []
    if not isinstance(expected, list):
        raise ScenarioError(f"[PARSER] {where}: step {idx} 의 expected 는 리스트여야 합니다")
    for e in expected:
        if not isinstance(e, dict) or e.get("type") not in EXPECTED_TYPES:
            raise ScenarioError(f"[PARSER] {where}: step {idx} 의 expected 항목 형식 오류: {e!r}")
    return dict(step)


def scenario_from_dict(data: Any, source: str = "<memory>") -> ScenarioSpec:
    if not isinstance(data, dict):
        raise ScenarioError(f"[PARSER] {source}: 최상위는 객체여야 합니다")
    name = data.get("name")
    if not isinstance(name, str) or not name:
        raise ScenarioError(f"[PARSER] {source}: name 이 없습니다")
    raw_params = data.get("params")
    if not isinstance(raw_params, dict):
        raise ScenarioError(f"[PARSER] {source}: params 매핑이 없습니다")
    params = ParamSet.from_mapping(raw_params)
    steps = data.get("steps")
    if not isinstance(steps, list) or not steps:
        raise ScenarioError(f"[PARSER] {source}: steps 가 비어 있습니다")
    checked = tuple(_check_step(i, s, source) for i, s in enumerate(steps, start=1))
    figure = data.get("figure")
    if figure is not None and (isinstance(figure, bool) or not isinstance(figure, int) or figure < 1):
        raise ScenarioError(f"[PARSER] {source}: figure 는 1 이상의 정수여야 합니다: {figure!r}")
    return ScenarioSpec(
        name=name,
        params=params,
        steps=checked,
        topic=str(data.get("topic", "")),
        caption=str(data.get("caption", "")),
        figure=figure,
        source=source,
        notes={k: v for k, v in data.items() if k not in ("name", "params", "steps", "topic", "caption", "figure")},
    )


def parse_scenario(path: str) -> ScenarioSpec:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json5.load(f)
    except OSError as e:
        raise ConfigError(f"[PARSER] '{path}' 을 열 수 없습니다: {e}") from None
    except ValueError as e:
        raise ScenarioError(f"[PARSER] '{path}' 구문 오류: {e}") from None
    return scenario_from_dict(data, path)


def load_catalog(base_dir: str) -> List[ScenarioSpec]:
    specs: List[ScenarioSpec] = []
    seen: Dict[str, str] = {}
    for path in list_scenario_files(base_dir):
        spec = parse_scenario(path)
        if spec.name in seen:
            raise ScenarioError(f"[PARSER] 시나리오 이름 중복: {spec.name} ({seen[spec.name]}, {path})")
        seen[spec.name] = path
        specs.append(spec)
    return specs


def find_scenario(name: str, base_dir: str) -> ScenarioSpec:
    for spec in load_catalog(base_dir):
        if spec.name == name:
            return spec
    raise ConfigError(f"[PARSER] 시나리오를 찾을 수 없습니다: {name}")


def filter_by_keyword(specs: List[ScenarioSpec], keyword: str) -> List[ScenarioSpec]:
    kw = keyword.lower()
    out: List[ScenarioSpec] = []
    for s in specs:
        hay = [s.name, s.topic, s.source] + s.actions
        if any(kw in (h or "").lower() for h in hay):
            out.append(s)
    return out
