# src/core/runner.py
"""
========== 시나리오 실행기 Runner ==========

- actions_map      : action 이름 → 분석 모듈의 check(params, step, ctx)
- run_step         : step 하나 실행 (set 으로 파라미터 덮어쓰기)
- compare_expected : expected 항목 → GoldenCheck 목록
- run_scenario     : 모든 step 실행, summary.json 기록, 실패 시 예외
===========================================
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from src.analyses import continuation, dynamics, equilibria, fold_curve, stability, sweep
from src.core import export
from src.core.config import DEFAULT_TOLERANCES, RunContext, Tolerances
from src.core.errors import GoldenMismatchError, SipError
from src.core.model import ParamSet
from src.core.parser import ScenarioSpec
from src.core.report import color_status, log, print_table

TAG = "RUNNER"

actions_map: Dict[str, Callable[..., Dict[str, Any]]] = {
    "simulate": dynamics.check,
    "threshold": dynamics.check_threshold,
    "equilibria": equilibria.check,
    "classify": stability.check,
    "continue1": continuation.check,
    "continue2": fold_curve.check,
    "sweep": sweep.check,
}


@dataclass
class GoldenCheck:
    step: int
    label: str
    expected: Any
    actual: Any
    passed: bool

    def as_dict(self) -> Dict[str, Any]:
        return {"step": self.step, "label": self.label, "expected": self.expected,
                "actual": self.actual, "passed": self.passed}


@dataclass
class ScenarioResult:
    name: str
    steps: List[Dict[str, Any]] = field(default_factory=list)
    checks: List[GoldenCheck] = field(default_factory=list)
    errors: List[SipError] = field(default_factory=list)
    files: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.errors and all(c.passed for c in self.checks)


# =====================================================================
# 기준값 비교
# =====================================================================
def _close(a: Sequence[float], b: Sequence[float], tol: float) -> bool:
    return len(a) == len(b) and all(abs(float(x) - float(y)) <= tol for x, y in zip(a, b))


def _state_of(row: Dict[str, Any]) -> List[float]:
    if "state" in row:
        return [float(v) for v in row["state"]]
    return [float(row["S"]), float(row["I"]), float(row["P"])]


def _check_equilibrium(result: Dict[str, Any], e: Dict[str, Any]) -> Any:
    tol = float(e.get("tol", 5e-3))
    for row in result.get("equilibria", []):
        if row.get("kind") == e["kind"] and _close(_state_of(row), e["state"], tol):
            if "verdict" in e and row.get("verdict") != e["verdict"]:
                continue
            return row
    return None


def _check_bifurcation(result: Dict[str, Any], e: Dict[str, Any]) -> Any:
    ptol = float(e.get("param_tol", 5e-3))
    stol = float(e.get("state_tol", 1e-2))
    for row in result.get("bifurcations", []):
        if row.get("kind") != e["kind"]:
            continue
        params = row.get("params", {})
        if not all(k in params and abs(float(params[k]) - float(v)) <= ptol for k, v in e["params"].items()):
            continue
        if "state" in e and not _close(_state_of(row), e["state"], stol):
            continue
        return row
    return None


def _check_event(result: Dict[str, Any], e: Dict[str, Any]) -> Any:
    for row in result.get("events", []):
        if row.get("kind") == e["kind"] and abs(float(row["time"]) - float(e["time"])) <= float(e.get("tol", 0.5)):
            return row
    return None


def _check_endpoint(result: Dict[str, Any], e: Dict[str, Any]) -> Any:
    ep = result.get("endpoint") or {}
    if ep.get("tag") != e["tag"]:
        return None
    if "state" in e:
        loc = ep.get("detail", {}).get("location") or _state_of(ep)
        if not _close(loc, e["state"], float(e.get("tol", 5e-3))):
            return None
    return ep


def _check_metric(result: Dict[str, Any], e: Dict[str, Any]) -> Any:
    value = result.get("metrics", {}).get(e["name"])
    if value is None or not math.isfinite(float(value)):
        return None
    return value if abs(float(value) - float(e["value"])) <= float(e.get("tol", 1e-9)) else None


def _check_sign(result: Dict[str, Any], e: Dict[str, Any]) -> Any:
    vals = [row.get(e["field"]) for row in result.get("bifurcations", []) if row.get("kind") == e["kind"]]
    vals = [v for v in vals if v is not None]
    if not vals:
        return None
    want = int(e["sign"])
    return vals if all((v > 0) - (v < 0) == want for v in vals) else None


def _check_cells(result: Dict[str, Any], e: Dict[str, Any]) -> Any:
    cells = result.get("cells", {})
    ok = all(cells.get(k) == v for k, v in e["values"].items())
    return cells if ok else None


def _segment_distance(a: np.ndarray, b: np.ndarray, x: np.ndarray) -> float:
    d = b - a
    dd = float(np.dot(d, d))
    s = 0.0 if dd == 0.0 else min(1.0, max(0.0, float(np.dot(x - a, d)) / dd))
    return float(np.max(np.abs(a + s * d - x)))


def _check_passes(result: Dict[str, Any], e: Dict[str, Any]) -> Any:
    """분지/곡선이 주어진 (파라미터, 상태) 점 근처를 지나는지. 이웃 점 사이는 선형 보간."""
    names = list(e["params"])
    target = [float(e["params"][k]) for k in names] + [float(v) for v in e.get("state", [])]
    ptol = float(e.get("param_tol", 1e-2))
    stol = float(e.get("state_tol", 1e-2))
    scale = np.array([1.0] * len(names) + [ptol / stol] * len(e.get("state", [])))
    x = np.asarray(target) * scale
    best = math.inf
    n_state = len(target) - len(names)
    for br in result.get("_branches", []):
        if not br.points or not all(k in br.points[0].params for k in names):
            continue
        pts = [np.array([pt.params[k] for k in names]
                        + list(pt.equilibrium.location.as_tuple()[:n_state])) * scale
               for pt in br.points]
        for a, b in zip(pts, pts[1:]):
            best = min(best, _segment_distance(a, b, x))
    return best if best <= ptol else None


_CHECKERS = {
    "equilibrium": _check_equilibrium,
    "verdict": _check_equilibrium,
    "bifurcation": _check_bifurcation,
    "event": _check_event,
    "endpoint": _check_endpoint,
    "metric": _check_metric,
    "sign": _check_sign,
    "cells": _check_cells,
    "passes": _check_passes,
}


def _label(e: Dict[str, Any]) -> str:
    fields = {k: v for k, v in e.items() if k not in ("type", "source")}
    return f"{e['type']} {fields}"


def compare_expected(step_index: int, result: Optional[Dict[str, Any]],
                     expected: Sequence[Dict[str, Any]]) -> List[GoldenCheck]:
    checks: List[GoldenCheck] = []
    for e in expected:
        hit = _CHECKERS[e["type"]](result, e) if result is not None else None
        checks.append(GoldenCheck(step_index, _label(e), e, hit, hit is not None))
    return checks


# =====================================================================
# 실행
# =====================================================================
def run_step(params: ParamSet, step: Dict[str, Any], ctx: RunContext, jobs: int = 1) -> Dict[str, Any]:
    handler = actions_map[step["action"]]
    ps = params.replace(**step["set"]) if step.get("set") else params
    if step["action"] == "sweep":
        return handler(ps, step, ctx, jobs=jobs)
    return handler(ps, step, ctx)


def _public(result: Dict[str, Any]) -> Dict[str, Any]:
    return {k: v for k, v in result.items() if not k.startswith("_")}


def run_scenario(spec: ScenarioSpec, out_dir: Optional[str] = None, fmt: str = "csv",
                 tol: Tolerances = DEFAULT_TOLERANCES, jobs: int = 1, quiet: bool = False) -> ScenarioResult:
    """
    step 을 순서대로 실행한다. step 예외는 잡아서 기록하고 다음 step 을 계속한다.
    끝나면 summary.json 을 쓰고, step 오류가 있으면 첫 오류를, 기준값 불일치가 있으면
    GoldenMismatchError 를 던진다.
    """
    outcome = ScenarioResult(spec.name)
    for idx, step in enumerate(spec.steps, start=1):
        ctx = RunContext(tol=tol, out_dir=out_dir, fmt=fmt, scenario=spec.name, step_index=idx, quiet=quiet)
        result: Optional[Dict[str, Any]] = None
        try:
            result = run_step(spec.params, step, ctx, jobs)
            outcome.files.extend(result.get("files", []))
            outcome.steps.append(_public(result))
        except SipError as e:
            log(TAG, f"{spec.name} step {idx} ({step['action']}) 실패: {e}", "ERROR")
            outcome.errors.append(e)
            outcome.steps.append({"action": step["action"], "status": "ERROR",
                                  "reason": f"{type(e).__name__}: {e}"})
        outcome.checks.extend(compare_expected(idx, result, step.get("expected") or []))

    if outcome.checks and not quiet:
        print_table([[c.step, color_status("PASS" if c.passed else "FAIL"), c.label] for c in outcome.checks],
                    ["step", "결과", "기준값"], title=f"{spec.name} 기준값 비교")

    folder = RunContext(out_dir=out_dir, scenario=spec.name).folder()
    if folder:
        summary_path = os.path.join(folder, "summary.json")
        export.write_json(summary_path, {
            "scenario": spec.name,
            "figure": spec.figure,
            "topic": spec.topic,
            "caption": spec.caption,
            "passed": outcome.passed,
            "steps": outcome.steps,
            "checks": [c.as_dict() for c in outcome.checks],
        })
        outcome.files.append(summary_path)

    if outcome.errors:
        raise outcome.errors[0]
    failed = [c for c in outcome.checks if not c.passed]
    if failed:
        raise GoldenMismatchError(
            f"[{TAG}] {spec.name}: 기준값 {len(failed)}/{len(outcome.checks)}건 불일치", failed)
    return outcome
