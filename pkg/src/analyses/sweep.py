# src/analyses/sweep.py
"""
========== 파라미터 스윕 Sweep ==========

- SweepGrid : 행/열 파라미터 (min/max/steps 또는 명시 값 목록), 열은 생략 가능 (1-D 스윕)
- sweep     : 셀마다 integrate + classify_endpoint → 결과 태그 행렬
              (jobs > 1 이면 ProcessPoolExecutor, 결과는 격자 순서대로)
- check     : 러너 진입점 (action = "sweep")
=========================================
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.analyses.dynamics import classify_endpoint, integrate, outcome_tag
from src.core.config import DEFAULT_TOLERANCES, RunContext, Tolerances
from src.core.errors import ConfigError, SipError
from src.core.model import PARAM_NAMES, ParamSet, State
from src.core.report import print_block, print_table

TAG = "SWEEP"


@dataclass(frozen=True)
class SweepGrid:
    row_param: str
    row_values: Tuple[float, ...]
    col_param: Optional[str] = None
    col_values: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        for name in (self.row_param, self.col_param):
            if name is not None and name not in PARAM_NAMES:
                raise ConfigError(f"[{TAG}] 알 수 없는 스윕 파라미터: {name}")
        if not self.row_values:
            raise ConfigError(f"[{TAG}] 행 값이 비어 있습니다")
        if self.col_param is not None and not self.col_values:
            raise ConfigError(f"[{TAG}] 열 값이 비어 있습니다")

    @staticmethod
    def axis(spec: Any) -> Tuple[float, ...]:
        """[v1, v2, ...] 또는 {"min", "max", "steps"} (steps >= 2)."""
        if isinstance(spec, dict):
            steps = int(spec.get("steps", 0))
            if steps < 2:
                raise ConfigError(f"[{TAG}] steps 는 2 이상이어야 합니다: {steps}")
            return tuple(float(v) for v in np.linspace(float(spec["min"]), float(spec["max"]), steps))
        if isinstance(spec, (list, tuple)):
            return tuple(float(v) for v in spec)
        raise ConfigError(f"[{TAG}] 축 형식 오류: {spec!r}")

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.row_values), max(1, len(self.col_values))

    def cells(self) -> List[Dict[str, float]]:
        out: List[Dict[str, float]] = []
        for rv in self.row_values:
            if self.col_param is None:
                out.append({self.row_param: rv})
            else:
                for cv in self.col_values:
                    out.append({self.row_param: rv, self.col_param: cv})
        return out


def _cell(args: Tuple[ParamSet, Dict[str, float], Tuple[float, float, float], Tolerances, Optional[float]]) -> str:
    p, changes, x0, tol, t_max = args
    try:
        ps = p.replace(**changes)
        traj = integrate(ps, State.of(x0), t_max, tol=tol)
        return outcome_tag(classify_endpoint(ps, traj, tol))
    except SipError as exc:
        return f"error:{type(exc).__name__}"


def sweep(p: ParamSet, grid: SweepGrid, x0: State, tol: Tolerances = DEFAULT_TOLERANCES,
          t_max: Optional[float] = None, jobs: int = 1) -> List[List[str]]:
    tasks = [(p, c, x0.as_tuple(), tol, t_max) for c in grid.cells()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            tags = list(pool.map(_cell, tasks))
    else:
        tags = [_cell(t) for t in tasks]
    n_rows, n_cols = grid.shape
    return [tags[i * n_cols:(i + 1) * n_cols] for i in range(n_rows)]


def check(params: ParamSet, step: Dict[str, Any], ctx: RunContext, jobs: int = 1) -> Dict[str, Any]:
    from src.core import export

    rows = step.get("rows") or {}
    cols = step.get("cols")
    grid = SweepGrid(
        row_param=rows.get("param"),
        row_values=SweepGrid.axis(rows.get("values", rows)),
        col_param=cols.get("param") if cols else None,
        col_values=SweepGrid.axis(cols.get("values", cols)) if cols else (),
    )
    x0 = State.of(step.get("x0") or (0.8, 0.9, 1.1))
    tags = sweep(params, grid, x0, ctx.tol, step.get("t_max"), jobs)

    files: List[str] = []
    path = ctx.path("sweep")
    if path:
        export.write_matrix(path, grid.row_param, grid.row_values,
                            grid.col_param or "-", grid.col_values or (0.0,), tags, ctx.fmt)
        files.append(path)

    errors = sum(1 for r in tags for t in r if t.startswith("error:"))
    if not ctx.quiet:
        headers = [grid.row_param] + ([f"{grid.col_param}={v:g}" for v in grid.col_values] or ["결과"])
        print_table([[f"{v:g}"] + r for v, r in zip(grid.row_values, tags)], headers, title="스윕 결과")
        print_block(TAG, "sweep", "PASS" if errors == 0 else "WARN",
                    reason=f"{grid.shape[0]}×{grid.shape[1]} 셀, 오류 {errors}건")
    cells = {}
    for i, rv in enumerate(grid.row_values):
        for j in range(grid.shape[1]):
            key = f"{rv:g}" if grid.col_param is None else f"{rv:g},{grid.col_values[j]:g}"
            cells[key] = tags[i][j]
    return {
        "action": "sweep",
        "status": "PASS" if errors == 0 else "WARN",
        "cells": cells,
        "metrics": {"errors": float(errors)},
        "files": files,
    }
