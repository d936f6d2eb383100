# src/core/export.py
"""
========== 파일 출력 Export ==========

- write_rows        : dict 행 목록 → CSV / JSON
- write_trajectory  : 궤적 CSV (t,S,I,P + '# event,...' 주석 행) / JSON
- write_branch      : 분지 CSV (param..,S,I,P,psi1,psi2,psi3,stable + '# bif,...' 주석 행) / JSON
- write_matrix      : 스윕 결과 태그 행렬
- write_json        : summary.json 등 일반 JSON

부동소수는 항상 format_value(.12g) 로 기록 → 같은 입력이면 바이트 단위로 같은 파일.
======================================
"""
from __future__ import annotations

import csv
import json
import math
import os
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

FLOAT_FORMAT = ".12g"


def format_value(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, FLOAT_FORMAT)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, complex):
        return f"{format(v.real, FLOAT_FORMAT)}{'+' if v.imag >= 0 else '-'}{format(abs(v.imag), FLOAT_FORMAT)}j"
    if v is None:
        return ""
    return str(v)


def _jsonable(v: Any) -> Any:
    """numpy 스칼라/복소수/비유한 값을 JSON 호환 값으로."""
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else format_value(v)
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    return v


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_json(path: str, obj: Any) -> str:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(_jsonable(obj), f, ensure_ascii=False, indent=2, sort_keys=False)
        f.write("\n")
    return path


def _columns(rows: Sequence[Dict[str, Any]]) -> List[str]:
    cols: List[str] = []
    for row in rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    return cols


def write_rows(path: str, rows: Sequence[Dict[str, Any]], fmt: str = "csv") -> str:
    if fmt == "json":
        return write_json(path, list(rows))
    _ensure_parent(path)
    cols = _columns(rows)
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([format_value(row.get(c)) for c in cols])
    return path


# ---------------------------------------------------------------------
# 궤적
# ---------------------------------------------------------------------
def _event_dict(ev: Any) -> Dict[str, Any]:
    return {
        "kind": ev.kind,
        "t": ev.time,
        "S": ev.state.S,
        "I": ev.state.I,
        "P": ev.state.P,
        "detail": dict(ev.detail),
    }


def write_trajectory(path: str, traj: Any, fmt: str = "csv") -> str:
    if fmt == "json":
        return write_json(path, {
            "terminated_by": traj.terminated_by,
            "samples": [{"t": t, "S": y[0], "I": y[1], "P": y[2]} for t, y in zip(traj.t, traj.y)],
            "events": [_event_dict(ev) for ev in traj.events],
        })
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("t,S,I,P\n")
        for t, y in zip(traj.t, traj.y):
            f.write(",".join(format_value(float(v)) for v in (t, y[0], y[1], y[2])) + "\n")
        for ev in traj.events:
            f.write("# event," + ",".join([ev.kind] + [format_value(v) for v in
                                                       (ev.time, ev.state.S, ev.state.I, ev.state.P)]) + "\n")
    return path


# ---------------------------------------------------------------------
# 분지
# ---------------------------------------------------------------------
def _params_text(values: Dict[str, float]) -> str:
    return ";".join(f"{k}={format_value(v)}" for k, v in values.items())


def write_branch(path: str, branch: Any, fmt: str = "csv") -> str:
    names = list(branch.free_params)
    if fmt == "json":
        return write_json(path, {
            "free_params": names,
            "points": [dict(pt.as_row()) for pt in branch.points],
            "bifurcations": [b.as_row() for b in branch.bif_points],
        })
    _ensure_parent(path)
    header = names + ["S", "I", "P", "psi1", "psi2", "psi3", "stable"]
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for pt in branch.points:
            row = pt.as_row()
            f.write(",".join(format_value(row[c]) for c in header) + "\n")
        for b in branch.bif_points:
            loc = b.location
            f.write("# bif," + ",".join([b.kind, _params_text(b.param_values)]
                                        + [format_value(v) for v in (loc.S, loc.I, loc.P)]) + "\n")
    return path


# ---------------------------------------------------------------------
# 스윕 행렬
# ---------------------------------------------------------------------
def write_matrix(path: str, row_name: str, row_values: Iterable[float],
                 col_name: str, col_values: Iterable[float],
                 tags: Sequence[Sequence[str]], fmt: str = "csv") -> str:
    rows = list(row_values)
    cols = list(col_values)
    if fmt == "json":
        return write_json(path, {
            "rows": {"name": row_name, "values": rows},
            "cols": {"name": col_name, "values": cols},
            "tags": [list(r) for r in tags],
        })
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([f"{row_name}\\{col_name}"] + [format_value(float(c)) for c in cols])
        for v, tag_row in zip(rows, tags):
            w.writerow([format_value(float(v))] + list(tag_row))
    return path
