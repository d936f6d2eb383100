# src/core/report.py
"""
========== 출력 모듈 Report ==========

- log            : [LEVEL][TAG] 한 줄 로그 (DEBUG 는 SIP_VERBOSE=1 일 때만)
- color_status   : PASS/FAIL/WARN/ERROR 색상 표시
- print_block    : 결과 요약 박스
- pad_display    : 표시폭 기준 패딩 (한글 폭 보정)
- print_table    : tabulate 그리드 표
======================================
"""
from __future__ import annotations

import sys
from typing import Any, Dict, List, Optional, Sequence

from colorama import Fore, Style
from tabulate import tabulate
from wcwidth import wcswidth

from src.core.config import verbose


TITLE_MAP = {
    "simulate":   "시간 적분 (궤적)",
    "equilibria": "평형점 계산",
    "classify":   "평형점 안정성 분류",
    "continue1":  "1-파라미터 평형 분지 연속",
    "continue2":  "2-파라미터 fold 곡선 연속",
    "sweep":      "파라미터 스윕",
    "threshold":  "선택적 포식 임계값",
}


def log(tag: str, message: str, level: str = "INFO") -> None:
    level = level.upper()
    if level == "DEBUG" and not verbose():
        return
    stream = sys.stderr if level in ("WARN", "ERROR") else sys.stdout
    print(f"[{level}][{tag}] {message}", file=stream)


def color_status(status: str) -> str:
    if status == "PASS":
        return Fore.GREEN + status + Style.RESET_ALL
    elif status == "FAIL":
        return Fore.RED + status + Style.RESET_ALL
    elif status == "WARN":
        return Fore.YELLOW + status + Style.RESET_ALL
    elif status == "ERROR":
        return Fore.MAGENTA + status + Style.RESET_ALL
    return status or "N/A"


def print_block(tag: str,
                title_key: str,
                status: str,
                reason: Optional[str] = None,
                details: Optional[Dict[str, Any]] = None,
                evidence: Optional[List[str]] = None,
                width: int = 70) -> None:
    title = TITLE_MAP.get(title_key, title_key)
    print("\n" + "=" * width)
    print(f"[{tag}] {title}")
    print("-" * width)
    print(f"  • 상태       : {color_status(status)}")
    if reason:
        print(f"  • 이유       : {reason}")
    if details:
        print("  • 상세")
        for k, v in details.items():
            print(f"     - {k:<15}: {v}")
    if evidence:
        print("  • 근거")
        for e in evidence:
            print(f"     - {e}")
    print("=" * width)


def pad_display(s: str, width: int) -> str:
    """문자열 s를 실제 표시폭 기준으로 padding"""
    disp = wcswidth(s)
    pad = width - disp
    return s + (" " * max(0, pad))


def print_table(rows: Sequence[Sequence[Any]], headers: Sequence[str], title: Optional[str] = None) -> None:
    cells = [[str(c) for c in row] for row in rows]
    col_widths = [wcswidth(h) for h in headers]
    for row in cells:
        for j, cell in enumerate(row):
            col_widths[j] = max(col_widths[j], wcswidth(cell))
    padded = [[pad_display(cell, col_widths[j]) for j, cell in enumerate(row)] for row in cells]
    if title:
        print(f"\n=== {title} ===")
    print(tabulate(padded, headers=list(headers), tablefmt="grid", disable_numparse=True))


def fmt(x: Any, digits: int = 6) -> str:
    if isinstance(x, complex):
        sign = "+" if x.imag >= 0 else "-"
        return f"{x.real:.{digits}g}{sign}{abs(x.imag):.{digits}g}i"
    if isinstance(x, float):
        return f"{x:.{digits}g}"
    if isinstance(x, (tuple, list)):
        return "(" + ", ".join(fmt(v, digits) for v in x) + ")"
    return str(x)
