# run_scenario.py
"""
SIP 모델 수치 분석 CLI

  python run_scenario.py scenario --list
  python run_scenario.py scenario fig5-fte
  python run_scenario.py scenario --all --jobs 4
  python run_scenario.py simulate --scenario fig5-fte --set k1=0.2 --x0 3,2,4
  python run_scenario.py continue1 --scenario fig2-hopf-tc --free k1 --range 0,4

종료 코드: 0 성공, 2 설정 오류, 3 기준값 불일치, 4 수치 오류
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Tuple

import json5

from src.core.config import RunContext, load_env, output_dir, parse_tol_overrides, scenario_dir
from src.core.errors import ConfigError, SipError, exit_code_for
from src.core.model import PARAM_NAMES, ParamSet
from src.core.parser import (
    ScenarioSpec,
    filter_by_keyword,
    find_scenario,
    load_catalog,
)
from src.core.report import color_status, log, print_table
from src.core.runner import run_scenario, run_step

TAG = "CLI"


# -------------------------------
# 인자 해석 유틸
# -------------------------------
def parse_floats(expr: str, n: Optional[int] = None) -> List[float]:
    try:
        vals = [float(t) for t in expr.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"[{TAG}] 숫자 목록이 아닙니다: {expr!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(f"[{TAG}] 값 {n}개가 필요합니다: {expr!r}")
    return vals


def parse_assignments(items: Sequence[str]) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for item in items or []:
        for token in item.split(","):
            if not token.strip():
                continue
            if "=" not in token:
                raise ConfigError(f"[{TAG}] key=value 형식이 아닙니다: {token!r}")
            k, v = token.split("=", 1)
            k = k.strip()
            if k not in PARAM_NAMES:
                raise ConfigError(f"[{TAG}] 알 수 없는 파라미터: {k}")
            out[k] = parse_floats(v, 1)[0]
    return out


def parse_axis(expr: str) -> Dict[str, Any]:
    """'k2=0,2,7' 또는 'k2=0:7:15' (min:max:steps)."""
    if "=" not in expr:
        raise ConfigError(f"[{TAG}] 축은 name=values 형식이어야 합니다: {expr!r}")
    name, rest = expr.split("=", 1)
    if ":" in rest:
        lo, hi, steps = rest.split(":")
        return {"param": name.strip(), "min": float(lo), "max": float(hi), "steps": int(steps)}
    return {"param": name.strip(), "values": parse_floats(rest)}


def load_params(args: argparse.Namespace) -> ParamSet:
    if args.params:
        with open(args.params, "r", encoding="utf-8") as f:
            data = json5.load(f)
        mapping = data.get("params", data) if isinstance(data, dict) else data
        base = ParamSet.from_mapping(mapping)
    elif args.scenario:
        base = find_scenario(args.scenario, scenario_dir(args.scenario_dir)).params
    else:
        raise ConfigError(f"[{TAG}] --params 파일 또는 --scenario 이름이 필요합니다")
    changes = parse_assignments(args.set)
    return base.replace(**changes) if changes else base


# -------------------------------
# 개별 action
# -------------------------------
def build_step(args: argparse.Namespace) -> Dict[str, Any]:
    step: Dict[str, Any] = {"action": args.command}
    if args.command == "simulate":
        if args.x0:
            step["x0"] = parse_floats(args.x0, 3)
        if args.t_max is not None:
            step["t_max"] = args.t_max
        step["continue_after_fte"] = args.continue_after_fte
    elif args.command in ("equilibria", "classify"):
        if args.kinds:
            step["kinds"] = [k.strip() for k in args.kinds.split(",")]
    elif args.command == "continue1":
        step.update(free=args.free, range=parse_floats(args.range, 2), seed_kind=args.seed_kind,
                    switch_at_tc=args.switch_at_tc, lyapunov=not args.no_lyapunov)
        if args.seed_value is not None:
            step["seed_value"] = args.seed_value
    elif args.command == "continue2":
        free = [f.strip() for f in args.free.split(",")]
        step.update(free=free, seed={"free": args.seed_free or free[0], "range": parse_floats(args.seed_range, 2)})
        bounds: Dict[str, List[float]] = {}
        for token in (args.bounds or "").split(","):
            if token.strip():
                name, rng = token.split("=", 1)
                bounds[name.strip()] = parse_floats(rng.replace(":", ","), 2)
        step["bounds"] = bounds
    elif args.command == "sweep":
        step["rows"] = parse_axis(args.rows)
        if args.cols:
            step["cols"] = parse_axis(args.cols)
        if args.x0:
            step["x0"] = parse_floats(args.x0, 3)
        if args.t_max is not None:
            step["t_max"] = args.t_max
    return step


def run_action(args: argparse.Namespace) -> int:
    tol = parse_tol_overrides(args.tol_overrides)
    params = load_params(args)
    step = build_step(args)
    out = output_dir(args.out_dir)
    ctx = RunContext(tol=tol, out_dir=out, fmt=args.format, scenario=f"adhoc-{args.command}", quiet=args.quiet)
    result = run_step(params, step, ctx, args.jobs)
    for path in result.get("files", []):
        log(TAG, f"저장: {path}")
    return 0


# -------------------------------
# 시나리오 카탈로그
# -------------------------------
def print_catalog(specs: Sequence[ScenarioSpec]) -> None:
    rows = [[str(i), s.name, str(s.figure or "-"), s.topic or "-", ",".join(s.actions), os.path.basename(s.source)]
            for i, s in enumerate(specs, start=1)]
    print_table(rows, ["번호", "이름", "그림", "주제", "Actions", "소스"], title="시나리오 목록")


def _run_named(job: Tuple[str, str, Optional[str], str, Optional[str], bool]) -> Tuple[str, int, str]:
    name, sdir, out, fmt, tol_expr, quiet = job
    try:
        spec = find_scenario(name, sdir)
        run_scenario(spec, out, fmt, parse_tol_overrides(tol_expr), 1, quiet)
        return name, 0, ""
    except SipError as e:
        return name, exit_code_for(e), str(e)


def run_catalog(args: argparse.Namespace) -> int:
    sdir = scenario_dir(args.scenario_dir)
    specs = load_catalog(sdir)
    if args.filter:
        specs = filter_by_keyword(specs, args.filter)

    if args.list:
        print_catalog(specs)
        return 0

    if args.all:
        chosen = specs
    elif args.name:
        chosen = [s for s in specs if s.name == args.name]
        if not chosen:
            raise ConfigError(f"[{TAG}] 시나리오를 찾을 수 없습니다: {args.name}")
    else:
        raise ConfigError(f"[{TAG}] 시나리오 이름, --all 또는 --list 가 필요합니다")

    out = output_dir(args.out_dir)
    if len(chosen) == 1:
        spec = chosen[0]
        run_scenario(spec, out, args.format, parse_tol_overrides(args.tol_overrides), args.jobs, args.quiet)
        log(TAG, f"{spec.name} 완료 → {os.path.join(out, spec.name)}")
        return 0

    jobs = [(s.name, sdir, out, args.format, args.tol_overrides, args.quiet or args.jobs > 1) for s in chosen]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_named, jobs))
    else:
        results = [_run_named(j) for j in jobs]

    rows = []
    for name, code, msg in sorted(results):
        status = "PASS" if code == 0 else ("FAIL" if code == 3 else "ERROR")
        rows.append([name, color_status(status), str(code), msg[:60]])
    print_table(rows, ["시나리오", "결과", "코드", "메시지"], title="전체 실행 요약")
    return max((code for _, code, _ in results), default=0)


# -------------------------------
# argparse
# -------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=None, help="출력 폴더 (기본: SIP_OUT_DIR 또는 out)")
    common.add_argument("--tol-overrides", default=None, help="'rtol=1e-10,eps_ext=1e-8' 또는 json5 파일 경로")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--jobs", type=int, default=1, help="병렬 프로세스 수 (scenario --all, sweep)")
    common.add_argument("--scenario-dir", default=None, help="시나리오 폴더 (기본: SIP_SCENARIO_DIR 또는 scenarios)")
    common.add_argument("-q", "--quiet", action="store_true", help="결과 박스 출력 생략")

    source = argparse.ArgumentParser(add_help=False, parents=[common])
    source.add_argument("--params", default=None, help="13개 파라미터가 담긴 json5 파일")
    source.add_argument("--scenario", default=None, help="카탈로그 시나리오의 파라미터를 사용")
    source.add_argument("--set", action="append", default=[], help="파라미터 덮어쓰기 k1=0.2,k2=1")

    parser = argparse.ArgumentParser(description="공포 효과 SIP 모델 수치 분석")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[source], help="시간 적분")
    p.add_argument("--x0", default=None, help="S,I,P")
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--continue-after-fte", action="store_true")

    for name, help_text in (("equilibria", "평형점 계산"), ("classify", "평형점 안정성 분류")):
        p = sub.add_parser(name, parents=[source], help=help_text)
        p.add_argument("--kinds", default=None, help="E1,E2,E3,E4 중 일부")

    p = sub.add_parser("continue1", parents=[source], help="1-파라미터 평형 분지 연속")
    p.add_argument("--free", required=True)
    p.add_argument("--range", required=True, help="min,max")
    p.add_argument("--seed-kind", default="E4", choices=["E2", "E3", "E4"])
    p.add_argument("--seed-value", type=float, default=None)
    p.add_argument("--switch-at-tc", action="store_true")
    p.add_argument("--no-lyapunov", action="store_true")

    p = sub.add_parser("continue2", parents=[source], help="2-파라미터 fold 곡선 연속")
    p.add_argument("--free", required=True, help="k2,K")
    p.add_argument("--seed-free", default=None, help="SN 을 찾을 1-파라미터 (기본: free 의 첫 번째)")
    p.add_argument("--seed-range", required=True, help="min,max")
    p.add_argument("--bounds", default=None, help="k2=0:2,K=2:8")

    p = sub.add_parser("sweep", parents=[source], help="파라미터 스윕")
    p.add_argument("--rows", required=True, help="k2=0,2,7 또는 k2=0:7:15")
    p.add_argument("--cols", default=None)
    p.add_argument("--x0", default=None)
    p.add_argument("--t-max", type=float, default=None)

    p = sub.add_parser("scenario", parents=[common], help="시나리오 카탈로그 실행")
    p.add_argument("name", nargs="?", default=None)
    p.add_argument("--all", action="store_true")
    p.add_argument("--list", action="store_true")
    p.add_argument("--filter", default=None, help="이름/주제/action 키워드")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_env()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "scenario":
            return run_catalog(args)
        return run_action(args)
    except SipError as e:
        log(TAG, str(e), "ERROR")
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
