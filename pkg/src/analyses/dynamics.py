# src/analyses/dynamics.py
"""
========== 시간 적분 Dynamics ==========

| 타입 | Types |
- Event       : FTE | Converged | IExtinct | BoundViolation | Nonconvergent
- Trajectory  : 표본 (t, State), 이벤트, 종료 사유

| 연산 | Operations |
- integrate                           : DOPRI5 적분 + 사건 감지 (유한시간 멸종, 수렴, 감염 소멸, 단조/유계 감시)
- check_selective_predation_threshold : d1 > (e0 K - a1 b0)/b0
- classify_endpoint                   : 끝점 → 평형점 매칭 / FTE / IExtinct / 비수렴
+ outcome_tag                         : 스윕 셀 태그 (converged-E4, oscillatory, fte ...)

- check / check_threshold             : 러너 진입점 (action = "simulate" / "threshold")
========================================
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.core.config import DEFAULT_TOLERANCES, RunContext, Tolerances
from src.core.errors import AmbiguousEndpointError, ConfigError, StepSizeUnderflowError
from src.core.integrator import DenseSegment, Dopri5
from src.core.model import ParamSet, State, boundedness_bound, rhs
from src.core.report import fmt, log, print_block

TAG = "DYNAMICS"

FTE = "FTE"
CONVERGED = "Converged"
I_EXTINCT = "IExtinct"
BOUND_VIOLATION = "BoundViolation"
NONCONVERGENT = "Nonconvergent"

I_EXTINCT_LEVEL = 1e-8
I_EXTINCT_FRACTION = 0.1
BOUND_SLACK = 1e-6
TAIL_FRACTION = 0.2


@dataclass(frozen=True)
class Event:
    kind: str
    time: float
    state: State
    detail: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    events: Tuple[Event, ...]
    terminated_by: str  # max-time | fte | converged | bound-violation
    reduced: bool = False

    @property
    def samples(self) -> List[Tuple[float, State]]:
        return [(float(t), State.of(y)) for t, y in zip(self.t, self.y)]

    @property
    def final(self) -> State:
        return State.of(self.y[-1])

    def events_of(self, kind: str) -> List[Event]:
        return [e for e in self.events if e.kind == kind]

    def tail_amplitude(self, fraction: float = TAIL_FRACTION) -> Tuple[float, float, float]:
        """마지막 fraction 구간의 성분별 (max - min)."""
        t_cut = self.t[-1] - fraction * (self.t[-1] - self.t[0])
        tail = self.y[self.t >= t_cut]
        if tail.shape[0] == 0:
            return (0.0, 0.0, 0.0)
        amp = tail.max(axis=0) - tail.min(axis=0)
        return (float(amp[0]), float(amp[1]), float(amp[2]))


@dataclass(frozen=True)
class IntegrateOptions:
    continue_after_fte: bool = False
    stop_on_converged: bool = True
    monitor_bounds: bool = True


# =====================================================================
# 적분
# =====================================================================
def _clamped_rhs(p: ParamSet, clamp: float, pin_s: bool):
    def f(_t: float, y: np.ndarray) -> np.ndarray:
        z = np.where((y < 0.0) & (y >= -clamp), 0.0, y)
        if pin_s:
            z = z.copy()
            z[0] = 0.0
        g = rhs(p, z)
        if pin_s:
            g[0] = 0.0
        return g
    return f


def _locate_crossing(seg: DenseSegment, level: float, tol: float) -> Tuple[float, np.ndarray]:
    """구간 안에서 S(t) = level 이 되는 첫 시각 (보간 다항식 위 이분법)."""
    a, b = seg.t0, seg.t1
    # 보간 곡선이 구간 안에서 먼저 level 을 건너는 경우를 위해 촘촘히 훑은 뒤 이분
    grid = np.linspace(a, b, 17)
    prev = a
    for t in grid[1:]:
        if seg(float(t))[0] <= level:
            b = float(t)
            break
        prev = float(t)
    a = prev
    while b - a > tol:
        m = 0.5 * (a + b)
        if seg(m)[0] > level:
            a = m
        else:
            b = m
    return b, seg(b)


def _run(p: ParamSet, x0: np.ndarray, t_max: float, tol: Tolerances, opts: IntegrateOptions) -> Trajectory:
    grid = np.linspace(0.0, t_max, tol.n_samples)
    ts: List[float] = [0.0]
    ys: List[np.ndarray] = [x0.copy()]
    events: List[Event] = []
    next_idx = 1

    pinned = x0[0] <= 0.0
    solver = Dopri5(_clamped_rhs(p, tol.clamp, pinned), 0.0, x0, t_max, rtol=tol.rtol, atol=tol.atol)

    bound = None
    if opts.monitor_bounds and x0[0] <= p.K:
        bb = boundedness_bound(p, float(np.sum(x0)))
        if bb is not None:
            bound = bb[2] + BOUND_SLACK

    i_low_since: Optional[float] = None
    i_extinct_done = False
    terminated = "max-time"
    reduced = pinned

    def emit_until(seg: DenseSegment, t_stop: float) -> None:
        nonlocal next_idx
        while next_idx < grid.size and grid[next_idx] <= t_stop:
            y = seg(float(grid[next_idx]))
            if reduced:
                y[0] = 0.0
            ts.append(float(grid[next_idx]))
            ys.append(np.where((y < 0.0) & (y >= -tol.clamp), 0.0, y))
            next_idx += 1

    def finish(t_end: float, y_end: np.ndarray) -> None:
        if t_end > ts[-1]:
            ts.append(t_end)
            ys.append(y_end)

    while not solver.finished:
        seg = solver.step()
        y_new = solver.y

        if not reduced and seg.y0[0] > tol.eps_ext and y_new[0] <= tol.eps_ext:
            t_star, y_star = _locate_crossing(seg, tol.eps_ext, tol.event_time_tol)
            emit_until(seg, t_star)
            y_star = y_star.copy()
            y_star[0] = min(y_star[0], tol.eps_ext)
            events.append(Event(FTE, t_star, State.of(np.maximum(y_star, 0.0)),
                                {"eps_ext": tol.eps_ext}))
            log(TAG, f"유한시간 멸종 t* = {t_star:.6f}", "DEBUG")
            if not opts.continue_after_fte:
                finish(t_star, np.maximum(y_star, 0.0))
                terminated = "fte"
                break
            # S ≡ 0 축약계로 계속: dI = -a1 I - d1 I P, dP = -a2 P + d3 I P
            reduced = True
            solver.f = _clamped_rhs(p, tol.clamp, True)
            y_reset = y_new.copy()
            y_reset[0] = 0.0
            solver.reset(y_reset)
            y_new = solver.y

        if np.any(y_new < -tol.clamp):
            emit_until(seg, seg.t1)
            events.append(Event(BOUND_VIOLATION, solver.t, State.of(y_new), {"monitor": "nonnegativity"}))
            log(TAG, f"음수 성분 감지 t = {solver.t:.6g}: {fmt(tuple(y_new))}", "WARN")
            terminated = "bound-violation"
            break
        if np.any(y_new < 0.0):
            solver.reset(np.maximum(y_new, 0.0))
            y_new = solver.y

        emit_until(seg, seg.t1)

        if bound is not None and float(np.sum(y_new)) > bound:
            events.append(Event(BOUND_VIOLATION, solver.t, State.of(y_new),
                                {"monitor": "boundedness", "bound": bound}))
            log(TAG, f"유계성 상한 {bound:.6g} 초과 t = {solver.t:.6g}", "WARN")
            finish(solver.t, y_new.copy())
            terminated = "bound-violation"
            break

        if not i_extinct_done:
            if y_new[1] < I_EXTINCT_LEVEL:
                if i_low_since is None:
                    i_low_since = seg.t0 if seg.y0[1] < I_EXTINCT_LEVEL else solver.t
                if solver.t - i_low_since >= I_EXTINCT_FRACTION * t_max:
                    events.append(Event(I_EXTINCT, solver.t, State.of(y_new), {"since": i_low_since}))
                    i_extinct_done = True
            else:
                i_low_since = None

        if float(np.max(np.abs(solver.fy))) <= tol.converge_tol:
            events.append(Event(CONVERGED, solver.t, State.of(y_new), {"residual": float(np.max(np.abs(solver.fy)))}))
            if opts.stop_on_converged:
                finish(solver.t, y_new.copy())
                terminated = "converged"
                break

    if terminated == "max-time":
        y_end = solver.y.copy()
        if reduced:
            y_end[0] = 0.0
        finish(t_max, np.maximum(y_end, 0.0))

    return Trajectory(np.array(ts), np.array(ys), tuple(events), terminated, reduced)


def integrate(p: ParamSet, x0: State, t_max: Optional[float] = None,
              opts: Optional[IntegrateOptions] = None,
              tol: Tolerances = DEFAULT_TOLERANCES) -> Trajectory:
    """
    x0 에서 t_max 까지 적분. S 가 eps_ext 를 처음 건너는 시각을 FTE 로 기록하고,
    continue_after_fte 가 아니면 거기서 멈춘다. 스텝 하한에 걸리면 허용오차를 1/10 로
    조여 한 번 더 시도한 뒤 StepSizeUnderflowError.
    """
    opts = opts or IntegrateOptions()
    t_max = tol.t_max if t_max is None else float(t_max)
    if not t_max > 0.0:
        raise ConfigError(f"[{TAG}] t_max 는 양수여야 합니다: {t_max}")
    if not x0.nonnegative:
        raise ConfigError(f"[{TAG}] 초기값은 음이 아니어야 합니다: {x0.as_tuple()}")
    y0 = x0.array()

    if float(np.max(np.abs(rhs(p, y0)))) == 0.0:
        grid = np.linspace(0.0, t_max, tol.n_samples)
        return Trajectory(grid, np.tile(y0, (grid.size, 1)), (), "max-time", y0[0] == 0.0)

    try:
        return _run(p, y0, t_max, tol, opts)
    except StepSizeUnderflowError as exc:
        log(TAG, f"{exc} → 허용오차를 1/10 로 조여 재시도", "WARN")
        tight = replace(tol, rtol=tol.rtol / 10.0, atol=tol.atol / 10.0)
        return _run(p, y0, t_max, tight, opts)


# =====================================================================
# 선택적 포식 / 끝점 분류
# =====================================================================
def check_selective_predation_threshold(p: ParamSet) -> Tuple[float, bool]:
    """충분조건 d1 > (e0 K - a1 b0)/b0 이면 감염 먹이 소멸."""
    threshold = (p.e0 * p.K - p.a1 * p.b0) / p.b0
    return threshold, p.d1 > threshold


def classify_endpoint(p: ParamSet, traj: Trajectory, tol: Tolerances = DEFAULT_TOLERANCES) -> Event:
    from src.analyses.equilibria import all_equilibria

    ftes = traj.events_of(FTE)
    if ftes:
        return ftes[0]
    if traj.terminated_by == "bound-violation":
        return traj.events_of(BOUND_VIOLATION)[-1]

    x = traj.y[-1]
    t_end = float(traj.t[-1])
    matches = []
    for e in all_equilibria(p):
        loc = e.array()
        if float(np.max(np.abs(x - loc))) <= tol.match_rel * max(1.0, float(np.max(np.abs(loc)))):
            matches.append(e)
    if len(matches) > 1:
        raise AmbiguousEndpointError(
            f"[{TAG}] 끝점 {fmt(tuple(x))} 이 여러 평형점과 일치: {[m.kind for m in matches]}")
    if matches:
        e = matches[0]
        return Event(CONVERGED, t_end, State.of(x),
                     {"equilibrium": e.kind, "location": e.location.as_tuple()})
    if float(np.max(np.abs(x))) <= tol.match_rel:
        return Event(CONVERGED, t_end, State.of(x), {"equilibrium": "E0", "location": (0.0, 0.0, 0.0)})

    extinct = traj.events_of(I_EXTINCT)
    if extinct:
        return extinct[0]
    return Event(NONCONVERGENT, t_end, State.of(x), {"amplitude": traj.tail_amplitude()})


def outcome_tag(ev: Event) -> str:
    if ev.kind == CONVERGED:
        return f"converged-{ev.detail.get('equilibrium', '?')}"
    if ev.kind == NONCONVERGENT:
        return "oscillatory"
    if ev.kind == FTE:
        return "fte"
    if ev.kind == I_EXTINCT:
        return "I-extinct"
    return "bound-violation"


# =====================================================================
# 엔트리 포인트
# =====================================================================
def _event_row(ev: Event) -> Dict[str, Any]:
    return {"kind": ev.kind, "time": ev.time, "S": ev.state.S, "I": ev.state.I, "P": ev.state.P,
            "detail": dict(ev.detail)}


def check(params: ParamSet, step: Dict[str, Any], ctx: RunContext) -> Dict[str, Any]:
    from src.core import export

    x0 = State.of(step.get("x0") or (0.8, 0.9, 1.1))
    opts = IntegrateOptions(
        continue_after_fte=bool(step.get("continue_after_fte", False)),
        stop_on_converged=bool(step.get("stop_on_converged", True)),
    )
    traj = integrate(params, x0, step.get("t_max"), opts, ctx.tol)
    endpoint = classify_endpoint(params, traj, ctx.tol)

    files: List[str] = []
    path = ctx.path("trajectory")
    if path:
        export.write_trajectory(path, traj, ctx.fmt)
        files.append(path)

    metrics: Dict[str, float] = {"t_end": float(traj.t[-1]), "samples": float(traj.t.size)}
    ftes = traj.events_of(FTE)
    if ftes:
        metrics["t_star"] = ftes[0].time

    if not ctx.quiet:
        print_block(TAG, "simulate", "PASS",
                    reason=f"종료 사유: {traj.terminated_by}, 끝점: {outcome_tag(endpoint)}",
                    details={"x0": fmt(x0.as_tuple(), 5), "final": fmt(traj.final.as_tuple(), 5)},
                    evidence=[f"{e.kind} t={e.time:.6g} {fmt(e.state.as_tuple(), 5)}" for e in traj.events])
    return {
        "action": "simulate",
        "status": "PASS",
        "events": [_event_row(e) for e in traj.events],
        "endpoint": dict(_event_row(endpoint), tag=outcome_tag(endpoint)),
        "metrics": metrics,
        "files": files,
    }


def check_threshold(params: ParamSet, step: Dict[str, Any], ctx: RunContext) -> Dict[str, Any]:
    threshold, predicted = check_selective_predation_threshold(params)
    if not ctx.quiet:
        print_block(TAG, "threshold", "PASS",
                    reason=f"d1 = {params.d1:g} {'>' if predicted else '<='} 임계값 {threshold:.6g}",
                    details={"predicted_extinct": predicted})
    return {
        "action": "threshold",
        "status": "PASS",
        "metrics": {"threshold": threshold, "predicted_extinct": 1.0 if predicted else 0.0},
        "files": [],
    }
