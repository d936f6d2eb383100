# tests/test_integrator.py
from __future__ import annotations

import math

import numpy as np
import pytest

from src.core.errors import StepSizeUnderflowError
from src.core.integrator import Dopri5, solve_fixed

A_LIN = np.array([[-0.5, 1.0, 0.0],
                  [-1.0, -0.5, 0.0],
                  [0.0, 0.0, -2.0]])


def _linear(_t, y):
    return A_LIN @ y


def _exact(t, y0):
    vals, vecs = np.linalg.eig(A_LIN)
    c = np.linalg.solve(vecs, y0)
    return np.real(vecs @ (c * np.exp(vals * t)))


def test_fixed_step_order():
    y0 = np.array([1.0, 0.0, 1.0])
    errs = []
    for n in (20, 40, 80, 160):
        errs.append(np.max(np.abs(solve_fixed(_linear, 0.0, y0, 4.0, n) - _exact(4.0, y0))))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 4.5


def test_adaptive_accuracy_and_dense_output():
    y0 = np.array([1.0, 0.0, 1.0])
    solver = Dopri5(_linear, 0.0, y0, 10.0, rtol=1e-10, atol=1e-12)
    worst = 0.0
    while not solver.finished:
        seg = solver.step()
        for t in np.linspace(seg.t0, seg.t1, 5):
            worst = max(worst, float(np.max(np.abs(seg(float(t)) - _exact(float(t), y0)))))
        assert np.allclose(seg(seg.t1), solver.y, atol=1e-12)
    assert solver.t == 10.0
    assert np.allclose(solver.y, _exact(10.0, y0), atol=1e-8)
    assert worst < 1e-7


def test_reset_recomputes_slope():
    solver = Dopri5(_linear, 0.0, np.array([1.0, 1.0, 1.0]), 1.0)
    solver.step()
    solver.reset(np.zeros(3))
    assert np.array_equal(solver.fy, np.zeros(3))


def test_step_size_underflow():
    # t = 1 에서 폭발하는 해 y' = y^2, y(0) = 1
    solver = Dopri5(lambda _t, y: y * y, 0.0, np.array([1.0]), 2.0, rtol=1e-10, atol=1e-12)
    with pytest.raises(StepSizeUnderflowError):
        while not solver.finished:
            solver.step()
