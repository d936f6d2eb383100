# tests/test_sweep.py
from __future__ import annotations

import os

import pytest

from src.analyses import sweep as sweep_mod
from src.analyses.sweep import SweepGrid, sweep
from src.core.errors import ConfigError
from src.core.model import State
from src.core.parser import find_scenario
from src.core.runner import compare_expected


def test_axis_forms():
    assert SweepGrid.axis([0, 1.2, 4]) == (0.0, 1.2, 4.0)
    assert SweepGrid.axis({"min": 0, "max": 1, "steps": 3}) == (0.0, 0.5, 1.0)
    with pytest.raises(ConfigError):
        SweepGrid.axis({"min": 0, "max": 1, "steps": 1})
    with pytest.raises(ConfigError):
        SweepGrid.axis("0,1")


def test_grid_validation():
    with pytest.raises(ConfigError):
        SweepGrid("nope", (1.0,))
    with pytest.raises(ConfigError):
        SweepGrid("k1", ())
    with pytest.raises(ConfigError):
        SweepGrid("k1", (1.0,), "k2", ())


def test_cells_are_row_major():
    grid = SweepGrid("k1", (0.0, 1.0), "k2", (2.0, 3.0, 4.0))
    assert grid.shape == (2, 3)
    cells = grid.cells()
    assert cells[0] == {"k1": 0.0, "k2": 2.0}
    assert cells[2] == {"k1": 0.0, "k2": 4.0}
    assert cells[3] == {"k1": 1.0, "k2": 2.0}
    assert SweepGrid("k1", (0.0, 1.0)).shape == (2, 1)


def test_parallel_matches_serial(hopf_tc):
    grid = SweepGrid("k1", (0.0, 1.2), "d1", (0.7, 6.0))
    x0 = State(0.8, 0.9, 1.1)
    serial = sweep(hopf_tc, grid, x0, t_max=200.0, jobs=1)
    parallel = sweep(hopf_tc, grid, x0, t_max=200.0, jobs=2)
    assert serial == parallel
    assert len(serial) == 2 and all(len(r) == 2 for r in serial)


def test_check_cells_and_matrix_file(hopf_tc, tmp_path):
    from src.core.config import RunContext

    ctx = RunContext(out_dir=str(tmp_path), scenario="sw", quiet=True)
    step = {"action": "sweep", "rows": {"param": "d1", "values": [6.0]}, "t_max": 1000.0}
    result = sweep_mod.check(hopf_tc.replace(k1=2.8, k2=2.0), step, ctx)
    assert result["cells"] == {"6": "converged-E3"}
    (path,) = result["files"]
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    assert lines[0] == "d1\\-,0"
    assert lines[1] == "6,converged-E3"


@pytest.mark.slow
def test_fear_k2_scenario_sweep(quiet_ctx):
    spec = find_scenario("fig4-fear-k2", os.path.join(os.path.dirname(__file__), "..", "scenarios"))
    ((idx, step),) = [(i, s) for i, s in enumerate(spec.steps, start=1) if s["action"] == "sweep"]
    assert step["rows"]["values"] == [0.0, 2.0, 7.0]
    result = sweep_mod.check(spec.params, step, quiet_ctx)
    assert result["cells"]["0"] == "oscillatory"
    checks = compare_expected(idx, result, step["expected"])
    assert all(c.passed for c in checks), [c.label for c in checks if not c.passed]
