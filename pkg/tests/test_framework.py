import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccdrelax.core import CCDProblem, ContractViolation, check_input_bounds
from ccdrelax.framework import (
    FrameworkConfig,
    FrameworkStatus,
    advance_selection,
    initialize_selection,
    run_framework,
)
from ccdrelax.microgrid import MicrogridParams, build_microgrid
from ccdrelax.ranking import rank_metrics
from ccdrelax.relaxation import Selection
from ccdrelax.solver import SolverConfig, SolveStatus

RANKED = rank_metrics([5, 0, 4, 1])  # order mu2, mu4, mu3, mu1


def test_initialize():
    assert initialize_selection(RANKED).bits == "1111"
    assert initialize_selection(RANKED, 1).bits == "0111"
    assert initialize_selection(RANKED, 0) == initialize_selection(RANKED)
    with pytest.raises(ContractViolation):
        initialize_selection(RANKED, 5)


@pytest.mark.parametrize(
    "current, rows, expected",
    [("1111", 1, "0111"), ("0111", 1, "0101"), ("1111", 4, "0000"), ("0101", 2, "0000"), ("0101", 1, "0100")],
)
def test_advance(current, rows, expected):
    assert advance_selection(Selection.from_bits(current), RANKED, rows).bits == expected


def test_advance_all_relaxed_rejected():
    with pytest.raises(ContractViolation):
        advance_selection(Selection.from_bits("0000"), RANKED)


def test_four_metric_run(grid4):
    res = run_framework(grid4)
    assert res.status is FrameworkStatus.SOLVED
    assert res.relaxed == {0, 2}
    assert [it.selection.bits for it in res.iterations] == ["1111", "0111", "0101"]
    assert [it.status for it in res.iterations] == [SolveStatus.INFEASIBLE, SolveStatus.INFEASIBLE, SolveStatus.FEASIBLE]
    v = res.report.values
    assert v[1] <= 20 + 1e-6 and v[3] <= 5 + 1e-6
    assert res.slacks[1] == 0 and res.slacks[3] == 0
    assert check_input_bounds(grid4, res.trajectory).ok


def test_two_metric_run(grid2):
    res = run_framework(grid2)
    assert res.status is FrameworkStatus.SOLVED
    assert res.relaxed == {0}
    assert res.report.within_bounds[1]


def test_loose_bounds_single_solve():
    p = build_microgrid(MicrogridParams(metric_bounds=[(-1e9, 1e9)] * 4))
    res = run_framework(p)
    assert res.status is FrameworkStatus.SOLVED
    assert res.relaxed == frozenset() and res.objective == 0 and res.solves == 1


def test_pre_relax_start(grid4):
    res = run_framework(grid4, FrameworkConfig(pre_relax=1))
    assert [it.selection.bits for it in res.iterations] == ["0111", "0101"]


def test_irreducibly_infeasible():
    # input ceiling below anything the controller can produce
    p = build_microgrid(MicrogridParams(input_bounds=(0.0, 0.5)))
    res = run_framework(p, FrameworkConfig(solver=SolverConfig(grid_resolution=41)))
    assert res.status is FrameworkStatus.IRREDUCIBLY_INFEASIBLE
    assert res.selection.bits == "0000"
    assert res.design is None


def test_weights_must_be_positive():
    with pytest.raises(ContractViolation):
        FrameworkConfig(weights=(1, 0, 1, 1))


def _toy(bounds):
    """One scalar design, metrics m_i(theta) = theta; feasibility set by the bounds."""
    metrics = tuple((lambda s, u, th, ph: th[:, 0]) for _ in bounds)
    return CCDProblem(
        horizon=2,
        initial_state=[0.0],
        dynamics=lambda x, u, th: x + u,
        control_law=lambda x, xp, up, ph: np.zeros_like(x),
        metrics=metrics,
        input_bounds=([-1.0], [1.0]),
        theta_bounds=([0.0], [1.0]),
        phi_bounds=([0.0], [0.0]),
        metric_bounds=bounds,
    )


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)).map(sorted), min_size=1, max_size=5),
    st.integers(1, 3),
)
def test_termination_and_monotonic_log(bounds, rows):
    p = _toy(bounds)
    cfg = FrameworkConfig(rows_per_advance=rows, solver=SolverConfig(grid_resolution=21))
    res = run_framework(p, cfg)
    m = len(bounds)
    assert res.solves <= math.ceil(m / rows) + 1
    relaxed = [it.selection.relaxed for it in res.iterations]
    for a, b in zip(relaxed, relaxed[1:]):
        assert a < b
    assert res.status is FrameworkStatus.SOLVED  # the all-relaxed problem is always feasible here
    for i in range(m):
        if i not in res.relaxed:
            assert res.report.within_bounds[i]
