import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccdrelax.core import (
    CCDProblem,
    ContractViolation,
    DesignPoint,
    NumericOverflowError,
    Trajectory,
    check_input_bounds,
    evaluate_metrics,
    simulate,
    violation_magnitudes,
)
from ccdrelax.microgrid import MicrogridParams, build_microgrid

from oracles import hand_rollout, mu1_closed, mu2_closed

box = st.floats(0.1, 0.5)


@pytest.mark.parametrize(
    "theta, phi, states, inputs",
    [
        (0.1, 0.1, [10, 2.0, 2.0], [1.0, 1.8]),
        (0.5, 0.1, [10, 6.0, 4.4], [1.0, 1.4]),
    ],
)
def test_simulate_examples(grid4, theta, phi, states, inputs):
    traj = simulate(grid4, DesignPoint([theta], [phi]))
    np.testing.assert_allclose(traj.states.ravel(), states, atol=1e-12)
    np.testing.assert_allclose(traj.inputs.ravel(), inputs, atol=1e-12)
    xs, us = hand_rollout(theta, phi)
    np.testing.assert_allclose(traj.states.ravel(), xs, atol=1e-12)
    np.testing.assert_allclose(traj.inputs.ravel(), us, atol=1e-12)


@pytest.mark.parametrize("theta", [0.1, 0.3, 0.5])
def test_zero_gain_decays(theta):
    p = build_microgrid(MicrogridParams(phi_bounds=(0.0, 0.5)))
    traj = simulate(p, DesignPoint([theta], [0.0]))
    np.testing.assert_array_equal(traj.inputs.ravel(), [0, 0])
    np.testing.assert_allclose(traj.states.ravel(), [10, 10 * theta, 10 * theta**2])


def test_trajectory_shape_and_start(grid4):
    traj = simulate(grid4, DesignPoint([0.3], [0.2]))
    assert traj.states.shape == (3, 1)
    assert traj.inputs.shape == (2, 1)
    assert traj.states[0, 0] == 10


@settings(max_examples=50, deadline=None)
@given(box, box)
def test_simulate_deterministic(grid4, theta, phi):
    a = simulate(grid4, DesignPoint([theta], [phi]))
    b = simulate(grid4, DesignPoint([theta], [phi]))
    assert a.states.tobytes() == b.states.tobytes()
    assert a.inputs.tobytes() == b.inputs.tobytes()


@settings(max_examples=200, deadline=None)
@given(box, box)
def test_closed_form_metrics(grid4, theta, phi):
    d = DesignPoint([theta], [phi])
    values = evaluate_metrics(grid4, simulate(grid4, d), d).values
    assert abs(values[0] - mu1_closed(theta, phi)) <= 1e-12
    assert abs(values[1] - mu2_closed(theta, phi)) <= 1e-12


def test_dimension_mismatch(grid4):
    with pytest.raises(ContractViolation):
        simulate(grid4, DesignPoint([0.1, 0.2], [0.1]))
    with pytest.raises(ContractViolation):
        simulate(grid4, DesignPoint([0.1], [0.1, 0.3]))


def test_overflow_reports_step():
    p = CCDProblem(
        horizon=5,
        initial_state=[1.0],
        dynamics=lambda x, u, th: x * th,
        control_law=lambda x, xp, up, ph: np.zeros_like(x),
        metrics=(lambda s, u, th, ph: s[:, -1, 0],),
        input_bounds=([0.0], [1.0]),
        theta_bounds=([0.0], [1e300]),
        phi_bounds=([0.0], [1.0]),
        metric_bounds=[(0, 1)],
    )
    with pytest.raises(NumericOverflowError) as err:
        simulate(p, DesignPoint([1e300], [0.0]))
    assert err.value.step == 2


def test_first_step_convention():
    seen = {}

    def law(x, x_prev, u_prev, phi):
        seen.setdefault("first", (x.copy(), x_prev.copy(), u_prev.copy()))
        return phi * (x - x_prev) + u_prev + 1.0

    p = CCDProblem(
        horizon=3,
        initial_state=[4.0],
        dynamics=lambda x, u, th: x + u,
        control_law=law,
        metrics=(lambda s, u, th, ph: s[:, -1, 0],),
        input_bounds=([-10.0], [10.0]),
        theta_bounds=([0.0], [1.0]),
        phi_bounds=([0.0], [1.0]),
        metric_bounds=[(-100, 100)],
    )
    traj = simulate(p, DesignPoint([0.5], [1.0]))
    x, xp, up = seen["first"]
    assert x[0, 0] == 4 and xp[0, 0] == 4 and up[0, 0] == 0
    # u1 = 1, x2 = 5, u2 = (5 - 4) + 1 + 1 = 3
    np.testing.assert_allclose(traj.inputs.ravel(), [1.0, 3.0])


def test_metric_values_table_rows(grid4):
    for theta, expected in [(0.1, [10.0, 14.0, 0.1, 10.0]), (0.3, [11.2, 13.0, 0.3, 3.33])]:
        d = DesignPoint([theta], [0.1])
        np.testing.assert_allclose(evaluate_metrics(grid4, simulate(grid4, d), d).values, expected, atol=5e-3)


def test_within_bounds_row2(grid4):
    d = DesignPoint([0.2], [0.1])
    r = evaluate_metrics(grid4, simulate(grid4, d), d)
    np.testing.assert_allclose(r.values, [10.7, 13.5, 0.2, 5.0], atol=1e-9)
    assert r.within_bounds.tolist() == [False, True, False, True]


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(-10, 10), st.floats(0, 10))
def test_violation_magnitude(value, lb, width):
    ub = lb + width
    v = violation_magnitudes(np.array([value]), np.array([[lb, ub]]))[0]
    assert v >= 0
    if lb <= value <= ub:
        assert v == 0
    else:
        assert v == pytest.approx(min(abs(value - lb), abs(value - ub)))


def test_input_bounds_examples(grid4):
    traj = simulate(grid4, DesignPoint([0.1], [0.5]))
    np.testing.assert_allclose(traj.inputs.ravel(), [5.0, 7.0])
    assert check_input_bounds(grid4, traj).ok

    check = check_input_bounds(grid4, simulate(grid4, DesignPoint([0.1], [0.1])))
    assert check.ok and check.worst_violation == 0

    fake = Trajectory(np.array([[10.0], [1.0], [1.0]]), np.array([[7.5], [1.0]]))
    check = check_input_bounds(grid4, fake)
    assert not check.ok
    assert check.worst_violation == pytest.approx(0.5)
    assert check.step == 1


def test_problem_validation():
    kwargs = dict(
        horizon=3,
        initial_state=[1.0],
        dynamics=None,
        control_law=None,
        metrics=(None,),
        input_bounds=([0.0], [1.0]),
        theta_bounds=([0.0], [1.0]),
        phi_bounds=([0.0], [1.0]),
        metric_bounds=[(0, 1)],
    )
    CCDProblem(**kwargs)
    for bad in (
        {"horizon": 1},
        {"theta_bounds": ([1.0], [0.0])},
        {"metric_bounds": [(2, 1)]},
        {"metric_bounds": [(0, 1), (0, 1)]},
        {"metrics": ()},
    ):
        with pytest.raises(ContractViolation):
            CCDProblem(**{**kwargs, **bad})
