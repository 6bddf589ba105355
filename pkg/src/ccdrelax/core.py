"""Problem model and single-shooting evaluation for CCD constraint problems.

The state, input and metric sequences are never free variables here: every
design ``(theta, phi)`` determines them through a forward rollout.  All maps
held by a :class:`CCDProblem` are vectorized over a leading batch axis so that
whole grids of designs can be evaluated in one pass.

Map signatures (``B`` = batch size)::

    dynamics(x (B, nx), u (B, nu), theta (B, ntheta)) -> (B, nx)
    control_law(x (B, nx), x_prev (B, nx), u_prev (B, nu), phi (B, nphi)) -> (B, nu)
    metric(states (B, N, nx), inputs (B, N-1, nu), theta, phi) -> (B,)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

FEAS_TOL = 1e-6


class ContractViolation(ValueError):
    """Raised when arguments break an operation's preconditions."""


class NumericOverflowError(ArithmeticError):
    """A rollout produced a non-finite value."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite value produced at step {step}")


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _bounds_pair(name, bounds, shape=None):
    lo, hi = (np.array(b, dtype=float) for b in bounds)
    if shape is not None:
        lo = np.broadcast_to(lo, shape).copy()
        hi = np.broadcast_to(hi, shape).copy()
    if lo.shape != hi.shape:
        raise ContractViolation(f"{name}: lower and upper bounds differ in shape")
    if np.any(lo > hi):
        raise ContractViolation(f"{name}: lower bound exceeds upper bound")
    return _readonly(lo), _readonly(hi)


@dataclass(frozen=True, eq=False)
class CCDProblem:
    """A CCD constraint-satisfaction instance.

    ``input_bounds`` may be given per step with shape ``(N-1, nu)`` or as a
    single ``(nu,)`` pair that is repeated for every step.  ``metric_bounds``
    is a sequence of ``(lb, ub)`` pairs, one per metric; infinite bounds are
    allowed.
    """

    horizon: int
    initial_state: np.ndarray
    dynamics: Callable
    control_law: Callable
    metrics: tuple
    input_bounds: tuple
    theta_bounds: tuple
    phi_bounds: tuple
    metric_bounds: np.ndarray
    metric_names: tuple = ()
    name: str = "ccd"

    def __post_init__(self):
        if int(self.horizon) != self.horizon or self.horizon < 2:
            raise ContractViolation("horizon must be an integer >= 2")
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "initial_state", _readonly(np.atleast_1d(self.initial_state)))

        metrics = tuple(self.metrics)
        if not metrics:
            raise ContractViolation("at least one metric is required")
        object.__setattr__(self, "metrics", metrics)

        mb = np.array(self.metric_bounds, dtype=float)
        if mb.shape != (len(metrics), 2):
            raise ContractViolation(
                f"metric_bounds must have shape ({len(metrics)}, 2), got {mb.shape}"
            )
        if np.any(mb[:, 0] > mb[:, 1]):
            bad = int(np.argmax(mb[:, 0] > mb[:, 1]))
            raise ContractViolation(f"metric {bad + 1}: lower bound exceeds upper bound")
        object.__setattr__(self, "metric_bounds", _readonly(mb))

        u_lo = np.atleast_1d(np.array(self.input_bounds[0], dtype=float))
        nu = u_lo.shape[-1]
        object.__setattr__(
            self,
            "input_bounds",
            _bounds_pair("input_bounds", self.input_bounds, (self.horizon - 1, nu)),
        )
        object.__setattr__(
            self, "theta_bounds", _bounds_pair("theta_bounds", [np.atleast_1d(b) for b in self.theta_bounds])
        )
        object.__setattr__(
            self, "phi_bounds", _bounds_pair("phi_bounds", [np.atleast_1d(b) for b in self.phi_bounds])
        )

        names = tuple(self.metric_names) or tuple(f"mu{m + 1}" for m in range(len(metrics)))
        if len(names) != len(metrics):
            raise ContractViolation("metric_names must match the number of metrics")
        object.__setattr__(self, "metric_names", names)

    @property
    def n_metrics(self) -> int:
        return len(self.metrics)

    @property
    def n_theta(self) -> int:
        return self.theta_bounds[0].size

    @property
    def n_phi(self) -> int:
        return self.phi_bounds[0].size

    @property
    def n_inputs(self) -> int:
        return self.input_bounds[0].shape[1]

    @property
    def design_lower(self) -> np.ndarray:
        return np.concatenate([self.theta_bounds[0], self.phi_bounds[0]])

    @property
    def design_upper(self) -> np.ndarray:
        return np.concatenate([self.theta_bounds[1], self.phi_bounds[1]])

    def with_metric_bounds(self, metric_bounds) -> "CCDProblem":
        """Copy of this problem with different metric bounds."""
        from dataclasses import replace

        return replace(self, metric_bounds=metric_bounds)


@dataclass(frozen=True)
class DesignPoint:
    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _readonly(np.atleast_1d(self.theta)))
        object.__setattr__(self, "phi", _readonly(np.atleast_1d(self.phi)))

    @classmethod
    def from_vector(cls, v, n_theta: int) -> "DesignPoint":
        v = np.asarray(v, dtype=float)
        return cls(v[:n_theta], v[n_theta:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.theta, self.phi])

    def __eq__(self, other):
        if not isinstance(other, DesignPoint):
            return NotImplemented
        return np.array_equal(self.theta, other.theta) and np.array_equal(self.phi, other.phi)

    def __hash__(self):
        return hash((self.theta.tobytes(), self.phi.tobytes()))


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray  # (N, nx)
    inputs: np.ndarray  # (N-1, nu)


@dataclass(frozen=True)
class MetricReport:
    values: np.ndarray
    violations: np.ndarray
    within_bounds: np.ndarray = field(repr=False)

    @property
    def n_within(self) -> int:
        return int(np.count_nonzero(self.within_bounds))


@dataclass(frozen=True)
class InputCheck:
    ok: bool
    worst_violation: float
    step: int | None  # 1-based step of the worst violation, None when ok


def _check_design(problem: CCDProblem, theta: np.ndarray, phi: np.ndarray):
    if theta.shape[-1] != problem.n_theta:
        raise ContractViolation(
            f"theta has dimension {theta.shape[-1]}, problem expects {problem.n_theta}"
        )
    if phi.shape[-1] != problem.n_phi:
        raise ContractViolation(
            f"phi has dimension {phi.shape[-1]}, problem expects {problem.n_phi}"
        )


def simulate_batch(problem: CCDProblem, thetas, phis, strict: bool = True):
    """Roll out ``B`` designs at once.

    Returns ``(states, inputs)`` with shapes ``(B, N, nx)`` and ``(B, N-1, nu)``.
    With ``strict=False`` non-finite values are left in place instead of
    raising, so callers can mark those designs infeasible.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    phis = np.atleast_2d(np.asarray(phis, dtype=float))
    _check_design(problem, thetas, phis)
    B = thetas.shape[0]
    N = problem.horizon
    x = np.broadcast_to(problem.initial_state, (B, problem.initial_state.size)).copy()
    x_prev = x
    u_prev = np.zeros((B, problem.n_inputs))
    states = np.empty((B, N, x.shape[1]))
    inputs = np.empty((B, N - 1, problem.n_inputs))
    states[:, 0] = x
    with np.errstate(all="ignore"):
        for k in range(N - 1):
            u = np.asarray(problem.control_law(x, x_prev, u_prev, phis), dtype=float)
            u = u.reshape(B, problem.n_inputs)
            x_next = np.asarray(problem.dynamics(x, u, thetas), dtype=float).reshape(B, -1)
            if strict and not (np.all(np.isfinite(u)) and np.all(np.isfinite(x_next))):
                raise NumericOverflowError(k + 1)
            inputs[:, k] = u
            states[:, k + 1] = x_next
            x_prev, x, u_prev = x, x_next, u
    return states, inputs


def simulate(problem: CCDProblem, design: DesignPoint) -> Trajectory:
    """Deterministic single-shooting rollout for one design."""
    states, inputs = simulate_batch(problem, design.theta[None, :], design.phi[None, :])
    return Trajectory(_readonly(states[0]), _readonly(inputs[0]))


def violation_magnitudes(values, bounds) -> np.ndarray:
    """Distance of each value outside its ``[lb, ub]`` interval (0 inside).

    ``values`` may carry a leading batch axis.
    """
    values = np.asarray(values, dtype=float)
    lb, ub = bounds[:, 0], bounds[:, 1]
    with np.errstate(invalid="ignore"):
        v = np.maximum(np.maximum(lb - values, values - ub), 0.0)
    # non-finite metric values count as unbounded violations
    return np.where(np.isfinite(values), v, np.inf)


def metric_values_batch(problem: CCDProblem, states, inputs, thetas, phis) -> np.ndarray:
    """Metric values with shape ``(B, M)``."""
    B = states.shape[0]
    cols = []
    with np.errstate(all="ignore"):
        for g in problem.metrics:
            cols.append(np.broadcast_to(np.asarray(g(states, inputs, thetas, phis), dtype=float), (B,)))
    return np.stack(cols, axis=1)


def input_violation_batch(problem: CCDProblem, inputs) -> np.ndarray:
    """Worst input-bound violation per design, shape ``(B,)``."""
    lo, hi = problem.input_bounds
    with np.errstate(invalid="ignore"):
        v = np.maximum(np.maximum(lo - inputs, inputs - hi), 0.0)
    v = np.where(np.isfinite(inputs), v, np.inf)
    return v.reshape(v.shape[0], -1).max(axis=1)


def make_report(problem: CCDProblem, values, tol: float = FEAS_TOL) -> MetricReport:
    values = _readonly(values)
    viol = _readonly(violation_magnitudes(values, problem.metric_bounds))
    within = viol <= tol
    within.setflags(write=False)
    return MetricReport(values, viol, within)


def evaluate_metrics(
    problem: CCDProblem, trajectory: Trajectory, design: DesignPoint, tol: float = FEAS_TOL
) -> MetricReport:
    values = metric_values_batch(
        problem,
        trajectory.states[None],
        trajectory.inputs[None],
        design.theta[None],
        design.phi[None],
    )[0]
    return make_report(problem, values, tol)


def check_input_bounds(problem: CCDProblem, trajectory: Trajectory, tol: float = FEAS_TOL) -> InputCheck:
    inputs = np.asarray(trajectory.inputs, dtype=float)
    if inputs.shape[0] != problem.horizon - 1:
        raise ContractViolation(
            f"trajectory has {inputs.shape[0]} inputs, horizon needs {problem.horizon - 1}"
        )
    lo, hi = problem.input_bounds
    per_step = np.maximum(np.maximum(lo - inputs, inputs - hi), 0.0).max(axis=1)
    k = int(np.argmax(per_step))
    worst = float(per_step[k])
    if worst <= tol:
        return InputCheck(True, worst, None)
    return InputCheck(False, worst, k + 1)


def design_points(problem: CCDProblem, vectors: Sequence) -> list[DesignPoint]:
    return [DesignPoint.from_vector(v, problem.n_theta) for v in vectors]
