"""Slack/selection reformulation of the metric bounds.

Each metric gets one slack that serves both its lower and upper bound rows.
A selection entry of ``True`` keeps the metric hard; ``False`` relaxes it
and charges ``w * s**2`` to the objective.  For a fixed design the optimal
slack has a closed form (the violation magnitude), so slacks never become
search variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    FEAS_TOL,
    CCDProblem,
    ContractViolation,
    DesignPoint,
    MetricReport,
    Trajectory,
    check_input_bounds,
    evaluate_metrics,
    simulate,
    violation_magnitudes,
)


@dataclass(frozen=True)
class Selection:
    """Per-metric hard/relaxed switches (``True`` = hard bound)."""

    hard: tuple

    def __post_init__(self):
        object.__setattr__(self, "hard", tuple(bool(h) for h in self.hard))

    @classmethod
    def all_hard(cls, m: int) -> "Selection":
        return cls((True,) * m)

    @classmethod
    def all_relaxed(cls, m: int) -> "Selection":
        return cls((False,) * m)

    @classmethod
    def from_bits(cls, bits: str) -> "Selection":
        """Parse a bitstring such as ``"0101"`` (1 = hard)."""
        bits = bits.strip()
        if not bits or set(bits) - {"0", "1"}:
            raise ContractViolation(f"selection must be a string of 0/1, got {bits!r}")
        return cls(tuple(c == "1" for c in bits))

    @classmethod
    def relaxing(cls, m: int, relaxed) -> "Selection":
        relaxed = set(relaxed)
        return cls(tuple(i not in relaxed for i in range(m)))

    def __len__(self):
        return len(self.hard)

    @property
    def bits(self) -> str:
        return "".join("1" if h else "0" for h in self.hard)

    @property
    def mask(self) -> np.ndarray:
        return np.array(self.hard, dtype=bool)

    @property
    def relaxed(self) -> frozenset:
        return frozenset(i for i, h in enumerate(self.hard) if not h)


def optimal_slacks(report: MetricReport, selection: Selection) -> np.ndarray:
    if len(selection) != len(report.values):
        raise ContractViolation("selection length does not match the number of metrics")
    return np.where(selection.mask, 0.0, report.violations)


def relaxed_objective(slacks, weights) -> float:
    """Weighted sum of squared slacks."""
    slacks = np.asarray(slacks, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if slacks.shape != weights.shape:
        raise ContractViolation("slacks and weights differ in length")
    if np.any(slacks < 0):
        raise ContractViolation("slacks must be nonnegative")
    if np.any(weights < 0):
        raise ContractViolation("weights must be nonnegative")
    return float(np.sum(weights * slacks**2))


@dataclass(frozen=True)
class Classification:
    objective: float
    feasible: bool
    report: MetricReport
    slacks: np.ndarray
    trajectory: Trajectory
    hard_violation: float  # worst of hard-metric and input violations


@dataclass(frozen=True, eq=False)
class ReducedProblem:
    """A problem with a fixed selection and weights, as a function of design only.

    Zero weights are accepted (the baseline sweep needs them); the framework
    validates strict positivity on its own configuration.
    """

    problem: CCDProblem
    selection: Selection
    weights: np.ndarray = None
    tol: float = FEAS_TOL

    def __post_init__(self):
        m = self.problem.n_metrics
        if len(self.selection) != m:
            raise ContractViolation(f"selection has length {len(self.selection)}, problem has {m} metrics")
        w = np.ones(m) if self.weights is None else np.array(self.weights, dtype=float)
        if w.shape != (m,):
            raise ContractViolation(f"weights must have length {m}")
        if np.any(w < 0):
            raise ContractViolation("weights must be nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def objective(self, design: DesignPoint) -> Classification:
        return classify_design(self, design)

    def score_batch(self, values: np.ndarray, input_violation: np.ndarray):
        """Vectorized ``(J, hard_violation)`` for precomputed metric values.

        ``values`` has shape ``(B, M)``; a design is feasible under the
        selection when ``hard_violation <= tol``.
        """
        viol = violation_magnitudes(values, self.problem.metric_bounds)
        hard = self.selection.mask
        relaxed_viol = np.where(hard, 0.0, viol)
        with np.errstate(invalid="ignore", over="ignore"):
            J = (self.weights * relaxed_viol**2).sum(axis=1)
        J = np.where(np.isnan(J), np.inf, J)
        hard_viol = np.where(hard, viol, 0.0).max(axis=1) if hard.any() else np.zeros(len(values))
        return J, np.maximum(hard_viol, input_violation)


def classify_design(reduced: ReducedProblem, design: DesignPoint) -> Classification:
    problem = reduced.problem
    traj = simulate(problem, design)
    report = evaluate_metrics(problem, traj, design, reduced.tol)
    slacks = optimal_slacks(report, reduced.selection)
    J = relaxed_objective(slacks, reduced.weights)
    inputs = check_input_bounds(problem, traj, reduced.tol)
    hard = reduced.selection.mask
    hard_viol = float(report.violations[hard].max()) if hard.any() else 0.0
    worst = max(hard_viol, inputs.worst_violation)
    return Classification(J, worst <= reduced.tol, report, slacks, traj, worst)
