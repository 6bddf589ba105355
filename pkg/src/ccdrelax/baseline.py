"""Relax-everything baseline with a sweep over objective weights."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .core import FEAS_TOL, CCDProblem, ContractViolation, DesignPoint, MetricReport
from .relaxation import ReducedProblem, Selection
from .solver import SolveOutcome, SolverConfig, evaluate_grid, solve_reduced

DEFAULT_WEIGHT_LEVELS = (0.0, 0.25, 0.75, 1.0)


@dataclass(frozen=True)
class Trial:
    index: int  # 1-based
    weights: tuple
    design: DesignPoint | None
    values: np.ndarray | None
    in_bounds: int | None
    within: tuple | None = None
    error: str | None = None


@dataclass(frozen=True)
class BaselineReport:
    weight_levels: tuple
    trials: tuple
    original_outcome: SolveOutcome

    @property
    def short_circuited(self) -> bool:
        return self.original_outcome.feasible

    @property
    def histogram(self) -> dict:
        c = Counter(t.in_bounds for t in self.trials if t.in_bounds is not None)
        return dict(sorted(c.items()))

    @property
    def max_in_bounds(self) -> int | None:
        counts = [t.in_bounds for t in self.trials if t.in_bounds is not None]
        return max(counts) if counts else None

    @property
    def trials_achieving_max(self) -> int:
        best = self.max_in_bounds
        return sum(1 for t in self.trials if best is not None and t.in_bounds == best)

    @property
    def fraction_achieving_max(self) -> float:
        return self.trials_achieving_max / len(self.trials) if self.trials else 0.0


def enumerate_weight_combos(levels, m: int) -> list[tuple]:
    levels = tuple(float(v) for v in levels)
    if not levels or m < 1:
        raise ContractViolation("need at least one weight level and one metric")
    return list(itertools.product(levels, repeat=m))


def count_within_bounds(report: MetricReport, tol: float = FEAS_TOL) -> int:
    return int(np.count_nonzero(np.asarray(report.violations) <= tol))


def run_baseline(problem: CCDProblem, levels=DEFAULT_WEIGHT_LEVELS, config: SolverConfig | None = None) -> BaselineReport:
    config = config or SolverConfig()
    tol = config.feasibility_tolerance
    m = problem.n_metrics
    grid = evaluate_grid(problem, config.grid_resolution)
    original = solve_reduced(ReducedProblem(problem, Selection.all_hard(m), None, tol), config, grid)
    if original.feasible:
        return BaselineReport(tuple(levels), (), original)

    trials = []
    relaxed = Selection.all_relaxed(m)
    for idx, w in enumerate(enumerate_weight_combos(levels, m), start=1):
        try:
            out = solve_reduced(ReducedProblem(problem, relaxed, w, tol), config, grid)
        except (ArithmeticError, ValueError) as exc:
            trials.append(Trial(idx, w, None, None, None, error=str(exc)))
            continue
        if not out.feasible:
            trials.append(Trial(idx, w, None, None, None, error="no design satisfies the input bounds"))
            continue
        report = out.classification.report
        trials.append(
            Trial(
                idx,
                w,
                out.design,
                report.values,
                count_within_bounds(report, tol),
                tuple(bool(b) for b in report.within_bounds),
            )
        )
    return BaselineReport(tuple(float(v) for v in levels), tuple(trials), original)
