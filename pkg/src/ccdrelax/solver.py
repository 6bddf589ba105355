"""Derivative-free solver for reduced (design-only) problems.

A dense inclusive grid over the design box is evaluated in one vectorized
pass, then a compass search polishes the best feasible grid point.  When the
grid holds no feasible point, compass searches on the worst hard violation
are launched from the least-violating grid points; only if all of them fail
is the problem declared infeasible.  That verdict is a heuristic, not a
certificate, though at the grid densities used here it is a strong one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import (
    FEAS_TOL,
    CCDProblem,
    ContractViolation,
    DesignPoint,
    NumericOverflowError,
    input_violation_batch,
    metric_values_batch,
    simulate_batch,
)
from .relaxation import Classification, ReducedProblem, classify_design

CHUNK = 250_000
RESTARTS = 5


class SolveStatus(str, enum.Enum):
    FEASIBLE = "FEASIBLE"
    INFEASIBLE = "INFEASIBLE"


@dataclass(frozen=True)
class SolverConfig:
    grid_resolution: int = 201
    refinement_enabled: bool = True
    refinement_initial_step: float = 0.05
    refinement_shrink_factor: float = 0.5
    refinement_min_step: float = 1e-7
    feasibility_tolerance: float = FEAS_TOL
    max_refinement_evaluations: int = 20_000

    def __post_init__(self):
        if self.grid_resolution < 2:
            raise ContractViolation("grid_resolution must be >= 2")
        if not 0 < self.refinement_shrink_factor < 1:
            raise ContractViolation("refinement_shrink_factor must lie in (0, 1)")
        if not 0 < self.refinement_min_step < self.refinement_initial_step:
            raise ContractViolation("need 0 < refinement_min_step < refinement_initial_step")
        if self.feasibility_tolerance < 0:
            raise ContractViolation("feasibility_tolerance must be nonnegative")


@dataclass(frozen=True)
class SolveOutcome:
    status: SolveStatus
    evaluations: int
    design: DesignPoint | None = None
    objective: float | None = None
    classification: Classification | None = None
    best_infeasible_design: DesignPoint | None = None
    worst_hard_violation: float | None = None
    method: str = ""

    @property
    def feasible(self) -> bool:
        return self.status is SolveStatus.FEASIBLE


@dataclass(frozen=True, eq=False)
class GridEvaluation:
    """Metric values and input violations on an inclusive design grid.

    Points are stored in lexicographic order of their coordinates, so the
    first index among equal scores is the lexicographically smallest design.
    """

    problem: CCDProblem
    resolution: int
    points: np.ndarray  # (G, D)
    values: np.ndarray  # (G, M)
    input_violation: np.ndarray  # (G,)

    def design(self, i: int) -> DesignPoint:
        return DesignPoint.from_vector(self.points[i], self.problem.n_theta)


def _grid_axes(problem: CCDProblem, resolution: int):
    lo, hi = problem.design_lower, problem.design_upper
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ContractViolation("grid search needs a finite design box")
    return [np.array([a]) if a == b else np.linspace(a, b, resolution) for a, b in zip(lo, hi)]


@lru_cache(maxsize=8)
def evaluate_grid(problem: CCDProblem, resolution: int) -> GridEvaluation:
    axes = _grid_axes(problem, resolution)
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    nt = problem.n_theta
    values = np.empty((len(points), problem.n_metrics))
    inp = np.empty(len(points))
    for start in range(0, len(points), CHUNK):
        chunk = points[start : start + CHUNK]
        th, ph = chunk[:, :nt], chunk[:, nt:]
        states, inputs = simulate_batch(problem, th, ph, strict=False)
        values[start : start + CHUNK] = metric_values_batch(problem, states, inputs, th, ph)
        inp[start : start + CHUNK] = input_violation_batch(problem, inputs)
    for a in (points, values, inp):
        a.setflags(write=False)
    return GridEvaluation(problem, resolution, points, values, inp)


def _first_min(scores: np.ndarray, mask: np.ndarray | None = None) -> int:
    s = scores if mask is None else np.where(mask, scores, np.inf)
    best = s.min()
    return int(np.flatnonzero(s == best)[0])


def _grid_scores(reduced: ReducedProblem, grid: GridEvaluation):
    J, hv = reduced.score_batch(grid.values, grid.input_violation)
    return J, hv, hv <= reduced.tol


def grid_oracle(reduced: ReducedProblem, resolution: int, grid: GridEvaluation | None = None) -> SolveOutcome:
    """Exhaustive evaluation on the inclusive uniform grid."""
    if resolution < 2:
        raise ContractViolation("resolution must be >= 2")
    grid = grid or evaluate_grid(reduced.problem, resolution)
    J, hv, feas = _grid_scores(reduced, grid)
    n = len(J)
    if feas.any():
        i = _first_min(J, feas)
        cls = classify_design(reduced, grid.design(i))
        return SolveOutcome(
            SolveStatus.FEASIBLE, n, grid.design(i), float(J[i]), cls, method="grid"
        )
    i = _first_min(hv)
    return SolveOutcome(
        SolveStatus.INFEASIBLE,
        n,
        best_infeasible_design=grid.design(i),
        worst_hard_violation=float(hv[i]),
        method="grid",
    )


def compass_search(f, x0, f0, lower, upper, initial_step, shrink, min_step, max_evals, stop=None):
    """Coordinate pattern search inside a box.

    Steps are fractions of each dimension's width.  A sweep polls +/- step
    along every coordinate, accepting strict improvements immediately; a
    sweep without improvement shrinks the step.  Returns ``(x, fx, evals)``.
    """
    x = np.array(x0, dtype=float)
    fx = f0
    width = upper - lower
    step = initial_step
    evals = 0
    while step >= min_step and evals < max_evals:
        improved = False
        for i in range(x.size):
            if width[i] == 0:
                continue
            for sign in (1.0, -1.0):
                y = x.copy()
                y[i] = min(max(x[i] + sign * step * width[i], lower[i]), upper[i])
                if y[i] == x[i]:
                    continue
                fy = f(y)
                evals += 1
                if fy < fx:
                    x, fx, improved = y, fy, True
                    if stop is not None and stop(fx):
                        return x, fx, evals
        if not improved:
            step *= shrink
    return x, fx, evals


class _Evaluator:
    """Caches single-design classifications during refinement."""

    def __init__(self, reduced: ReducedProblem):
        self.reduced = reduced
        self.nt = reduced.problem.n_theta
        self._cache: dict[bytes, Classification | None] = {}

    def classify(self, v: np.ndarray) -> Classification | None:
        key = v.tobytes()
        if key not in self._cache:
            try:
                self._cache[key] = classify_design(self.reduced, DesignPoint.from_vector(v, self.nt))
            except NumericOverflowError:
                self._cache[key] = None
        return self._cache[key]

    def objective(self, v) -> float:
        c = self.classify(v)
        return c.objective if c is not None and c.feasible else np.inf

    def hard_violation(self, v) -> float:
        c = self.classify(v)
        return np.inf if c is None else c.hard_violation


def solve_reduced(
    reduced: ReducedProblem, config: SolverConfig | None = None, grid: GridEvaluation | None = None
) -> SolveOutcome:
    config = config or SolverConfig()
    if config.feasibility_tolerance != reduced.tol:
        reduced = ReducedProblem(reduced.problem, reduced.selection, reduced.weights, config.feasibility_tolerance)
    grid = grid or evaluate_grid(reduced.problem, config.grid_resolution)
    J, hv, feas = _grid_scores(reduced, grid)
    evals = len(J)
    lo, hi = reduced.problem.design_lower, reduced.problem.design_upper
    ev = _Evaluator(reduced)

    def refine(f, x0, f0, stop=None):
        return compass_search(
            f,
            x0,
            f0,
            lo,
            hi,
            config.refinement_initial_step,
            config.refinement_shrink_factor,
            config.refinement_min_step,
            config.max_refinement_evaluations,
            stop,
        )

    if feas.any():
        i = _first_min(J, feas)
        x, fx = grid.points[i], float(J[i])
        method = "grid"
        if config.refinement_enabled:
            x_new, f_new, n = refine(ev.objective, x, ev.objective(x))
            evals += n + 1
            if f_new < fx:
                x, fx, method = x_new, f_new, "grid+compass"
        cls = ev.classify(x)
        return SolveOutcome(
            SolveStatus.FEASIBLE,
            evals,
            DesignPoint.from_vector(x, ev.nt),
            float(cls.objective),
            cls,
            method=method,
        )

    best_x, best_v = grid.points[_first_min(hv)], float(hv.min())
    if config.refinement_enabled:
        starts = np.argsort(hv, kind="stable")[:RESTARTS]
        found = []
        for i in starts:
            x0 = grid.points[i]
            x, v, n = refine(ev.hard_violation, x0, ev.hard_violation(x0), stop=lambda v: v <= reduced.tol)
            evals += n + 1
            if v < best_v:
                best_x, best_v = x, v
            if v <= reduced.tol:
                xj, fj, n = refine(ev.objective, x, ev.objective(x))
                evals += n
                found.append((fj, tuple(xj)))
        if found:
            fj, xj = min(found)
            x = np.array(xj)
            cls = ev.classify(x)
            return SolveOutcome(
                SolveStatus.FEASIBLE,
                evals,
                DesignPoint.from_vector(x, ev.nt),
                float(cls.objective),
                cls,
                method="restoration+compass",
            )
    return SolveOutcome(
        SolveStatus.INFEASIBLE,
        evals,
        best_infeasible_design=DesignPoint.from_vector(best_x, ev.nt),
        worst_hard_violation=best_v,
        method="grid+compass" if config.refinement_enabled else "grid",
    )


def metric_extremes(problem: CCDProblem, resolution: int):
    """Per-metric minimum over the grid and the design attaining it."""
    grid = evaluate_grid(problem, resolution)
    idx = [_first_min(grid.values[:, m]) for m in range(problem.n_metrics)]
    return [(float(grid.values[i, m]), grid.design(i)) for m, i in enumerate(idx)]
