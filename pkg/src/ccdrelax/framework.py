"""Ranking-driven relaxation loop.

Metrics are ranked once up front.  Starting from an initial selection the
reduced problem is solved; each infeasible verdict relaxes further metrics by
walking up the ranked list until a solve succeeds or every metric has been
relaxed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import CCDProblem, ContractViolation, DesignPoint, MetricReport, Trajectory
from .ranking import CandidateScheme, RankedList, rank_problem
from .relaxation import ReducedProblem, Selection
from .solver import SolverConfig, SolveStatus, solve_reduced

ALL_HARD = "all-hard"


class FrameworkStatus(str, enum.Enum):
    SOLVED = "SOLVED"
    IRREDUCIBLY_INFEASIBLE = "IRREDUCIBLY_INFEASIBLE"


@dataclass(frozen=True)
class FrameworkConfig:
    """Loop settings.

    ``pre_relax`` is the number of worst-ranked metrics relaxed before the
    first solve; 0 means every metric starts hard.
    """

    pre_relax: int = 0
    rows_per_advance: int = 1
    weights: tuple | None = None  # None -> all ones
    solver: SolverConfig = field(default_factory=SolverConfig)
    ranking: CandidateScheme = field(default_factory=CandidateScheme)

    def __post_init__(self):
        if self.rows_per_advance < 1:
            raise ContractViolation("rows_per_advance must be a positive integer")
        if self.pre_relax < 0:
            raise ContractViolation("pre_relax must be nonnegative")
        if self.weights is not None and any(w <= 0 for w in self.weights):
            raise ContractViolation("framework weights must be strictly positive")


@dataclass(frozen=True)
class IterationRecord:
    selection: Selection
    status: SolveStatus
    objective: float | None
    evaluations: int


@dataclass(frozen=True)
class FrameworkResult:
    status: FrameworkStatus
    selection: Selection
    ranking: RankedList
    iterations: tuple
    design: DesignPoint | None = None
    trajectory: Trajectory | None = None
    report: MetricReport | None = None
    slacks: np.ndarray | None = None
    objective: float | None = None

    @property
    def relaxed(self) -> frozenset:
        return self.selection.relaxed

    @property
    def solves(self) -> int:
        return len(self.iterations)


def initialize_selection(ranked: RankedList, pre_relax: int = 0) -> Selection:
    m = len(ranked.order)
    if not 0 <= pre_relax <= m:
        raise ContractViolation(f"cannot pre-relax {pre_relax} of {m} metrics")
    return Selection.relaxing(m, ranked.order[m - pre_relax :] if pre_relax else ())


def advance_selection(current: Selection, ranked: RankedList, rows: int = 1) -> Selection:
    """Move up the ranked list by ``rows`` and relax everything below."""
    if rows < 1:
        raise ContractViolation("rows must be positive")
    m = len(ranked.order)
    if not current.relaxed ^ frozenset(range(m)):
        raise ContractViolation("every metric is already relaxed")
    relaxed_positions = [ranked.position(i) for i in current.relaxed]
    p = min(relaxed_positions) if relaxed_positions else m
    start = max(0, p - rows)
    return Selection.relaxing(m, ranked.order[start:])


def run_framework(problem: CCDProblem, config: FrameworkConfig | None = None) -> FrameworkResult:
    config = config or FrameworkConfig()
    m = problem.n_metrics
    weights = np.ones(m) if config.weights is None else np.asarray(config.weights, dtype=float)
    if weights.shape != (m,):
        raise ContractViolation(f"framework weights must have length {m}")

    ranked = rank_problem(problem, config.ranking, config.solver.feasibility_tolerance)
    selection = initialize_selection(ranked, config.pre_relax)
    log = []
    while True:
        reduced = ReducedProblem(problem, selection, weights, config.solver.feasibility_tolerance)
        outcome = solve_reduced(reduced, config.solver)
        log.append(IterationRecord(selection, outcome.status, outcome.objective, outcome.evaluations))
        if outcome.feasible:
            cls = outcome.classification
            return FrameworkResult(
                FrameworkStatus.SOLVED,
                selection,
                ranked,
                tuple(log),
                outcome.design,
                cls.trajectory,
                cls.report,
                cls.slacks,
                outcome.objective,
            )
        if len(selection.relaxed) == m:
            return FrameworkResult(FrameworkStatus.IRREDUCIBLY_INFEASIBLE, selection, ranked, tuple(log))
        selection = advance_selection(selection, ranked, config.rows_per_advance)
