"""Ranking-based relaxation of metric bounds for infeasible control co-design problems."""

from .baseline import BaselineReport, count_within_bounds, enumerate_weight_combos, run_baseline
from .core import (
    FEAS_TOL,
    CCDProblem,
    ContractViolation,
    DesignPoint,
    MetricReport,
    NumericOverflowError,
    Trajectory,
    check_input_bounds,
    evaluate_metrics,
    simulate,
)
from .framework import (
    FrameworkConfig,
    FrameworkResult,
    FrameworkStatus,
    advance_selection,
    initialize_selection,
    run_framework,
)
from .microgrid import MicrogridParams, PhysicalBattery, build_microgrid, theta_from_physical
from .ranking import CandidateScheme, RankedList, generate_candidates, rank_metrics, rank_problem, tally_violations
from .relaxation import ReducedProblem, Selection, classify_design, optimal_slacks, relaxed_objective
from .solver import SolveOutcome, SolverConfig, SolveStatus, grid_oracle, solve_reduced

__version__ = "0.1.0"

__all__ = [
    "BaselineReport",
    "CCDProblem",
    "CandidateScheme",
    "ContractViolation",
    "DesignPoint",
    "FEAS_TOL",
    "FrameworkConfig",
    "FrameworkResult",
    "FrameworkStatus",
    "MetricReport",
    "MicrogridParams",
    "NumericOverflowError",
    "PhysicalBattery",
    "RankedList",
    "ReducedProblem",
    "Selection",
    "SolveOutcome",
    "SolveStatus",
    "SolverConfig",
    "Trajectory",
    "advance_selection",
    "build_microgrid",
    "check_input_bounds",
    "classify_design",
    "count_within_bounds",
    "enumerate_weight_combos",
    "evaluate_metrics",
    "generate_candidates",
    "grid_oracle",
    "initialize_selection",
    "optimal_slacks",
    "rank_metrics",
    "rank_problem",
    "relaxed_objective",
    "run_baseline",
    "run_framework",
    "simulate",
    "solve_reduced",
    "tally_violations",
    "theta_from_physical",
]
