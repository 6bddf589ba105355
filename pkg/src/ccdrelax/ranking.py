"""Rank metrics by how often a small candidate population violates their bounds."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import (
    FEAS_TOL,
    CCDProblem,
    ContractViolation,
    DesignPoint,
    metric_values_batch,
    simulate_batch,
    violation_magnitudes,
)

GRID = "grid"
RANDOM = "uniform-random"


@dataclass(frozen=True)
class CandidateScheme:
    """How to draw candidate designs.

    The default reproduces the five-point sweep over theta with phi pinned at
    its lower bound.
    """

    kind: str = GRID
    theta_points: int = 5
    phi_points: int = 1
    samples: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (GRID, RANDOM):
            raise ContractViolation(f"unknown candidate scheme {self.kind!r}")


@dataclass(frozen=True)
class RankedList:
    order: tuple  # 0-based metric indices, least violated first
    counts: tuple  # tallies aligned with order
    candidates_evaluated: int

    def position(self, metric: int) -> int:
        return self.order.index(metric)


def _axis(lo: float, hi: float, n: int) -> np.ndarray:
    if n == 1:
        return np.array([lo])
    return np.linspace(lo, hi, n)


def generate_candidates(problem: CCDProblem, scheme: CandidateScheme) -> list[DesignPoint]:
    lo, hi = problem.design_lower, problem.design_upper
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ContractViolation("candidate generation needs a finite design box")
    nt = problem.n_theta
    if scheme.kind == GRID:
        if scheme.theta_points < 1 or scheme.phi_points < 1:
            raise ContractViolation("grid schemes need at least one point per dimension")
        counts = [scheme.theta_points] * nt + [scheme.phi_points] * problem.n_phi
        axes = [_axis(a, b, n) for a, b, n in zip(lo, hi, counts)]
        vectors = [np.array(p) for p in itertools.product(*axes)]
    else:
        if scheme.samples < 1:
            raise ContractViolation("random schemes need at least one sample")
        rng = np.random.default_rng(scheme.seed)
        vectors = list(rng.uniform(lo, hi, size=(scheme.samples, lo.size)))
    return [DesignPoint.from_vector(v, nt) for v in vectors]


def tally_violations(problem: CCDProblem, candidates, tol: float = FEAS_TOL) -> np.ndarray:
    if not candidates:
        raise ContractViolation("candidate list is empty")
    thetas = np.array([c.theta for c in candidates])
    phis = np.array([c.phi for c in candidates])
    states, inputs = simulate_batch(problem, thetas, phis)
    values = metric_values_batch(problem, states, inputs, thetas, phis)
    viol = violation_magnitudes(values, problem.metric_bounds)
    return (viol > tol).sum(axis=0).astype(int)


def rank_metrics(counts) -> RankedList:
    counts = [int(c) for c in counts]
    # sorted() is stable, so equal tallies keep index order
    order = tuple(sorted(range(len(counts)), key=lambda m: counts[m]))
    return RankedList(order, tuple(counts[m] for m in order), 0)


def rank_problem(problem: CCDProblem, scheme: CandidateScheme | None = None, tol: float = FEAS_TOL) -> RankedList:
    candidates = generate_candidates(problem, scheme or CandidateScheme())
    ranked = rank_metrics(tally_violations(problem, candidates, tol))
    return RankedList(ranked.order, ranked.counts, len(candidates))
