"""JSON run configuration.

Unknown keys are rejected and missing keys take defaults, so ``{}`` is the
four-metric microgrid with every setting at its default.  JSON has no
infinity; a ``null`` metric bound means unbounded on that side.
"""

from __future__ import annotations

import json
import math
import re
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .baseline import DEFAULT_WEIGHT_LEVELS
from .core import CCDProblem
from .framework import ALL_HARD, FrameworkConfig
from .microgrid import DEFAULT_METRIC_BOUNDS, FOUR_METRIC, MicrogridParams, build_microgrid
from .ranking import GRID, CandidateScheme
from .solver import SolverConfig

_PRE_RELAX = re.compile(r"^pre-relax-bottom-(\d+)$")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("invalid configuration:\n  " + "\n  ".join(errors))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _ordered_pair(v, info):
    if len(v) != 2:
        raise ValueError(f"{info.field_name} must be [lower, upper]")
    if v[0] > v[1]:
        raise ValueError(f"{info.field_name}: lower bound {v[0]} exceeds upper bound {v[1]}")
    return v


class MetricSpec(_Strict):
    lb: Optional[float] = 0.0
    ub: Optional[float] = None
    weight: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _check(self):
        lo = -math.inf if self.lb is None else self.lb
        hi = math.inf if self.ub is None else self.ub
        if lo > hi:
            raise ValueError(f"lb {lo} exceeds ub {hi}")
        return self

    def pair(self):
        return (-math.inf if self.lb is None else self.lb, math.inf if self.ub is None else self.ub)


class ProblemSpec(_Strict):
    kind: Literal["microgrid"] = "microgrid"
    variant: Literal["two-metric", "four-metric"] = FOUR_METRIC
    horizon: int = Field(3, ge=2)
    initial_state: float = 10.0
    reference_state: float = 20.0
    input_bounds: List[float] = [0.0, 7.0]
    theta_bounds: List[float] = [0.1, 0.5]
    phi_bounds: List[float] = [0.1, 0.5]
    metrics: Optional[List[MetricSpec]] = None

    _pairs = field_validator("input_bounds", "theta_bounds", "phi_bounds")(_ordered_pair)

    @model_validator(mode="after")
    def _check(self):
        need = len(DEFAULT_METRIC_BOUNDS[self.variant])
        if self.metrics is not None and len(self.metrics) != need:
            raise ValueError(f"metrics: {self.variant} needs {need} entries, got {len(self.metrics)}")
        if self.variant == FOUR_METRIC and self.theta_bounds[0] <= 0:
            raise ValueError("theta_bounds: four-metric variant needs a positive lower bound")
        return self

    def metric_specs(self) -> list[MetricSpec]:
        if self.metrics is not None:
            return list(self.metrics)
        return [MetricSpec(lb=lb, ub=ub) for lb, ub in DEFAULT_METRIC_BOUNDS[self.variant]]


class SolverSpec(_Strict):
    grid_resolution: int = Field(201, ge=2)
    refinement: bool = True
    feasibility_tol: float = Field(1e-6, ge=0)


class RankingSpec(_Strict):
    kind: Literal["grid", "uniform-random"] = GRID
    theta_points: int = Field(5, ge=1)
    phi_points: int = Field(1, ge=1)
    samples: int = Field(10, ge=1)
    seed: int = Field(0, ge=0)


class FrameworkSpec(_Strict):
    init: str = ALL_HARD
    rows_per_advance: int = Field(1, ge=1)

    @field_validator("init")
    @classmethod
    def _init(cls, v):
        if v != ALL_HARD and not _PRE_RELAX.match(v):
            raise ValueError("init must be 'all-hard' or 'pre-relax-bottom-<k>'")
        return v

    @property
    def pre_relax(self) -> int:
        m = _PRE_RELAX.match(self.init)
        return int(m.group(1)) if m else 0


class BaselineSpec(_Strict):
    weight_levels: List[float] = list(DEFAULT_WEIGHT_LEVELS)

    @field_validator("weight_levels")
    @classmethod
    def _levels(cls, v):
        if not v:
            raise ValueError("weight_levels must not be empty")
        if any(w < 0 for w in v):
            raise ValueError("weight_levels must be nonnegative")
        return v


class OutputSpec(_Strict):
    format: Literal["csv", "json", "text"] = "json"


class RunConfig(_Strict):
    problem: ProblemSpec = ProblemSpec()
    solver: SolverSpec = SolverSpec()
    ranking: RankingSpec = RankingSpec()
    framework: FrameworkSpec = FrameworkSpec()
    baseline: BaselineSpec = BaselineSpec()
    output: OutputSpec = OutputSpec()

    @model_validator(mode="after")
    def _check(self):
        m = len(self.problem.metric_specs())
        if self.framework.pre_relax > m:
            raise ValueError(f"framework.init relaxes {self.framework.pre_relax} metrics but there are only {m}")
        return self

    def build_problem(self) -> CCDProblem:
        p = self.problem
        return build_microgrid(
            MicrogridParams(
                variant=p.variant,
                initial_charge=p.initial_state,
                reference_state=p.reference_state,
                horizon=p.horizon,
                input_bounds=tuple(p.input_bounds),
                theta_bounds=tuple(p.theta_bounds),
                phi_bounds=tuple(p.phi_bounds),
                metric_bounds=tuple(s.pair() for s in p.metric_specs()),
            )
        )

    def solver_config(self) -> SolverConfig:
        s = self.solver
        return SolverConfig(
            grid_resolution=s.grid_resolution,
            refinement_enabled=s.refinement,
            feasibility_tolerance=s.feasibility_tol,
        )

    def candidate_scheme(self) -> CandidateScheme:
        r = self.ranking
        return CandidateScheme(r.kind, r.theta_points, r.phi_points, r.samples, r.seed)

    def framework_config(self) -> FrameworkConfig:
        return FrameworkConfig(
            pre_relax=self.framework.pre_relax,
            rows_per_advance=self.framework.rows_per_advance,
            weights=tuple(s.weight for s in self.problem.metric_specs()),
            solver=self.solver_config(),
            ranking=self.candidate_scheme(),
        )


def _loc(err) -> str:
    return ".".join(str(p) for p in err["loc"]) or "<root>"


def parse_config(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<root>: malformed JSON ({exc.msg} at line {exc.lineno} column {exc.colno})"]) from None
    if not isinstance(data, dict):
        raise ConfigError(["<root>: configuration must be a JSON object"])
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError([f"{_loc(e)}: {e['msg']}" for e in exc.errors()]) from None


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def with_overrides(cfg: RunConfig, seed: int | None = None, grid: int | None = None) -> RunConfig:
    if seed is not None:
        cfg = cfg.model_copy(update={"ranking": cfg.ranking.model_copy(update={"seed": seed})})
    if grid is not None:
        cfg = cfg.model_copy(update={"solver": cfg.solver.model_copy(update={"grid_resolution": grid})})
    # model_copy skips validation
    return parse_config(dump_config(cfg))

