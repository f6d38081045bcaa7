"""Solve configuration/result types and the backend dispatcher."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

from ..milp import ModelIR, WarmStart

DEFAULT_TIME_LIMIT = 1200.0


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    TIMEOUT_NO_SOLUTION = "timeout-no-solution"
    ERROR = "error"

    def __str__(self) -> str:
        return self.value

    @property
    def has_solution(self) -> bool:
        return self in (Status.OPTIMAL, Status.FEASIBLE)


class SolverUnavailableError(RuntimeError):
    """The configured external solver cannot be run (missing binary, bad template)."""


@dataclass(frozen=True)
class SolveConfig:
    time_limit: float = DEFAULT_TIME_LIMIT
    mip_gap_target: float = 0.0
    threads: int = 1
    warm_start: WarmStart | None = None
    backend: str = "internal"
    lp_engine: str = "highs"
    node_limit: int = 2_000_000
    max_integer_vars: int = 64
    abs_tol: float = 1e-7
    command: str | None = None
    dialect: str = "cbc-style"

    def __post_init__(self):
        if not self.time_limit > 0:
            raise ValueError("time_limit must be > 0")
        if not self.mip_gap_target >= 0:
            raise ValueError("mip_gap_target must be >= 0")

    def with_(self, **changes) -> "SolveConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass
class SolveResult:
    status: Status
    objective: float | None = None
    values: dict[str, float] = field(default_factory=dict)
    gap: float | None = None
    wall_time: float = 0.0
    best_bound: float | None = None
    nodes: int = 0
    message: str = ""

    @property
    def has_solution(self) -> bool:
        return self.status.has_solution


def relative_gap(bound: float, incumbent: float) -> float:
    if math.isinf(bound) or math.isinf(incumbent):
        return math.inf
    return abs(bound - incumbent) / max(1e-10, abs(incumbent))


def solve(model: ModelIR, objective_index: int = 0, config: SolveConfig | None = None) -> SolveResult:
    config = config or SolveConfig()
    if not model.objectives:
        raise ValueError("model has no objective")
    objective_index = model.objective_index(objective_index)
    if config.backend == "internal":
        from .bnb import internal_branch_and_bound

        return internal_branch_and_bound(model, objective_index, config)
    if config.backend == "external":
        from .external import solve_external

        return solve_external(model, objective_index, config)
    raise ValueError(f"unknown backend {config.backend!r}")


def objective_value(model: ModelIR, objective_index: int, values: Mapping[str, float]) -> float:
    return model.objectives[objective_index].value(model.vector(values))
