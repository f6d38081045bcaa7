"""Bi-objective orchestration: lexicographic payoff tables, augmented epsilon-constraint
grid, Pareto filtering, compromise selection and robust-vs-deterministic comparisons.

Cost is minimized and frequency-days maximized throughout.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .deterministic import COST, FREQUENCY, DecodeError, Solution, VariableIndex, build_deterministic, decode
from .instance import Instance
from .milp import (CONTINUOUS, EQ, MIN, LinearConstraint, ModelIR, Objective, VariableDef, WarmStart,
                   add_variables, append_rows, fix_objective_bound, objective_terms)
from .robust import ScenarioConfig, transform
from .solvers.base import SolveConfig, SolveResult, Status, solve

log = logging.getLogger(__name__)

STRATEGIES = ("L", "LR", "LRWS", "LWS")
ORDERS = ("cost-first", "freq-first")
RELAX_FRACTION = 0.05
AUGMENTATION = 1e-3


class PayoffError(RuntimeError):
    pass


@dataclass(frozen=True)
class BinProblem:
    """A model together with what is needed to decode its solutions."""

    model: ModelIR
    index: VariableIndex
    instance: Instance
    scenario: ScenarioConfig | None = None

    @property
    def label(self) -> str:
        return "det" if self.scenario is None else self.scenario.label

    def decode(self, result: SolveResult) -> Solution:
        x = self.model.vector(result.values)
        return decode(x, self.index, self.instance)


def deterministic_problem(instance: Instance) -> BinProblem:
    model, index = build_deterministic(instance)
    return BinProblem(model, index, instance)


def robust_problem(instance: Instance, scenario: ScenarioConfig, base: BinProblem | None = None) -> BinProblem:
    base = base or deterministic_problem(instance)
    model, _ = transform(base.model, base.index, instance, scenario)
    return BinProblem(model, base.index, instance, scenario)


# --- lexicographic payoff ------------------------------------------------------

@dataclass
class StageRecord:
    strategy: str
    order: str
    stage: int
    status: Status
    cost: float | None
    frequency: float | None
    gap: float | None
    wall_time: float


@dataclass
class LexicographicRun:
    strategy: str
    order: str
    stage1: SolveResult
    stage2: SolveResult
    solution1: Solution
    solution2: Solution | None
    records: list[StageRecord]

    @property
    def improvement(self) -> tuple[float, float] | None:
        """Percent improvement of stage 2 over stage 1 for (cost, frequency); positive is better."""
        if self.solution2 is None:
            return None
        c1, f1 = self.solution1.objectives
        c2, f2 = self.solution2.objectives
        return ((c1 - c2) / c1 * 100.0 if c1 else 0.0, (f2 - f1) / f1 * 100.0 if f1 else 0.0)


@dataclass
class PayoffTable:
    best_cost: float
    freq_at_best_cost: float
    best_freq: float
    cost_at_best_freq: float
    runs: list[LexicographicRun] = field(default_factory=list)

    @property
    def records(self) -> list[StageRecord]:
        return [r for run in self.runs for r in run.records]

    def solutions(self) -> list[Solution]:
        out = []
        for run in self.runs:
            out.append(run.solution1)
            if run.solution2 is not None:
                out.append(run.solution2)
        return out


def _record(strategy, order, stage, result: SolveResult, sol: Solution | None) -> StageRecord:
    return StageRecord(strategy, order, stage, result.status, sol.cost if sol else None,
                       sol.frequency_objective if sol else None, result.gap, result.wall_time)


def lexicographic(problem: BinProblem, strategy: str = "LWS", order: str = "cost-first",
                  config: SolveConfig | None = None, relax_fraction: float = RELAX_FRACTION) -> LexicographicRun:
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if order not in ORDERS:
        raise ValueError(f"unknown order {order!r}")
    config = config or SolveConfig()
    model = problem.model
    first, second = (COST, FREQUENCY) if order == "cost-first" else (FREQUENCY, COST)
    k1, k2 = model.objective_index(first), model.objective_index(second)

    r1 = solve(model, k1, config.with_(warm_start=None))
    if not r1.has_solution:
        raise PayoffError(f"{strategy}/{order}: stage 1 ({first}) returned {r1.status}")
    sol1 = problem.decode(r1)
    relax = relax_fraction if strategy in ("LR", "LRWS") else 0.0
    stage1_value = sol1.cost if first == COST else sol1.frequency_objective
    bounded = fix_objective_bound(model, k1, stage1_value, relax, strategy)
    ws = WarmStart(dict(r1.values)) if strategy in ("LWS", "LRWS") else None
    r2 = solve(bounded, k2, config.with_(warm_start=ws))
    sol2 = problem.decode(r2) if r2.has_solution else None
    records = [_record(strategy, order, 1, r1, sol1), _record(strategy, order, 2, r2, sol2)]
    return LexicographicRun(strategy, order, r1, r2, sol1, sol2, records)


def payoff(problem: BinProblem, strategy: str = "LWS", config: SolveConfig | None = None,
           relax_fraction: float = RELAX_FRACTION) -> PayoffTable:
    """Both lexicographic orders with one strategy; the extremes bound the epsilon grid."""
    cost_first = lexicographic(problem, strategy, "cost-first", config, relax_fraction)
    freq_first = lexicographic(problem, strategy, "freq-first", config, relax_fraction)
    cf = cost_first.solution2 or cost_first.solution1
    ff = freq_first.solution2 or freq_first.solution1
    return PayoffTable(
        best_cost=cost_first.solution1.cost,
        freq_at_best_cost=cf.frequency_objective,
        best_freq=freq_first.solution1.frequency_objective,
        cost_at_best_freq=ff.cost,
        runs=[cost_first, freq_first],
    )


# --- Pareto machinery ----------------------------------------------------------

@dataclass
class ParetoPoint:
    solution: Solution
    cost: float
    frequency: float
    gap: float | None
    status: Status
    epsilon: float | None = None


@dataclass
class ParetoSet:
    points: list[ParetoPoint]
    scenario: ScenarioConfig | None = None
    n_runs: int = 0
    skipped: int = 0
    gaps: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def avg_gap(self) -> float | None:
        finite = [g for g in self.gaps if g is not None and math.isfinite(g)]
        return float(np.mean(finite)) if finite else None

    def objectives(self) -> list[tuple[float, float]]:
        return [(p.cost, p.frequency) for p in self.points]

    def min_cost(self) -> ParetoPoint:
        return min(self.points, key=lambda p: (p.cost, -p.frequency))

    def max_frequency(self) -> ParetoPoint:
        return min(self.points, key=lambda p: (-p.frequency, p.cost))


def dominates(a: tuple[float, float], b: tuple[float, float]) -> bool:
    """a = (cost, freq) weakly better in both and strictly better in one."""
    return a[0] <= b[0] and a[1] >= b[1] and (a[0] < b[0] or a[1] > b[1])


def non_dominated(points: Sequence, key=lambda p: (p.cost, p.frequency)) -> list:
    """Pareto filter; identical objective vectors keep their first occurrence. Sorted by cost."""
    items = list(points)
    keyed = [key(p) for p in items]
    keep = []
    seen: set[tuple[float, float]] = set()
    for k, p in enumerate(items):
        if keyed[k] in seen:
            continue
        if any(dominates(keyed[o], keyed[k]) for o in range(len(items)) if o != k):
            continue
        seen.add(keyed[k])
        keep.append((keyed[k], k, p))
    keep.sort(key=lambda t: (t[0][0], -t[0][1], t[1]))
    return [p for _, _, p in keep]


def augmented_model(model: ModelIR, freq_range: float, delta: float = AUGMENTATION) -> tuple[ModelIR, int, int]:
    """Model with freq - s = eps (rhs set per run) and objective cost - delta * s / range.

    Returns (model, epsilon row position, augmented objective index).
    """
    k_cost, k_freq = model.objective_index(COST), model.objective_index(FREQUENCY)
    out = add_variables(model, [VariableDef("eps_slack", CONTINUOUS, 0.0, math.inf)])
    s = out.var_index("eps_slack")
    row = LinearConstraint("eps_frequency", objective_terms(out, k_freq) + (("eps_slack", -1.0),), EQ, 0.0)
    out = append_rows(out, [row])
    cost = out.objectives[k_cost]
    aug = Objective("augmented", MIN, np.concatenate([cost.indices, [s]]),
                    np.concatenate([cost.coefs, [-delta / freq_range]]))
    out = out.with_objectives(list(out.objectives) + [aug])
    return out, out.n_constraints - 1, len(out.objectives) - 1


def _solve_grid_point(args):
    model, row, k_aug, eps, config = args
    return solve(model.with_rhs(row, eps), k_aug, config)


def epsilon_grid(low: float, high: float, n_runs: int) -> list[float]:
    return [float(v) for v in np.linspace(low, high, n_runs)]


def epsilon_constraint(problem: BinProblem, table: PayoffTable, n_runs: int = 10,
                       config: SolveConfig | None = None, workers: int = 1,
                       delta: float = AUGMENTATION) -> ParetoSet:
    if n_runs < 2:
        raise ValueError("n_runs must be >= 2")
    config = config or SolveConfig()
    low, high = table.freq_at_best_cost, table.best_freq
    if not high > low:
        sol = table.runs[0].solution2 or table.runs[0].solution1
        msg = "degenerate payoff range: the frontier collapses to a single point"
        log.warning(msg)
        st = table.runs[0].stage2 if table.runs[0].solution2 else table.runs[0].stage1
        point = ParetoPoint(sol, sol.cost, sol.frequency_objective, st.gap, st.status, low)
        return ParetoSet([point], problem.scenario, 1, 0, [st.gap] if st.gap is not None else [], [msg])

    aug, row, k_aug = augmented_model(problem.model, high - low, delta)
    grid = epsilon_grid(low, high, n_runs)
    jobs = [(aug, row, k_aug, eps, config) for eps in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_solve_grid_point, jobs))
    else:
        results = [_solve_grid_point(j) for j in jobs]

    candidates, gaps, skipped, warnings = [], [], 0, []
    for eps, res in zip(grid, results):
        if not res.has_solution:
            skipped += 1
            continue
        try:
            sol = decode(aug.vector(res.values), problem.index, problem.instance)
        except DecodeError as exc:
            skipped += 1
            warnings.append(f"epsilon={eps:g}: {exc}")
            continue
        gaps.append(res.gap)
        candidates.append(ParetoPoint(sol, sol.cost, sol.frequency_objective, res.gap, res.status, eps))
    return ParetoSet(non_dominated(candidates), problem.scenario, n_runs, skipped, gaps, warnings)


def ideal_vector(pareto: ParetoSet, table: PayoffTable | None = None) -> tuple[float, float]:
    costs = [p.cost for p in pareto.points]
    freqs = [p.frequency for p in pareto.points]
    if table is not None:
        costs += [s.cost for s in table.solutions()]
        freqs += [s.frequency_objective for s in table.solutions()]
    return min(costs), max(freqs)


def compromise(pareto: ParetoSet | Sequence[ParetoPoint], ideal: tuple[float, float]) -> ParetoPoint:
    points = pareto.points if isinstance(pareto, ParetoSet) else list(pareto)
    if not points:
        raise ValueError("empty Pareto set")
    c_star, f_star = ideal
    if c_star == 0 or f_star == 0 or not (math.isfinite(c_star) and math.isfinite(f_star)):
        raise ValueError(f"ideal vector {ideal} cannot normalize distances")

    def dist(p):
        return math.hypot((p.cost - c_star) / c_star, (p.frequency - f_star) / f_star)

    ranked = sorted(range(len(points)), key=lambda k: (dist(points[k]), points[k].cost, k))
    return points[ranked[0]]


class Comparison(NamedTuple):
    delta: float
    delta_c: float
    delta_f: float


def _objs(x) -> tuple[float, float]:
    if isinstance(x, Solution):
        return x.objectives
    if isinstance(x, ParetoPoint):
        return (x.cost, x.frequency)
    c, f = x
    return float(c), float(f)


def compare(robust, deterministic) -> Comparison:
    """Relative per-objective distance of robust from deterministic and their Euclidean norm."""
    rc, rf = _objs(robust)
    dc, df = _objs(deterministic)
    if dc == 0 or df == 0:
        raise ZeroDivisionError("deterministic objective value is zero")
    d_c = (rc - dc) / dc
    d_f = (rf - df) / df
    return Comparison(math.sqrt(d_c * d_c + d_f * d_f), d_c, d_f)


# --- scenario sweep ------------------------------------------------------------

REPRESENTATIVES = ("min-cost", "max-frequency", "compromise")


@dataclass(frozen=True)
class ComparisonRow:
    gamma: float
    rho: float
    representative: str
    delta: float
    delta_c: float
    delta_f: float


@dataclass
class ComparisonReport:
    """Rows in block order (min-cost, max-frequency, compromise), then Gamma-major."""

    rows: list[ComparisonRow]

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def gammas(self) -> list[float]:
        return sorted({r.gamma for r in self.rows})

    @property
    def rhos(self) -> list[float]:
        return sorted({r.rho for r in self.rows})

    def table3(self) -> list[dict]:
        """One record per (block, Gamma) with (delta, delta_c, delta_f) columns per rho."""
        lookup = {(r.representative, r.gamma, r.rho): r for r in self.rows}
        out = []
        for rep in REPRESENTATIVES:
            for g in self.gammas:
                rec: dict = {"block": rep, "gamma": g}
                for rho in self.rhos:
                    r = lookup.get((rep, g, rho))
                    for key in ("delta", "delta_c", "delta_f"):
                        rec[f"{key}@rho={rho:g}"] = None if r is None else getattr(r, key)
                out.append(rec)
        return out


def sort_rows(rows: Iterable[ComparisonRow]) -> list[ComparisonRow]:
    return sorted(rows, key=lambda r: (REPRESENTATIVES.index(r.representative), r.gamma, r.rho))


@dataclass
class CellResult:
    scenario: ScenarioConfig
    pareto: ParetoSet | None
    table: PayoffTable | None
    error: str | None = None


@dataclass
class SweepResult:
    deterministic: ParetoSet
    det_table: PayoffTable
    ideal: tuple[float, float]
    cells: list[CellResult]
    comparisons: ComparisonReport

    def table2(self) -> list[dict]:
        rows = []
        for cell in self.cells:
            p = cell.pareto
            rows.append({"gamma": cell.scenario.gamma_fraction, "rho": cell.scenario.rho,
                         "avg_gap": None if p is None else p.avg_gap,
                         "solutions": 0 if p is None else len(p), "error": cell.error or ""})
        return rows


def frontier_pipeline(problem: BinProblem, n_runs: int, config: SolveConfig,
                      strategy: str = "LWS", workers: int = 1) -> tuple[PayoffTable, ParetoSet]:
    table = payoff(problem, strategy, config)
    return table, epsilon_constraint(problem, table, n_runs, config, workers)


def representatives(pareto: ParetoSet, ideal: tuple[float, float]) -> dict[str, ParetoPoint]:
    return {"min-cost": pareto.min_cost(), "max-frequency": pareto.max_frequency(),
            "compromise": compromise(pareto, ideal)}


def _cell_job(args):
    instance, base, scenario, n_runs, config, strategy = args
    try:
        problem = robust_problem(instance, scenario, base)
        table, pareto = frontier_pipeline(problem, n_runs, config, strategy)
        return CellResult(scenario, pareto, table)
    except Exception as exc:  # one failed cell must not stop the sweep
        log.warning("scenario %s failed: %s", scenario.label, exc)
        return CellResult(scenario, None, None, f"{type(exc).__name__}: {exc}")


def scenario_sweep(instance: Instance, gammas: Sequence[float], rhos: Sequence[float],
                   config: SolveConfig | None = None, n_runs: int = 10, strategy: str = "LWS",
                   workers: int = 1, strict_dual_indexing: bool = False) -> SweepResult:
    if not gammas or not rhos:
        raise ValueError("gammas and rhos must be non-empty")
    config = config or SolveConfig()
    base = deterministic_problem(instance)
    det_table, det_pareto = frontier_pipeline(base, n_runs, config, strategy)
    ideal = ideal_vector(det_pareto, det_table)
    scenarios = [ScenarioConfig(rho=r, gamma_fraction=g, strict_dual_indexing=strict_dual_indexing)
                 for g in gammas for r in rhos]
    jobs = [(instance, base, s, n_runs, config, strategy) for s in scenarios]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_cell_job, jobs))
    else:
        cells = [_cell_job(j) for j in jobs]

    det_rep = {"min-cost": det_pareto.min_cost(), "max-frequency": det_pareto.max_frequency()}
    rows = []
    for cell in cells:
        if cell.pareto is None or not cell.pareto.points:
            continue
        rob = representatives(cell.pareto, ideal)
        for name in REPRESENTATIVES:
            ref = ideal if name == "compromise" else det_rep[name]
            cmp_ = compare(rob[name], ref)
            rows.append(ComparisonRow(cell.scenario.gamma_fraction, cell.scenario.rho, name,
                                      cmp_.delta, cmp_.delta_c, cmp_.delta_f))
    return SweepResult(det_pareto, det_table, ideal, cells, ComparisonReport(sort_rows(rows)))


def average_comparisons(reports: Iterable[Iterable[ComparisonRow]]) -> ComparisonReport:
    """Cell-wise mean over several instances' comparison rows (as the published summary does)."""
    acc: dict[tuple, list[ComparisonRow]] = {}
    for rows in reports:
        for r in rows:
            acc.setdefault((r.representative, r.gamma, r.rho), []).append(r)
    out = []
    for (rep, g, rho), rs in acc.items():
        out.append(ComparisonRow(g, rho, rep, float(np.mean([r.delta for r in rs])),
                                 float(np.mean([r.delta_c for r in rs])), float(np.mean([r.delta_f for r in rs]))))
    return ComparisonReport(sort_rows(out))
