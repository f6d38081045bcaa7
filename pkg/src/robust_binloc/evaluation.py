"""Monte Carlo stress tests of fixed designs under sampled waste rates.

Each sample perturbs every nominal rate independently as b * (1 + rho * xi)
with xi ~ U[-1, 1]. Samples are drawn in fixed-size chunks, chunk k from
``default_rng([seed, k])``, so results depend only on the seed and the
instance shape. Every solution simulated with the same seed therefore sees
the same draws (common random numbers).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .deterministic import Solution
from .instance import Instance
from .moo import REPRESENTATIVES, ParetoSet, compare, compromise, ideal_vector

CHUNK = 1000
OVERFLOW_TOL = 1e-9


@dataclass(frozen=True)
class McConfig:
    n_samples: int = 10000
    seed: int = 0
    rho: float | None = None  # None: use each scenario's own rho where one applies

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.rho is not None and not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")


@dataclass
class ViolationReport:
    violation_probability: float
    row_rates: dict[tuple[int, int], float] = field(default_factory=dict)
    worst_overflow: float = 0.0
    n_samples: int = 0
    rho: float = 0.0
    seed: int = 0

    def to_dict(self) -> dict:
        return {"violation_probability": self.violation_probability, "worst_overflow": self.worst_overflow,
                "n_samples": self.n_samples, "rho": self.rho, "seed": self.seed,
                "row_rates": [{"point": i, "fraction": m, "rate": r} for (i, m), r in sorted(self.row_rates.items())]}


def draws(instance: Instance, n_samples: int, seed: int):
    """Yield xi chunks of shape (k, |I|, |M|) with entries uniform in [-1, 1]."""
    shape = (instance.n_points, len(instance.fractions))
    done, chunk = 0, 0
    while done < n_samples:
        k = min(CHUNK, n_samples - done)
        rng = np.random.default_rng([seed, chunk])
        yield rng.uniform(-1.0, 1.0, size=(CHUNK, *shape))[:k]
        done += k
        chunk += 1


def _row_data(solution: Solution, instance: Instance):
    nI, nM = instance.n_points, len(instance.fractions)
    assign = np.zeros((nI, nI))
    for g, j in solution.assignment.items():
        assign[g, j] = 1.0
    caps = np.array([b.capacity for b in instance.bin_types])
    capacity = np.zeros((nI, nM))
    for (i, m, h), n in solution.bins.items():
        capacity[i, m] += caps[h] * n
    acc = np.zeros((nI, nM))
    for (i, m), a in solution.frequency.items():
        acc[i, m] = a
    rows = [(i, m) for i in sorted(solution.open) for m in range(nM)]
    return assign, capacity, acc, rows


def simulate(solution: Solution, instance: Instance, mc: McConfig, rho: float | None = None) -> ViolationReport:
    rho = mc.rho if rho is None else rho
    if rho is None:
        raise ValueError("rho must be given either in McConfig or as an argument")
    assign, capacity, acc, rows = _row_data(solution, instance)
    rates = instance.rates
    ri = np.array([r[0] for r in rows], dtype=int)
    rm = np.array([r[1] for r in rows], dtype=int)
    counts = np.zeros(len(rows))
    any_count = 0
    worst = 0.0
    for xi in draws(instance, mc.n_samples, mc.seed):
        b = rates[None] * (1.0 + rho * xi)                      # (k, gen, m)
        load = np.einsum("gi,kgm->kim", assign, b) * acc[None]  # (k, point, m)
        over = load[:, ri, rm] - capacity[ri, rm][None]
        viol = over > OVERFLOW_TOL * np.maximum(1.0, capacity[ri, rm])[None]
        counts += viol.sum(axis=0)
        any_count += int(viol.any(axis=1).sum())
        if over.size:
            worst = max(worst, float(over.max()))
    n = mc.n_samples
    return ViolationReport(any_count / n, {r: float(c / n) for r, c in zip(rows, counts)},
                           max(worst, 0.0), n, float(rho), mc.seed)


@dataclass(frozen=True)
class RobustnessRow:
    gamma: float
    rho: float
    representative: str
    cost: float
    frequency: float
    delta: float
    delta_c: float
    delta_f: float
    violation_probability: float
    det_violation_probability: float


def price_of_robustness(det_pareto: ParetoSet, robust: Mapping[str, ParetoSet] | Sequence[ParetoSet],
                        instance: Instance, mc: McConfig,
                        ideal: tuple[float, float] | None = None) -> list[RobustnessRow]:
    """Deterioration and simulated violation rate of each scenario's representative designs."""
    if not det_pareto.points:
        raise ValueError("deterministic frontier is empty")
    frontiers = list(robust.values()) if isinstance(robust, Mapping) else list(robust)
    items = [(p.scenario, p) for p in frontiers]
    if not items:
        raise ValueError("no robust frontiers given")
    ideal = ideal or ideal_vector(det_pareto)
    det = {"min-cost": det_pareto.min_cost(), "max-frequency": det_pareto.max_frequency(),
           "compromise": compromise(det_pareto, ideal)}
    rows = []
    for scenario, pareto in items:
        if scenario is None:
            raise ValueError("robust frontier has no scenario attached")
        if not pareto.points:
            raise ValueError(f"frontier for {scenario.label} is empty")
        rob = {"min-cost": pareto.min_cost(), "max-frequency": pareto.max_frequency(),
               "compromise": compromise(pareto, ideal)}
        rho = scenario.rho if mc.rho is None else mc.rho
        for name in REPRESENTATIVES:
            ref = ideal if name == "compromise" else det[name]
            c = compare(rob[name], ref)
            vr = simulate(rob[name].solution, instance, mc, rho)
            vd = simulate(det[name].solution, instance, mc, rho)
            rows.append(RobustnessRow(scenario.gamma_fraction, scenario.rho, name, rob[name].cost,
                                      rob[name].frequency, c.delta, c.delta_c, c.delta_f,
                                      vr.violation_probability, vd.violation_probability))
    rows.sort(key=lambda r: (REPRESENTATIVES.index(r.representative), r.gamma, r.rho))
    return rows
