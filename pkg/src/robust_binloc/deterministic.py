"""Deterministic bi-objective bin location MILP: building, decoding and evaluation.

Index convention: x[i, j] = 1 iff generator i is served by collection point j,
linV[j, i, m, f] = x[j, i] * fr[i, m, f] (generator j, point i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .instance import Instance, validate
from .milp import BINARY, CONTINUOUS, GE, INTEGER, LE, MAX, MIN, EQ, ModelBuilder, ModelIR

BUILDER_TAG = "deterministic"
COST, FREQUENCY = "cost", "frequency"
INTEGRALITY_TOL = 1e-6
OBJECTIVE_RTOL = 1e-4


class DecodeError(ValueError):
    pass


@dataclass(frozen=True)
class VariableIndex:
    """Column positions of every model family, as integer arrays."""

    n_points: int
    n_fractions: int
    n_freqs: int
    n_bins: int
    x: np.ndarray      # (I, I)       generator, point
    q: np.ndarray      # (I,)
    fr: np.ndarray     # (I, M, F)
    v: np.ndarray      # (H, M, I)
    linV: np.ndarray   # (I, I, M, F) generator, point, fraction, frequency
    capacity_rows: np.ndarray  # (I, M) row positions of the capacity constraints

    def names(self, model: ModelIR, family: str) -> np.ndarray:
        idx = getattr(self, family)
        return np.vectorize(lambda k: model.var_names[k], otypes=[object])(idx)


@dataclass
class Solution:
    """Decoded design: who is served where, which points open, frequencies and bins."""

    assignment: dict[int, int]
    open: frozenset[int]
    frequency: dict[tuple[int, int], int]            # (point, fraction) -> Acc days
    bins: dict[tuple[int, int, int], int]            # (point, fraction, bin type) -> count
    cost: float = 0.0
    frequency_objective: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def objectives(self) -> tuple[float, float]:
        return (self.cost, self.frequency_objective)

    def to_dict(self) -> dict:
        return {
            "assignment": {str(g): p for g, p in sorted(self.assignment.items())},
            "open": sorted(self.open),
            "frequency": [[i, m, acc] for (i, m), acc in sorted(self.frequency.items())],
            "bins": [[i, m, h, n] for (i, m, h), n in sorted(self.bins.items()) if n],
            "cost": self.cost,
            "frequency_objective": self.frequency_objective,
            **({"extra": self.extra} if self.extra else {}),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Solution":
        return cls(
            assignment={int(g): int(p) for g, p in data["assignment"].items()},
            open=frozenset(int(i) for i in data["open"]),
            frequency={(int(i), int(m)): int(acc) for i, m, acc in data["frequency"]},
            bins={(int(i), int(m), int(h)): int(n) for i, m, h, n in data["bins"]},
            cost=float(data["cost"]),
            frequency_objective=float(data["frequency_objective"]),
            extra=dict(data.get("extra", {})),
        )


def build_deterministic(instance: Instance) -> tuple[ModelIR, VariableIndex]:
    problems = validate(instance)
    if problems:
        raise ValueError("invalid instance: " + "; ".join(problems))
    nI, nM, nF, nH = instance.n_points, len(instance.fractions), len(instance.frequencies), len(instance.bin_types)
    acc = instance.accumulation
    rates = instance.rates
    b = ModelBuilder()

    I, M, F, H = np.arange(nI), np.arange(nM), np.arange(nF), np.arange(nH)
    x = b.add_variables([f"x_{i}_{j}" for i in I for j in I], BINARY).reshape(nI, nI)
    q = b.add_variables([f"q_{i}" for i in I], BINARY)
    fr = b.add_variables([f"fr_{i}_{m}_{f}" for i in I for m in M for f in F], BINARY).reshape(nI, nM, nF)
    v_upper = np.array([math.floor(instance.max_area / bt.area + 1e-9) for bt in instance.bin_types], dtype=float)
    v = b.add_variables([f"v_{h}_{m}_{i}" for h in H for m in M for i in I], INTEGER,
                        lower=0.0, upper=np.repeat(v_upper, nM * nI)).reshape(nH, nM, nI)
    lin = b.add_variables([f"linV_{j}_{i}_{m}_{f}" for j in I for i in I for m in M for f in F],
                          CONTINUOUS).reshape(nI, nI, nM, nF)

    # (1c) each generator i served by exactly one point j
    rows = np.repeat(I, nI)
    b.add_constraint_block([f"assign_{i}" for i in I], rows, x.ravel(), np.ones(nI * nI), EQ, 1.0)

    # (1d) shared footprint at point j: sum_m sum_h Ar_h v_hmj - L q_j <= 0
    areas = np.array([bt.area for bt in instance.bin_types])
    r_ids, cols, data = [], [], []
    for j in I:
        cols.append(v[:, :, j].ravel())
        data.append(np.repeat(areas, nM))
        cols.append([q[j]])
        data.append([-instance.max_area])
        r_ids.append(np.full(nH * nM + 1, j))
    b.add_constraint_block([f"area_{j}" for j in I], np.concatenate(r_ids), np.concatenate(cols),
                           np.concatenate(data), LE, 0.0)

    # (1e) sum_j b_jm sum_f Acc_f linV_jimf - sum_h Cap_h v_hmi <= 0
    caps = np.array([bt.capacity for bt in instance.bin_types])
    r_ids, cols, data = [], [], []
    k = 0
    for i in I:
        for m in M:
            c_lin = lin[:, i, m, :].ravel()
            d_lin = (rates[:, m][:, None] * acc[None, :]).ravel()
            cols += [c_lin, v[:, m, i]]
            data += [d_lin, -caps]
            r_ids.append(np.full(len(c_lin) + nH, k))
            k += 1
    cap_rows = b.add_constraint_block([f"cap_{i}_{m}" for i in I for m in M], np.concatenate(r_ids),
                                      np.concatenate(cols), np.concatenate(data), LE, 0.0).reshape(nI, nM)

    # (1f)-(1h) linearization of linV_jimf = x_ji * fr_imf
    jj, ii, mm, ff = np.meshgrid(I, I, M, F, indexing="ij")
    lin_flat = lin.ravel()
    x_ji = x[jj, ii].ravel()
    fr_imf = fr[ii, mm, ff].ravel()
    n = lin_flat.size
    suffix = [f"{j}_{i}_{m}_{f}" for j in I for i in I for m in M for f in F]
    rows2 = np.repeat(np.arange(n), 2)
    b.add_constraint_block([f"linx_{s}" for s in suffix], rows2,
                           np.column_stack([lin_flat, x_ji]).ravel(), np.tile([1.0, -1.0], n), LE, 0.0)
    b.add_constraint_block([f"linfr_{s}" for s in suffix], rows2,
                           np.column_stack([lin_flat, fr_imf]).ravel(), np.tile([1.0, -1.0], n), LE, 0.0)
    b.add_constraint_block([f"linand_{s}" for s in suffix], np.repeat(np.arange(n), 3),
                           np.column_stack([lin_flat, x_ji, fr_imf]).ravel(), np.tile([1.0, -1.0, -1.0], n),
                           GE, -1.0)

    # (1i) di_ij x_ij <= dis_max, one row per pair (zero-distance pairs keep a 0 coefficient)
    b.add_constraint_block([f"qos_{i}_{j}" for i in I for j in I], np.arange(nI * nI), x.ravel(),
                           instance.distance.ravel(), LE, instance.max_distance)

    # (1j) every generator j gets exactly one (point, frequency) per fraction
    r_ids, cols = [], []
    k = 0
    for j in I:
        for m in M:
            c = lin[j, :, m, :].ravel()
            cols.append(c)
            r_ids.append(np.full(len(c), k))
            k += 1
    b.add_constraint_block([f"freqlink_{j}_{m}" for j in I for m in M], np.concatenate(r_ids),
                           np.concatenate(cols), np.ones(nI * nI * nF * nM), EQ, 1.0)

    # (1k) sum_f fr_imf - q_i = 0
    r_ids, cols, data = [], [], []
    k = 0
    for i in I:
        for m in M:
            cols += [fr[i, m, :], [q[i]]]
            data += [np.ones(nF), [-1.0]]
            r_ids.append(np.full(nF + 1, k))
            k += 1
    b.add_constraint_block([f"open_{i}_{m}" for i in I for m in M], np.concatenate(r_ids),
                           np.concatenate(cols), np.concatenate(data), EQ, 0.0)

    unit_costs = np.array([bt.unit_cost for bt in instance.bin_types])
    cost_idx = np.concatenate([v.ravel(), q])
    cost_coef = np.concatenate([np.repeat(unit_costs, nM * nI), instance.opening_costs])
    b.add_objective(COST, MIN, indices=cost_idx, coefs=cost_coef)
    b.add_objective(FREQUENCY, MAX, indices=fr.ravel(), coefs=np.tile(acc, nI * nM))

    b.annotations.update(builder=BUILDER_TAG, name=instance.name, n_points=str(nI))
    model = b.build()
    index = VariableIndex(nI, nM, nF, nH, x, q, fr, v, lin, cap_rows)
    return model, index


def _rounded(values: np.ndarray, what: str) -> np.ndarray:
    r = np.round(values)
    bad = np.abs(values - r) > INTEGRALITY_TOL
    if np.any(bad):
        raise DecodeError(f"fractional value for integral {what}: {values[bad][0]!r}")
    return r.astype(int)


def decode(values: Mapping[str, float] | np.ndarray, index: VariableIndex, instance: Instance,
           model: ModelIR | None = None, reported: Mapping[str, float] | None = None) -> Solution:
    """Turn solver values into a Solution, recomputing both objectives.

    values is either a name->value map (model required to resolve names) or a
    dense vector in model column order.
    """
    if isinstance(values, np.ndarray):
        xv = values
    else:
        if model is None:
            raise ValueError("model is required to decode a name->value map")
        xv = model.vector(values)
    nI, nM = index.n_points, index.n_fractions
    acc = instance.accumulation.astype(int)
    x = _rounded(xv[index.x], "x")
    q = _rounded(xv[index.q], "q")
    fr = _rounded(xv[index.fr], "fr")
    v = _rounded(xv[index.v], "v")

    assignment: dict[int, int] = {}
    for g in range(nI):
        targets = np.nonzero(x[g])[0]
        if len(targets) != 1:
            raise DecodeError(f"generator {g} is assigned to {len(targets)} collection points")
        assignment[g] = int(targets[0])
    open_pts = frozenset(int(i) for i in np.nonzero(q)[0])
    frequency: dict[tuple[int, int], int] = {}
    for i in open_pts:
        for m in range(nM):
            chosen = np.nonzero(fr[i, m])[0]
            if len(chosen) != 1:
                raise DecodeError(f"open point {i} fraction {m} has {len(chosen)} frequencies")
            frequency[(i, m)] = int(acc[chosen[0]])
    bins = {(i, m, h): int(v[h, m, i]) for h in range(index.n_bins) for m in range(nM) for i in range(nI)
            if v[h, m, i]}
    sol = Solution(assignment, open_pts, frequency, bins)
    sol.cost, sol.frequency_objective, _ = evaluate(sol, instance)
    if reported:
        for key, mine in ((COST, sol.cost), (FREQUENCY, sol.frequency_objective)):
            if key in reported and reported[key] is not None:
                theirs = float(reported[key])
                if abs(mine - theirs) > OBJECTIVE_RTOL * max(1.0, abs(theirs)):
                    raise DecodeError(f"recomputed {key} {mine} differs from reported {theirs}")
    return sol


def evaluate(solution: Solution, instance: Instance) -> tuple[float, float, dict[tuple[int, int], float]]:
    """Recompute (cost, frequency objective, capacity slack per open point and fraction)."""
    cost = sum(instance.points[i].opening_cost for i in solution.open)
    cost += sum(n * instance.bin_types[h].unit_cost for (_, _, h), n in solution.bins.items())
    freq = float(sum(solution.frequency.values()))
    slack: dict[tuple[int, int], float] = {}
    rates = instance.rates
    for i in sorted(solution.open):
        for m in range(len(instance.fractions)):
            cap = sum(n * instance.bin_types[h].capacity
                      for (pi, pm, h), n in solution.bins.items() if pi == i and pm == m)
            load = sum(rates[g, m] for g, p in solution.assignment.items() if p == i)
            slack[(i, m)] = cap - load * solution.frequency.get((i, m), 0)
    return float(cost), freq, slack


def encode(solution: Solution, index: VariableIndex, instance: Instance, n_variables: int) -> np.ndarray:
    """Model-order vector for a Solution (deterministic columns only), e.g. for warm starts."""
    xv = np.zeros(n_variables)
    acc = list(instance.accumulation.astype(int))
    for g, p in solution.assignment.items():
        xv[index.x[g, p]] = 1
    for i in solution.open:
        xv[index.q[i]] = 1
    for (i, m), a in solution.frequency.items():
        f = acc.index(a)
        xv[index.fr[i, m, f]] = 1
    for (i, m, h), n in solution.bins.items():
        xv[index.v[h, m, i]] = n
    for g, p in solution.assignment.items():
        for m in range(index.n_fractions):
            a = solution.frequency.get((p, m))
            if a is not None:
                xv[index.linV[g, p, m, acc.index(a)]] = 1
    return xv


def check_structure(solution: Solution, instance: Instance) -> list[str]:
    """Structural feasibility problems of a decoded solution (empty when fine)."""
    issues = []
    for g, p in solution.assignment.items():
        if p not in solution.open:
            issues.append(f"generator {g} served by closed point {p}")
        if instance.distance[g, p] > instance.max_distance:
            issues.append(f"generator {g} farther than max_distance from point {p}")
    for i in solution.open:
        for m in range(len(instance.fractions)):
            if (i, m) not in solution.frequency:
                issues.append(f"open point {i} has no frequency for fraction {m}")
    for i in solution.open:
        area = sum(n * instance.bin_types[h].area for (pi, _, h), n in solution.bins.items() if pi == i)
        if area > instance.max_area + 1e-9:
            issues.append(f"point {i} exceeds max_area")
    return issues
