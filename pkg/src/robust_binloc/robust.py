"""Budgeted-uncertainty robust counterpart of the capacity rows, plus protection oracles."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp

from .deterministic import BUILDER_TAG, VariableIndex
from .instance import Instance, neighbor_sets
from .milp import _SENSE_CODE, GE, LE, ModelError, ModelIR

ROBUST_TAG = "robust"


@dataclass(frozen=True)
class ScenarioConfig:
    """Uncertainty level rho and conservatism level given as a fraction of |J_im|."""

    rho: float = 0.0
    gamma_fraction: float = 0.0
    overrides: Mapping[tuple[int, int], float] = field(default_factory=dict)
    strict_dual_indexing: bool = False

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        if not 0.0 <= self.gamma_fraction <= 1.0:
            raise ValueError(f"gamma_fraction must lie in [0, 1], got {self.gamma_fraction}")

    @property
    def label(self) -> str:
        return f"g{self.gamma_fraction:g}_r{self.rho:g}"

    def gamma(self, i: int, m: int, n_neighbors: int) -> float:
        if (i, m) in self.overrides:
            g = float(self.overrides[(i, m)])
            if not 0.0 <= g <= n_neighbors:
                raise ValueError(f"Gamma override for ({i}, {m}) = {g} outside [0, {n_neighbors}]")
            return g
        return self.gamma_fraction * n_neighbors


@dataclass(frozen=True)
class RobustArtifacts:
    deviations: dict[tuple[int, int], float]
    gammas: dict[tuple[int, int], float]
    neighbors: dict[tuple[int, int], list[int]]
    z_vars: dict[tuple[int, int], str]
    p_vars: dict[tuple, str]
    y_vars: np.ndarray  # (I, I, M, F) column positions, generator, point, fraction, frequency
    scenario: ScenarioConfig


def transform(model: ModelIR, index: VariableIndex, instance: Instance,
              scenario: ScenarioConfig) -> tuple[ModelIR, RobustArtifacts]:
    """Replace every capacity row by its protected version and add the dual rows."""
    if model.annotations.get("builder") != BUILDER_TAG:
        raise ModelError(f"transform expects a deterministic model, got builder={model.annotations.get('builder')!r}")
    nI, nM, nF = index.n_points, index.n_fractions, index.n_freqs
    acc = instance.accumulation
    rates = instance.rates
    dev = scenario.rho * rates  # b_hat
    neighbors = neighbor_sets(instance)
    gammas = {(i, m): scenario.gamma(i, m, len(neighbors[(i, m)])) for i in range(nI) for m in range(nM)}
    strict = scenario.strict_dual_indexing

    n0 = model.n_variables
    names = list(model.var_names)
    z = np.arange(n0, n0 + nI * nM).reshape(nI, nM)
    names += [f"z_{i}_{m}" for i in range(nI) for m in range(nM)]
    if strict:
        p = np.arange(len(names), len(names) + nI * nI * nM).reshape(nI, nI, nM)  # (point i, gen j, m)
        names += [f"p_{i}_{j}_{m}" for i in range(nI) for j in range(nI) for m in range(nM)]
    else:
        p = np.arange(len(names), len(names) + nI * nM).reshape(nI, nM)  # (gen j, m)
        names += [f"p_{j}_{m}" for j in range(nI) for m in range(nM)]
    y = np.arange(len(names), len(names) + nI * nI * nM * nF).reshape(nI, nI, nM, nF)
    names += [f"y_{j}_{i}_{m}_{f}" for j in range(nI) for i in range(nI) for m in range(nM) for f in range(nF)]
    n_new = len(names) - n0

    # robust capacity rows, one per (i, m), in the positions of the old capacity rows
    rr, cc, dd = [], [], []
    caps = np.array([bt.capacity for bt in instance.bin_types])
    for i in range(nI):
        for m in range(nM):
            k = i * nM + m
            lin = index.linV[:, i, m, :].ravel()
            cc += [lin, index.v[:, m, i], [z[i, m]]]
            dd += [(rates[:, m][:, None] * acc[None, :]).ravel(), -caps, [gammas[(i, m)]]]
            J = neighbors[(i, m)]
            cc.append(p[i, J, m] if strict else p[J, m])
            dd.append(np.ones(len(J)))
            rr.append(np.full(lin.size + len(caps) + 1 + len(J), k))
    cap_block = sp.csr_matrix((np.concatenate(dd), (np.concatenate(rr), np.concatenate(cc))),
                              shape=(nI * nM, n0 + n_new))

    # dual rows: z_im + p_jm - b_hat_jm sum_f Acc_f y_jimf >= 0 for every (i, j, m)
    ii, jj, mm = np.meshgrid(np.arange(nI), np.arange(nI), np.arange(nM), indexing="ij")
    ii, jj, mm = ii.ravel(), jj.ravel(), mm.ravel()
    nd = ii.size
    p_cols = p[ii, jj, mm] if strict else p[jj, mm]
    y_cols = y[jj, ii, mm, :]  # (nd, F)
    cols = np.column_stack([z[ii, mm], p_cols, y_cols]).ravel()
    data = np.column_stack([np.ones(nd), np.ones(nd), -dev[jj, mm][:, None] * acc[None, :]]).ravel()
    dual_block = sp.csr_matrix((data, (np.repeat(np.arange(nd), 2 + nF), cols)), shape=(nd, n0 + n_new))
    dual_names = [f"dual_{i}_{j}_{m}" for i, j, m in zip(ii, jj, mm)]

    # envelope rows |linV| <= y: y - linV >= 0 and y + linV >= 0
    ne = y.size
    y_flat, lin_flat = y.ravel(), index.linV.ravel()
    env_rows = np.repeat(np.arange(2 * ne), 2)
    env_cols = np.concatenate([np.column_stack([y_flat, lin_flat]).ravel(),
                               np.column_stack([y_flat, lin_flat]).ravel()])
    env_data = np.concatenate([np.tile([1.0, -1.0], ne), np.tile([1.0, 1.0], ne)])
    env_block = sp.csr_matrix((env_data, (env_rows, env_cols)), shape=(2 * ne, n0 + n_new))
    suffix = [f"{j}_{i}_{m}_{f}" for j in range(nI) for i in range(nI) for m in range(nM) for f in range(nF)]
    env_names = [f"envpos_{s}" for s in suffix] + [f"envneg_{s}" for s in suffix]

    # splice: old rows with the capacity block substituted in place, then the new blocks
    A_old = sp.hstack([model.A, sp.csr_matrix((model.n_constraints, n_new))], format="csr")
    stacked = sp.vstack([A_old, cap_block], format="csr")
    order = np.arange(model.n_constraints)
    order[index.capacity_rows.ravel()] = model.n_constraints + np.arange(nI * nM)
    A = sp.vstack([stacked[order], dual_block, env_block], format="csr")
    A.sort_indices()
    row_names = list(model.row_names)
    for i in range(nI):
        for m in range(nM):
            row_names[index.capacity_rows[i, m]] = f"rcap_{i}_{m}"
    row_names += dual_names + env_names
    senses = np.concatenate([model.senses, np.full(nd + 2 * ne, _SENSE_CODE[GE], dtype=np.int8)])
    senses[index.capacity_rows.ravel()] = _SENSE_CODE[LE]
    rhs = np.concatenate([model.rhs, np.zeros(nd + 2 * ne)])
    rhs[index.capacity_rows.ravel()] = 0.0

    notes = dict(model.annotations)
    notes.update(builder=ROBUST_TAG, base_builder=BUILDER_TAG, rho=repr(scenario.rho),
                 gamma_fraction=repr(scenario.gamma_fraction), strict_dual_indexing=str(strict))
    robust = ModelIR(
        names,
        np.concatenate([model.kinds, np.zeros(n_new, dtype=np.int8)]),
        np.concatenate([model.lower, np.zeros(n_new)]),
        np.concatenate([model.upper, np.full(n_new, math.inf)]),
        row_names, A, senses, rhs, model.objectives, notes,
    )
    artifacts = RobustArtifacts(
        deviations={(i, m): float(dev[i, m]) for i in range(nI) for m in range(nM)},
        gammas=gammas,
        neighbors=neighbors,
        z_vars={(i, m): names[z[i, m]] for i in range(nI) for m in range(nM)},
        p_vars=({(i, j, m): names[p[i, j, m]] for i in range(nI) for j in range(nI) for m in range(nM)}
                if strict else {(j, m): names[p[j, m]] for j in range(nI) for m in range(nM)}),
        y_vars=y,
        scenario=scenario,
    )
    return robust, artifacts


# --- protection term: three independent routes --------------------------------

def contributions(i: int, m: int, linV_values: Mapping[tuple[int, int, int, int], float],
                  instance: Instance, scenario: ScenarioConfig) -> tuple[np.ndarray, float]:
    """Per-neighbor worst-case deviations c_j and the row budget Gamma_im."""
    J = neighbor_sets(instance)[(i, m)]
    acc = instance.accumulation
    dev = scenario.rho * instance.rates[:, m]
    c = np.array([dev[j] * sum(acc[f] * linV_values.get((j, i, m, f), 0.0) for f in range(len(acc)))
                  for j in J])
    return c, scenario.gamma(i, m, len(J))


def protection_from_contributions(c, gamma: float) -> float:
    """max over |S| = floor(G) subsets plus one fractional element: greedy on sorted c."""
    c = np.sort(np.asarray(c, dtype=float))[::-1]
    k = int(math.floor(gamma))
    total = float(c[:k].sum())
    if k < len(c):
        total += (gamma - k) * float(c[k])
    return total


def protection_by_enumeration(c, gamma: float) -> float:
    """Literal subset maximization (exponential, for checking only)."""
    c = [float(v) for v in c]
    k = int(math.floor(gamma))
    best = 0.0
    idx = range(len(c))
    for S in itertools.combinations(idx, min(k, len(c))):
        base = sum(c[j] for j in S)
        rest = [c[t] for t in idx if t not in S]
        best = max(best, base + ((gamma - k) * max(rest) if rest else 0.0))
    return best


def protection_oracle(i: int, m: int, linV_values, instance: Instance, scenario: ScenarioConfig) -> float:
    c, gamma = contributions(i, m, linV_values, instance, scenario)
    return protection_from_contributions(c, gamma)


LPSolver = Callable[..., tuple[str, np.ndarray, float]]


def protection_lp(c, gamma: float, lp: LPSolver | None = None) -> float:
    """Primal LP: max sum alpha_j c_j s.t. sum alpha <= Gamma, 0 <= alpha <= 1."""
    from .solvers.simplex import solve_lp

    lp = lp or solve_lp
    c = np.asarray(c, dtype=float)
    n = len(c)
    if n == 0:
        return 0.0
    status, x, val = lp(-c, np.ones((1, n)), np.array([-1]), np.array([gamma]),
                        np.zeros(n), np.ones(n))
    if status != "optimal":
        raise RuntimeError(f"protection LP returned {status}")
    return -val


def protection_dual(c, gamma: float, lp: LPSolver | None = None) -> tuple[float, float, np.ndarray]:
    """Dual LP: min Gamma z + sum p_j s.t. z + p_j >= c_j, z, p >= 0.

    Returns (value, z, p) where value is recomputed as Gamma*z + sum(p).
    """
    from .solvers.simplex import solve_lp

    lp = lp or solve_lp
    c = np.asarray(c, dtype=float)
    n = len(c)
    if n == 0:
        return 0.0, 0.0, np.zeros(0)
    obj = np.concatenate([[gamma], np.ones(n)])
    A = np.hstack([np.ones((n, 1)), np.eye(n)])
    status, x, _ = lp(obj, A, np.ones(n, dtype=int), c, np.zeros(n + 1), np.full(n + 1, np.inf))
    if status != "optimal":
        raise RuntimeError(f"protection dual LP returned {status}")
    z, p = float(x[0]), x[1:]
    return gamma * z + float(p.sum()), z, p


def protection_lp_value(i: int, m: int, linV_values, instance: Instance, scenario: ScenarioConfig,
                        backend: LPSolver | None = None) -> float:
    c, gamma = contributions(i, m, linV_values, instance, scenario)
    return protection_lp(c, gamma, backend)


def protection_dual_value(i: int, m: int, linV_values, instance: Instance, scenario: ScenarioConfig,
                          backend: LPSolver | None = None) -> float:
    c, gamma = contributions(i, m, linV_values, instance, scenario)
    return protection_dual(c, gamma, backend)[0]
