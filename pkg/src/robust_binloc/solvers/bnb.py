"""Exact best-first branch and bound over LP relaxations, for desk-scale models."""

from __future__ import annotations

import heapq
import math
import time

import numpy as np

from ..milp import MAX, ModelIR
from .base import SolveConfig, SolveResult, Status, relative_gap
from .simplex import LP_ENGINES, SimplexError

INT_TOL = 1e-6
FEAS_TOL = 1e-6


class TooLargeError(ValueError):
    pass


def _objective_is_integral(c: np.ndarray, integer: np.ndarray) -> bool:
    if np.any(c[~integer] != 0):
        return False
    ci = c[integer]
    return bool(np.all(ci == np.round(ci)))


def internal_branch_and_bound(model: ModelIR, objective_index: int = 0,
                              config: SolveConfig | None = None) -> SolveResult:
    config = config or SolveConfig()
    t0 = time.perf_counter()
    integer = model.integer_mask
    n_int = int(integer.sum())
    if n_int > config.max_integer_vars:
        raise TooLargeError(
            f"model has {n_int} integer variables; the internal solver is limited to "
            f"{config.max_integer_vars} (raise SolveConfig.max_integer_vars to override)")
    lp = LP_ENGINES[config.lp_engine]
    obj = model.objectives[objective_index]
    sign = -1.0 if obj.sense == MAX else 1.0
    c = np.zeros(model.n_variables)
    np.add.at(c, obj.indices, sign * obj.coefs)
    A, senses, b = model.A, model.senses, model.rhs
    lb0, ub0 = model.lower.copy(), model.upper.copy()
    lb0[integer] = np.ceil(lb0[integer] - INT_TOL)
    ub0[integer] = np.floor(ub0[integer] + INT_TOL)
    integral_obj = _objective_is_integral(c, integer)
    int_idx = np.nonzero(integer)[0]

    def tighten(bound: float) -> float:
        return math.ceil(bound - 1e-6) if integral_obj and math.isfinite(bound) else bound

    incumbent_x: np.ndarray | None = None
    incumbent = math.inf

    def accept(x: np.ndarray) -> None:
        nonlocal incumbent_x, incumbent
        xr = x.copy()
        xr[int_idx] = np.round(xr[int_idx])
        if model.max_violation(xr) > FEAS_TOL:
            return
        val = float(c @ xr)
        if val < incumbent - 1e-12:
            incumbent, incumbent_x = val, xr

    if config.warm_start is not None:
        ws = model.vector(config.warm_start.values)
        if np.all(np.abs(ws[int_idx] - np.round(ws[int_idx])) <= INT_TOL):
            accept(ws)

    def relax(lb, ub):
        try:
            return lp(c, A, senses, b, lb, ub)
        except SimplexError as exc:
            raise RuntimeError(f"LP relaxation failed: {exc}") from exc

    def result(status: Status, bound: float, nodes: int, message: str = "") -> SolveResult:
        wall = time.perf_counter() - t0
        if incumbent_x is None:
            return SolveResult(status, None, {}, None, wall, None if math.isinf(bound) else sign * bound,
                               nodes, message)
        values = {name: float(v) for name, v in zip(model.var_names, incumbent_x)}
        bound = min(bound, incumbent)
        gap = relative_gap(bound, incumbent)
        return SolveResult(status, sign * incumbent, values, gap, wall, sign * bound, nodes, message)

    status, x, val = relax(lb0, ub0)
    if status == "infeasible":
        return result(Status.INFEASIBLE, math.inf, 1)
    if status == "unbounded":
        return result(Status.UNBOUNDED, -math.inf, 1)

    # equal bounds: deeper node first (dives to leaves on flat bounds), then creation order
    counter = 0
    heap: list = [(tighten(val), 0, counter, lb0, ub0, x)]
    nodes = 1
    stop_reason = ""
    while heap:
        bound, neg_depth, _, lb, ub, x = heap[0]
        tol = max(config.abs_tol, config.mip_gap_target * abs(incumbent)) if math.isfinite(incumbent) else 0.0
        if bound >= incumbent - tol:
            heap.clear()
            break
        if time.perf_counter() - t0 > config.time_limit:
            stop_reason = "time limit"
            break
        if nodes >= config.node_limit:
            stop_reason = "node limit"
            break
        heapq.heappop(heap)
        frac = np.abs(x[int_idx] - np.round(x[int_idx]))
        if frac.max(initial=0.0) <= INT_TOL:
            accept(x)
            continue
        # most fractional; argmax returns the first (declaration order) on ties
        score = 0.5 - np.abs(x[int_idx] - np.floor(x[int_idx]) - 0.5)
        score[frac <= INT_TOL] = -1.0
        k = int(int_idx[int(np.argmax(score))])
        for side in (0, 1):
            clb, cub = lb.copy(), ub.copy()
            if side == 0:
                cub[k] = math.floor(x[k])
            else:
                clb[k] = math.ceil(x[k])
            if clb[k] > cub[k]:
                continue
            nodes += 1
            st, cx, cval = relax(clb, cub)
            if st != "optimal":
                continue
            cbound = tighten(cval)
            if cbound >= incumbent - config.abs_tol:
                continue
            counter += 1
            heapq.heappush(heap, (cbound, neg_depth - 1, counter, clb, cub, cx))

    if heap:
        best_bound = heap[0][0]
        if incumbent_x is None:
            return result(Status.TIMEOUT_NO_SOLUTION, best_bound, nodes, stop_reason)
        gap = relative_gap(min(best_bound, incumbent), incumbent)
        st = Status.OPTIMAL if gap <= config.mip_gap_target else Status.FEASIBLE
        return result(st, best_bound, nodes, stop_reason)
    if incumbent_x is None:
        return result(Status.INFEASIBLE, math.inf, nodes)
    return result(Status.OPTIMAL, incumbent, nodes)
