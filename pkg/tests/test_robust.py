from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_binloc.deterministic import COST, build_deterministic, decode, evaluate
from robust_binloc.instance import generate, neighbor_sets
from robust_binloc.milp import ModelBuilder, ModelError, MIN
from robust_binloc.robust import (ScenarioConfig, protection_by_enumeration, protection_dual,
                                  protection_dual_value, protection_from_contributions, protection_lp,
                                  protection_lp_value, protection_oracle, transform)
from robust_binloc.solvers.base import solve
from robust_binloc.solvers.simplex import solve_lp, solve_lp_highs

from conftest import I16, tiny
from oracles import protection_enumerate, model_size_counts


@pytest.mark.parametrize("n", [1, 3, 16])
def test_robust_counts_formula(n):
    inst = generate(0, n, I16)
    model, index = build_deterministic(inst)
    rob, _ = transform(model, index, inst, ScenarioConfig(0.2, 0.3))
    _, _, rv, rr = model_size_counts(n)
    assert (rob.n_variables, rob.n_constraints) == (rv, rr)


def test_robust_counts_i16_i58():
    for n, vars_, rows_published in ((16, 3568, 8577), (58, 44602, 111477)):
        inst = generate(0, n, I16)
        model, index = build_deterministic(inst)
        rob, _ = transform(model, index, inst, ScenarioConfig(0.1, 0.05))
        assert rob.n_variables == vars_
        assert abs(rob.n_constraints - rows_published) <= 1


def test_capacity_rows_replaced_in_place(tiny3):
    model, index = build_deterministic(tiny3)
    rob, art = transform(model, index, tiny3, ScenarioConfig(0.2, 0.5))
    assert not any(r.startswith("cap_") for r in rob.row_names)
    for i in range(3):
        for m in range(2):
            assert rob.row_names[index.capacity_rows[i, m]] == f"rcap_{i}_{m}"
    assert sum(r.startswith("dual_") for r in rob.row_names) == 3 * 3 * 2
    assert sum(r.startswith("env") for r in rob.row_names) == 2 * 3 * 3 * 2 * 3
    assert rob.annotations["builder"] == "robust"
    assert art.deviations[(1, 0)] == pytest.approx(0.2 * tiny3.rates[1, 0])
    J = neighbor_sets(tiny3)
    assert art.gammas[(0, 1)] == pytest.approx(0.5 * len(J[(0, 1)]))
    rob.check()


def test_rejects_foreign_model(tiny2):
    b = ModelBuilder()
    b.add_variable("x")
    b.add_objective("o", MIN, [("x", 1)])
    _, index = build_deterministic(tiny2)
    with pytest.raises(ModelError):
        transform(b.build(), index, tiny2, ScenarioConfig())


def test_gamma_override_out_of_range(tiny2):
    model, index = build_deterministic(tiny2)
    with pytest.raises(ValueError):
        transform(model, index, tiny2, ScenarioConfig(0.1, 0.5, overrides={(0, 0): 99.0}))


def test_strict_dual_indexing_shape(tiny2):
    model, index = build_deterministic(tiny2)
    shared, _ = transform(model, index, tiny2, ScenarioConfig(0.2, 0.5))
    strict, art = transform(model, index, tiny2, ScenarioConfig(0.2, 0.5, strict_dual_indexing=True))
    assert strict.n_variables - shared.n_variables == 2 * 2 * 2 - 2 * 2
    assert (0, 1, 0) in art.p_vars


# --- protection term ---------------------------------------------------------------

def test_protection_worked_example():
    c = [4.0, 3.0, 1.0]
    assert protection_from_contributions(c, 1.5) == pytest.approx(5.5)
    assert protection_by_enumeration(c, 1.5) == pytest.approx(5.5)
    assert protection_lp(c, 1.5) == pytest.approx(5.5)
    assert protection_dual(c, 1.5)[0] == pytest.approx(5.5)


def test_protection_limits():
    c = [2.0, 0.5, 1.25]
    assert protection_from_contributions(c, 0.0) == 0.0
    assert protection_from_contributions(c, 3.0) == pytest.approx(sum(c))
    assert protection_lp([0.0, 0.0], 1.3) == pytest.approx(0.0)


def test_protection_tie():
    assert protection_lp([5.0, 5.0, 2.0], 2.0) == pytest.approx(10.0)
    assert protection_from_contributions([5.0, 5.0, 2.0], 2.0) == 10.0


@pytest.mark.parametrize("engine", [solve_lp, solve_lp_highs])
def test_protection_routes_agree_random(engine):
    rng = np.random.default_rng(2024)
    for _ in range(50):
        n = int(rng.integers(1, 13))
        c = rng.uniform(0, 5, n) * (rng.uniform(size=n) < 0.8)
        gamma = float(rng.uniform(0, n))
        ref = protection_enumerate(c, gamma)
        assert protection_from_contributions(c, gamma) == pytest.approx(ref, abs=1e-6)
        assert protection_lp(c, gamma, engine) == pytest.approx(ref, abs=1e-6)
        val, z, p = protection_dual(c, gamma, engine)
        assert gamma * z + p.sum() == pytest.approx(ref, abs=1e-6)
        assert np.all(z + p >= c - 1e-7)


@settings(max_examples=40, deadline=None)
@given(c=st.lists(st.floats(0, 10), min_size=1, max_size=8), g1=st.floats(0, 1), g2=st.floats(0, 1))
def test_protection_monotone_in_gamma(c, g1, g2):
    n = len(c)
    lo, hi = sorted((g1 * n, g2 * n))
    assert protection_from_contributions(c, lo) <= protection_from_contributions(c, hi) + 1e-9


def test_protection_instance_routes(line3):
    lin = {(j, 1, 0, 2): 1.0 for j in range(3)}  # everyone served by point 1 at Acc=3
    for g in (0.0, 0.25, 0.5, 1.0):
        sc = ScenarioConfig(0.3, g)
        a = protection_oracle(1, 0, lin, line3, sc)
        assert protection_lp_value(1, 0, lin, line3, sc) == pytest.approx(a, abs=1e-9)
        assert protection_dual_value(1, 0, lin, line3, sc) == pytest.approx(a, abs=1e-9)
    full = protection_oracle(1, 0, lin, line3, ScenarioConfig(0.3, 1.0))
    assert full == pytest.approx(0.3 * 3 * line3.rates[:, 0].sum())
    lower = protection_oracle(1, 0, lin, line3, ScenarioConfig(0.2, 1.0))
    assert lower <= full


# --- model-level properties --------------------------------------------------------

def _min_cost(inst, scenario=None):
    model, index = build_deterministic(inst)
    if scenario is not None:
        model, _ = transform(model, index, inst, scenario)
    res = solve(model, COST)
    return res, decode(model.vector(res.values), index, inst)


@pytest.mark.parametrize("scenario", [ScenarioConfig(0.0, 0.7), ScenarioConfig(0.4, 0.0)])
def test_no_protection_equals_deterministic(tiny2, scenario):
    det, _ = _min_cost(tiny2)
    rob, _ = _min_cost(tiny2, scenario)
    assert rob.objective == pytest.approx(det.objective, abs=1e-6)


def test_strict_indexing_never_more_expensive(tiny2):
    shared, _ = _min_cost(tiny2, ScenarioConfig(0.3, 0.5))
    strict, _ = _min_cost(tiny2, ScenarioConfig(0.3, 0.5, strict_dual_indexing=True))
    assert strict.objective <= shared.objective + 1e-6


@pytest.mark.parametrize("seed", [3, 5])
def test_adversarial_perturbation_within_budget(seed):
    inst = tiny(2, seed)
    sc = ScenarioConfig(0.3, 0.5)
    _, sol = _min_cost(inst, sc)
    J = neighbor_sets(inst)
    caps = {}
    for (i, m, h), n in sol.bins.items():
        caps[(i, m)] = caps.get((i, m), 0.0) + n * inst.bin_types[h].capacity
    for i in sol.open:
        for m in range(2):
            served = [g for g, p in sol.assignment.items() if p == i]
            acc = sol.frequency[(i, m)]
            k = int(math.floor(sc.gamma(i, m, len(J[(i, m)]))))
            # every way of pushing at most k served generators to their upper bound
            worst = 0.0
            for mask in range(1 << len(served)):
                chosen = [g for b, g in enumerate(served) if mask >> b & 1]
                if len(chosen) > k:
                    continue
                load = sum(inst.rates[g, m] * (1 + (sc.rho if g in chosen else 0.0)) for g in served) * acc
                worst = max(worst, load)
            assert worst <= caps.get((i, m), 0.0) + 1e-9
    assert evaluate(sol, inst)[0] == sol.cost
