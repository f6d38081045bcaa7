from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_binloc.deterministic import COST, FREQUENCY, build_deterministic, encode
from robust_binloc.milp import BINARY, CONTINUOUS, GE, INTEGER, LE, MAX, MIN, ModelBuilder, WarmStart
from robust_binloc.solvers.base import SolveConfig, SolverUnavailableError, Status, relative_gap, solve
from robust_binloc.solvers.bnb import TooLargeError
from robust_binloc.solvers.external import ENV_VAR
from robust_binloc.solvers.simplex import SimplexError, solve_lp, solve_lp_highs
from robust_binloc.solvers.solfile import SolutionFileError, parse_solution_file, parse_solution_text

from helpers import self_served
from oracles import enumerate_binary_program

FAKE = Path(__file__).parent / "fake_solver.py"


def fake_cmd(extra=""):
    return f"{sys.executable} {FAKE} {{mps}} {{sol}} {{timelimit}} {extra}".strip()


def single_integer():
    b = ModelBuilder()
    b.add_variable("x", INTEGER, 0, math.inf)
    b.add_constraint("lo", [("x", 1)], GE, 3)
    b.add_objective("o", MIN, [("x", 1)])
    return b.build()


def knapsack():
    b = ModelBuilder()
    b.add_variables(["x", "y"], BINARY)
    b.add_constraint("cap", [("x", 2), ("y", 1)], LE, 3)
    b.add_objective("value", MAX, [("x", 4), ("y", 3)])
    return b.build()


# --- internal branch and bound -------------------------------------------------------

def test_single_integer_variable():
    res = solve(single_integer())
    assert res.status is Status.OPTIMAL and res.objective == 3 and res.gap == 0


def test_infeasible_pair():
    b = ModelBuilder()
    b.add_variable("x", INTEGER, -10, 10)
    b.add_constraint("a", [("x", 1)], GE, 2)
    b.add_constraint("b", [("x", 1)], LE, 1)
    b.add_objective("o", MIN, [("x", 1)])
    res = solve(b.build())
    assert res.status is Status.INFEASIBLE and res.values == {} and res.objective is None


def test_unbounded():
    b = ModelBuilder()
    b.add_variable("x", CONTINUOUS, 0, math.inf)
    b.add_objective("o", MAX, [("x", 1)])
    assert solve(b.build()).status is Status.UNBOUNDED


def test_pure_lp():
    b = ModelBuilder()
    b.add_variables(["x", "y"])
    b.add_constraint("c", [("x", 1), ("y", 2)], GE, 3)
    b.add_objective("o", MIN, [("x", 1), ("y", 1)])
    res = solve(b.build())
    assert res.objective == pytest.approx(1.5) and res.nodes == 1


def test_knapsack():
    res = solve(knapsack())
    assert res.objective == 7 and res.values == {"x": 1.0, "y": 1.0}


@pytest.mark.parametrize("engine", ["highs", "dense"])
def test_random_binary_programs_match_enumeration(engine):
    rng = np.random.default_rng(7)
    for case in range(100 if engine == "highs" else 30):
        n = int(rng.integers(1, 13))
        m = int(rng.integers(1, 5))
        A = rng.integers(-4, 6, size=(m, n)).astype(float)
        senses = rng.choice([-1, 1], size=m)
        b = np.where(senses < 0, rng.integers(0, 8, size=m), rng.integers(-3, 4, size=m)).astype(float)
        c = rng.integers(-6, 7, size=n).astype(float)
        maximize = bool(rng.integers(0, 2))
        mb = ModelBuilder()
        mb.add_variables([f"b{k}" for k in range(n)], BINARY)
        for r in range(m):
            terms = [(f"b{k}", A[r, k]) for k in range(n) if A[r, k]]
            if terms:
                mb.add_constraint(f"r{r}", terms, LE if senses[r] < 0 else GE, b[r])
            else:
                A[r] = 0
        mb.add_objective("o", MAX if maximize else MIN, [(f"b{k}", c[k]) for k in range(n)])
        res = solve(mb.build(), 0, SolveConfig(lp_engine=engine))
        expected = enumerate_binary_program(c, A, senses, b, maximize)
        if expected is None:
            assert res.status is Status.INFEASIBLE, case
        else:
            assert res.status is Status.OPTIMAL, case
            assert res.objective == pytest.approx(expected, abs=1e-6), case


def test_warm_start_never_degrades(tiny3):
    model, index = build_deterministic(tiny3)
    sol = self_served(tiny3)
    ws = dict(zip(model.var_names, encode(sol, index, tiny3, model.n_variables)))
    res = solve(model, COST, SolveConfig(warm_start=WarmStart(ws), node_limit=1))
    assert res.has_solution and res.objective <= sol.cost
    res = solve(model, FREQUENCY, SolveConfig(warm_start=WarmStart(ws), node_limit=1))
    assert res.objective >= sol.frequency_objective


def test_warm_start_at_optimum_is_kept():
    res = solve(knapsack(), 0, SolveConfig(warm_start=WarmStart({"x": 1, "y": 1})))
    assert res.objective == 7


def test_node_limit_reports_feasible_with_gap(tiny3):
    model, index = build_deterministic(tiny3)
    sol = self_served(tiny3)
    ws = dict(zip(model.var_names, encode(sol, index, tiny3, model.n_variables)))
    res = solve(model, COST, SolveConfig(warm_start=WarmStart(ws), node_limit=3))
    assert res.status is Status.FEASIBLE and res.gap > 0
    assert res.gap == pytest.approx(relative_gap(res.best_bound, res.objective))


def test_node_limit_without_incumbent(tiny3):
    model, _ = build_deterministic(tiny3)
    res = solve(model, COST, SolveConfig(node_limit=1))
    assert res.status is Status.TIMEOUT_NO_SOLUTION and res.values == {}


def test_guard_on_integer_count(tiny3):
    model, _ = build_deterministic(tiny3)
    with pytest.raises(TooLargeError):
        solve(model, COST, SolveConfig(max_integer_vars=10))


def test_reproducible(tiny2):
    model, _ = build_deterministic(tiny2)
    a, b = solve(model, COST), solve(model, COST)
    assert (a.status, a.objective, a.values, a.gap, a.nodes) == (b.status, b.objective, b.values, b.gap, b.nodes)


def test_engines_agree_on_bin_model(tiny2):
    model, _ = build_deterministic(tiny2)
    for k in (COST, FREQUENCY):
        h = solve(model, k, SolveConfig(lp_engine="highs"))
        d = solve(model, k, SolveConfig(lp_engine="dense"))
        assert h.objective == pytest.approx(d.objective, abs=1e-6)


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(time_limit=0)
    with pytest.raises(ValueError):
        SolveConfig(mip_gap_target=-1)
    with pytest.raises(ValueError):
        solve(knapsack(), 0, SolveConfig(backend="nope"))
    assert SolveConfig().time_limit == 1200


def test_gap_definition():
    assert relative_gap(90.0, 100.0) == pytest.approx(0.1)
    assert relative_gap(0.0, 0.0) == 0.0
    assert math.isinf(relative_gap(-math.inf, 1.0))


# --- dense simplex -----------------------------------------------------------------

@pytest.mark.parametrize("lp", [solve_lp, solve_lp_highs])
def test_simplex_basic_statuses(lp):
    st_, x, val = lp([-1, -1], [[1, 2], [3, 1]], [-1, -1], [4, 6], [0, 0], [np.inf, np.inf])
    assert st_ == "optimal" and val == pytest.approx(-2.8)
    assert lp([1], [[1], [1]], [1, -1], [2, 1], [0], [np.inf])[0] == "infeasible"
    assert lp([-1], [[1]], [1], [0], [0], [np.inf])[0] == "unbounded"


def test_simplex_free_and_flipped_bounds():
    st_, x, val = solve_lp([1, 1], [[1, 1]], [0], [-3], [-np.inf, -np.inf], [np.inf, 1])
    assert st_ == "optimal" and val == pytest.approx(-3) and x[1] <= 1 + 1e-9


def test_simplex_degenerate_cycle_example():
    # Beale's cycling example; Bland's fallback must terminate
    c = [-0.75, 150, -0.02, 6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    st_, x, val = solve_lp(c, A, [-1, -1, -1], [0, 0, 1], [0] * 4, [np.inf] * 4)
    assert st_ == "optimal" and val == pytest.approx(-0.05)


def test_simplex_iteration_limit():
    with pytest.raises(SimplexError):
        solve_lp([-1, -1], [[1, 2], [3, 1]], [-1, -1], [4, 6], [0, 0], [np.inf, np.inf], max_iter=1)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_simplex_matches_highs(data):
    n = data.draw(st.integers(1, 5))
    m = data.draw(st.integers(1, 4))
    num = st.integers(-5, 5)
    c = [data.draw(num) for _ in range(n)]
    A = [[data.draw(num) for _ in range(n)] for _ in range(m)]
    senses = [data.draw(st.sampled_from([-1, 0, 1])) for _ in range(m)]
    b = [data.draw(num) for _ in range(m)]
    ub = [data.draw(st.sampled_from([1.0, 4.0, np.inf])) for _ in range(n)]
    r1 = solve_lp(c, A, senses, b, [0] * n, ub)
    r2 = solve_lp_highs(c, A, senses, b, [0] * n, ub)
    assert r1[0] == r2[0]
    if r1[0] == "optimal":
        assert r1[2] == pytest.approx(r2[2], abs=1e-7)


# --- solution files ----------------------------------------------------------------

def test_gurobi_style_two_lines():
    out = parse_solution_text("x 1\ny 0.5\n", "gurobi-sol-style")
    assert out.values == {"x": 1.0, "y": 0.5} and out.warnings == []


def test_gurobi_objective_comment():
    out = parse_solution_text("# Objective value = 7\nx 1\n", "gurobi-sol-style")
    assert out.objective == 7.0


def test_empty_file_warns(tmp_path):
    p = tmp_path / "e.sol"
    p.write_text("")
    for d in ("generic-csv", "cbc-style", "gurobi-sol-style"):
        out = parse_solution_file(p, d)
        assert out.values == {} and out.warnings


def test_cbc_fixture_matches_hand_parse(tmp_path):
    p = tmp_path / "cbc.sol"
    p.write_text("Optimal - objective value 7.00000000\n"
                 "      0 x                      1                       4\n"
                 "      1 y                      1                       3\n"
                 "**    2 z                   0.25                       0\n")
    out = parse_solution_file(p, "cbc-style")
    assert out.status == "optimal" and out.objective == 7.0
    assert out.values == {"x": 1.0, "y": 1.0, "z": 0.25}


def test_cbc_infeasible_header():
    out = parse_solution_text("Infeasible - objective value 0\n", "cbc-style")
    assert out.status == "infeasible"


def test_generic_csv_with_header():
    out = parse_solution_text("name,value\n# note\na,1\nb,2.5\n", "generic-csv", ["a", "b", "c"])
    assert out.values == {"a": 1.0, "b": 2.5, "c": 0.0}
    assert any("missing" in w for w in out.warnings)


@pytest.mark.parametrize("dialect,text,line", [
    ("gurobi-sol-style", "x 1\ny\n", 2),
    ("generic-csv", "a,1\nb;2\n", 2),
    ("cbc-style", "Optimal - objective value 1\n 0 x 1 0\nnot a row\n", 3),
    ("gurobi-sol-style", "x one\n", 1),
])
def test_malformed_line_numbers(dialect, text, line):
    with pytest.raises(SolutionFileError, match=f"line {line}"):
        parse_solution_text(text, dialect)


def test_unknown_dialect():
    with pytest.raises(ValueError):
        parse_solution_text("", "xml")


# --- external bridge ---------------------------------------------------------------

def test_external_knapsack_matches_internal():
    res = solve(knapsack(), 0, SolveConfig(backend="external", command=fake_cmd()))
    assert res.status is Status.OPTIMAL and res.objective == 7
    assert res.values == {"x": 1.0, "y": 1.0}


def test_external_bin_model_matches_internal(tiny2):
    model, _ = build_deterministic(tiny2)
    ext = solve(model, COST, SolveConfig(backend="external", command=fake_cmd()))
    assert ext.objective == pytest.approx(solve(model, COST).objective)
    ext = solve(model, FREQUENCY, SolveConfig(backend="external", command=fake_cmd()))
    assert ext.objective == pytest.approx(solve(model, FREQUENCY).objective)


def test_external_env_var(monkeypatch):
    monkeypatch.setenv(ENV_VAR, fake_cmd())
    assert solve(knapsack(), 0, SolveConfig(backend="external")).objective == 7


def test_external_missing_binary(monkeypatch):
    monkeypatch.delenv(ENV_VAR, raising=False)
    with pytest.raises(SolverUnavailableError):
        solve(knapsack(), 0, SolveConfig(backend="external"))
    with pytest.raises(SolverUnavailableError):
        solve(knapsack(), 0, SolveConfig(backend="external", command="/no/such/solver {mps} {sol}"))


@pytest.mark.parametrize("flag,status", [("--infeasible", Status.INFEASIBLE), ("--garbage", Status.ERROR),
                                         ("--nofile", Status.ERROR)])
def test_external_failure_modes(flag, status):
    res = solve(knapsack(), 0, SolveConfig(backend="external", command=fake_cmd(flag)))
    assert res.status is status


def test_external_partial_file_defaults_to_zero():
    res = solve(knapsack(), 0, SolveConfig(backend="external", command=fake_cmd("--partial")))
    assert res.values == {"x": 1.0, "y": 0.0} and res.objective == 4
