"""Command-line entry point: ``robust-binloc <command> [flags]``.

Exit codes: 0 success, 2 usage or bad input, 3 solver backend/environment, 4 infeasible or solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .deterministic import Solution
from .evaluation import McConfig, price_of_robustness, simulate
from .instance import PROFILES, InstanceFormatError, generate, load, save
from .moo import (COST, FREQUENCY, STRATEGIES, BinProblem, ComparisonRow, ParetoPoint, ParetoSet, PayoffError,
                  compare, compromise, deterministic_problem, frontier_pipeline, ideal_vector,
                  robust_problem, scenario_sweep)
from .reports import (read_frontier, write_comparisons, write_frontier, write_geojson, write_solution,
                      write_sweep_json, write_table2, write_table3, write_violations)
from .robust import ScenarioConfig
from .solvers.base import SolveConfig, SolverUnavailableError, solve
from .solvers.bnb import TooLargeError
from .solvers.solfile import DIALECTS

EXIT_OK, EXIT_USAGE, EXIT_BACKEND, EXIT_INFEASIBLE = 0, 2, 3, 4
log = logging.getLogger("robust_binloc")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _moments(text: str) -> dict[str, tuple[float, float]]:
    out = {}
    for part in text.split(","):
        try:
            name, mean, std = part.split(":")
            out[name.strip()] = (float(mean), float(std))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected name:mean:std[,...], got {part!r}") from None
    return out


# --- manifest ------------------------------------------------------------------

class Manifest:
    def __init__(self, out_dir: Path, command: str, **fields):
        self.path = out_dir / "manifest.json"
        self.data = {"tool": "robust-binloc", "version": __version__, "command": command,
                     "output_dir": str(out_dir), "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                     "finished": None, "status": "running", "outputs": [], **fields}
        self.write()

    def add(self, path: Path) -> None:
        self.data["outputs"].append(str(Path(path).relative_to(self.path.parent)))

    def finish(self, status: str = "ok") -> None:
        self.data["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        self.data["status"] = status
        self.write()

    def write(self) -> None:
        self.path.write_text(json.dumps(self.data, indent=2, default=str) + "\n")


def _solve_config(args) -> SolveConfig:
    return SolveConfig(time_limit=args.time_limit, mip_gap_target=args.gap, backend=args.backend,
                       command=args.solver_cmd, dialect=args.dialect, max_integer_vars=args.max_int_vars,
                       lp_engine=args.lp_engine)


def _config_dict(cfg: SolveConfig) -> dict:
    d = asdict(cfg)
    d.pop("warm_start", None)
    return d


def _load_instance(path: str):
    try:
        return load(path)
    except FileNotFoundError:
        raise CliError(f"instance file not found: {path}", EXIT_USAGE) from None
    except InstanceFormatError as exc:
        raise CliError(f"invalid instance {path}: {exc}", EXIT_USAGE) from None


def _emit_frontier(out_dir: Path, manifest: Manifest, label: str, pareto: ParetoSet) -> None:
    files = []
    for k, point in enumerate(pareto.points):
        name = f"solution_{k}.json"
        manifest.add(write_solution(out_dir / name, point))
        files.append(name)
    manifest.add(write_frontier(out_dir / f"frontier_{label}.csv", pareto, files))


# --- commands --------------------------------------------------------------------

def cmd_generate(args) -> int:
    if args.profile == "custom":
        if args.points is None:
            raise CliError("--profile custom requires --points", EXIT_USAGE)
        moments = args.moments or PROFILES["i16"][1]
        n = args.points
    else:
        n, moments = PROFILES[args.profile]
        moments = args.moments or moments
        n = args.points if args.points is not None else n
    if n < 1:
        raise CliError("--points must be >= 1", EXIT_USAGE)
    inst = generate(args.seed, n, moments, max_distance=args.max_distance, max_area=args.max_area,
                    name=args.name or f"{args.profile}-s{args.seed}")
    save(inst, args.out)
    print(f"wrote {args.out}: {inst.n_points} points, fractions {list(inst.fractions)}")
    return EXIT_OK


def _problem(args, instance) -> BinProblem:
    base = deterministic_problem(instance)
    if args.mode == "det":
        return base
    return robust_problem(instance, ScenarioConfig(rho=args.rho, gamma_fraction=args.gamma), base)


def cmd_solve(args) -> int:
    instance = _load_instance(args.instance)
    cfg = _solve_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    problem = _problem(args, instance)
    manifest = Manifest(out_dir, "solve", instance=str(args.instance), mode=args.mode,
                        scenario={"rho": args.rho, "gamma": args.gamma} if args.mode == "robust" else None,
                        objective=args.objective, runs=args.runs, strategy=args.strategy,
                        solver=_config_dict(cfg))
    label = problem.label
    try:
        if args.objective == "pareto":
            table, pareto = frontier_pipeline(problem, args.runs, cfg, args.strategy)
        else:
            k = problem.model.objective_index(COST if args.objective == "cost" else FREQUENCY)
            res = solve(problem.model, k, cfg)
            if not res.has_solution:
                manifest.finish(str(res.status))
                raise CliError(f"solver returned {res.status}", EXIT_INFEASIBLE)
            sol = problem.decode(res)
            pareto = ParetoSet([ParetoPoint(sol, sol.cost, sol.frequency_objective, res.gap, res.status)],
                               problem.scenario, 1)
    except PayoffError as exc:
        manifest.finish("infeasible")
        raise CliError(str(exc), EXIT_INFEASIBLE) from None
    except (SolverUnavailableError, TooLargeError) as exc:
        manifest.finish("backend-error")
        raise CliError(str(exc), EXIT_BACKEND) from None
    _emit_frontier(out_dir, manifest, label, pareto)
    manifest.data["skipped_runs"] = pareto.skipped
    manifest.data["avg_gap"] = pareto.avg_gap
    manifest.finish()
    for p in pareto.points:
        print(f"cost={p.cost:g} frequency={p.frequency:g} gap={p.gap} status={p.status}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    instance = _load_instance(args.instance)
    cfg = _solve_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(out_dir, "sweep", instance=str(args.instance),
                        scenario_grid={"gammas": args.gammas, "rhos": args.rhos}, runs=args.runs,
                        strategy=args.strategy, solver=_config_dict(cfg), mc_samples=args.samples,
                        mc_seed=args.seed)
    try:
        sweep = scenario_sweep(instance, args.gammas, args.rhos, cfg, args.runs, args.strategy, args.workers)
    except PayoffError as exc:
        manifest.finish("infeasible")
        raise CliError(str(exc), EXIT_INFEASIBLE) from None
    except (SolverUnavailableError, TooLargeError) as exc:
        manifest.finish("backend-error")
        raise CliError(str(exc), EXIT_BACKEND) from None
    det_dir = out_dir / "det"
    det_dir.mkdir(exist_ok=True)
    _emit_frontier(det_dir, manifest, "det", sweep.deterministic)
    for cell in sweep.cells:
        if cell.pareto is None:
            continue
        cdir = out_dir / cell.scenario.label
        cdir.mkdir(exist_ok=True)
        _emit_frontier(cdir, manifest, cell.scenario.label, cell.pareto)
    manifest.add(write_table2(out_dir / "table2.csv", sweep))
    manifest.add(write_table3(out_dir / "table3.csv", sweep.comparisons))
    manifest.add(write_sweep_json(out_dir / "tables.json", sweep))
    robust = [c.pareto for c in sweep.cells if c.pareto is not None and c.pareto.points]
    if args.samples > 0 and robust:
        rows = price_of_robustness(sweep.deterministic, robust, instance,
                                   McConfig(args.samples, args.seed), sweep.ideal)
        manifest.add(write_violations(out_dir / "violations.csv", rows))
    failed = [c for c in sweep.cells if c.error]
    manifest.data["failed_scenarios"] = {c.scenario.label: c.error for c in failed}
    manifest.finish("ok" if not failed else "partial")
    for row in sweep.table2():
        print(f"gamma={row['gamma']:g} rho={row['rho']:g} solutions={row['solutions']} avg_gap={row['avg_gap']}")
    return EXIT_OK if not failed else EXIT_INFEASIBLE


def cmd_compare(args) -> int:
    try:
        det = read_frontier(Path(args.det))
        rob = read_frontier(Path(args.robust))
    except (FileNotFoundError, ValueError) as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    if not det.points or not rob.points:
        raise CliError("empty frontier", EXIT_USAGE)
    ideal = tuple(args.ideal) if args.ideal else ideal_vector(det)
    if len(ideal) != 2:
        raise CliError("--ideal takes cost,frequency", EXIT_USAGE)
    pairs = [("min-cost", rob.min_cost(), det.min_cost()),
             ("max-frequency", rob.max_frequency(), det.max_frequency())]
    rc = compromise(rob, ideal)
    ref = ideal if args.compromise_reference == "ideal" else compromise(det, ideal)
    pairs.append(("compromise", rc, ref))
    rows = []
    for name, r, d in pairs:
        c = compare(r, d)
        rows.append(ComparisonRow(args.gamma, args.rho, name, c.delta, c.delta_c, c.delta_f))
        print(f"{name}: delta={c.delta:.6g} delta_c={c.delta_c:.6g} delta_f={c.delta_f:.6g}")
    if args.out:
        write_comparisons(Path(args.out), rows)
    return EXIT_OK


def cmd_simulate(args) -> int:
    instance = _load_instance(args.instance)
    try:
        sol = Solution.from_dict(json.loads(Path(args.solution).read_text()))
    except (FileNotFoundError, KeyError, ValueError) as exc:
        raise CliError(f"cannot read solution {args.solution}: {exc}", EXIT_USAGE) from None
    report = simulate(sol, instance, McConfig(args.samples, args.seed, args.rho))
    print(f"violation_probability={report.violation_probability:.6g} worst_overflow={report.worst_overflow:.6g}")
    if args.out:
        out = Path(args.out)
        if out.suffix == ".json":
            out.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        else:
            with out.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["point", "fraction", "rate"])
                for (i, m), r in sorted(report.row_rates.items()):
                    w.writerow([i, instance.fractions[m], repr(r)])
                w.writerow(["any", "", repr(report.violation_probability)])
    return EXIT_OK


def cmd_export_geojson(args) -> int:
    instance = _load_instance(args.instance)
    try:
        sol = Solution.from_dict(json.loads(Path(args.solution).read_text()))
        paths = write_geojson(Path(args.out), sol, instance)
    except (FileNotFoundError, KeyError) as exc:
        raise CliError(f"cannot read solution {args.solution}: {exc}", EXIT_USAGE) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


# --- parser --------------------------------------------------------------------

def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=("internal", "external"), default="internal")
    p.add_argument("--solver-cmd", default=None,
                   help="external command template with {mps} {sol} {timelimit}; "
                        "defaults to $ROBUST_BINLOC_SOLVER_CMD")
    p.add_argument("--dialect", choices=DIALECTS, default="cbc-style")
    p.add_argument("--time-limit", type=float, default=1200.0)
    p.add_argument("--gap", type=float, default=0.0, help="target relative MIP gap")
    p.add_argument("--max-int-vars", type=int, default=64, help="size guard for the internal solver")
    p.add_argument("--lp-engine", choices=("highs", "dense"), default="highs",
                   help="LP engine for branch-and-bound node relaxations")
    p.add_argument("--strategy", choices=STRATEGIES, default="LWS", help="payoff-table strategy")
    p.add_argument("--runs", type=int, default=10, help="epsilon-constraint grid points")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robust-binloc", description="Robust bi-objective bin location toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize an instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points", type=int, default=None, help="number of points (overrides the profile size)")
    p.add_argument("--profile", choices=sorted(PROFILES) + ["custom"], default="i16")
    p.add_argument("--moments", type=_moments, default=None, help="name:mean:std,... per fraction")
    p.add_argument("--max-distance", type=float, default=300.0)
    p.add_argument("--max-area", type=float, default=5.0)
    p.add_argument("--name", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="single-objective or Pareto solve of one model")
    p.add_argument("--instance", required=True)
    p.add_argument("--mode", choices=("det", "robust"), default="det")
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0, help="budget as a fraction of each row's neighbour count")
    p.add_argument("--objective", choices=("cost", "freq", "pareto"), default="pareto")
    p.add_argument("--out-dir", required=True)
    _solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="robust frontiers over a (gamma, rho) grid")
    p.add_argument("--instance", required=True)
    p.add_argument("--gammas", type=_floats, required=True)
    p.add_argument("--rhos", type=_floats, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--samples", type=int, default=10000, help="Monte Carlo samples for violations.csv (0 skips)")
    p.add_argument("--seed", type=int, default=0, help="Monte Carlo seed")
    p.add_argument("--out-dir", required=True)
    _solver_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="deltas between a robust and a deterministic frontier CSV")
    p.add_argument("--det", required=True)
    p.add_argument("--robust", required=True)
    p.add_argument("--ideal", type=_floats, default=None, help="cost,frequency (default: from --det)")
    p.add_argument("--compromise-reference", choices=("solution", "ideal"), default="solution")
    p.add_argument("--gamma", type=float, default=float("nan"))
    p.add_argument("--rho", type=float, default=float("nan"))
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="Monte Carlo violation rate of a stored design")
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="violations CSV (or .json)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("export-geojson", help="GeoJSON FeatureCollections of a design, one per fraction")
    p.add_argument("--solution", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_export_geojson)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
