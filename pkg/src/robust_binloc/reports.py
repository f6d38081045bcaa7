"""CSV/JSON/GeoJSON emitters for frontiers, sweep tables, violation reports and designs."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from .deterministic import Solution
from .instance import Instance
from .moo import ComparisonReport, ComparisonRow, ParetoPoint, ParetoSet, SweepResult
from .solvers.base import Status

FRONTIER_FIELDS = ("cost", "frequency", "gap", "status", "epsilon", "solution")
TABLE2_FIELDS = ("gamma", "rho", "avg_gap", "solutions", "error")
COMPARISON_FIELDS = ("representative", "gamma", "rho", "delta", "delta_c", "delta_f")
VIOLATION_FIELDS = ("gamma", "rho", "representative", "cost", "frequency", "delta", "delta_c", "delta_f",
                    "violation_probability", "det_violation_probability")


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def _write_csv(path: Path, fields: Sequence[str], rows: Iterable[dict]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _num(row.get(k)) for k in fields})
    return path


def _write_json(path: Path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def write_frontier(path: Path, pareto: ParetoSet, solution_files: Sequence[str] | None = None) -> Path:
    files = list(solution_files or [""] * len(pareto.points))
    rows = [{"cost": p.cost, "frequency": p.frequency, "gap": p.gap, "status": str(p.status),
             "epsilon": p.epsilon, "solution": f} for p, f in zip(pareto.points, files)]
    return _write_csv(path, FRONTIER_FIELDS, rows)


def read_frontier(path: Path) -> ParetoSet:
    """Frontier CSV back into a ParetoSet; designs are loaded when the solution column names a file."""
    path = Path(path)
    points = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"cost", "frequency"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            sol = None
            if row.get("solution"):
                sol_path = path.parent / row["solution"]
                if sol_path.exists():
                    sol = Solution.from_dict(json.loads(sol_path.read_text()))
            gap = float(row["gap"]) if row.get("gap") else None
            eps = float(row["epsilon"]) if row.get("epsilon") else None
            points.append(ParetoPoint(sol, float(row["cost"]), float(row["frequency"]), gap,
                                      Status(row.get("status") or "feasible"), eps))
    return ParetoSet(points)


def write_solution(path: Path, point_or_solution) -> Path:
    sol = point_or_solution.solution if isinstance(point_or_solution, ParetoPoint) else point_or_solution
    return _write_json(path, sol.to_dict())


def table2_rows(sweep: SweepResult) -> list[dict]:
    return sweep.table2()


def comparison_rows(report: ComparisonReport | Iterable[ComparisonRow]) -> list[dict]:
    return [{"representative": r.representative, "gamma": r.gamma, "rho": r.rho, "delta": r.delta,
             "delta_c": r.delta_c, "delta_f": r.delta_f} for r in report]


def write_table2(path: Path, sweep: SweepResult) -> Path:
    return _write_csv(path, TABLE2_FIELDS, sweep.table2())


def write_table3(path: Path, report: ComparisonReport) -> Path:
    """Wide layout: one row per (block, Gamma), a (delta, delta_c, delta_f) triple per rho."""
    records = report.table3()
    fields = ["block", "gamma"] + [f"{k}@rho={rho:g}" for rho in report.rhos for k in ("delta", "delta_c", "delta_f")]
    return _write_csv(path, fields, records)


def write_comparisons(path: Path, report: ComparisonReport | Iterable[ComparisonRow]) -> Path:
    return _write_csv(path, COMPARISON_FIELDS, comparison_rows(report))


def write_sweep_json(path: Path, sweep: SweepResult) -> Path:
    return _write_json(path, {"ideal": list(sweep.ideal), "table2": sweep.table2(),
                              "table3": comparison_rows(sweep.comparisons)})


def write_violations(path: Path, rows) -> Path:
    return _write_csv(path, VIOLATION_FIELDS, [r.__dict__ for r in rows])


# --- GeoJSON -------------------------------------------------------------------

def geojson(solution: Solution, instance: Instance) -> dict[str, dict]:
    """One FeatureCollection per fraction.

    Only open points become Point features. Each generator served elsewhere adds a
    LineString edge to its collection point. Coordinates are the instance's planar ones.
    """
    n = instance.n_points
    if len(solution.assignment) != n or any(not 0 <= p < n for p in solution.assignment.values()) \
            or any(not 0 <= i < n for i in solution.open):
        raise ValueError(f"solution does not match the instance ({len(solution.assignment)} assigned "
                         f"generators, instance has {n} points)")
    caps = {}
    for (i, m, h), k in solution.bins.items():
        caps[(i, m)] = caps.get((i, m), 0) + k
    out = {}
    for m, fraction in enumerate(instance.fractions):
        feats = []
        for i in sorted(solution.open):
            pt = instance.points[i]
            feats.append({"type": "Feature", "geometry": {"type": "Point", "coordinates": [pt.x, pt.y]},
                          "properties": {"id": pt.id, "open": True, "bins_total": caps.get((i, m), 0),
                                         "frequency_days": solution.frequency.get((i, m)),
                                         "fraction": fraction}})
        for g, i in sorted(solution.assignment.items()):
            if g == i:
                continue
            a, b = instance.points[g], instance.points[i]
            feats.append({"type": "Feature",
                          "geometry": {"type": "LineString", "coordinates": [[a.x, a.y], [b.x, b.y]]},
                          "properties": {"generator": a.id, "collection_point": b.id, "fraction": fraction}})
        out[fraction] = {"type": "FeatureCollection", "features": feats}
    return out


def write_geojson(out_dir: Path, solution: Solution, instance: Instance) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for fraction, fc in geojson(solution, instance).items():
        safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in fraction)
        paths.append(_write_json(out_dir / f"{safe}.geojson", fc))
    return paths
