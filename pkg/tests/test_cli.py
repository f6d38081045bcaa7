from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import pytest

from robust_binloc.cli import EXIT_BACKEND, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main
from robust_binloc.instance import load, save
from robust_binloc.solvers.external import ENV_VAR

from conftest import tiny
from helpers import self_served
from oracles import brute_force_frontier

FAKE = Path(__file__).parent / "fake_solver.py"


def rows(path):
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def inst_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("inst") / "tiny2.json"
    save(tiny(2), path)
    return path


@pytest.fixture(scope="module")
def det_dir(tmp_path_factory, inst_path):
    out = tmp_path_factory.mktemp("det")
    assert main(["solve", "--instance", str(inst_path), "--out-dir", str(out), "--runs", "12"]) == EXIT_OK
    return out


def test_generate_profile(tmp_path):
    out = tmp_path / "i16.json"
    assert main(["generate", "--seed", "7", "--profile", "i16", "--out", str(out)]) == EXIT_OK
    inst = load(out)
    assert inst.n_points == 16 and inst.fractions == ("recyclable", "mixed")


def test_generate_single_point(tmp_path):
    out = tmp_path / "one.json"
    assert main(["generate", "--points", "1", "--out", str(out)]) == EXIT_OK
    assert load(out).n_points == 1


def test_generate_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--profile", "nope", "--out", str(tmp_path / "x.json")])
    assert exc.value.code == EXIT_USAGE
    assert main(["generate", "--profile", "custom", "--out", str(tmp_path / "x.json")]) == EXIT_USAGE
    assert main(["generate", "--points", "0", "--out", str(tmp_path / "x.json")]) == EXIT_USAGE


def test_missing_instance_is_usage_error(tmp_path):
    assert main(["solve", "--instance", str(tmp_path / "none.json"), "--out-dir", str(tmp_path)]) == EXIT_USAGE


def test_solve_pareto_matches_enumeration(det_dir, inst_path):
    got = [(float(r["cost"]), float(r["frequency"])) for r in rows(det_dir / "frontier_det.csv")]
    assert len(got) <= 12
    assert got == [(float(c), float(f)) for c, f in brute_force_frontier(load(inst_path))]
    manifest = json.loads((det_dir / "manifest.json").read_text())
    assert manifest["status"] == "ok" and "frontier_det.csv" in manifest["outputs"]
    for r in rows(det_dir / "frontier_det.csv"):
        assert (det_dir / r["solution"]).exists()


def test_robust_gamma_zero_matches_det(tmp_path, det_dir, inst_path):
    assert main(["solve", "--instance", str(inst_path), "--mode", "robust", "--rho", "0.3", "--gamma", "0",
                 "--out-dir", str(tmp_path), "--runs", "12"]) == EXIT_OK
    csvs = list(tmp_path.glob("frontier_*.csv"))
    assert len(csvs) == 1
    key = lambda rs: [(r["cost"], r["frequency"]) for r in rs]
    assert key(rows(csvs[0])) == key(rows(det_dir / "frontier_det.csv"))


def test_single_objective(tmp_path, inst_path):
    assert main(["solve", "--instance", str(inst_path), "--objective", "cost", "--out-dir", str(tmp_path)]) == EXIT_OK
    (row,) = rows(tmp_path / "frontier_det.csv")
    assert float(row["cost"]) == brute_force_frontier(load(inst_path))[0][0]


def test_missing_external_binary(tmp_path, inst_path, monkeypatch):
    monkeypatch.delenv(ENV_VAR, raising=False)
    code = main(["solve", "--instance", str(inst_path), "--backend", "external", "--solver-cmd",
                 "/nonexistent/solver {mps} {sol}", "--out-dir", str(tmp_path)])
    assert code == EXIT_BACKEND
    assert not list(tmp_path.glob("frontier_*.csv")) and not list(tmp_path.glob("solution_*.json"))
    assert json.loads((tmp_path / "manifest.json").read_text())["status"] == "backend-error"
    assert main(["solve", "--instance", str(inst_path), "--backend", "external",
                 "--out-dir", str(tmp_path)]) == EXIT_BACKEND


def test_external_infeasible_exit(tmp_path, inst_path):
    cmd = f"{sys.executable} {FAKE} {{mps}} {{sol}} {{timelimit}} --infeasible"
    code = main(["solve", "--instance", str(inst_path), "--backend", "external", "--solver-cmd", cmd,
                 "--objective", "cost", "--out-dir", str(tmp_path)])
    assert code == EXIT_INFEASIBLE


def test_external_backend_frontier(tmp_path, inst_path, det_dir):
    cmd = f"{sys.executable} {FAKE} {{mps}} {{sol}} {{timelimit}}"
    assert main(["solve", "--instance", str(inst_path), "--backend", "external", "--solver-cmd", cmd,
                 "--runs", "12", "--out-dir", str(tmp_path)]) == EXIT_OK
    key = lambda rs: [(float(r["cost"]), float(r["frequency"])) for r in rs]
    assert key(rows(tmp_path / "frontier_det.csv")) == key(rows(det_dir / "frontier_det.csv"))


def test_sweep_layout(tmp_path):
    inst = tmp_path / "one.json"
    save(tiny(1), inst)
    out = tmp_path / "sweep"
    assert main(["sweep", "--instance", str(inst), "--gammas", "0.05,0.1", "--rhos", "0.1",
                 "--runs", "4", "--samples", "500", "--out-dir", str(out)]) == EXIT_OK
    dirs = sorted(p.name for p in out.iterdir() if p.is_dir())
    assert len(dirs) == 3 and "det" in dirs
    for name in ("table2.csv", "table3.csv", "tables.json", "violations.csv", "manifest.json"):
        assert (out / name).exists()
    assert len(rows(out / "table2.csv")) == 2
    assert len(rows(out / "violations.csv")) == 2 * 3


def test_compare_identical_frontiers(tmp_path, det_dir):
    f = str(det_dir / "frontier_det.csv")
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--det", f, "--robust", f, "--out", str(out)]) == EXIT_OK
    got = rows(out)
    assert len(got) == 3
    assert all(float(r[k]) == 0.0 for r in got for k in ("delta", "delta_c", "delta_f"))


def test_compare_missing_file(tmp_path):
    assert main(["compare", "--det", str(tmp_path / "a.csv"), "--robust", str(tmp_path / "b.csv")]) == EXIT_USAGE


def test_simulate_soyster_design(tmp_path):
    inst = tiny(3)
    save(inst, tmp_path / "i.json")
    sol = self_served(inst, acc=1, load_factor=1.5)
    (tmp_path / "s.json").write_text(json.dumps(sol.to_dict()))
    out = tmp_path / "v.json"
    assert main(["simulate", "--instance", str(tmp_path / "i.json"), "--solution", str(tmp_path / "s.json"),
                 "--rho", "0.5", "--samples", "2000", "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["violation_probability"] == 0.0
    csv_out = tmp_path / "v.csv"
    assert main(["simulate", "--instance", str(tmp_path / "i.json"), "--solution", str(tmp_path / "s.json"),
                 "--rho", "0.5", "--samples", "200", "--out", str(csv_out)]) == EXIT_OK
    assert rows(csv_out)[-1]["point"] == "any"


def test_export_geojson(tmp_path, det_dir, inst_path):
    out = tmp_path / "geo"
    sol_file = rows(det_dir / "frontier_det.csv")[0]["solution"]
    assert main(["export-geojson", "--solution", str(det_dir / sol_file), "--instance", str(inst_path),
                 "--out", str(out)]) == EXIT_OK
    sol = json.loads((det_dir / sol_file).read_text())
    files = sorted(out.glob("*.geojson"))
    assert len(files) == 2
    for f in files:
        feats = json.loads(f.read_text())["features"]
        assert sum(x["geometry"]["type"] == "Point" for x in feats) == len(sol["open"])


def test_export_geojson_mismatch(tmp_path, det_dir):
    inst = tmp_path / "big.json"
    save(tiny(3), inst)
    sol_file = rows(det_dir / "frontier_det.csv")[0]["solution"]
    assert main(["export-geojson", "--solution", str(det_dir / sol_file), "--instance", str(inst),
                 "--out", str(tmp_path / "g")]) == EXIT_USAGE
