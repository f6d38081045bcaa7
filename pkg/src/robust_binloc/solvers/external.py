"""Bridge to an external MIP solver process, talking only through files.

The command template comes from ``SolveConfig.command`` or the environment
variable ``ROBUST_BINLOC_SOLVER_CMD`` and may use ``{mps}``, ``{sol}`` and
``{timelimit}`` placeholders, e.g.::

    cbc {mps} sec {timelimit} solve solu {sol}

Each call works in its own temporary directory holding ``model.mps`` and the
solution file ``model.sol``; the directory is removed afterwards.
"""

from __future__ import annotations

import logging
import os
import shlex
import shutil
import subprocess
import tempfile
import time
from pathlib import Path

import numpy as np

from ..milp import ModelIR, export_mps
from .base import SolveConfig, SolveResult, SolverUnavailableError, Status
from .solfile import SolutionFileError, parse_solution_file

ENV_VAR = "ROBUST_BINLOC_SOLVER_CMD"
log = logging.getLogger(__name__)


def command_template(config: SolveConfig) -> str:
    template = config.command or os.environ.get(ENV_VAR)
    if not template:
        raise SolverUnavailableError(f"no external solver command configured (set {ENV_VAR})")
    return template


def solve_external(model: ModelIR, objective_index: int, config: SolveConfig) -> SolveResult:
    template = command_template(config)
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory(prefix="binloc-") as tmp:
        mps = Path(tmp) / "model.mps"
        sol = Path(tmp) / "model.sol"
        mps.write_text(export_mps(model, objective_index))
        try:
            argv = shlex.split(template.format(mps=mps, sol=sol, timelimit=int(np.ceil(config.time_limit))))
        except (KeyError, IndexError, ValueError) as exc:
            raise SolverUnavailableError(f"bad solver command template {template!r}: {exc}") from exc
        if not argv or shutil.which(argv[0]) is None:
            raise SolverUnavailableError(f"solver executable not found: {argv[0] if argv else template!r}")
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, cwd=tmp,
                                  timeout=config.time_limit + 60)
        except subprocess.TimeoutExpired:
            return SolveResult(Status.TIMEOUT_NO_SOLUTION, wall_time=time.perf_counter() - t0,
                               message="external solver exceeded the time limit")
        wall = time.perf_counter() - t0
        if not sol.exists():
            msg = (proc.stdout + proc.stderr).strip().splitlines()[-1:] or [""]
            return SolveResult(Status.ERROR, wall_time=wall,
                               message=f"no solution file (exit {proc.returncode}): {msg[0]}")
        try:
            parsed = parse_solution_file(sol, config.dialect)
        except SolutionFileError as exc:
            return SolveResult(Status.ERROR, wall_time=wall, message=f"unparsable solution file: {exc}")

    for w in parsed.warnings:
        log.warning(w)
    if parsed.status in ("infeasible", "unbounded"):
        return SolveResult(Status(parsed.status), wall_time=wall)
    if not parsed.values:
        return SolveResult(Status.TIMEOUT_NO_SOLUTION, wall_time=wall, message="; ".join(parsed.warnings))
    values = {name: parsed.values.get(name, 0.0) for name in model.var_names}
    objective = model.objectives[objective_index].value(model.vector(values))
    status = Status.OPTIMAL if parsed.status == "optimal" else Status.FEASIBLE
    gap = 0.0 if status is Status.OPTIMAL else None
    return SolveResult(status, objective, values, gap, wall, message=parsed.status or "")
