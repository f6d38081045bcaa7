"""Readers for solver solution files.

Dialects
--------
generic-csv
    ``name,value`` per line; an optional ``name,value`` header; ``#`` comments.
cbc-style
    First line is a status header such as ``Optimal - objective value 7.0``;
    then ``index name value [reduced_cost]`` rows, where the index may carry a
    ``**`` marker for infeasible entries.
gurobi-sol-style
    ``name value`` per line; ``#`` lines are comments, and
    ``# Objective value = 7`` is picked up when present.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

DIALECTS = ("generic-csv", "cbc-style", "gurobi-sol-style")


class SolutionFileError(ValueError):
    pass


@dataclass
class ParsedSolution:
    values: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    status: str | None = None
    objective: float | None = None


_CBC_HEADER = re.compile(r"^\s*(?P<status>[A-Za-z][A-Za-z \-]*?)\s*-\s*objective value\s+(?P<obj>\S+)", re.I)
_GUROBI_OBJ = re.compile(r"objective value\s*=\s*(\S+)", re.I)


def _float(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise SolutionFileError(f"line {lineno}: expected a number, got {tok!r}") from None


def _cbc_status(text: str) -> str:
    t = text.lower()
    if "infeasible" in t:
        return "infeasible"
    if "unbounded" in t:
        return "unbounded"
    if t.startswith("optimal"):
        return "optimal"
    if "stopped" in t or "time" in t:
        return "feasible"
    return t.strip()


def parse_solution_text(text: str, dialect: str, variables: Iterable[str] | None = None) -> ParsedSolution:
    if dialect not in DIALECTS:
        raise ValueError(f"unknown dialect {dialect!r}; expected one of {DIALECTS}")
    out = ParsedSolution()
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if dialect == "generic-csv":
            if line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise SolutionFileError(f"line {lineno}: expected 'name,value', got {raw!r}")
            if lineno == 1 and parts[1].lower() == "value":
                continue
            out.values[parts[0]] = _float(parts[1], lineno)
        elif dialect == "gurobi-sol-style":
            if line.startswith("#"):
                m = _GUROBI_OBJ.search(line)
                if m:
                    out.objective = _float(m.group(1), lineno)
                continue
            parts = line.split()
            if len(parts) != 2:
                raise SolutionFileError(f"line {lineno}: expected 'name value', got {raw!r}")
            out.values[parts[0]] = _float(parts[1], lineno)
        else:  # cbc-style
            if out.status is None and not out.values:
                m = _CBC_HEADER.match(line)
                if m:
                    out.status = _cbc_status(m.group("status"))
                    out.objective = _float(m.group("obj"), lineno)
                    continue
                if not line[0].isdigit() and not line.startswith("**"):
                    out.status = _cbc_status(line)
                    continue
            parts = line.split()
            if parts and parts[0] == "**":
                parts = parts[1:]
            elif parts and parts[0].startswith("**"):
                parts[0] = parts[0][2:]
            if len(parts) < 3 or not parts[0].isdigit():
                raise SolutionFileError(f"line {lineno}: expected 'index name value', got {raw!r}")
            out.values[parts[1]] = _float(parts[2], lineno)
    if not out.values:
        out.warnings.append("solution file contains no variable values")
    if variables is not None:
        missing = [v for v in variables if v not in out.values]
        for name in missing:
            out.values[name] = 0.0
        if missing:
            out.warnings.append(f"{len(missing)} variables missing from the solution file; set to 0 "
                                f"(first: {missing[0]!r})")
    return out


def parse_solution_file(path: str | Path, dialect: str, variables: Iterable[str] | None = None) -> ParsedSolution:
    return parse_solution_text(Path(path).read_text(), dialect, variables)
