"""Neutral MILP representation shared by the model builders and the solver backends.

Rows are stored as a CSR matrix so that desk-scale and city-scale models use the
same container; the per-row / per-variable record views are generated on demand.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

CONTINUOUS, INTEGER, BINARY = "continuous", "integer", "binary"
_KIND_CODE = {CONTINUOUS: 0, INTEGER: 1, BINARY: 2}
_KIND_NAME = {v: k for k, v in _KIND_CODE.items()}

LE, EQ, GE = "<=", "=", ">="
_SENSE_CODE = {LE: -1, EQ: 0, GE: 1}
_SENSE_NAME = {v: k for k, v in _SENSE_CODE.items()}

MIN, MAX = "min", "max"

MAX_NAME_LENGTH = 255


class ModelError(ValueError):
    """Structural problem in a model (bad reference, duplicate name, ...)."""


@dataclass(frozen=True)
class VariableDef:
    name: str
    kind: str = CONTINUOUS
    lower: float = 0.0
    upper: float = math.inf


@dataclass(frozen=True)
class LinearConstraint:
    name: str
    terms: tuple[tuple[str, float], ...]
    sense: str
    rhs: float


@dataclass(frozen=True)
class Objective:
    name: str
    sense: str
    indices: np.ndarray
    coefs: np.ndarray

    def value(self, x: np.ndarray) -> float:
        return float(self.coefs @ x[self.indices]) if len(self.indices) else 0.0


@dataclass(frozen=True)
class WarmStart:
    values: Mapping[str, float]


class ModelStats(NamedTuple):
    n_variables: int
    n_constraints: int
    n_nonzeros: int


class ModelIR:
    """Immutable MILP: variables, constraint rows (CSR), objectives, annotations."""

    def __init__(self, var_names, kinds, lower, upper, row_names, A, senses, rhs,
                 objectives=(), annotations=None):
        self.var_names: list[str] = list(var_names)
        self.kinds = np.asarray(kinds, dtype=np.int8)
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.row_names: list[str] = list(row_names)
        self.A: sp.csr_matrix = sp.csr_matrix(A, shape=(len(self.row_names), len(self.var_names)))
        self.senses = np.asarray(senses, dtype=np.int8)
        self.rhs = np.asarray(rhs, dtype=float)
        self.objectives: tuple[Objective, ...] = tuple(objectives)
        self.annotations: dict[str, str] = dict(annotations or {})
        self._var_lookup: dict[str, int] | None = None
        for arr in (self.kinds, self.lower, self.upper, self.senses, self.rhs):
            arr.setflags(write=False)

    # -- lookups -------------------------------------------------------------
    @property
    def n_variables(self) -> int:
        return len(self.var_names)

    @property
    def n_constraints(self) -> int:
        return len(self.row_names)

    def var_index(self, name: str) -> int:
        if self._var_lookup is None:
            self._var_lookup = {n: k for k, n in enumerate(self.var_names)}
        try:
            return self._var_lookup[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}") from None

    def has_variable(self, name: str) -> bool:
        try:
            self.var_index(name)
        except ModelError:
            return False
        return True

    @property
    def integer_mask(self) -> np.ndarray:
        return self.kinds > 0

    @property
    def variables(self) -> list[VariableDef]:
        return [VariableDef(n, _KIND_NAME[int(k)], float(lo), float(up))
                for n, k, lo, up in zip(self.var_names, self.kinds, self.lower, self.upper)]

    def constraint(self, k: int) -> LinearConstraint:
        start, end = self.A.indptr[k], self.A.indptr[k + 1]
        terms = tuple((self.var_names[j], float(c))
                      for j, c in zip(self.A.indices[start:end], self.A.data[start:end]))
        return LinearConstraint(self.row_names[k], terms, _SENSE_NAME[int(self.senses[k])], float(self.rhs[k]))

    @property
    def constraints(self) -> Iterator[LinearConstraint]:
        return (self.constraint(k) for k in range(self.n_constraints))

    def objective_index(self, name_or_index: str | int) -> int:
        if isinstance(name_or_index, (int, np.integer)):
            if not 0 <= name_or_index < len(self.objectives):
                raise ModelError(f"objective index {name_or_index} out of range")
            return int(name_or_index)
        for k, obj in enumerate(self.objectives):
            if obj.name == name_or_index:
                return k
        raise ModelError(f"unknown objective {name_or_index!r}")

    def vector(self, values: Mapping[str, float], default: float = 0.0) -> np.ndarray:
        x = np.full(self.n_variables, default, dtype=float)
        for name, v in values.items():
            x[self.var_index(name)] = v
        return x

    # -- copies --------------------------------------------------------------
    def replace(self, **changes) -> "ModelIR":
        fields = dict(var_names=self.var_names, kinds=self.kinds, lower=self.lower, upper=self.upper,
                      row_names=self.row_names, A=self.A, senses=self.senses, rhs=self.rhs,
                      objectives=self.objectives, annotations=self.annotations)
        fields.update(changes)
        return ModelIR(**fields)

    def with_objectives(self, objectives: Sequence[Objective]) -> "ModelIR":
        return self.replace(objectives=tuple(objectives))

    def with_annotations(self, **notes: str) -> "ModelIR":
        merged = dict(self.annotations)
        merged.update(notes)
        return self.replace(annotations=merged)

    def with_rhs(self, row: int, value: float) -> "ModelIR":
        rhs = self.rhs.copy()
        rhs[row] = value
        return self.replace(rhs=rhs)

    def check(self) -> None:
        """Raise ModelError if a structural invariant is broken."""
        if len(set(self.var_names)) != len(self.var_names):
            raise ModelError("duplicate variable names")
        if len(set(self.row_names)) != len(self.row_names):
            raise ModelError("duplicate constraint names")
        if np.any(self.lower > self.upper):
            raise ModelError("variable with lower > upper")
        binary = self.kinds == 2
        if np.any((self.lower[binary] < 0) | (self.upper[binary] > 1)):
            raise ModelError("binary variable with bounds outside [0, 1]")
        ints = self.kinds > 0
        for arr in (self.lower[ints], self.upper[ints]):
            finite = arr[np.isfinite(arr)]
            if np.any(finite != np.round(finite)):
                raise ModelError("integer variable with fractional bound")
        row_len = np.diff(self.A.indptr)
        if np.any(row_len == 0):
            raise ModelError(f"constraint {self.row_names[int(np.argmin(row_len))]!r} has no terms")
        A = self.A.copy()
        A.sum_duplicates()
        if A.nnz != self.A.nnz:
            raise ModelError("duplicate variable within a constraint")
        if not self.objectives:
            raise ModelError("model has no objective")

    def evaluate_rows(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x

    def max_violation(self, x: np.ndarray) -> float:
        """Largest absolute violation over rows and bounds for point x."""
        act = self.A @ x
        viol = np.zeros_like(act)
        le, ge, eq = self.senses == -1, self.senses == 1, self.senses == 0
        viol[le] = act[le] - self.rhs[le]
        viol[ge] = self.rhs[ge] - act[ge]
        viol[eq] = np.abs(act[eq] - self.rhs[eq])
        worst = float(viol.max(initial=0.0))
        bound = float(np.max(np.concatenate([self.lower - x, x - self.upper, [0.0]])))
        return max(worst, bound)


class ModelBuilder:
    """Accumulates variables and rows, then freezes them into a ModelIR."""

    def __init__(self):
        self._names: list[str] = []
        self._kinds: list[np.ndarray] = []
        self._lower: list[np.ndarray] = []
        self._upper: list[np.ndarray] = []
        self._lookup: dict[str, int] = {}
        self._row_names: list[str] = []
        self._blocks: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []  # (row_ids, cols, data)
        self._senses: list[np.ndarray] = []
        self._rhs: list[np.ndarray] = []
        self._objectives: list[Objective] = []
        self.annotations: dict[str, str] = {}

    @property
    def n_variables(self) -> int:
        return len(self._names)

    @property
    def n_constraints(self) -> int:
        return len(self._row_names)

    def add_variables(self, names: Sequence[str], kind: str = CONTINUOUS,
                      lower: float | np.ndarray = 0.0, upper: float | np.ndarray = math.inf) -> np.ndarray:
        start = len(self._names)
        for k, name in enumerate(names):
            if name in self._lookup:
                raise ModelError(f"duplicate variable {name!r}")
            self._lookup[name] = start + k
        self._names.extend(names)
        n = len(names)
        if kind == BINARY:
            lower, upper = np.maximum(lower, 0.0), np.minimum(upper, 1.0)
        self._kinds.append(np.full(n, _KIND_CODE[kind], dtype=np.int8))
        self._lower.append(np.broadcast_to(np.asarray(lower, dtype=float), (n,)).copy())
        self._upper.append(np.broadcast_to(np.asarray(upper, dtype=float), (n,)).copy())
        return np.arange(start, start + n)

    def add_variable(self, name: str, kind: str = CONTINUOUS, lower: float = 0.0,
                     upper: float = math.inf) -> int:
        return int(self.add_variables([name], kind, lower, upper)[0])

    def index(self, name: str) -> int:
        try:
            return self._lookup[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}") from None

    def _resolve_terms(self, terms) -> tuple[np.ndarray, np.ndarray]:
        cols, coefs = [], []
        for var, coef in terms:
            cols.append(self.index(var) if isinstance(var, str) else int(var))
            coefs.append(float(coef))
        cols_arr = np.asarray(cols, dtype=np.int64)
        if len(set(cols)) != len(cols):
            raise ModelError("duplicate variable within a constraint")
        if np.any(cols_arr >= len(self._names)) or np.any(cols_arr < 0):
            raise ModelError("term references an undeclared variable")
        return cols_arr, np.asarray(coefs, dtype=float)

    def add_constraint(self, name: str, terms: Iterable[tuple[str | int, float]], sense: str, rhs: float) -> int:
        cols, coefs = self._resolve_terms(terms)
        if len(cols) == 0:
            raise ModelError(f"constraint {name!r} has no terms")
        row = len(self._row_names)
        self._row_names.append(name)
        self._blocks.append((np.full(len(cols), 0, dtype=np.int64), cols, coefs))
        self._senses.append(np.array([_SENSE_CODE[sense]], dtype=np.int8))
        self._rhs.append(np.array([rhs], dtype=float))
        return row

    def add_constraint_block(self, names: Sequence[str], row_ids: np.ndarray, cols: np.ndarray,
                             coefs: np.ndarray, sense: str | np.ndarray, rhs: float | np.ndarray) -> np.ndarray:
        """Add len(names) rows at once; row_ids are local (0..len(names)-1) per nonzero."""
        n = len(names)
        start = len(self._row_names)
        self._row_names.extend(names)
        self._blocks.append((np.asarray(row_ids, dtype=np.int64), np.asarray(cols, dtype=np.int64),
                             np.asarray(coefs, dtype=float)))
        if isinstance(sense, str):
            senses = np.full(n, _SENSE_CODE[sense], dtype=np.int8)
        else:
            senses = np.asarray(sense, dtype=np.int8)
        self._senses.append(senses)
        self._rhs.append(np.broadcast_to(np.asarray(rhs, dtype=float), (n,)).copy())
        return np.arange(start, start + n)

    def add_objective(self, name: str, sense: str, terms: Iterable[tuple[str | int, float]] | None = None,
                      *, indices=None, coefs=None) -> int:
        if terms is not None:
            indices, coefs = self._resolve_terms(list(terms))
        self._objectives.append(Objective(name, sense, np.asarray(indices, dtype=np.int64),
                                          np.asarray(coefs, dtype=float)))
        return len(self._objectives) - 1

    def build(self) -> ModelIR:
        n_rows, n_cols = len(self._row_names), len(self._names)
        rows, cols, data = [], [], []
        offset = 0
        for (r, c, d), s in zip(self._blocks, self._senses):
            rows.append(r + offset)
            cols.append(c)
            data.append(d)
            offset += len(s)
        if rows:
            A = sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(n_rows, n_cols))
            A.sort_indices()
        else:
            A = sp.csr_matrix((n_rows, n_cols))
        cat = lambda parts, dt: np.concatenate(parts) if parts else np.zeros(0, dtype=dt)  # noqa: E731
        return ModelIR(self._names, cat(self._kinds, np.int8), cat(self._lower, float), cat(self._upper, float),
                       self._row_names, A, cat(self._senses, np.int8), cat(self._rhs, float),
                       self._objectives, self.annotations)


def stats(model: ModelIR) -> ModelStats:
    return ModelStats(model.n_variables, model.n_constraints, int(np.count_nonzero(model.A.data)))


def append_rows(model: ModelIR, rows: Sequence[LinearConstraint]) -> ModelIR:
    """Copy of model with extra rows appended."""
    if not rows:
        return model
    extra_rows, extra_cols, extra_data = [], [], []
    for k, row in enumerate(rows):
        for name, coef in row.terms:
            extra_rows.append(k)
            extra_cols.append(model.var_index(name))
            extra_data.append(coef)
    B = sp.csr_matrix((extra_data, (extra_rows, extra_cols)), shape=(len(rows), model.n_variables))
    return model.replace(
        row_names=model.row_names + [r.name for r in rows],
        A=sp.vstack([model.A, B], format="csr"),
        senses=np.concatenate([model.senses, [_SENSE_CODE[r.sense] for r in rows]]),
        rhs=np.concatenate([model.rhs, [r.rhs for r in rows]]),
    )


def add_variables(model: ModelIR, defs: Sequence[VariableDef]) -> ModelIR:
    if not defs:
        return model
    names = model.var_names + [d.name for d in defs]
    if len(set(names)) != len(names):
        raise ModelError("duplicate variable names")
    A = sp.hstack([model.A, sp.csr_matrix((model.n_constraints, len(defs)))], format="csr")
    return model.replace(
        var_names=names,
        kinds=np.concatenate([model.kinds, [_KIND_CODE[d.kind] for d in defs]]),
        lower=np.concatenate([model.lower, [d.lower for d in defs]]),
        upper=np.concatenate([model.upper, [d.upper for d in defs]]),
        A=A,
    )


def objective_terms(model: ModelIR, objective_index: int) -> tuple[tuple[str, float], ...]:
    obj = model.objectives[objective_index]
    return tuple((model.var_names[j], float(c)) for j, c in zip(obj.indices, obj.coefs))


def fix_objective_bound(model: ModelIR, objective_index: int, bound: float,
                        relax_fraction: float = 0.0, strategy: str = "") -> ModelIR:
    """Copy of model with the chosen objective held at (a relaxation of) bound.

    min objectives get obj <= bound + relax*|bound|, max objectives get
    obj >= bound - relax*|bound| (the same as bound*(1 +/- relax) for bound > 0).
    """
    if not 0.0 <= relax_fraction < 1.0:
        raise ValueError("relax_fraction must lie in [0, 1)")
    obj = model.objectives[objective_index]
    slack = relax_fraction * abs(bound)
    if obj.sense == MIN:
        row = LinearConstraint(f"bound_{obj.name}", objective_terms(model, objective_index), LE, bound + slack)
    else:
        row = LinearConstraint(f"bound_{obj.name}", objective_terms(model, objective_index), GE, bound - slack)
    out = append_rows(model, [row])
    return out.with_annotations(**{f"bound:{obj.name}": f"{row.sense} {row.rhs!r}",
                                   "lexicographic_strategy": strategy or model.annotations.get("lexicographic_strategy", "")})


# --- MPS ---------------------------------------------------------------------

_MPS_ILLEGAL = re.compile(r"[^\x21-\x7e]")
MAX_SENSE_COMMENT = "* OBJSENSE MAX: objective coefficients negated; original sense is maximize"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _sanitize(names: Sequence[str], what: str) -> list[str]:
    out = []
    for name in names:
        token = _MPS_ILLEGAL.sub("_", name)[:MAX_NAME_LENGTH] or "_"
        if token[0] == "$":
            token = "_" + token[1:]
        out.append(token)
    if len(set(out)) != len(out):
        seen: set[str] = set()
        for orig, token in zip(names, out):
            if token in seen:
                raise ModelError(f"{what} name {orig!r} collides with another after sanitizing to {token!r}")
            seen.add(token)
    return out


def export_mps(model: ModelIR, objective_index: int = 0, name: str | None = None) -> str:
    """Free-format MPS for one objective, rows and columns in declaration order."""
    obj = model.objectives[objective_index]
    cols = _sanitize(model.var_names, "variable")
    rows = _sanitize(model.row_names, "constraint")
    obj_row = "OBJ"
    while obj_row in rows:
        obj_row += "_"
    sign = -1.0 if obj.sense == MAX else 1.0

    out = []
    if obj.sense == MAX:
        out.append(MAX_SENSE_COMMENT)
    out.append(f"NAME {_sanitize([name or model.annotations.get('name', 'model')], 'model')[0]}")
    out.append("ROWS")
    out.append(f" N {obj_row}")
    letter = {-1: "L", 0: "E", 1: "G"}
    for r, s in zip(rows, model.senses):
        out.append(f" {letter[int(s)]} {r}")

    out.append("COLUMNS")
    csc = model.A.tocsc()
    csc.sort_indices()
    obj_coef = np.zeros(model.n_variables)
    np.add.at(obj_coef, obj.indices, obj.coefs)
    for j, col in enumerate(cols):
        start, end = csc.indptr[j], csc.indptr[j + 1]
        entries = []
        if obj_coef[j] != 0 or start == end:
            entries.append((obj_row, sign * obj_coef[j]))
        entries.extend((rows[i], v) for i, v in zip(csc.indices[start:end], csc.data[start:end]))
        for rname, v in entries:
            out.append(f" {col} {rname} {_fmt(v)}")

    out.append("RHS")
    for r, v in zip(rows, model.rhs):
        if v != 0:
            out.append(f" RHS {r} {_fmt(v)}")

    out.append("BOUNDS")
    for col, kind, lo, up in zip(cols, model.kinds, model.lower, model.upper):
        kind = int(kind)
        if kind == 2 and lo == 0 and up == 1:
            out.append(f" BV BND {col}")
            continue
        if kind > 0:
            if lo == -math.inf:
                out.append(f" MI BND {col}")
            else:
                out.append(f" LI BND {col} {_fmt(lo)}")
            if up == math.inf:
                out.append(f" PL BND {col}")
            else:
                out.append(f" UI BND {col} {_fmt(up)}")
            continue
        if lo == up:
            out.append(f" FX BND {col} {_fmt(lo)}")
        elif lo == -math.inf and up == math.inf:
            out.append(f" FR BND {col}")
        else:
            if lo == -math.inf:
                out.append(f" MI BND {col}")
            elif lo != 0:
                out.append(f" LO BND {col} {_fmt(lo)}")
            if up != math.inf:
                out.append(f" UP BND {col} {_fmt(up)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


class MPSParseError(ValueError):
    pass


def parse_mps(text: str) -> ModelIR:
    """Read free-format MPS (including MARKER integer blocks, RANGES and OBJSENSE)."""
    section = None
    maximize = False
    obj_row = None
    row_order: list[str] = []
    row_sense: dict[str, int] = {}
    col_order: list[str] = []
    col_int: dict[str, bool] = {}
    entries: dict[str, dict[str, float]] = {}
    obj_coef: dict[str, float] = {}
    rhs: dict[str, float] = {}
    ranges: dict[str, float] = {}
    lower: dict[str, float] = {}
    upper: dict[str, float] = {}
    binary: set[str] = set()
    in_int = False
    name = "model"

    def fail(lineno, msg):
        raise MPSParseError(f"line {lineno}: {msg}")

    def num(tok, lineno):
        try:
            return float(tok)
        except ValueError:
            fail(lineno, f"expected a number, got {tok!r}")

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.startswith("*"):
            if raw.strip().upper().startswith("* OBJSENSE MAX"):
                maximize = True
            continue
        if not raw.strip():
            continue
        tokens = raw.split()
        if not raw[0].isspace():
            section = tokens[0].upper()
            if section == "NAME":
                name = tokens[1] if len(tokens) > 1 else name
            elif section == "OBJSENSE" and len(tokens) > 1:
                maximize = tokens[1].upper().startswith("MAX")
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "OBJSENSE"):
                fail(lineno, f"unknown section {tokens[0]!r}")
            continue
        if section == "OBJSENSE":
            maximize = tokens[0].upper().startswith("MAX")
        elif section == "ROWS":
            if len(tokens) != 2:
                fail(lineno, "ROWS entry needs a type and a name")
            kind, rname = tokens[0].upper(), tokens[1]
            if kind == "N":
                if obj_row is None:
                    obj_row = rname
                continue
            if kind not in ("L", "E", "G"):
                fail(lineno, f"unknown row type {kind!r}")
            row_order.append(rname)
            row_sense[rname] = {"L": -1, "E": 0, "G": 1}[kind]
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1].strip("'").upper() == "MARKER":
                marker = tokens[2].strip("'").upper()
                in_int = marker == "INTORG"
                continue
            if len(tokens) not in (3, 5):
                fail(lineno, "COLUMNS entry needs column, row, value [, row, value]")
            col = tokens[0]
            if col not in entries:
                col_order.append(col)
                entries[col] = {}
                col_int[col] = in_int
            for rname, val in zip(tokens[1::2], tokens[2::2]):
                v = num(val, lineno)
                if rname == obj_row:
                    obj_coef[col] = obj_coef.get(col, 0.0) + v
                elif rname in row_sense:
                    entries[col][rname] = v
                else:
                    fail(lineno, f"unknown row {rname!r}")
        elif section in ("RHS", "RANGES"):
            pairs = tokens[1:] if len(tokens) in (3, 5) else tokens
            if len(pairs) not in (2, 4):
                fail(lineno, f"malformed {section} entry")
            for rname, val in zip(pairs[0::2], pairs[1::2]):
                if rname == obj_row:
                    continue
                if rname not in row_sense:
                    fail(lineno, f"unknown row {rname!r}")
                (rhs if section == "RHS" else ranges)[rname] = num(val, lineno)
        elif section == "BOUNDS":
            btype = tokens[0].upper()
            if len(tokens) < 3:
                fail(lineno, "malformed BOUNDS entry")
            col = tokens[2]
            if col not in entries:
                fail(lineno, f"bound for unknown column {col!r}")
            val = num(tokens[3], lineno) if len(tokens) > 3 else None
            if btype in ("LO", "LI"):
                lower[col] = val
            elif btype in ("UP", "UI"):
                upper[col] = val
                if val < 0 and col not in lower:
                    lower[col] = -math.inf
            elif btype == "FX":
                lower[col] = upper[col] = val
            elif btype == "FR":
                lower[col], upper[col] = -math.inf, math.inf
            elif btype == "MI":
                lower[col] = -math.inf
            elif btype == "PL":
                upper[col] = math.inf
            elif btype == "BV":
                binary.add(col)
                lower[col], upper[col] = 0.0, 1.0
            else:
                fail(lineno, f"unknown bound type {btype!r}")
            if btype in ("LI", "UI"):
                col_int[col] = True
        elif section is None:
            fail(lineno, "data line before any section")

    b = ModelBuilder()
    for col in col_order:
        if col in binary:
            kind = BINARY
        elif col_int[col]:
            kind = INTEGER
        else:
            kind = CONTINUOUS
        lo = lower.get(col, 0.0)
        # MARKER integers without bounds are read as [0, inf), not as binaries
        up = upper.get(col, math.inf)
        b.add_variable(col, kind, lo, up)
    # rows with ranges become two-sided: emit as a pair
    by_row: dict[str, list[tuple[int, float]]] = {r: [] for r in row_order}
    for col in col_order:
        j = b.index(col)
        for rname, v in entries[col].items():
            by_row[rname].append((j, v))
    for rname in row_order:
        sense = row_sense[rname]
        r = rhs.get(rname, 0.0)
        terms = by_row[rname]
        if not terms:
            continue
        if rname in ranges:
            R = ranges[rname]
            if sense == -1:
                lo_, hi_ = r - abs(R), r
            elif sense == 1:
                lo_, hi_ = r, r + abs(R)
            else:
                lo_, hi_ = (r, r + R) if R >= 0 else (r + R, r)
            b.add_constraint(rname + "_lo", terms, GE, lo_)
            b.add_constraint(rname + "_hi", terms, LE, hi_)
        else:
            b.add_constraint(rname, terms, _SENSE_NAME[sense], r)
    sign = -1.0 if maximize else 1.0
    obj_terms = [(b.index(c), sign * v) for c, v in obj_coef.items() if v != 0]
    b.add_objective(obj_row or "OBJ", MAX if maximize else MIN, obj_terms)
    b.annotations["name"] = name
    return b.build()


def export_lp(model: ModelIR, objective_index: int = 0) -> str:
    """CPLEX-LP text with the same semantics as export_mps."""
    obj = model.objectives[objective_index]
    cols = _sanitize(model.var_names, "variable")
    rows = _sanitize(model.row_names, "constraint")

    def expr(pairs):
        parts = []
        for j, c in pairs:
            sign = "-" if c < 0 else "+"
            parts.append(f"{sign} {_fmt(abs(c))} {cols[j]}")
        text = " ".join(parts) or "0"
        return text[2:] if text.startswith("+ ") else text

    out = ["Maximize" if obj.sense == MAX else "Minimize", f" obj: {expr(zip(obj.indices, obj.coefs))}", "Subject To"]
    op = {-1: "<=", 0: "=", 1: ">="}
    for k, r in enumerate(rows):
        s, e = model.A.indptr[k], model.A.indptr[k + 1]
        out.append(f" {r}: {expr(zip(model.A.indices[s:e], model.A.data[s:e]))} {op[int(model.senses[k])]} {_fmt(model.rhs[k])}")
    out.append("Bounds")
    for col, lo, up in zip(cols, model.lower, model.upper):
        if lo == -math.inf and up == math.inf:
            out.append(f" {col} free")
        elif lo != 0 or up != math.inf:
            lo_s = "-inf" if lo == -math.inf else _fmt(lo)
            up_s = "+inf" if up == math.inf else _fmt(up)
            out.append(f" {lo_s} <= {col} <= {up_s}")
    gen = [c for c, k in zip(cols, model.kinds) if k == 1]
    bins = [c for c, k in zip(cols, model.kinds) if k == 2]
    if gen:
        out.append("General")
        out.extend(f" {c}" for c in gen)
    if bins:
        out.append("Binary")
        out.extend(f" {c}" for c in bins)
    out.append("End")
    return "\n".join(out) + "\n"
