"""Problem instance data model, validation, persistence and synthetic generation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import NormalDist
from typing import Mapping, Sequence

import numpy as np

SCHEMA_VERSION = 1

DEFAULT_MAX_DISTANCE = 300.0
DEFAULT_MAX_AREA = 5.0
DEFAULT_FRACTIONS = ("recyclable", "mixed")
GRID_SPACING = 100.0
GRID_JITTER = 20.0


class InstanceFormatError(ValueError):
    """Raised when an instance file cannot be parsed or fails the schema."""


@dataclass(frozen=True)
class BinType:
    id: str
    area: float
    capacity: float
    unit_cost: float


@dataclass(frozen=True)
class FrequencyProfile:
    id: str
    accumulation_days: int


@dataclass(frozen=True)
class GenerationPoint:
    id: str
    x: float
    y: float
    waste_rate: Mapping[str, float]
    opening_cost: float


DEFAULT_BIN_TYPES = (
    BinType("CTB-1100", area=1.38, capacity=1.1, unit_cost=493.0),
    BinType("REAR-LOADING", area=1.00, capacity=1.0, unit_cost=528.0),
)
DEFAULT_FREQUENCIES = (
    FrequencyProfile("daily", 1),
    FrequencyProfile("every-2-days", 2),
    FrequencyProfile("every-3-days", 3),
)
# cost of conditioning a collection point = one CTB-1100 bin
DEFAULT_OPENING_COST = DEFAULT_BIN_TYPES[0].unit_cost


@dataclass(frozen=True)
class FractionMoments:
    mean: float
    std: float


# (n_points, recyclable mean/std, mixed mean/std) of the field instances
PROFILES: dict[str, tuple[int, dict[str, FractionMoments]]] = {
    "i16": (16, {"recyclable": FractionMoments(0.554, 0.34), "mixed": FractionMoments(0.143, 0.072)}),
    "i58": (58, {"recyclable": FractionMoments(0.556, 0.465), "mixed": FractionMoments(0.227, 0.121)}),
    "i73": (73, {"recyclable": FractionMoments(0.783, 0.467), "mixed": FractionMoments(0.208, 0.123)}),
    "i126": (126, {"recyclable": FractionMoments(0.656, 0.436), "mixed": FractionMoments(0.178, 0.117)}),
    "i190": (190, {"recyclable": FractionMoments(0.341, 0.359), "mixed": FractionMoments(0.149, 0.112)}),
}


@dataclass(frozen=True, eq=False)
class Instance:
    points: tuple[GenerationPoint, ...]
    fractions: tuple[str, ...]
    bin_types: tuple[BinType, ...]
    frequencies: tuple[FrequencyProfile, ...]
    distance: np.ndarray
    max_distance: float = DEFAULT_MAX_DISTANCE
    max_area: float = DEFAULT_MAX_AREA
    name: str = "instance"
    _rates: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "fractions", tuple(self.fractions))
        object.__setattr__(self, "bin_types", tuple(self.bin_types))
        object.__setattr__(self, "frequencies", tuple(self.frequencies))
        dist = np.array(self.distance, dtype=float, copy=True)
        if dist.ndim != 2:
            dist = dist.reshape(len(self.points), -1) if dist.size else np.zeros((0, 0))
        dist.setflags(write=False)
        object.__setattr__(self, "distance", dist)
        rates = np.array(
            [[p.waste_rate.get(m, 0.0) for m in self.fractions] for p in self.points],
            dtype=float,
        ).reshape(len(self.points), len(self.fractions))
        rates.setflags(write=False)
        object.__setattr__(self, "_rates", rates)

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def rates(self) -> np.ndarray:
        """Nominal waste rates as an (|I|, |M|) array."""
        return self._rates

    @property
    def accumulation(self) -> np.ndarray:
        return np.array([f.accumulation_days for f in self.frequencies], dtype=float)

    @property
    def opening_costs(self) -> np.ndarray:
        return np.array([p.opening_cost for p in self.points], dtype=float)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.points == other.points
            and self.fractions == other.fractions
            and self.bin_types == other.bin_types
            and self.frequencies == other.frequencies
            and self.distance.shape == other.distance.shape
            and bool(np.array_equal(self.distance, other.distance))
            and self.max_distance == other.max_distance
            and self.max_area == other.max_area
            and self.name == other.name
        )

    __hash__ = None


def validate(instance: Instance) -> list[str]:
    """Return a list of human-readable invariant violations (empty when valid)."""
    problems: list[str] = []
    n = instance.n_points
    for k, b in enumerate(instance.bin_types):
        for attr in ("area", "capacity", "unit_cost"):
            if not getattr(b, attr) > 0:
                problems.append(f"bin_types[{k}].{attr} must be > 0 (got {getattr(b, attr)})")
    seen_acc: set[int] = set()
    for k, f in enumerate(instance.frequencies):
        if f.accumulation_days < 1:
            problems.append(f"frequencies[{k}].accumulation_days must be >= 1")
        if f.accumulation_days in seen_acc:
            problems.append(f"frequencies[{k}].accumulation_days duplicates {f.accumulation_days}")
        seen_acc.add(f.accumulation_days)
    for i, p in enumerate(instance.points):
        for m in instance.fractions:
            rate = p.waste_rate.get(m)
            if rate is None:
                problems.append(f"points[{i}].waste_rate missing fraction {m!r}")
            elif not rate >= 0:
                problems.append(f"points[{i}].waste_rate[{m!r}] must be >= 0 (got {rate})")
        if not p.opening_cost >= 0:
            problems.append(f"points[{i}].opening_cost must be >= 0")

    dist = instance.distance
    if dist.shape != (n, n):
        problems.append(f"distance has shape {dist.shape}, expected ({n}, {n})")
        return problems
    for i, j in zip(*np.nonzero(~(dist >= 0))):
        problems.append(f"distance[{i}][{j}] must be non-negative (got {dist[i, j]})")
    for i in np.nonzero(np.diag(dist) != 0)[0]:
        if dist[i, i] >= 0:
            problems.append(f"distance[{i}][{i}] must be zero on the diagonal")
    if n:
        reachable = (dist <= instance.max_distance).any(axis=1)
        for i in np.nonzero(~reachable)[0]:
            problems.append(f"points[{i}] has no collection point within max_distance")
    if instance.bin_types and instance.max_area < min(b.area for b in instance.bin_types):
        problems.append("max_area is smaller than the smallest bin area")
    return problems


def neighbor_sets(instance: Instance) -> dict[tuple[int, int], list[int]]:
    """J_im: generators j that may be served by collection point i (same set for every fraction)."""
    dist = instance.distance
    out: dict[tuple[int, int], list[int]] = {}
    for i in range(instance.n_points):
        members = [int(j) for j in np.nonzero(dist[:, i] <= instance.max_distance)[0]]
        for m in range(len(instance.fractions)):
            out[(i, m)] = list(members)
    return out


def generate(
    seed: int,
    n_points: int,
    profile: Mapping[str, FractionMoments | tuple[float, float]],
    *,
    max_distance: float = DEFAULT_MAX_DISTANCE,
    max_area: float = DEFAULT_MAX_AREA,
    name: str | None = None,
) -> Instance:
    """Synthesize an instance on a jittered grid with city-block distances.

    Waste rates are stratified draws (one per equal-probability stratum, shuffled)
    from a normal distribution with the requested moments, truncated at zero.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    moments = {m: v if isinstance(v, FractionMoments) else FractionMoments(*v) for m, v in profile.items()}
    for m, mo in moments.items():
        if not (mo.mean > 0 and mo.std > 0):
            raise ValueError(f"fraction {m!r}: mean and std must be positive")

    rng = np.random.default_rng(seed)
    side = math.ceil(math.sqrt(n_points))
    cells = np.arange(n_points)
    xy = np.column_stack([cells % side, cells // side]).astype(float) * GRID_SPACING
    xy += rng.uniform(-GRID_JITTER, GRID_JITTER, size=xy.shape)
    xy = np.round(xy, 2)
    dist = np.abs(xy[:, None, 0] - xy[None, :, 0]) + np.abs(xy[:, None, 1] - xy[None, :, 1])
    dist = np.round(dist, 2)

    unit = NormalDist()
    rates: dict[str, np.ndarray] = {}
    for m, mo in moments.items():
        u = (rng.permutation(n_points) + rng.uniform(size=n_points)) / n_points
        u = np.clip(u, 1e-12, 1 - 1e-12)
        z = np.array([unit.inv_cdf(float(x)) for x in u])
        rates[m] = np.round(np.maximum(mo.mean + mo.std * z, 0.0), 6)

    points = tuple(
        GenerationPoint(
            id=f"p{i}",
            x=float(xy[i, 0]),
            y=float(xy[i, 1]),
            waste_rate={m: float(rates[m][i]) for m in moments},
            opening_cost=DEFAULT_OPENING_COST,
        )
        for i in range(n_points)
    )
    return Instance(
        points=points,
        fractions=tuple(moments),
        bin_types=DEFAULT_BIN_TYPES,
        frequencies=DEFAULT_FREQUENCIES,
        distance=dist,
        max_distance=max_distance,
        max_area=max_area,
        name=name or f"synthetic-n{n_points}-s{seed}",
    )


def generate_profile(profile: str, seed: int, **kwargs) -> Instance:
    n, moments = PROFILES[profile]
    kwargs.setdefault("name", f"{profile}-s{seed}")
    return generate(seed, n, moments, **kwargs)


# --- persistence -------------------------------------------------------------

_REQUIRED = ("schema_version", "points", "fractions", "bin_types", "frequencies",
             "distance", "max_distance", "max_area")


def to_dict(instance: Instance) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": instance.name,
        "fractions": list(instance.fractions),
        "points": [
            {
                "id": p.id,
                "coordinates": [p.x, p.y],
                "waste_rate": {m: p.waste_rate[m] for m in instance.fractions if m in p.waste_rate},
                "opening_cost": p.opening_cost,
            }
            for p in instance.points
        ],
        "bin_types": [
            {"id": b.id, "area": b.area, "capacity": b.capacity, "unit_cost": b.unit_cost}
            for b in instance.bin_types
        ],
        "frequencies": [
            {"id": f.id, "accumulation_days": f.accumulation_days} for f in instance.frequencies
        ],
        "distance": instance.distance.tolist(),
        "max_distance": instance.max_distance,
        "max_area": instance.max_area,
    }


def _need(obj: Mapping, key: str, where: str):
    if not isinstance(obj, Mapping) or key not in obj:
        raise InstanceFormatError(f"{where}: missing required field {key!r}")
    return obj[key]


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceFormatError(f"{where}: expected a number, got {value!r}")
    return float(value)


def from_dict(data: Mapping) -> Instance:
    if not isinstance(data, Mapping):
        raise InstanceFormatError("instance document must be a JSON object")
    for key in _REQUIRED:
        _need(data, key, "instance")
    if data["schema_version"] != SCHEMA_VERSION:
        raise InstanceFormatError(
            f"schema_version mismatch: file has {data['schema_version']!r}, expected {SCHEMA_VERSION}"
        )
    fractions = tuple(str(m) for m in data["fractions"])
    points = []
    for k, p in enumerate(data["points"]):
        where = f"points[{k}]"
        coords = p.get("coordinates", [0.0, 0.0]) if isinstance(p, Mapping) else None
        rates = _need(p, "waste_rate", where)
        if not isinstance(rates, Mapping):
            raise InstanceFormatError(f"{where}.waste_rate: expected an object")
        points.append(GenerationPoint(
            id=str(_need(p, "id", where)),
            x=_number(coords[0], f"{where}.coordinates[0]"),
            y=_number(coords[1], f"{where}.coordinates[1]"),
            waste_rate={str(m): _number(v, f"{where}.waste_rate[{m!r}]") for m, v in rates.items()},
            opening_cost=_number(_need(p, "opening_cost", where), f"{where}.opening_cost"),
        ))
    bins = [
        BinType(
            id=str(_need(b, "id", f"bin_types[{k}]")),
            area=_number(_need(b, "area", f"bin_types[{k}]"), f"bin_types[{k}].area"),
            capacity=_number(_need(b, "capacity", f"bin_types[{k}]"), f"bin_types[{k}].capacity"),
            unit_cost=_number(_need(b, "unit_cost", f"bin_types[{k}]"), f"bin_types[{k}].unit_cost"),
        )
        for k, b in enumerate(data["bin_types"])
    ]
    freqs = []
    for k, f in enumerate(data["frequencies"]):
        acc = _need(f, "accumulation_days", f"frequencies[{k}]")
        if isinstance(acc, bool) or not isinstance(acc, int):
            raise InstanceFormatError(f"frequencies[{k}].accumulation_days: expected an integer")
        freqs.append(FrequencyProfile(id=str(_need(f, "id", f"frequencies[{k}]")), accumulation_days=acc))

    rows = data["distance"]
    if not isinstance(rows, list) or len(rows) != len(points):
        raise InstanceFormatError(
            f"distance: expected {len(points)} rows, got {len(rows) if isinstance(rows, list) else rows!r}"
        )
    for r, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != len(points):
            raise InstanceFormatError(f"distance[{r}]: expected {len(points)} columns")
    dist = np.array([[_number(v, f"distance[{r}][{c}]") for c, v in enumerate(row)]
                     for r, row in enumerate(rows)], dtype=float).reshape(len(points), len(points))
    return Instance(
        points=tuple(points),
        fractions=fractions,
        bin_types=tuple(bins),
        frequencies=tuple(freqs),
        distance=dist,
        max_distance=_number(data["max_distance"], "max_distance"),
        max_area=_number(data["max_area"], "max_area"),
        name=str(data.get("name", "instance")),
    )


def save(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_dict(instance), indent=1) + "\n")


def load(path: str | Path) -> Instance:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return from_dict(data)


def make_instance(
    rates: Sequence[Sequence[float]],
    distance: Sequence[Sequence[float]],
    *,
    fractions: Sequence[str] = DEFAULT_FRACTIONS,
    max_distance: float = DEFAULT_MAX_DISTANCE,
    max_area: float = DEFAULT_MAX_AREA,
    opening_cost: float = DEFAULT_OPENING_COST,
    bin_types: Sequence[BinType] = DEFAULT_BIN_TYPES,
    frequencies: Sequence[FrequencyProfile] = DEFAULT_FREQUENCIES,
    name: str = "instance",
) -> Instance:
    """Convenience constructor from plain arrays (rates is |I| x |M|)."""
    points = tuple(
        GenerationPoint(f"p{i}", 0.0, 0.0, dict(zip(fractions, map(float, row))), opening_cost)
        for i, row in enumerate(rates)
    )
    return Instance(points, tuple(fractions), tuple(bin_types), tuple(frequencies),
                    np.asarray(distance, dtype=float), max_distance, max_area, name)
