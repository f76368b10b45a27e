"""Patrol game instances: sites, integer travel times, utilities and the penalty.

Time is discretised into slots and the patroller covers one unit of length per
slot, so the travel time between two sites is the Euclidean distance rounded
up (at least one slot between distinct sites).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CsvParseError, DomainError, EmptyInstanceError, ValidationError

__all__ = [
    "Site",
    "PolyUtility",
    "UtilitySpec",
    "GraphInstance",
    "eval_utility",
    "cumulative_utility",
    "travel_matrix",
    "generate_random_instance",
    "load_sites_csv",
    "load_instance",
]


@dataclass(frozen=True)
class Site:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class PolyUtility:
    """Polynomial utility ``h(t) = sum_k c_k t**k`` with nonnegative coefficients."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise ValidationError("a utility needs at least one coefficient")
        if any(not math.isfinite(c) or c < 0 for c in coeffs):
            raise ValidationError(f"utility coefficients must be finite and >= 0, got {coeffs}")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def constant(cls, c: float) -> "PolyUtility":
        return cls((c,))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> float:
        return self.coefficients[-1]

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coefficients)

    def is_constant(self) -> bool:
        return all(c == 0 for c in self.coefficients[1:])

    def coefficient(self, k: int) -> float:
        return self.coefficients[k] if k < len(self.coefficients) else 0.0

    def values(self, t) -> np.ndarray:
        """Vectorised ``h(t)`` (no domain check)."""
        t = np.asarray(t, dtype=float)
        return np.polynomial.polynomial.polyval(t, self.coefficients)

    def cumulative_table(self, t_max: int) -> np.ndarray:
        """Array ``C`` of length ``t_max + 1`` with ``C[T] = sum_{t=1..T} h(t)``."""
        table = np.zeros(int(t_max) + 1)
        if t_max > 0:
            table[1:] = np.cumsum(self.values(np.arange(1, int(t_max) + 1)))
        return table

    def __call__(self, t):
        return eval_utility(self, t)


def eval_utility(u: PolyUtility, t) -> float:
    if t <= 0:
        raise DomainError(f"utility is defined for t >= 1, got t={t}")
    return float(u.values(t))


def cumulative_utility(u: PolyUtility, T: int) -> float:
    """Total utility ``sum_{t=1..T} h(t)`` collected over an uncaught attack of length T."""
    T = int(T)
    if T < 0:
        raise DomainError(f"duration must be >= 0, got {T}")
    if T == 0:
        return 0.0
    return float(np.sum(u.values(np.arange(1, T + 1))))


@dataclass(frozen=True)
class UtilitySpec:
    """How to draw random utilities: every coefficient of a degree-``degree`` polynomial
    is uniform on ``[low, high]``."""

    degree: int = 0
    low: float = 0.001
    high: float = 1.0

    def __post_init__(self):
        if self.degree < 0:
            raise ValidationError(f"utility degree must be >= 0, got {self.degree}")
        if not (0 < self.low <= self.high < math.inf):
            raise ValidationError(
                f"coefficient range must satisfy 0 < low <= high < inf, got [{self.low}, {self.high}]"
            )

    def draw(self, rng: np.random.Generator, n: int) -> list[PolyUtility]:
        coeffs = rng.uniform(self.low, self.high, size=(n, self.degree + 1))
        return [PolyUtility(tuple(row)) for row in coeffs]


def travel_matrix(xy: np.ndarray) -> np.ndarray:
    """Ceiling of pairwise Euclidean distance, with a floor of 1 off the diagonal."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    diff = xy[:, None, :] - xy[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    travel = np.ceil(dist).astype(np.int64)
    n = len(xy)
    off = ~np.eye(n, dtype=bool)
    travel[off] = np.maximum(travel[off], 1)
    np.fill_diagonal(travel, 0)
    return travel


@dataclass(frozen=True, eq=False)
class GraphInstance:
    """A complete metric graph of patrol sites with per-site utilities and a penalty."""

    sites: tuple[Site, ...]
    travel: np.ndarray
    utilities: tuple[PolyUtility, ...]
    penalty: float = 0.0
    _cum_cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        sites = tuple(self.sites)
        utilities = tuple(self.utilities)
        if not sites:
            raise EmptyInstanceError("an instance needs at least one site")
        travel = np.array(self.travel, dtype=np.int64, copy=True)
        travel.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "utilities", utilities)
        object.__setattr__(self, "travel", travel)
        object.__setattr__(self, "penalty", float(self.penalty))
        self.validate()

    def validate(self) -> None:
        n = len(self.sites)
        if [s.id for s in self.sites] != list(range(n)):
            raise ValidationError("site ids must be 0..n-1 in order")
        if len(self.utilities) != n:
            raise ValidationError(f"{len(self.utilities)} utilities for {n} sites")
        W = self.travel
        if W.shape != (n, n):
            raise ValidationError(f"travel matrix has shape {W.shape}, expected {(n, n)}")
        if not np.array_equal(W, W.T):
            raise ValidationError("travel matrix must be symmetric")
        if np.any(np.diag(W) != 0):
            raise ValidationError("travel matrix must have a zero diagonal")
        if n > 1 and np.min(W[~np.eye(n, dtype=bool)]) < 1:
            raise ValidationError("off-diagonal travel times must be >= 1")
        # W[i,k] <= W[i,j] + W[j,k] for all j
        for j in range(n):
            if np.any(W > W[:, [j]] + W[[j], :]):
                raise ValidationError(f"travel matrix violates the triangle inequality through site {j}")
        if not (math.isfinite(self.penalty) and self.penalty >= 0):
            raise ValidationError(f"penalty must be finite and >= 0, got {self.penalty}")

    @property
    def n(self) -> int:
        return len(self.sites)

    @property
    def diameter(self) -> int:
        return int(self.travel.max())

    @property
    def max_degree(self) -> int:
        return max(u.degree for u in self.utilities)

    @property
    def coords(self) -> np.ndarray:
        return np.array([[s.x, s.y] for s in self.sites], dtype=float)

    def uniform_utilities(self) -> bool:
        first = self.utilities[0].coefficients
        return all(u.coefficients == first for u in self.utilities)

    def constant_utilities(self) -> bool:
        return all(u.is_constant() for u in self.utilities)

    def with_penalty(self, penalty: float) -> "GraphInstance":
        return replace(self, penalty=penalty)

    def with_utilities(self, utilities: Sequence[PolyUtility]) -> "GraphInstance":
        return replace(self, utilities=tuple(utilities))

    def cumulative_tables(self, t_max: int) -> np.ndarray:
        """``(n, t_max + 1)`` array of cumulative utilities per site (cached)."""
        t_max = int(t_max)
        for cached_max, table in self._cum_cache.items():
            if cached_max >= t_max:
                return table[:, : t_max + 1]
        table = np.stack([u.cumulative_table(t_max) for u in self.utilities])
        table.setflags(write=False)
        self._cum_cache.clear()
        self._cum_cache[t_max] = table
        return table

    def to_dict(self) -> dict:
        return {
            "sites": [{"id": s.id, "x": repr(s.x), "y": repr(s.y)} for s in self.sites],
            "travel": self.travel.tolist(),
            "utilities": [[repr(c) for c in u.coefficients] for u in self.utilities],
            "penalty": repr(self.penalty),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GraphInstance":
        try:
            sites = tuple(Site(int(s["id"]), float(s["x"]), float(s["y"])) for s in data["sites"])
            utilities = tuple(PolyUtility(tuple(float(c) for c in u)) for u in data["utilities"])
            travel = np.array(data["travel"], dtype=np.int64)
            penalty = float(data.get("penalty", 0.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed instance document: {exc}") from exc
        return cls(sites, travel, utilities, penalty)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json() + "\n")
        return path

    def summary(self) -> str:
        degrees = sorted({u.degree for u in self.utilities})
        return (
            f"n={self.n} diameter={self.diameter} utility_degrees={degrees} "
            f"penalty={self.penalty:g}"
        )


def _build(xy: np.ndarray, utilities: Iterable[PolyUtility], penalty: float) -> GraphInstance:
    sites = tuple(Site(i, float(x), float(y)) for i, (x, y) in enumerate(xy))
    return GraphInstance(sites, travel_matrix(xy), tuple(utilities), penalty)


def generate_random_instance(
    n: int,
    side: float = 1000.0,
    seed: int = 0,
    utility_spec: UtilitySpec | None = None,
    penalty: float = 0.0,
) -> GraphInstance:
    """Sites i.i.d. uniform in a ``side x side`` square, utilities drawn per ``utility_spec``."""
    if n < 1:
        raise EmptyInstanceError(f"need at least one site, got n={n}")
    if not side > 0:
        raise ValidationError(f"side must be positive, got {side}")
    spec = utility_spec or UtilitySpec()
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0.0, side, size=(n, 2))
    utilities = spec.draw(rng, n)
    return _build(xy, utilities, penalty)


def load_sites_csv(
    path,
    utility_spec: UtilitySpec | None = None,
    seed: int = 0,
    penalty: float = 0.0,
) -> GraphInstance:
    """Read ``id,x,y[,c0,c1,...]`` rows. Missing coefficient columns are drawn per ``utility_spec``."""
    path = Path(path)
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise CsvParseError(f"cannot open site file {path}: {exc.strerror}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvParseError(f"{path} is empty") from None
        if header[:3] != ["id", "x", "y"]:
            raise CsvParseError(f"header must start with id,x,y, got {','.join(header)}", row=1)
        coef_cols = header[3:]
        for k, name in enumerate(coef_cols):
            if name != f"c{k}":
                raise CsvParseError(f"expected coefficient column c{k}", row=1, column=name)
        rows = {}
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            if len(raw) != len(header):
                raise CsvParseError(f"expected {len(header)} fields, got {len(raw)}", row=lineno)
            values = []
            for name, cell in zip(header, raw):
                try:
                    values.append(int(cell) if name == "id" else float(cell))
                except ValueError:
                    raise CsvParseError(f"non-numeric value {cell.strip()!r}", row=lineno, column=name) from None
            sid = values[0]
            if sid in rows:
                raise CsvParseError(f"duplicate site id {sid}", row=lineno, column="id")
            rows[sid] = (lineno, values[1:])
    if not rows:
        raise EmptyInstanceError(f"{path} contains no sites")
    n = len(rows)
    if sorted(rows) != list(range(n)):
        raise CsvParseError(f"site ids must be contiguous 0..{n - 1}", column="id")
    xy = np.array([rows[i][1][:2] for i in range(n)], dtype=float)
    if coef_cols:
        utilities = []
        for i in range(n):
            lineno, vals = rows[i]
            try:
                utilities.append(PolyUtility(tuple(vals[2:])))
            except ValidationError as exc:
                raise CsvParseError(str(exc), row=lineno) from None
    else:
        utilities = (utility_spec or UtilitySpec()).draw(np.random.default_rng(seed), n)
    return _build(xy, utilities, penalty)


def load_instance(path) -> GraphInstance:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read instance file {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc
    return GraphInstance.from_dict(data)
