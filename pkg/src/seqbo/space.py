"""Mixed-variable design spaces with an invertible unit-cube embedding.

A design space is an ordered list of parameter specifications. Eight kinds
are supported: ``num``, ``int``, ``pow``, ``pow_int``, ``step_int``,
``int_exponent``, ``bool`` and ``cat``. Every parameter maps onto one or
more coordinates of a unit hypercube (one-hot blocks for categoricals),
so that surrogate models operate on a purely continuous representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

KINDS = ("num", "int", "pow", "pow_int", "step_int", "int_exponent", "bool", "cat")

# document fields allowed per kind ('name'/'type' are always required)
_FIELDS = {
    "num": {"lb", "ub"},
    "int": {"lb", "ub"},
    "pow": {"lb", "ub", "base"},
    "pow_int": {"lb", "ub", "base"},
    "step_int": {"lb", "ub", "step"},
    "int_exponent": {"lb", "ub", "base"},
    "bool": set(),
    "cat": {"categories"},
}


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _is_integral(v) -> bool:
    if isinstance(v, bool):
        return False
    if isinstance(v, (int, np.integer)):
        return True
    return isinstance(v, (float, np.floating)) and float(v).is_integer()


@dataclass(frozen=True)
class ParamSpec:
    """Validated specification of a single design parameter."""

    name: str
    kind: str
    lb: float | None = None
    ub: float | None = None
    base: float | None = None
    step: int | None = None
    categories: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.name or not isinstance(self.name, str):
            raise InvalidInputError("parameter name must be a non-empty string")
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown parameter kind {self.kind!r}")
        k = self.kind
        if k in ("num", "int", "pow", "pow_int", "step_int", "int_exponent"):
            if self.lb is None or self.ub is None:
                raise InvalidInputError(f"{self.name}: lb and ub are required for kind {k!r}")
            if not (self.lb < self.ub):
                raise InvalidInputError(
                    f"{self.name}: empty interval, lb={self.lb} must be < ub={self.ub}"
                )
        if k in ("pow", "pow_int", "int_exponent"):
            if self.base is None or self.base <= 1:
                raise InvalidInputError(f"{self.name}: base must be > 1 for kind {k!r}")
        if k in ("pow", "pow_int") and self.lb <= 0:
            raise InvalidInputError(f"{self.name}: lb must be > 0 for kind {k!r}")
        if k in ("int", "pow_int", "step_int", "int_exponent"):
            if not (_is_integral(self.lb) and _is_integral(self.ub)):
                raise InvalidInputError(f"{self.name}: bounds must be integers for kind {k!r}")
        if k == "step_int":
            if self.step is None or not _is_integral(self.step) or self.step < 1:
                raise InvalidInputError(f"{self.name}: step must be an integer >= 1")
        if k == "int_exponent":
            for b in (self.lb, self.ub):
                if _exponent_of(b, self.base) is None:
                    raise InvalidInputError(
                        f"{self.name}: bound {b} is not an exact power of base {self.base}"
                    )
        if k == "cat":
            if not self.categories:
                raise InvalidInputError(f"{self.name}: categories must be non-empty")
            if len(set(self.categories)) != len(self.categories):
                raise InvalidInputError(f"{self.name}: duplicate category labels")

    @property
    def width(self) -> int:
        """Number of unit-cube coordinates this parameter occupies."""
        return len(self.categories) if self.kind == "cat" else 1

    def grid(self) -> list:
        """Feasible values for discrete kinds (not defined for num/pow/cat)."""
        k = self.kind
        if k == "int":
            return list(range(int(self.lb), int(self.ub) + 1))
        if k == "step_int":
            return list(range(int(self.lb), int(self.ub) + 1, int(self.step)))
        if k == "int_exponent":
            j_lo = _exponent_of(self.lb, self.base)
            j_hi = _exponent_of(self.ub, self.base)
            return [_int_power(self.base, j) for j in range(j_lo, j_hi + 1)]
        if k == "bool":
            return [False, True]
        raise InvalidInputError(f"kind {k!r} has no finite grid")

    def validate_value(self, value):
        """Check feasibility and return the canonical native value."""
        k = self.kind
        if k == "num" or k == "pow":
            if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
                raise InvalidInputError(f"{self.name}: expected a number, got {value!r}")
            v = float(value)
            if not (self.lb <= v <= self.ub) or not math.isfinite(v):
                raise InvalidInputError(f"{self.name}: {v} outside [{self.lb}, {self.ub}]")
            return v
        if k == "bool":
            if isinstance(value, (bool, np.bool_)):
                return bool(value)
            if value in (0, 1):
                return bool(value)
            raise InvalidInputError(f"{self.name}: expected a boolean, got {value!r}")
        if k == "cat":
            if value not in self.categories:
                raise InvalidInputError(f"{self.name}: {value!r} not among {list(self.categories)}")
            return value
        # integer-valued kinds: accept integral floats, require grid membership
        if not _is_integral(value):
            raise InvalidInputError(f"{self.name}: expected an integer, got {value!r}")
        v = int(value)
        if k == "pow_int":
            if not (self.lb <= v <= self.ub):
                raise InvalidInputError(f"{self.name}: {v} outside [{self.lb}, {self.ub}]")
            return v
        if v not in self.grid():
            raise InvalidInputError(f"{self.name}: {v} not on the feasible grid")
        return v

    def encode(self, value) -> np.ndarray:
        """Map a (validated) native value to its unit-cube coordinates."""
        return self.encode_column([value])[0]

    def decode(self, u: np.ndarray):
        """Inverse of encode with snapping: discrete kinds round half-up on the grid index."""
        return self.decode_column(np.asarray(u, dtype=float).reshape(1, -1))[0]

    def encode_column(self, values) -> np.ndarray:
        """Vectorized encode of canonical values; shape (n, width)."""
        k = self.kind
        if k == "cat":
            idx = np.array([self.categories.index(v) for v in values])
            out = np.zeros((len(idx), len(self.categories)))
            out[np.arange(len(idx)), idx] = 1.0
            return out
        if k == "bool":
            return np.asarray(values, dtype=float).reshape(-1, 1)
        v = np.asarray(values, dtype=float)
        if k == "num":
            return ((v - self.lb) / (self.ub - self.lb)).reshape(-1, 1)
        if k in ("pow", "pow_int"):
            lo, hi = math.log(self.lb), math.log(self.ub)
            return ((np.log(v) - lo) / (hi - lo)).reshape(-1, 1)
        grid = np.asarray(self.grid(), dtype=float)
        if len(grid) == 1:
            return np.zeros((v.shape[0], 1))
        idx = np.searchsorted(grid, v)
        return (idx / (len(grid) - 1)).reshape(-1, 1)

    def decode_column(self, U: np.ndarray) -> list:
        """Vectorized decode of a (n, width) coordinate block."""
        k = self.kind
        if k == "cat":
            return [self.categories[i] for i in np.argmax(U, axis=1)]
        x = np.clip(U[:, 0], 0.0, 1.0)
        if k == "num":
            return np.clip(self.lb + x * (self.ub - self.lb), self.lb, self.ub).tolist()
        if k == "pow":
            lo, hi = math.log(self.lb), math.log(self.ub)
            return np.clip(np.exp(lo + x * (hi - lo)), self.lb, self.ub).tolist()
        if k == "pow_int":
            lo, hi = math.log(self.lb), math.log(self.ub)
            v = np.floor(np.exp(lo + x * (hi - lo)) + 0.5)
            return [int(w) for w in np.clip(v, self.lb, self.ub)]
        if k == "bool":
            return [bool(b) for b in (x >= 0.5)]
        grid = self.grid()
        idx = np.clip(np.floor(x * (len(grid) - 1) + 0.5).astype(int), 0, len(grid) - 1)
        return [grid[i] for i in idx]

    def to_config(self) -> dict:
        rec = {"name": self.name, "type": self.kind}
        if self.lb is not None:
            rec["lb"] = self.lb
        if self.ub is not None:
            rec["ub"] = self.ub
        if self.base is not None:
            rec["base"] = self.base
        if self.step is not None:
            rec["step"] = self.step
        if self.categories is not None:
            rec["categories"] = list(self.categories)
        return rec


def _exponent_of(value, base) -> int | None:
    """Integer j with base**j == value, or None."""
    if value <= 0:
        return None
    j = _round_half_up(math.log(value) / math.log(base))
    for cand in (j - 1, j, j + 1):
        if _int_power(base, cand) == value:
            return cand
    return None


def _int_power(base, j: int):
    v = base ** j
    if _is_integral(base):
        return int(round(v))
    return v


@dataclass(frozen=True)
class DesignSpace:
    """Ordered parameter specs plus the invertible unit-cube embedding."""

    params: tuple[ParamSpec, ...]
    _offsets: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise InvalidInputError("duplicate parameter names")
        if not self.params:
            raise InvalidInputError("design space must contain at least one parameter")
        offs, total = [], 0
        for p in self.params:
            offs.append(total)
            total += p.width
        object.__setattr__(self, "_offsets", tuple(offs))

    @property
    def embedded_dim(self) -> int:
        return self._offsets[-1] + self.params[-1].width

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    def block(self, name: str) -> tuple[int, int]:
        """(offset, width) of a parameter's embedded coordinate block."""
        for p, off in zip(self.params, self._offsets):
            if p.name == name:
                return off, p.width
        raise InvalidInputError(f"unknown parameter {name!r}")

    @classmethod
    def parse(cls, document: list[dict]) -> "DesignSpace":
        """Build a space from a list of ``{name, type, ...}`` records."""
        if not isinstance(document, (list, tuple)):
            raise InvalidInputError("design-space document must be a list of records")
        specs = []
        for rec in document:
            if not isinstance(rec, dict):
                raise InvalidInputError(f"parameter record must be a mapping, got {rec!r}")
            if "name" not in rec or "type" not in rec:
                raise InvalidInputError(f"record missing 'name' or 'type': {rec!r}")
            kind = rec["type"]
            if kind not in KINDS:
                raise InvalidInputError(f"unknown parameter kind {kind!r}")
            extra = set(rec) - {"name", "type"} - _FIELDS[kind]
            if extra:
                raise InvalidInputError(f"{rec['name']}: unexpected fields {sorted(extra)} for kind {kind!r}")
            missing = _FIELDS[kind] - set(rec)
            if missing:
                raise InvalidInputError(f"{rec['name']}: missing fields {sorted(missing)} for kind {kind!r}")
            cats = tuple(rec["categories"]) if "categories" in rec else None
            specs.append(
                ParamSpec(
                    name=rec["name"],
                    kind=kind,
                    lb=rec.get("lb"),
                    ub=rec.get("ub"),
                    base=rec.get("base"),
                    step=rec.get("step"),
                    categories=cats,
                )
            )
        return cls(params=tuple(specs))

    def validate_point(self, point: dict) -> dict:
        """Return the canonical form of `point`; raise if infeasible."""
        if not isinstance(point, dict):
            raise InvalidInputError("design point must be a mapping of name -> value")
        extra = set(point) - set(self.names)
        if extra:
            raise InvalidInputError(f"unknown parameters in point: {sorted(extra)}")
        out = {}
        for p in self.params:
            if p.name not in point:
                raise InvalidInputError(f"missing parameter {p.name!r}")
            out[p.name] = p.validate_value(point[p.name])
        return out

    def to_unit(self, point: dict) -> np.ndarray:
        """Embed a feasible point into [0,1]^embedded_dim."""
        point = self.validate_point(point)
        return np.concatenate([p.encode(point[p.name]) for p in self.params])

    def from_unit(self, u) -> dict:
        """Decode unit-cube coordinates into a feasible design point."""
        u = np.asarray(u, dtype=float).ravel()
        if u.shape[0] != self.embedded_dim:
            raise InvalidInputError(
                f"expected vector of length {self.embedded_dim}, got {u.shape[0]}"
            )
        point = {}
        for p, off in zip(self.params, self._offsets):
            point[p.name] = p.decode(u[off : off + p.width])
        return point

    def sample(self, n: int, rng: np.random.Generator) -> list[dict]:
        """Draw n points uniformly in the embedded cube and decode them."""
        if n < 1:
            raise InvalidInputError("sample count must be >= 1")
        return self.decode_matrix(rng.random((n, self.embedded_dim)))

    def decode_matrix(self, U: np.ndarray) -> list[dict]:
        """Decode each row of a (n, embedded_dim) coordinate matrix."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        if U.shape[1] != self.embedded_dim:
            raise InvalidInputError(
                f"expected {self.embedded_dim} coordinates, got {U.shape[1]}"
            )
        columns = {}
        for p, off in zip(self.params, self._offsets):
            columns[p.name] = p.decode_column(U[:, off: off + p.width])
        return [{name: columns[name][i] for name in columns} for i in range(U.shape[0])]

    def embed_points(self, points: list[dict], validate: bool = False) -> np.ndarray:
        """Embed many points at once; set `validate` for untrusted input."""
        if validate:
            points = [self.validate_point(p) for p in points]
        blocks = [p.encode_column([pt[p.name] for pt in points]) for p in self.params]
        return np.hstack(blocks)

    def to_config(self) -> list[dict]:
        return [p.to_config() for p in self.params]

    @classmethod
    def from_config(cls, document: list[dict]) -> "DesignSpace":
        return cls.parse(document)
