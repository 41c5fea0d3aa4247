"""Bijective reparameterization of a bounded probability simplex.

The feasible set is {x : sum(x) = 1, lower <= x <= upper}. It maps onto
the unit hypercube of dimension n-1 by walking the coordinates in order
and rescaling each one within the interval that keeps the remaining tail
feasible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

_SUM_TOL = 1e-9  # tolerance for sum(x) == 1 on parsed input


@dataclass(frozen=True)
class SimplexBounds:
    """Per-coordinate bounds 0 <= lower_i < upper_i <= 1, n >= 2."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        l = np.asarray(self.lower, dtype=float)
        h = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", l)
        object.__setattr__(self, "upper", h)
        if l.ndim != 1 or l.shape != h.shape:
            raise InvalidInputError("lower and upper must be 1-D vectors of equal length")
        if l.shape[0] < 2:
            raise InvalidInputError("simplex dimension must be >= 2")
        if np.any(l < 0) or np.any(h > 1) or np.any(l >= h):
            raise InvalidInputError("bounds must satisfy 0 <= lower < upper <= 1 elementwise")

    @property
    def n(self) -> int:
        return self.lower.shape[0]


def simplex_feasible(bounds: SimplexBounds) -> bool:
    """True iff the bounded simplex is nonempty: sum(l) <= 1 <= sum(h)."""
    return bool(bounds.lower.sum() <= 1.0 <= bounds.upper.sum())


def _tail_sums(v: np.ndarray) -> np.ndarray:
    """t[k] = sum(v[k:]); t has length n+1 with t[n] = 0."""
    t = np.zeros(v.shape[0] + 1)
    t[:-1] = np.cumsum(v[::-1])[::-1]
    return t


def simplex_forward(bounds: SimplexBounds, x) -> np.ndarray:
    """Map a feasible x (length n) to z in [0,1]^(n-1)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (bounds.n,):
        raise InvalidInputError(f"x must have length {bounds.n}")
    if not simplex_feasible(bounds):
        raise InvalidInputError("infeasible simplex bounds: sum(l) <= 1 <= sum(h) violated")
    if abs(x.sum() - 1.0) > _SUM_TOL:
        raise InvalidInputError(f"sum(x) = {x.sum()!r} violates the mass constraint")
    if np.any(x < bounds.lower - _SUM_TOL) or np.any(x > bounds.upper + _SUM_TOL):
        raise InvalidInputError("x violates the element bounds")

    L = _tail_sums(bounds.lower)
    H = _tail_sums(bounds.upper)
    n = bounds.n
    z = np.zeros(n - 1)
    remaining = 1.0
    for k in range(n - 1):
        a = max(bounds.lower[k], remaining - H[k + 1])
        b = min(bounds.upper[k], remaining - L[k + 1])
        if b - a <= 1e-15:
            z[k] = 0.0  # degenerate interval: the value is forced
        else:
            z[k] = min(max((x[k] - a) / (b - a), 0.0), 1.0)
        remaining -= x[k]
    return z


def simplex_inverse(bounds: SimplexBounds, z) -> np.ndarray:
    """Map z in [0,1]^(n-1) to the feasible x it encodes."""
    z = np.asarray(z, dtype=float)
    if z.shape != (bounds.n - 1,):
        raise InvalidInputError(f"z must have length {bounds.n - 1}")
    if not simplex_feasible(bounds):
        raise InvalidInputError("infeasible simplex bounds: sum(l) <= 1 <= sum(h) violated")
    if np.any(z < -1e-12) or np.any(z > 1 + 1e-12):
        raise InvalidInputError("z outside the unit cube")
    z = np.clip(z, 0.0, 1.0)

    L = _tail_sums(bounds.lower)
    H = _tail_sums(bounds.upper)
    n = bounds.n
    x = np.zeros(n)
    remaining = 1.0
    for k in range(n - 1):
        a = max(bounds.lower[k], remaining - H[k + 1])
        b = min(bounds.upper[k], remaining - L[k + 1])
        xk = a if b - a <= 0 else a + z[k] * (b - a)
        # clamp against roundoff so the element bounds hold exactly
        x[k] = min(max(xk, bounds.lower[k]), bounds.upper[k])
        remaining -= x[k]
    x[n - 1] = min(max(remaining, bounds.lower[n - 1]), bounds.upper[n - 1])
    return x
