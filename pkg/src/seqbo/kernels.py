"""Composable covariance functions over embedded (unit-cube) inputs.

Leaves are RBF, Matern (half-integer orders), Linear, Periodic and a
categorical-overlap kernel for one-hot blocks; internal nodes are Sum,
Product and Scale. Each leaf may be restricted to a subset of embedded
coordinates via `dims`, which is how heterogeneous product kernels are
assembled.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidInputError

# default fitting ranges (log-uniform), on the embedded unit scale
VARIANCE_BOUNDS = (1e-2, 1e2)
LENGTHSCALE_BOUNDS = (1e-2, 1e2)
PERIOD_BOUNDS = (1e-2, 1e2)


def _as2d(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    return X


class Kernel:
    """Base class; subclasses implement `_matrix` on their selected dims."""

    dims: tuple[int, ...] | None = None

    def _select(self, X: np.ndarray) -> np.ndarray:
        if self.dims is None:
            return X
        return X[:, list(self.dims)]

    def __call__(self, X, X2=None) -> np.ndarray:
        X = _as2d(X)
        X2m = X if X2 is None else _as2d(X2)
        if X.shape[1] != X2m.shape[1]:
            raise InvalidInputError(
                f"input dimension mismatch: {X.shape[1]} vs {X2m.shape[1]}"
            )
        K = self._matrix(self._select(X), self._select(X2m))
        if X2 is None:
            K = 0.5 * (K + K.T)
        return K

    def _matrix(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def diag(self, X) -> np.ndarray:
        """k(x, x) per row; avoids building the full Gram matrix."""
        X = _as2d(X)
        return self._diag(self._select(X))

    def _diag(self, A: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # --- flattened positive parameters, used by hyperparameter fitting ---
    def param_values(self) -> list[float]:
        raise NotImplementedError

    def param_bounds(self) -> list[tuple[float, float]]:
        raise NotImplementedError

    def with_param_values(self, values) -> "Kernel":
        """Rebuild the same tree with new parameters (pre-order order)."""
        it = iter(values)
        k = self._rebuild(it)
        return k

    def _rebuild(self, it) -> "Kernel":
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


def kernel_eval(kernel: Kernel, x, x2) -> float:
    """Scalar kernel value k(x, x2)."""
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x.shape != x2.shape:
        raise InvalidInputError(f"input dimension mismatch: {x.shape[0]} vs {x2.shape[0]}")
    return float(kernel(x.reshape(1, -1), x2.reshape(1, -1))[0, 0])


def kernel_matrix(kernel: Kernel, X, X2=None) -> np.ndarray:
    """Cross-covariance matrix; symmetric PSD (up to roundoff) when X2 is None."""
    return kernel(X, X2)


def _positive(name: str, v: float) -> float:
    v = float(v)
    if not (v > 0) or not math.isfinite(v):
        raise InvalidInputError(f"{name} must be a positive finite number, got {v}")
    return v


def _norm_dims(dims) -> tuple[int, ...] | None:
    if dims is None:
        return None
    dims = tuple(int(d) for d in dims)
    if len(dims) == 0 or len(set(dims)) != len(dims) or any(d < 0 for d in dims):
        raise InvalidInputError(f"invalid dims {dims!r}")
    return dims


def _scaled_sq_dists(A: np.ndarray, B: np.ndarray, lengthscale) -> np.ndarray:
    ls = np.asarray(lengthscale, dtype=float)
    if ls.ndim == 0:
        ls = np.full(A.shape[1], float(ls))
    if ls.shape[0] != A.shape[1]:
        raise InvalidInputError(
            f"lengthscale has {ls.shape[0]} entries but kernel sees {A.shape[1]} dims"
        )
    d2 = cdist(A / ls, B / ls, "sqeuclidean")
    return np.maximum(d2, 0.0)


class Rbf(Kernel):
    """Squared-exponential kernel, lengthscale scalar or per-dimension."""

    def __init__(self, variance=1.0, lengthscale=1.0, dims=None):
        self.variance = _positive("variance", variance)
        ls = np.asarray(lengthscale, dtype=float)
        for v in np.atleast_1d(ls):
            _positive("lengthscale", v)
        self.lengthscale = float(ls) if ls.ndim == 0 else ls.copy()
        self.dims = _norm_dims(dims)

    def _matrix(self, A, B):
        return self.variance * np.exp(-0.5 * _scaled_sq_dists(A, B, self.lengthscale))

    def _diag(self, A):
        return np.full(A.shape[0], self.variance)

    def param_values(self):
        return [self.variance, *np.atleast_1d(self.lengthscale).tolist()]

    def param_bounds(self):
        n_ls = np.atleast_1d(self.lengthscale).shape[0]
        return [VARIANCE_BOUNDS] + [LENGTHSCALE_BOUNDS] * n_ls

    def _rebuild(self, it):
        var = next(it)
        if np.ndim(self.lengthscale) == 0:
            return Rbf(var, next(it), dims=self.dims)
        ls = [next(it) for _ in range(len(self.lengthscale))]
        return Rbf(var, np.array(ls), dims=self.dims)

    def to_config(self):
        ls = self.lengthscale
        return {
            "op": "leaf",
            "kind": "rbf",
            "params": {"variance": self.variance,
                       "lengthscale": ls if np.ndim(ls) == 0 else list(ls)},
            "dims": list(self.dims) if self.dims else None,
        }


class Matern(Kernel):
    """Matern kernel restricted to the half-integer closed forms."""

    _NUS = (0.5, 1.5, 2.5)

    def __init__(self, nu=2.5, variance=1.0, lengthscale=1.0, dims=None):
        if float(nu) not in self._NUS:
            raise InvalidInputError(f"nu must be one of {self._NUS}, got {nu}")
        self.nu = float(nu)
        self.variance = _positive("variance", variance)
        ls = np.asarray(lengthscale, dtype=float)
        for v in np.atleast_1d(ls):
            _positive("lengthscale", v)
        self.lengthscale = float(ls) if ls.ndim == 0 else ls.copy()
        self.dims = _norm_dims(dims)

    def _matrix(self, A, B):
        r = np.sqrt(_scaled_sq_dists(A, B, self.lengthscale))
        if self.nu == 0.5:
            k = np.exp(-r)
        elif self.nu == 1.5:
            s = math.sqrt(3.0) * r
            k = (1.0 + s) * np.exp(-s)
        else:
            s = math.sqrt(5.0) * r
            k = (1.0 + s + s * s / 3.0) * np.exp(-s)
        return self.variance * k

    def _diag(self, A):
        return np.full(A.shape[0], self.variance)

    def param_values(self):
        return [self.variance, *np.atleast_1d(self.lengthscale).tolist()]

    def param_bounds(self):
        n_ls = np.atleast_1d(self.lengthscale).shape[0]
        return [VARIANCE_BOUNDS] + [LENGTHSCALE_BOUNDS] * n_ls

    def _rebuild(self, it):
        var = next(it)
        if np.ndim(self.lengthscale) == 0:
            return Matern(self.nu, var, next(it), dims=self.dims)
        ls = [next(it) for _ in range(len(self.lengthscale))]
        return Matern(self.nu, var, np.array(ls), dims=self.dims)

    def to_config(self):
        ls = self.lengthscale
        return {
            "op": "leaf",
            "kind": "matern",
            "params": {"nu": self.nu, "variance": self.variance,
                       "lengthscale": ls if np.ndim(ls) == 0 else list(ls)},
            "dims": list(self.dims) if self.dims else None,
        }


class LinearKernel(Kernel):
    """k(x, x') = bias_variance + x . x' on the selected dims."""

    def __init__(self, bias_variance=1.0, dims=None):
        self.bias_variance = _positive("bias_variance", bias_variance)
        self.dims = _norm_dims(dims)

    def _matrix(self, A, B):
        return self.bias_variance + A @ B.T

    def _diag(self, A):
        return self.bias_variance + np.sum(A * A, axis=1)

    def param_values(self):
        return [self.bias_variance]

    def param_bounds(self):
        return [VARIANCE_BOUNDS]

    def _rebuild(self, it):
        return LinearKernel(next(it), dims=self.dims)

    def to_config(self):
        return {
            "op": "leaf",
            "kind": "linear",
            "params": {"bias_variance": self.bias_variance},
            "dims": list(self.dims) if self.dims else None,
        }


class Periodic(Kernel):
    """Periodic kernel on a single coordinate (1-D distance only)."""

    def __init__(self, variance=1.0, lengthscale=1.0, period=1.0, dims=None):
        self.variance = _positive("variance", variance)
        self.lengthscale = _positive("lengthscale", lengthscale)
        self.period = _positive("period", period)
        dims = _norm_dims(dims)
        if dims is not None and len(dims) != 1:
            raise InvalidInputError("Periodic is restricted to a single coordinate")
        self.dims = dims

    def _matrix(self, A, B):
        if A.shape[1] != 1:
            raise InvalidInputError("Periodic requires exactly one input dimension")
        r = np.abs(A - B.T)
        s = np.sin(math.pi * r / self.period)
        return self.variance * np.exp(-2.0 * s * s / self.lengthscale**2)

    def _diag(self, A):
        if A.shape[1] != 1:
            raise InvalidInputError("Periodic requires exactly one input dimension")
        return np.full(A.shape[0], self.variance)

    def param_values(self):
        return [self.variance, self.lengthscale, self.period]

    def param_bounds(self):
        return [VARIANCE_BOUNDS, LENGTHSCALE_BOUNDS, PERIOD_BOUNDS]

    def _rebuild(self, it):
        return Periodic(next(it), next(it), next(it), dims=self.dims)

    def to_config(self):
        return {
            "op": "leaf",
            "kind": "periodic",
            "params": {"variance": self.variance, "lengthscale": self.lengthscale,
                       "period": self.period},
            "dims": list(self.dims) if self.dims else None,
        }


class CategoricalOverlap(Kernel):
    """exp(weight * [blocks equal]) / exp(weight) over a one-hot block."""

    def __init__(self, weight=1.0, dims=None):
        self.weight = _positive("weight", weight)
        self.dims = _norm_dims(dims)

    def _matrix(self, A, B):
        d2 = cdist(A, B, "sqeuclidean")
        return np.where(d2 < 1e-12, 1.0, math.exp(-self.weight))

    def _diag(self, A):
        return np.ones(A.shape[0])

    def param_values(self):
        return [self.weight]

    def param_bounds(self):
        return [LENGTHSCALE_BOUNDS]

    def _rebuild(self, it):
        return CategoricalOverlap(next(it), dims=self.dims)

    def to_config(self):
        return {
            "op": "leaf",
            "kind": "categorical_overlap",
            "params": {"weight": self.weight},
            "dims": list(self.dims) if self.dims else None,
        }


class Sum(Kernel):
    def __init__(self, *children: Kernel):
        if not children:
            raise InvalidInputError("Sum requires at least one child")
        self.children = tuple(children)

    def __call__(self, X, X2=None):
        out = self.children[0](X, X2)
        for c in self.children[1:]:
            out = out + c(X, X2)
        return out

    def diag(self, X):
        out = self.children[0].diag(X)
        for c in self.children[1:]:
            out = out + c.diag(X)
        return out

    def param_values(self):
        return [v for c in self.children for v in c.param_values()]

    def param_bounds(self):
        return [b for c in self.children for b in c.param_bounds()]

    def _rebuild(self, it):
        return Sum(*[c._rebuild(it) for c in self.children])

    def to_config(self):
        return {"op": "sum", "children": [c.to_config() for c in self.children]}


class Product(Kernel):
    def __init__(self, *children: Kernel):
        if not children:
            raise InvalidInputError("Product requires at least one child")
        self.children = tuple(children)

    def __call__(self, X, X2=None):
        out = self.children[0](X, X2)
        for c in self.children[1:]:
            out = out * c(X, X2)
        return out

    def diag(self, X):
        out = self.children[0].diag(X)
        for c in self.children[1:]:
            out = out * c.diag(X)
        return out

    def param_values(self):
        return [v for c in self.children for v in c.param_values()]

    def param_bounds(self):
        return [b for c in self.children for b in c.param_bounds()]

    def _rebuild(self, it):
        return Product(*[c._rebuild(it) for c in self.children])

    def to_config(self):
        return {"op": "product", "children": [c.to_config() for c in self.children]}


class Scale(Kernel):
    """Nonnegative rescaling of a child kernel."""

    def __init__(self, coefficient: float, child: Kernel):
        c = float(coefficient)
        if c < 0 or not math.isfinite(c):
            raise InvalidInputError(f"scale coefficient must be >= 0, got {c}")
        self.coefficient = c
        self.child = child

    def __call__(self, X, X2=None):
        return self.coefficient * self.child(X, X2)

    def diag(self, X):
        return self.coefficient * self.child.diag(X)

    def param_values(self):
        return [self.coefficient, *self.child.param_values()]

    def param_bounds(self):
        return [VARIANCE_BOUNDS, *self.child.param_bounds()]

    def _rebuild(self, it):
        return Scale(next(it), self.child._rebuild(it))

    def to_config(self):
        return {"op": "scale", "coefficient": self.coefficient,
                "child": self.child.to_config()}


_LEAVES = {
    "rbf": lambda p, d: Rbf(p["variance"], _maybe_arr(p["lengthscale"]), dims=d),
    "matern": lambda p, d: Matern(p["nu"], p["variance"], _maybe_arr(p["lengthscale"]), dims=d),
    "linear": lambda p, d: LinearKernel(p["bias_variance"], dims=d),
    "periodic": lambda p, d: Periodic(p["variance"], p["lengthscale"], p["period"], dims=d),
    "categorical_overlap": lambda p, d: CategoricalOverlap(p["weight"], dims=d),
}


def _maybe_arr(v):
    return np.asarray(v, dtype=float) if isinstance(v, (list, tuple)) else v


def kernel_from_config(cfg: dict) -> Kernel:
    """Inverse of Kernel.to_config; round-trips exactly."""
    op = cfg.get("op")
    if op == "sum":
        return Sum(*[kernel_from_config(c) for c in cfg["children"]])
    if op == "product":
        return Product(*[kernel_from_config(c) for c in cfg["children"]])
    if op == "scale":
        return Scale(cfg["coefficient"], kernel_from_config(cfg["child"]))
    if op == "leaf":
        kind = cfg.get("kind")
        if kind not in _LEAVES:
            raise InvalidInputError(f"unknown kernel kind {kind!r}")
        return _LEAVES[kind](cfg["params"], cfg.get("dims"))
    raise InvalidInputError(f"unknown kernel op {op!r}")
