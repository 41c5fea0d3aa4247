"""Acquisition scoring, exploration schedules, and batch maximization.

All scoring here is phrased for maximization of the surrogate's targets;
the optimization loop feeds negated targets when the study minimizes, so
confidence-bound kinds always expand upward internally. Batches larger
than one are produced sequentially, conditioning the surrogate on a
fantasized outcome at each already-chosen point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import InvalidInputError
from .gp import GPModel, gp_posterior, refit, sample_posterior
from .space import DesignSpace

ACQ_KINDS = ("ei", "pi", "ucb", "lcb", "thompson")
DIRECTIONS = ("maximize", "minimize")


def acq_ei(mu, sigma, y_best: float, xi: float = 0.0):
    """Expected improvement over y_best with margin xi.

    At sigma == 0 the analytic limit max(mu - y_best - xi, 0) is used.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0) or xi < 0:
        raise InvalidInputError("sigma and xi must be nonnegative")
    imp = mu - y_best - xi
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, imp / np.where(sigma > 0, sigma, 1.0), 0.0)
        ei = imp * norm.cdf(z) + sigma * norm.pdf(z)
    ei = np.where(sigma > 0, ei, np.maximum(imp, 0.0))
    return np.maximum(ei, 0.0)


def acq_pi(mu, sigma, y_best: float, xi: float = 0.0):
    """Probability of improving on y_best by more than xi.

    At sigma == 0 this is the left-continuous step indicator of the margin.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0) or xi < 0:
        raise InvalidInputError("sigma and xi must be nonnegative")
    imp = mu - y_best - xi
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, imp / np.where(sigma > 0, sigma, 1.0), 0.0)
        pi = norm.cdf(z)
    return np.where(sigma > 0, pi, (imp > 0).astype(float))


def acq_ucb(mu, sigma, beta: float):
    """mu + beta * sigma."""
    if beta < 0 or np.any(np.asarray(sigma) < 0):
        raise InvalidInputError("sigma and beta must be nonnegative")
    return np.asarray(mu, dtype=float) + beta * np.asarray(sigma, dtype=float)


def acq_lcb(mu, sigma, beta: float):
    """mu - beta * sigma (the optimistic bound when minimizing)."""
    if beta < 0 or np.any(np.asarray(sigma) < 0):
        raise InvalidInputError("sigma and beta must be nonnegative")
    return np.asarray(mu, dtype=float) - beta * np.asarray(sigma, dtype=float)


def acq_thompson(model: GPModel, candidates, rng: np.random.Generator) -> np.ndarray:
    """One joint posterior draw over the candidate set; scores = drawn values."""
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if candidates.shape[0] == 0:
        raise InvalidInputError("candidate set must be non-empty")
    return sample_posterior(model, candidates, rng, count=1)[0]


# ---------------------------------------------------------------------------
# exploration schedules


def beta_finite(t: int, cardinality: int, delta: float) -> float:
    """Exploration weight 2 ln(|X| t^2 pi^2 / (6 delta)) for finite spaces."""
    if t < 1 or cardinality < 1:
        raise InvalidInputError("t and cardinality must be >= 1")
    if not (0 < delta < 1):
        raise InvalidInputError(f"delta must lie in (0, 1), got {delta}")
    return 2.0 * math.log(cardinality * t * t * math.pi**2 / (6.0 * delta))


def beta_compact(t: int, d: int, delta: float, a: float, b: float, r: float) -> float:
    """Exploration weight for compact convex spaces with smoothness constants a, b."""
    if t < 1 or d < 1:
        raise InvalidInputError("t and d must be >= 1")
    if not (0 < delta < 1):
        raise InvalidInputError(f"delta must lie in (0, 1), got {delta}")
    if a <= 0 or b <= 0 or r <= 0:
        raise InvalidInputError("a, b and r must be positive")
    inner = 4.0 * d * a / delta
    if math.log(inner) <= 1.0:
        raise InvalidInputError(
            f"4*d*a/delta = {inner} must exceed e; the nested log/sqrt term "
            "is ill-defined for smaller confidence ratios"
        )
    term1 = 2.0 * math.log(t * t * 2.0 * math.pi**2 / (3.0 * delta))
    term2 = 2.0 * d * math.log(t * t * d * b * r * math.sqrt(math.log(inner)))
    return term1 + term2


@dataclass(frozen=True)
class BetaSchedule:
    """Time-varying exploration weight; used as mu + sqrt(beta_t) * sigma."""

    kind: str  # "finite" | "compact"
    cardinality: int | None = None
    delta: float = 0.1
    d: int | None = None
    a: float | None = None
    b: float | None = None
    r: float | None = None

    def __post_init__(self):
        if self.kind not in ("finite", "compact"):
            raise InvalidInputError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "finite" and self.cardinality is None:
            raise InvalidInputError("finite schedule requires cardinality")
        if self.kind == "compact" and None in (self.d, self.a, self.b, self.r):
            raise InvalidInputError("compact schedule requires d, a, b and r")

    def beta(self, t: int) -> float:
        if self.kind == "finite":
            return beta_finite(t, self.cardinality, self.delta)
        return beta_compact(t, self.d, self.delta, self.a, self.b, self.r)

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "delta": self.delta}
        if self.kind == "finite":
            cfg["cardinality"] = self.cardinality
        else:
            cfg.update({"d": self.d, "a": self.a, "b": self.b, "r": self.r})
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "BetaSchedule":
        return cls(**cfg)


@dataclass(frozen=True)
class AcquisitionSpec:
    kind: str = "ucb"
    xi: float = 0.0
    beta: float = 2.0
    beta_schedule: BetaSchedule | None = None
    direction: str = "maximize"

    def __post_init__(self):
        if self.kind not in ACQ_KINDS:
            raise InvalidInputError(f"unknown acquisition kind {self.kind!r}")
        if self.direction not in DIRECTIONS:
            raise InvalidInputError(f"unknown direction {self.direction!r}")
        if self.xi < 0 or self.beta < 0:
            raise InvalidInputError("xi and beta must be nonnegative")

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "direction": self.direction}
        if self.kind in ("ei", "pi"):
            cfg["xi"] = self.xi
        if self.kind in ("ucb", "lcb"):
            if self.beta_schedule is not None:
                cfg["beta_schedule"] = self.beta_schedule.to_config()
            else:
                cfg["beta"] = self.beta
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "AcquisitionSpec":
        cfg = dict(cfg)
        sched = cfg.pop("beta_schedule", None)
        if sched is not None:
            cfg["beta_schedule"] = BetaSchedule.from_config(sched)
        return cls(**cfg)


# ---------------------------------------------------------------------------
# candidate pools and batch maximization


@dataclass(frozen=True)
class SearchStrategy:
    """How the acquisition is maximized over the design space.

    grid: full factorial mesh of `resolution` levels per scalar coordinate
    (categories enumerate their labels); random: `pool_size` uniform draws;
    random_plus_local: random pool plus Gaussian perturbations of its best
    scoring member.
    """

    kind: str = "random"
    resolution: int = 101
    pool_size: int = 1024
    perturbations: int = 64

    def __post_init__(self):
        if self.kind not in ("grid", "random", "random_plus_local"):
            raise InvalidInputError(f"unknown strategy kind {self.kind!r}")
        if self.resolution < 2 or self.pool_size < 1 or self.perturbations < 1:
            raise InvalidInputError("strategy parameters must be positive")

    def to_config(self) -> dict:
        if self.kind == "grid":
            return {"kind": "grid", "resolution": self.resolution}
        if self.kind == "random":
            return {"kind": "random", "pool_size": self.pool_size}
        return {"kind": "random_plus_local", "pool_size": self.pool_size,
                "perturbations": self.perturbations}

    @classmethod
    def from_config(cls, cfg: dict) -> "SearchStrategy":
        return cls(**cfg)


def _snap_dedupe(space: DesignSpace, U_raw: np.ndarray) -> tuple[list[dict], np.ndarray]:
    """Decode raw coordinates, re-embed the snapped points, keep first occurrences."""
    points = space.decode_matrix(U_raw)
    U = space.embed_points(points)
    _, first = np.unique(U, axis=0, return_index=True)
    keep = np.sort(first)
    return [points[i] for i in keep], U[keep]


def grid_candidates(space: DesignSpace, resolution: int) -> list[dict]:
    """Full factorial candidate mesh over the embedded blocks."""
    return _grid_pool(space, resolution)[0]


_GRID_CACHE: dict = {}


def _grid_pool(space: DesignSpace, resolution: int) -> tuple[list[dict], np.ndarray]:
    key = (space, resolution)
    if key in _GRID_CACHE:
        return _GRID_CACHE[key]
    axes = []
    for param in space.params:
        if param.kind == "cat":
            axes.append(np.eye(len(param.categories)))
        else:
            axes.append(np.linspace(0.0, 1.0, resolution).reshape(-1, 1))
    rows = axes[0]
    for axis in axes[1:]:
        rows = np.hstack([np.repeat(rows, axis.shape[0], axis=0),
                          np.tile(axis, (rows.shape[0], 1))])
    pool = _snap_dedupe(space, rows)
    if len(_GRID_CACHE) > 32:  # meshes are large; keep the cache bounded
        _GRID_CACHE.clear()
    _GRID_CACHE[key] = pool
    return pool


def candidate_pool(space: DesignSpace, strategy: SearchStrategy,
                   rng: np.random.Generator) -> tuple[list[dict], np.ndarray]:
    """Generate, snap and dedupe the candidate set for one maximization."""
    if strategy.kind == "grid":
        return _grid_pool(space, strategy.resolution)
    return _snap_dedupe(space, rng.random((strategy.pool_size, space.embedded_dim)))


def score_candidates(model: GPModel, spec: AcquisitionSpec, U: np.ndarray,
                     t: int = 1, rng: np.random.Generator | None = None) -> np.ndarray:
    """Acquisition scores at embedded candidates, on the internal (maximize) scale."""
    if spec.kind == "thompson":
        if rng is None:
            raise InvalidInputError("thompson scoring requires an rng")
        return acq_thompson(model, U, rng)
    post = gp_posterior(model, U)
    mu, sigma = post.mean, post.std
    if spec.kind == "ei":
        return acq_ei(mu, sigma, _incumbent_value(model), spec.xi)
    if spec.kind == "pi":
        return acq_pi(mu, sigma, _incumbent_value(model), spec.xi)
    # confidence-bound family: the loop always maximizes internally
    if spec.beta_schedule is not None:
        return acq_ucb(mu, sigma, math.sqrt(spec.beta_schedule.beta(t)))
    return acq_ucb(mu, sigma, spec.beta)


def _incumbent_value(model: GPModel) -> float:
    if model.n == 0:
        return -np.inf
    return float(np.max(model.y_raw))


def fantasize(model: GPModel, x, policy: str = "posterior_mean",
              value: float | None = None) -> GPModel:
    """Refit on the data plus (x, fantasy) without re-optimizing hyperparameters.

    The default fantasy is the model's own posterior mean at x (the
    constant-liar-at-the-mean convention); target scaling is pinned so the
    refit stays comparable to the source model.
    """
    u = np.asarray(x, dtype=float).ravel()
    if policy == "posterior_mean":
        fantasy = float(gp_posterior(model, u.reshape(1, -1)).mean[0])
    elif policy == "constant":
        if value is None:
            raise InvalidInputError("constant fantasy policy requires a value")
        fantasy = float(value)
    else:
        raise InvalidInputError(f"unknown fantasy policy {policy!r}")
    X_new = np.vstack([model.X, u]) if model.n else u.reshape(1, -1)
    y_new = np.append(model.y_raw, fantasy)
    return refit(model, X_new, y_new)


def maximize_acquisition(model: GPModel, space: DesignSpace, spec: AcquisitionSpec,
                         strategy: SearchStrategy, q: int = 1,
                         rng: np.random.Generator | None = None,
                         t: int = 1) -> list[tuple[dict, float]]:
    """Pick q points by acquisition value; ties break on the lowest pool index.

    For q > 1 the model is fantasized after each pick and the remaining
    pool is re-scored, so the batch spreads out instead of clustering.
    Returned points are distinct unless the pool holds fewer than q
    distinct candidates.
    """
    if q < 1:
        raise InvalidInputError("batch size q must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    points, U = candidate_pool(space, strategy, rng)
    if len(points) == 0:
        raise InvalidInputError("empty candidate pool")

    if strategy.kind == "random_plus_local":
        scores = score_candidates(model, spec, U, t=t, rng=rng)
        best_u = U[int(np.argmax(scores))]
        local = np.clip(best_u + 0.1 * rng.standard_normal((strategy.perturbations, U.shape[1])),
                        0.0, 1.0)
        points, U = _snap_dedupe(space, np.vstack([U, local]))

    chosen: list[tuple[dict, float]] = []
    available = list(range(len(points)))
    current = model
    for pick in range(q):
        if not available:  # pool exhausted: fewer distinct candidates than q
            available = list(range(len(points)))
        scores = score_candidates(current, spec, U[available], t=t, rng=rng)
        local_best = int(np.argmax(scores))
        idx = available[local_best]
        chosen.append((dict(points[idx]), float(scores[local_best])))
        available.remove(idx)
        if pick < q - 1:
            current = fantasize(current, U[idx])
    return chosen
