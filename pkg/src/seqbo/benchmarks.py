"""Synthetic objectives, baselines, and the seeded multi-run harness.

The harness runs each method on each seed, tracks best-so-far curves
and simple regret against a supplied or grid-estimated optimum, and
exports raw plus aggregated CSV tables. Cells are independent; a failed
cell is recorded and skipped in aggregation with a warning.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acquisition import AcquisitionSpec, SearchStrategy
from .errors import InvalidInputError
from .gp import FitConfig
from .space import DesignSpace
from .study import Budget, Study, StudyConfig, run

METHODS = ("gp_ucb", "bo_ei", "bo_lcb", "random")


def wavy2d(x):
    """sin(5 pi x1) cos(5 pi x2) + 0.5 cos(10 pi x1) sin(10 pi x2) on [0,1]^2."""
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != 2:
        raise InvalidInputError("wavy2d expects points in [0,1]^2")
    if np.any(X < 0) or np.any(X > 1):
        raise InvalidInputError("wavy2d input outside [0,1]^2")
    x1, x2 = X[:, 0], X[:, 1]
    out = (np.sin(5 * np.pi * x1) * np.cos(5 * np.pi * x2)
           + 0.5 * np.cos(10 * np.pi * x1) * np.sin(10 * np.pi * x2))
    return float(out[0]) if single else out


def wavy2d_space() -> DesignSpace:
    return DesignSpace.parse([
        {"name": "x1", "type": "num", "lb": 0.0, "ub": 1.0},
        {"name": "x2", "type": "num", "lb": 0.0, "ub": 1.0},
    ])


def _wavy2d_point(point: dict) -> float:
    return wavy2d([point["x1"], point["x2"]])


@dataclass(frozen=True)
class BuiltinObjective:
    name: str
    space: DesignSpace
    evaluate: object          # DesignPoint -> float
    vectorized: object        # (N, d) array -> (N,) array


def resolve_objective(name: str) -> BuiltinObjective:
    """Look up 'builtin:<name>' objectives usable from the CLI and harness."""
    key = name.split(":", 1)[1] if name.startswith("builtin:") else name
    if key == "wavy2d":
        return BuiltinObjective("builtin:wavy2d", wavy2d_space(), _wavy2d_point, wavy2d)
    raise InvalidInputError(f"unknown objective {name!r}")


def random_search(space: DesignSpace, T: int, rng, evaluator,
                  direction: str = "maximize") -> Study:
    """Uniform sampling baseline; returns a stopped study with T observations."""
    if T < 1:
        raise InvalidInputError("T must be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    study = Study(space, StudyConfig(n_init=1, direction=direction))
    for point in space.sample(T, rng):
        study.observe(point, float(evaluator(point)), source="algorithm")
    study.stop()
    return study


@dataclass(frozen=True)
class OptimumEstimate:
    value: float
    resolution: int
    spacing: float


def estimate_optimum(objective_vectorized, resolution: int = 1001, dim: int = 2,
                     maximize: bool = True) -> OptimumEstimate:
    """Extreme of the objective over a uniform grid on [0,1]^dim."""
    axes = [np.linspace(0.0, 1.0, resolution)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    X = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.asarray(objective_vectorized(X), dtype=float)
    value = float(np.max(vals) if maximize else np.min(vals))
    return OptimumEstimate(value=value, resolution=resolution,
                           spacing=1.0 / (resolution - 1))


# ---------------------------------------------------------------------------
# the experiment harness


@dataclass(frozen=True)
class BenchmarkConfig:
    objective: str = "builtin:wavy2d"
    methods: tuple[str, ...] = ("gp_ucb", "random")
    seeds: tuple[int, ...] = tuple(range(16))
    budget: int = 100
    n_init: int = 20
    direction: str = "maximize"
    strategy: SearchStrategy = field(default_factory=lambda: SearchStrategy(kind="grid", resolution=101))
    ucb_beta: float = 2.0
    ei_xi: float = 0.0
    noise_std: float = 0.0
    f_star: float | None = None
    fit: FitConfig = field(default_factory=lambda: FitConfig(restarts=2, max_iter=60))
    refit_every: int = 1
    output_path: str | None = None

    def __post_init__(self):
        if len(set(self.seeds)) != len(self.seeds):
            raise InvalidInputError("seeds must be distinct")
        if self.budget < self.n_init:
            raise InvalidInputError("budget must cover the initial design (T >= n_init)")
        for m in self.methods:
            if m not in METHODS:
                raise InvalidInputError(f"unknown method {m!r}")

    def to_config(self) -> dict:
        return {
            "objective": self.objective,
            "methods": list(self.methods),
            "seeds": list(self.seeds),
            "budget": self.budget,
            "n_init": self.n_init,
            "direction": self.direction,
            "strategy": self.strategy.to_config(),
            "ucb_beta": self.ucb_beta,
            "ei_xi": self.ei_xi,
            "noise_std": self.noise_std,
            "f_star": self.f_star,
            "fit": self.fit.to_config(),
            "refit_every": self.refit_every,
            "output_path": self.output_path,
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "BenchmarkConfig":
        cfg = dict(cfg)
        out = {}
        for key in ("objective", "budget", "n_init", "direction", "ucb_beta",
                    "ei_xi", "noise_std", "f_star", "refit_every", "output_path"):
            if key in cfg:
                out[key] = cfg[key]
        if "methods" in cfg:
            out["methods"] = tuple(cfg["methods"])
        if "seeds" in cfg:
            out["seeds"] = tuple(cfg["seeds"])
        if "strategy" in cfg:
            out["strategy"] = SearchStrategy.from_config(cfg["strategy"])
        if "fit" in cfg:
            out["fit"] = FitConfig.from_config(cfg["fit"])
        return cls(**out)


@dataclass
class CurveTable:
    """Per-(method, seed) observation and best-so-far curves plus aggregates."""

    methods: tuple[str, ...]
    seeds: tuple[int, ...]
    budget: int
    f_star: float
    direction: str
    best: dict          # (method, seed) -> list of best-so-far values
    ys: dict            # (method, seed) -> list of observed values, in order
    failures: dict      # (method, seed) -> error string

    def simple_regret(self, method: str, seed: int) -> list[float]:
        sign = 1.0 if self.direction == "maximize" else -1.0
        return [sign * (self.f_star - b) for b in self.best[(method, seed)]]

    def average_regret(self, method: str, seed: int) -> list[float]:
        """Cumulative regret divided by iteration count, per iteration."""
        sign = 1.0 if self.direction == "maximize" else -1.0
        inst = sign * (self.f_star - np.asarray(self.ys[(method, seed)]))
        return (np.cumsum(inst) / np.arange(1, inst.shape[0] + 1)).tolist()

    def completed_seeds(self, method: str) -> list[int]:
        return [s for s in self.seeds if (method, s) in self.best]

    def aggregate(self, method: str) -> list[tuple[int, float, float]]:
        """(iteration, mean, stderr) of best-so-far across completed seeds."""
        seeds = self.completed_seeds(method)
        if not seeds:
            return []
        arr = np.array([self.best[(method, s)] for s in seeds])
        mean = arr.mean(axis=0)
        if arr.shape[0] > 1:
            stderr = arr.std(axis=0, ddof=1) / math.sqrt(arr.shape[0])
        else:
            stderr = np.zeros(arr.shape[1])
        return [(i + 1, float(mean[i]), float(stderr[i])) for i in range(arr.shape[1])]

    def mean_final_best(self, method: str) -> float:
        return self.aggregate(method)[-1][1]

    def mean_final_simple_regret(self, method: str) -> float:
        sign = 1.0 if self.direction == "maximize" else -1.0
        return sign * (self.f_star - self.mean_final_best(method))


def _method_acquisition(method: str, config: BenchmarkConfig) -> AcquisitionSpec:
    if method == "gp_ucb":
        return AcquisitionSpec(kind="ucb", beta=config.ucb_beta, direction=config.direction)
    if method == "bo_ei":
        return AcquisitionSpec(kind="ei", xi=config.ei_xi, direction=config.direction)
    if method == "bo_lcb":
        return AcquisitionSpec(kind="lcb", beta=config.ucb_beta, direction=config.direction)
    raise InvalidInputError(f"unknown method {method!r}")


def _run_cell(config: BenchmarkConfig, objective: BuiltinObjective,
              method: str, seed: int) -> tuple[list[float], list[float]]:
    if config.noise_std > 0:
        noise_rng = np.random.default_rng([seed, 909])

        def evaluator(point):
            return objective.evaluate(point) + config.noise_std * noise_rng.standard_normal()
    else:
        evaluator = objective.evaluate

    if method == "random":
        study = random_search(objective.space, config.budget,
                              np.random.default_rng([seed, 808]), evaluator,
                              direction=config.direction)
    else:
        cfg = StudyConfig(
            direction=config.direction,
            acquisition=_method_acquisition(method, config),
            n_init=config.n_init,
            strategy=config.strategy,
            seed=seed,
            refit_every=config.refit_every,
            fit=config.fit,
        )
        study = run(Study(objective.space, cfg), evaluator, Budget(config.budget))
    return study.best_so_far(), [o.y for o in study.history]


def run_benchmark(config: BenchmarkConfig) -> CurveTable:
    """Execute every method x seed cell and aggregate the curves."""
    objective = resolve_objective(config.objective)
    if config.f_star is not None:
        f_star = config.f_star
    else:
        maximize = config.direction == "maximize"
        f_star = estimate_optimum(objective.vectorized, maximize=maximize).value

    best, ys, failures = {}, {}, {}
    for method in config.methods:
        for seed in config.seeds:
            try:
                best[(method, seed)], ys[(method, seed)] = _run_cell(
                    config, objective, method, seed)
            except Exception as exc:  # cell isolation: record and continue
                failures[(method, seed)] = f"{type(exc).__name__}: {exc}"
                warnings.warn(f"benchmark cell ({method}, seed={seed}) failed: {exc}")
    table = CurveTable(methods=config.methods, seeds=config.seeds, budget=config.budget,
                       f_star=f_star, direction=config.direction, best=best, ys=ys,
                       failures=failures)
    if config.output_path:
        export_curves(table, config.output_path)
    return table


def export_curves(table: CurveTable, path) -> tuple[Path, Path]:
    """Write raw per-run rows and the per-method aggregate next to them.

    Raw header: method,seed,iteration,best_so_far,simple_regret.
    Aggregate header: method,iteration,mean,stderr. Row order is stable:
    methods in table order, seeds ascending, iterations ascending.
    """
    if not table.best:
        raise InvalidInputError("cannot export an empty curve table")
    path = Path(path)
    agg_path = path.with_name(path.stem + "_agg" + (path.suffix or ".csv"))
    path.parent.mkdir(parents=True, exist_ok=True)

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "seed", "iteration", "best_so_far", "simple_regret"])
        for method in table.methods:
            for seed in sorted(table.completed_seeds(method)):
                curve = table.best[(method, seed)]
                regret = table.simple_regret(method, seed)
                for i, (b, r) in enumerate(zip(curve, regret), start=1):
                    w.writerow([method, seed, i, repr(b), repr(r)])

    with open(agg_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "iteration", "mean", "stderr"])
        for method in table.methods:
            for i, mean, stderr in table.aggregate(method):
                w.writerow([method, i, repr(mean), repr(stderr)])
    return path, agg_path
