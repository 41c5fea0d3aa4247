"""Optimization studies: ask-tell lifecycle, loops, slates and regret.

A study owns the design space, the observation ledger, pending (not yet
observed) suggestions and the surrogate configuration. All randomness is
derived from the study seed plus progress counters, so a persisted study
that is reloaded mid-run continues with exactly the sequence it would
have produced uninterrupted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from .acquisition import (
    AcquisitionSpec,
    SearchStrategy,
    candidate_pool,
    fantasize,
    maximize_acquisition,
    score_candidates,
)
from .errors import InvalidInputError, StateError
from .gp import (
    FitConfig,
    GPHyperparams,
    GPModel,
    ZeroMean,
    fit_hyperparams,
    gp_fit,
    gp_posterior,
    mean_from_config,
)
from .kernels import CategoricalOverlap, Kernel, Product, Rbf, kernel_from_config
from .space import DesignSpace

SOURCES = ("algorithm", "human-override", "initialization")
STUDY_SCHEMA_VERSION = 1

# seed-stream tags: one sub-stream per kind of random decision
_INIT_STREAM = 101
_SUGGEST_STREAM = 202
_RECOMMEND_STREAM = 303
_FIT_STREAM = 404
_POOL_STREAM = 505


def default_kernel(space: DesignSpace) -> Kernel:
    """RBF over numeric coordinates, overlap kernels per categorical block."""
    numeric_dims, factors = [], []
    for param in space.params:
        off, width = space.block(param.name)
        if param.kind == "cat":
            factors.append(CategoricalOverlap(1.0, dims=range(off, off + width)))
        else:
            numeric_dims.append(off)
    if numeric_dims:
        factors.insert(0, Rbf(1.0, 0.3, dims=numeric_dims))
    return factors[0] if len(factors) == 1 else Product(*factors)


@dataclass(frozen=True)
class Observation:
    x: dict
    y: float
    iteration: int
    source: str = "algorithm"
    recorded_at: str = ""

    def to_config(self) -> dict:
        return {"iteration": self.iteration, "x": self.x, "y": self.y,
                "source": self.source, "recorded_at": self.recorded_at}

    @classmethod
    def from_config(cls, cfg: dict) -> "Observation":
        return cls(x=cfg["x"], y=cfg["y"], iteration=cfg["iteration"],
                   source=cfg.get("source", "algorithm"),
                   recorded_at=cfg.get("recorded_at", ""))


# ---------------------------------------------------------------------------
# stopping rules


@dataclass(frozen=True)
class Budget:
    budget: int

    def __post_init__(self):
        if self.budget < 1:
            raise InvalidInputError("budget must be >= 1")


@dataclass(frozen=True)
class MinImprovement:
    epsilon: float
    window: int = 1

    def __post_init__(self):
        if self.epsilon < 0 or self.window < 1:
            raise InvalidInputError("epsilon must be >= 0 and window >= 1")


@dataclass(frozen=True)
class AcquisitionFloor:
    tau: float

    def __post_init__(self):
        if self.tau < 0:
            raise InvalidInputError("tau must be >= 0")


StopRule = Budget | MinImprovement | AcquisitionFloor


def rule_to_config(rule: StopRule) -> dict:
    if isinstance(rule, Budget):
        return {"kind": "budget", "budget": rule.budget}
    if isinstance(rule, MinImprovement):
        return {"kind": "min_improvement", "epsilon": rule.epsilon, "window": rule.window}
    return {"kind": "acquisition_floor", "tau": rule.tau}


def rule_from_config(cfg: dict) -> StopRule:
    kind = cfg.get("kind")
    if kind == "budget":
        return Budget(cfg["budget"])
    if kind == "min_improvement":
        return MinImprovement(cfg["epsilon"], cfg.get("window", 1))
    if kind == "acquisition_floor":
        return AcquisitionFloor(cfg["tau"])
    raise InvalidInputError(f"unknown stopping rule {kind!r}")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class StudyConfig:
    direction: str = "maximize"
    acquisition: AcquisitionSpec = field(default_factory=AcquisitionSpec)
    kernel: Kernel | None = None          # None: derived from the space
    n_init: int = 5
    init_method: str = "random"           # "random" | "lhs"
    batch_size: int = 1
    strategy: SearchStrategy = field(default_factory=SearchStrategy)
    stopping: tuple[StopRule, ...] = ()
    seed: int = 0
    refit_every: int = 1
    fit: FitConfig = field(default_factory=FitConfig)

    def __post_init__(self):
        if self.direction not in ("maximize", "minimize"):
            raise InvalidInputError(f"unknown direction {self.direction!r}")
        if self.init_method not in ("random", "lhs"):
            raise InvalidInputError(f"unknown init method {self.init_method!r}")
        if self.n_init < 1 or self.batch_size < 1 or self.refit_every < 1:
            raise InvalidInputError("n_init, batch_size and refit_every must be >= 1")

    def to_config(self) -> dict:
        return {
            "direction": self.direction,
            "acquisition": self.acquisition.to_config(),
            "kernel": self.kernel.to_config() if self.kernel is not None else None,
            "n_init": self.n_init,
            "init_method": self.init_method,
            "batch_size": self.batch_size,
            "strategy": self.strategy.to_config(),
            "stopping": [rule_to_config(r) for r in self.stopping],
            "seed": self.seed,
            "refit_every": self.refit_every,
            "fit": self.fit.to_config(),
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "StudyConfig":
        cfg = dict(cfg)
        out = {}
        out["direction"] = cfg.get("direction", "maximize")
        if "acquisition" in cfg:
            out["acquisition"] = AcquisitionSpec.from_config(cfg["acquisition"])
        if cfg.get("kernel") is not None:
            out["kernel"] = kernel_from_config(cfg["kernel"])
        for key in ("n_init", "init_method", "batch_size", "seed", "refit_every"):
            if key in cfg:
                out[key] = cfg[key]
        if "strategy" in cfg:
            out["strategy"] = SearchStrategy.from_config(cfg["strategy"])
        if "stopping" in cfg:
            out["stopping"] = tuple(rule_from_config(r) for r in cfg["stopping"])
        if "fit" in cfg:
            out["fit"] = FitConfig.from_config(cfg["fit"])
        return cls(**out)


# ---------------------------------------------------------------------------
# initial designs


def init_design(space: DesignSpace, n: int, method: str,
                rng: np.random.Generator) -> list[dict]:
    """Initial design points: uniform embedded sampling or Latin hypercube."""
    if n < 1:
        raise InvalidInputError("initial design size must be >= 1")
    if method == "random":
        return space.sample(n, rng)
    if method != "lhs":
        raise InvalidInputError(f"unknown init method {method!r}")
    d = space.embedded_dim
    U = np.empty((n, d))
    for j in range(d):
        U[:, j] = (rng.permutation(n) + rng.random(n)) / n
    return [space.from_unit(row) for row in U]


# ---------------------------------------------------------------------------
# the study


class Study:
    """State machine for one optimization: suggest -> evaluate -> observe."""

    def __init__(self, space: DesignSpace, config: StudyConfig | None = None):
        self.space = space
        self.config = config or StudyConfig()
        self.history: list[Observation] = []
        self.pending: list[dict] = []
        self.stopped = False
        self.init_served = 0
        self.last_acq_max: float | None = None
        self.fitted_hp: GPHyperparams | None = None
        self.fits_since_refit = 0

    # -- basic state ------------------------------------------------------

    @property
    def state(self) -> str:
        if self.stopped:
            return "stopped"
        return "initializing" if len(self.history) < self.config.n_init else "running"

    @property
    def sign(self) -> float:
        """Internal targets are sign * y so the engine always maximizes."""
        return 1.0 if self.config.direction == "maximize" else -1.0

    @property
    def in_init_phase(self) -> bool:
        return len(self.history) + len(self.pending) < self.config.n_init

    def incumbent(self) -> Observation:
        if not self.history:
            raise InvalidInputError("study has no observations yet")
        ys = np.array([o.y for o in self.history]) * self.sign
        return self.history[int(np.argmax(ys))]

    def kernel_template(self) -> Kernel:
        return self.config.kernel if self.config.kernel is not None else default_kernel(self.space)

    def _rng(self, stream: int, *counters: int) -> np.random.Generator:
        return np.random.default_rng([self.config.seed, stream, *counters])

    # -- surrogate --------------------------------------------------------

    def _training_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.history:
            return np.zeros((0, self.space.embedded_dim)), np.zeros(0)
        X = self.space.embed_points([o.x for o in self.history])
        g = np.array([o.y for o in self.history]) * self.sign
        return X, g

    def _ensure_hyperparams(self, X: np.ndarray, g: np.ndarray) -> GPHyperparams:
        refit_due = self.fitted_hp is None or self.fits_since_refit >= self.config.refit_every
        if refit_due and X.shape[0] >= 2:
            seed = int(np.random.SeedSequence(
                [self.config.seed, _FIT_STREAM, len(self.history)]).generate_state(1)[0])
            cfg = replace(self.config.fit, seed=seed)
            # warm start: the previous optimum seeds the first local search
            template = self.fitted_hp.kernel if self.fitted_hp is not None \
                else self.kernel_template()
            self.fitted_hp = fit_hyperparams(X, g, template, ZeroMean(), cfg)
            self.fits_since_refit = 0
        elif self.fitted_hp is None:
            self.fitted_hp = GPHyperparams(self.kernel_template(), ZeroMean(),
                                           self.config.fit.initial_noise)
        return self.fitted_hp

    def current_model(self, include_pending: bool = True) -> GPModel:
        """Surrogate fitted on the internal targets, pending points fantasized."""
        X, g = self._training_arrays()
        hp = self._ensure_hyperparams(X, g)
        model = gp_fit(X, g, hp, standardize=self.config.fit.standardize)
        if include_pending:
            for p in self.pending:
                model = fantasize(model, self.space.to_unit(p))
        return model

    # -- ask-tell ---------------------------------------------------------

    def initial_points(self) -> list[dict]:
        """The full deterministic initial design for this study's seed."""
        return init_design(self.space, self.config.n_init, self.config.init_method,
                           self._rng(_INIT_STREAM))

    def suggest(self, q: int | None = None) -> list[dict]:
        """Next q points to evaluate; repeat calls return the pending set."""
        if self.stopped:
            raise StateError("study is stopped")
        q = q if q is not None else self.config.batch_size
        if q < 1:
            raise InvalidInputError("q must be >= 1")
        if len(self.pending) >= q:
            return [dict(p) for p in self.pending[:q]]

        need = q - len(self.pending)
        while need > 0 and self.init_served < self.config.n_init \
                and len(self.history) + len(self.pending) < self.config.n_init:
            point = self.initial_points()[self.init_served]
            self.pending.append(point)
            self.init_served += 1
            need -= 1
        # model-based suggestions start only once initialization is observed
        if need > 0 and len(self.history) >= self.config.n_init:
            model = self.current_model(include_pending=True)
            rng = self._rng(_SUGGEST_STREAM, len(self.history), len(self.pending))
            t = len(self.history) + len(self.pending) + 1
            picked = maximize_acquisition(model, self.space, self.config.acquisition,
                                          self.config.strategy, q=need, rng=rng, t=t)
            self.last_acq_max = max(score for _, score in picked)
            self.fits_since_refit += 1
            self.pending.extend(point for point, _ in picked)
        return [dict(p) for p in self.pending[:q]]

    def observe(self, x: dict, y: float, source: str = "algorithm") -> "Study":
        """Record an outcome; x need not have been suggested (human override)."""
        if source not in SOURCES:
            raise InvalidInputError(f"unknown observation source {source!r}")
        if not isinstance(y, (int, float, np.integer, np.floating)) or isinstance(y, bool) \
                or not math.isfinite(float(y)):
            raise InvalidInputError(f"objective value must be finite, got {y!r}")
        point = self.space.validate_point(x)
        obs = Observation(x=point, y=float(y), iteration=len(self.history) + 1,
                          source=source,
                          recorded_at=datetime.now(timezone.utc).isoformat())
        self.history.append(obs)
        for i, p in enumerate(self.pending):
            if p == point:
                del self.pending[i]
                break
        return self

    def stop(self) -> "Study":
        self.stopped = True
        return self

    # -- slates and recommendations ----------------------------------------

    def slate(self, k: int) -> list[dict]:
        """Top-k candidates with acquisition score and posterior annotations.

        Scores are on the internal maximize scale; mean/std are reported on
        the raw objective scale. Nothing is marked pending.
        """
        if self.stopped:
            raise StateError("study is stopped")
        if k < 1:
            raise InvalidInputError("k must be >= 1")
        if len(self.history) < self.config.n_init:
            raise StateError("slates are available once initialization is complete")
        model = self.current_model(include_pending=True)
        rng = self._rng(_SUGGEST_STREAM, len(self.history), len(self.pending))
        points, U = candidate_pool(self.space, self.config.strategy, rng)
        t = len(self.history) + len(self.pending) + 1
        scores = score_candidates(model, self.config.acquisition, U, t=t, rng=rng)
        post = gp_posterior(model, U)
        order = np.argsort(-scores, kind="stable")[:k]
        return [
            {
                "x": dict(points[i]),
                "score": float(scores[i]),
                "mean": float(self.sign * post.mean[i]),
                "std": float(post.std[i]),
            }
            for i in order
        ]

    def best(self, mode: str = "observed") -> dict:
        """Final recommendation: best observed point, or best posterior mean."""
        if not self.history:
            raise InvalidInputError("study has no observations yet")
        if mode == "observed":
            inc = self.incumbent()
            return {"x": dict(inc.x), "y": inc.y, "mode": "observed"}
        if mode != "model":
            raise InvalidInputError(f"unknown recommendation mode {mode!r}")
        model = self.current_model(include_pending=False)
        rng = self._rng(_RECOMMEND_STREAM, len(self.history))
        points, _ = candidate_pool(self.space, self.config.strategy, rng)
        # observed points join the pool first, so exact ties favor evaluated designs
        points, U = _merge_pools(self.space, [o.x for o in self.history], points)
        post = gp_posterior(model, U)
        i = int(np.argmax(post.mean))
        return {"x": dict(points[i]), "y": float(self.sign * post.mean[i]), "mode": "model"}

    def best_so_far(self) -> list[float]:
        """Running incumbent value after each observation."""
        out, cur = [], None
        for o in self.history:
            cur = o.y if cur is None else (max(cur, o.y) if self.sign > 0 else min(cur, o.y))
            out.append(cur)
        return out


def _merge_pools(space: DesignSpace, first: list[dict],
                 rest: list[dict]) -> tuple[list[dict], np.ndarray]:
    points = [space.validate_point(e) for e in first] + rest
    U = space.embed_points(points)
    _, idx = np.unique(U, axis=0, return_index=True)
    keep = np.sort(idx)
    return [points[i] for i in keep], U[keep]


# ---------------------------------------------------------------------------
# stopping / loops


def should_stop(study: Study, rules) -> bool:
    """Disjunction of stopping rules; a single rule is accepted too."""
    if rules is None:
        return False
    if isinstance(rules, (Budget, MinImprovement, AcquisitionFloor)):
        rules = (rules,)
    for rule in rules:
        if isinstance(rule, Budget):
            if len(study.history) >= rule.budget:
                return True
        elif isinstance(rule, MinImprovement):
            if _min_improvement_fired(study, rule):
                return True
        elif isinstance(rule, AcquisitionFloor):
            if study.last_acq_max is not None and study.last_acq_max < rule.tau:
                return True
        else:
            raise InvalidInputError(f"unknown stopping rule {rule!r}")
    return False


def _min_improvement_fired(study: Study, rule: MinImprovement) -> bool:
    n = len(study.history)
    if n < study.config.n_init or n <= rule.window:
        return False
    ys = np.array([o.y for o in study.history]) * study.sign
    improvement = float(np.max(ys) - np.max(ys[: n - rule.window]))
    return improvement < rule.epsilon


def run(study: Study, evaluator, rules=None, checkpoint=None) -> Study:
    """Drive suggest -> evaluate -> observe until a stopping rule fires.

    `checkpoint`, when given, is called with the study after every
    observation (used by the CLI/service to persist progress). Evaluator
    exceptions propagate with the study left at its last consistent state.
    """
    rules = rules if rules is not None else study.config.stopping
    if not rules:
        raise InvalidInputError("run() requires at least one stopping rule")
    budget = min((r.budget for r in _iter_rules(rules) if isinstance(r, Budget)),
                 default=None)
    while not should_stop(study, rules):
        q = study.config.batch_size
        if budget is not None:
            q = min(q, budget - len(study.history))
        for point in study.suggest(max(q, 1)):
            source = ("initialization" if len(study.history) < study.config.n_init
                      else "algorithm")
            study.observe(point, float(evaluator(point)), source=source)
            if checkpoint is not None:
                checkpoint(study)
            if budget is not None and len(study.history) >= budget:
                break
    study.stop()
    if checkpoint is not None:
        checkpoint(study)
    return study


def _iter_rules(rules):
    if isinstance(rules, (Budget, MinImprovement, AcquisitionFloor)):
        return (rules,)
    return tuple(rules)


# ---------------------------------------------------------------------------
# regret


@dataclass(frozen=True)
class RegretTrace:
    """Per-iteration instantaneous, cumulative and simple regret."""

    instantaneous: np.ndarray
    cumulative: np.ndarray
    simple: np.ndarray
    f_star: float
    negative_instantaneous: bool  # observed y beat f_star (noise or stale reference)


def regret_trace(history, f_star: float, direction: str = "maximize") -> RegretTrace:
    """Regret against a supplied optimum, using observed y as the f proxy."""
    if not math.isfinite(f_star):
        raise InvalidInputError("f_star must be finite")
    ys = np.array([o.y if isinstance(o, Observation) else float(o) for o in history])
    sign = 1.0 if direction == "maximize" else -1.0
    inst = sign * (f_star - ys)
    best = np.maximum.accumulate(sign * ys)
    simple = sign * f_star - best
    return RegretTrace(
        instantaneous=inst,
        cumulative=np.cumsum(inst),
        simple=simple,
        f_star=float(f_star),
        negative_instantaneous=bool(np.any(inst < 0)),
    )


# ---------------------------------------------------------------------------
# the confidence-bound bandit loop


def run_gp_ucb(space: DesignSpace, config: StudyConfig, evaluator, T: int,
               f_star: float | None = None) -> tuple[Study, RegretTrace | None]:
    """Bandit-style loop: argmax of mu + sqrt(beta_t) * sigma over a fixed pool.

    The candidate pool is generated once (it stands in for the design space)
    and the exploration weight follows the configured schedule, or the plain
    beta when no schedule is set. Initial observations count toward T.
    """
    if T < 1:
        raise InvalidInputError("budget T must be >= 1")
    study = Study(space, config)
    spec = config.acquisition
    if spec.kind not in ("ucb", "lcb"):
        raise InvalidInputError("run_gp_ucb requires a confidence-bound acquisition")

    pool_rng = study._rng(_POOL_STREAM)
    points, U = candidate_pool(space, config.strategy, pool_rng)

    n_init = min(config.n_init, T)
    for point in study.initial_points()[:n_init]:
        study.observe(point, float(evaluator(point)), source="initialization")

    while len(study.history) < T:
        t = len(study.history) + 1
        model = study.current_model(include_pending=False)
        post = gp_posterior(model, U)
        beta_t = spec.beta_schedule.beta(t) if spec.beta_schedule is not None else spec.beta
        scores = post.mean + math.sqrt(beta_t) * post.std
        i = int(np.argmax(scores))
        study.last_acq_max = float(scores[i])
        study.fits_since_refit += 1
        study.observe(points[i], float(evaluator(points[i])), source="algorithm")
    study.stop()
    trace = None
    if f_star is not None:
        trace = regret_trace(study.history, f_star, config.direction)
    return study, trace


# ---------------------------------------------------------------------------
# persistence


def study_to_dict(study: Study) -> dict:
    return {
        "version": STUDY_SCHEMA_VERSION,
        "space": study.space.to_config(),
        "config": study.config.to_config(),
        "seed": study.config.seed,
        "history": [o.to_config() for o in study.history],
        "pending": [dict(p) for p in study.pending],
        "state": study.state,
        "init_served": study.init_served,
        "last_acq_max": study.last_acq_max,
        "fitted_hp": _hp_to_dict(study.fitted_hp),
        "fits_since_refit": study.fits_since_refit,
    }


def study_from_dict(doc: dict) -> Study:
    if doc.get("version") != STUDY_SCHEMA_VERSION:
        raise InvalidInputError(f"unsupported study document version {doc.get('version')!r}")
    space = DesignSpace.from_config(doc["space"])
    config = StudyConfig.from_config(doc["config"])
    study = Study(space, config)
    study.history = [Observation.from_config(o) for o in doc.get("history", [])]
    study.pending = [dict(p) for p in doc.get("pending", [])]
    study.stopped = doc.get("state") == "stopped"
    study.init_served = doc.get("init_served", 0)
    study.last_acq_max = doc.get("last_acq_max")
    study.fitted_hp = _hp_from_dict(doc.get("fitted_hp"))
    study.fits_since_refit = doc.get("fits_since_refit", 0)
    return study


def _hp_to_dict(hp: GPHyperparams | None) -> dict | None:
    if hp is None:
        return None
    return {"kernel": hp.kernel.to_config(), "mean": hp.mean.to_config(),
            "noise_variance": hp.noise_variance}


def _hp_from_dict(cfg: dict | None) -> GPHyperparams | None:
    if cfg is None:
        return None
    return GPHyperparams(kernel_from_config(cfg["kernel"]),
                         mean_from_config(cfg["mean"]), cfg["noise_variance"])


def canonical_history_json(study: Study) -> str:
    """Deterministic serialization of the observation sequence.

    Wall-clock capture times are audit metadata and excluded; everything
    the optimizer decided on (order, points, values, sources) is included
    at full float precision.
    """
    import json

    entries = [{"iteration": o.iteration, "x": o.x, "y": o.y, "source": o.source}
               for o in study.history]
    return json.dumps(entries, sort_keys=True)
