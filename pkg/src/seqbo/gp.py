"""Exact Gaussian-process regression with Cholesky-based conditioning.

Targets are standardized inside `gp_fit` by default (empirical mean and
std, inverted on prediction); the noise variance is therefore interpreted
on the model's working scale. Hyperparameters are fitted by multi-start
maximization of the log marginal likelihood in log-parameter space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from .errors import InvalidInputError, NumericalError
from .kernels import Kernel, kernel_from_config

_LOG_2PI = math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# mean functions


class MeanFunction:
    def __call__(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


class ZeroMean(MeanFunction):
    def __call__(self, X):
        return np.zeros(X.shape[0])

    def to_config(self):
        return {"kind": "zero"}


class ConstantMean(MeanFunction):
    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, X):
        return np.full(X.shape[0], self.value)

    def to_config(self):
        return {"kind": "constant", "value": self.value}


class LinearMean(MeanFunction):
    def __init__(self, coefficients):
        self.coefficients = np.asarray(coefficients, dtype=float).ravel()

    def __call__(self, X):
        if X.shape[1] != self.coefficients.shape[0]:
            raise InvalidInputError(
                f"linear mean expects dimension {self.coefficients.shape[0]}, got {X.shape[1]}"
            )
        return X @ self.coefficients

    def to_config(self):
        return {"kind": "linear", "coefficients": self.coefficients.tolist()}


class BasisMean(MeanFunction):
    """sum_j coefficients[j] * functions[j](X) with user-supplied callables."""

    def __init__(self, functions, coefficients):
        if len(functions) != len(coefficients):
            raise InvalidInputError("one coefficient per basis function required")
        self.functions = list(functions)
        self.coefficients = np.asarray(coefficients, dtype=float).ravel()

    def __call__(self, X):
        out = np.zeros(X.shape[0])
        for f, c in zip(self.functions, self.coefficients):
            out += c * np.asarray(f(X), dtype=float).ravel()
        return out

    def to_config(self):
        raise InvalidInputError("basis means hold arbitrary callables and cannot be serialized")


def mean_from_config(cfg: dict) -> MeanFunction:
    kind = cfg.get("kind")
    if kind == "zero":
        return ZeroMean()
    if kind == "constant":
        return ConstantMean(cfg["value"])
    if kind == "linear":
        return LinearMean(cfg["coefficients"])
    raise InvalidInputError(f"unknown mean kind {kind!r}")


# ---------------------------------------------------------------------------
# model state


@dataclass(frozen=True)
class GPHyperparams:
    kernel: Kernel
    mean: MeanFunction = field(default_factory=ZeroMean)
    noise_variance: float = 0.0

    def __post_init__(self):
        if self.noise_variance < 0 or not math.isfinite(self.noise_variance):
            raise InvalidInputError(f"noise variance must be >= 0, got {self.noise_variance}")


@dataclass(frozen=True)
class PosteriorGaussian:
    """Predictive mean and (co)variance on the raw target scale."""

    mean: np.ndarray
    var: np.ndarray                 # clamped at >= 0
    cov: np.ndarray | None = None   # present when a full covariance was requested

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.var)


@dataclass(frozen=True)
class GPModel:
    X: np.ndarray
    y_raw: np.ndarray
    kernel: Kernel
    mean: MeanFunction
    noise_variance: float
    y_center: float
    y_scale: float
    L: np.ndarray          # lower Cholesky factor of K + noise*I + jitter*I
    alpha: np.ndarray      # (K + noise*I + jitter*I)^-1 (y_std - m)
    resid: np.ndarray      # standardized residuals y_std - m
    jitter: float
    jitter_escalated: bool
    standardized: bool

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def input_dim(self) -> int:
        return self.X.shape[1]

    @property
    def hyperparams(self) -> GPHyperparams:
        return GPHyperparams(self.kernel, self.mean, self.noise_variance)


def _chol_with_jitter(A: np.ndarray, start_at_zero: bool = False
                      ) -> tuple[np.ndarray, float, bool]:
    """Factorize A + jitter*I, escalating jitter 1e-8..1e-2 of mean diagonal.

    With `start_at_zero` a plain factorization is attempted before any
    jitter (used where the contract only allows jitter as a rescue). The
    returned flag marks factorizations that leaned on the jitter: either
    escalation was needed, or the smallest pivot is at the jitter scale.
    """
    n = A.shape[0]
    scale = float(np.trace(A)) / n if n else 1.0
    if not (scale > 0) or not math.isfinite(scale):
        scale = 1.0
    base = 1e-8 * scale
    ladder = ([0.0] if start_at_zero else []) + [base * 10.0**k for k in range(7)]
    for jitter in ladder:
        try:
            L = cholesky(A + jitter * np.eye(n), lower=True)
        except np.linalg.LinAlgError:
            continue
        rescued = jitter > base or (jitter > 0 and float(np.min(np.diag(L))) ** 2 <= 10 * jitter)
        return L, jitter, rescued
    raise NumericalError(
        "Cholesky factorization failed after maximum jitter; "
        "kernel/hyperparameters are ill-conditioned"
    )


def _as_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise InvalidInputError(f"got {X.shape[0]} inputs but {y.shape[0]} targets")
    if y.size and not np.all(np.isfinite(y)):
        raise InvalidInputError("targets must be finite")
    return X, y


def gp_fit(X, y, hp: GPHyperparams, standardize: bool = True,
           target_stats: tuple[float, float] | None = None) -> GPModel:
    """Condition a GP on observations.

    `target_stats` pins (center, scale) explicitly, which keeps predictions
    comparable across refits on augmented data (used for fantasizing).
    An empty dataset yields the prior.
    """
    X, y = _as_xy(X, y)
    n = X.shape[0]
    if target_stats is not None:
        c, s = float(target_stats[0]), float(target_stats[1])
    elif standardize and n > 0:
        c = float(np.mean(y))
        s = float(np.std(y))
        if s < 1e-12:
            s = 1.0
    else:
        c, s = 0.0, 1.0

    if n == 0:
        return GPModel(X=X, y_raw=y, kernel=hp.kernel, mean=hp.mean,
                       noise_variance=hp.noise_variance, y_center=c, y_scale=s,
                       L=np.zeros((0, 0)), alpha=np.zeros(0), resid=np.zeros(0),
                       jitter=0.0, jitter_escalated=False, standardized=standardize)

    y_std = (y - c) / s
    resid = y_std - hp.mean(X)
    A = hp.kernel(X) + hp.noise_variance * np.eye(n)
    L, jitter, escalated = _chol_with_jitter(A)
    alpha = cho_solve((L, True), resid)
    return GPModel(X=X, y_raw=y, kernel=hp.kernel, mean=hp.mean,
                   noise_variance=hp.noise_variance, y_center=c, y_scale=s,
                   L=L, alpha=alpha, resid=resid, jitter=jitter,
                   jitter_escalated=escalated, standardized=standardize)


def refit(model: GPModel, X, y) -> GPModel:
    """Refit on new data with the model's hyperparameters and target scaling."""
    return gp_fit(X, y, model.hyperparams, standardize=model.standardized,
                  target_stats=(model.y_center, model.y_scale))


def gp_posterior(model: GPModel, Xq, full_cov: bool = False) -> PosteriorGaussian:
    """Predictive distribution at query points, de-standardized to raw scale."""
    Xq = np.asarray(Xq, dtype=float)
    if Xq.ndim == 1:
        Xq = Xq.reshape(-1, 1) if model.input_dim == 1 else Xq.reshape(1, -1)
    if Xq.shape[1] != model.input_dim:
        raise InvalidInputError(
            f"query dimension {Xq.shape[1]} does not match training dimension {model.input_dim}"
        )
    m_q = model.mean(Xq)
    if model.n == 0:
        mu_std = m_q
        cov_std = model.kernel(Xq) if full_cov else None
        if not full_cov:
            var_std = model.kernel.diag(Xq)
    else:
        K_qx = model.kernel(Xq, model.X)
        mu_std = m_q + K_qx @ model.alpha
        V = solve_triangular(model.L, K_qx.T, lower=True)
        if full_cov:
            cov_std = model.kernel(Xq) - V.T @ V
        else:
            var_std = model.kernel.diag(Xq) - np.sum(V * V, axis=0)
            cov_std = None

    s2 = model.y_scale**2
    mu = model.y_center + model.y_scale * mu_std
    if cov_std is not None:
        cov = s2 * 0.5 * (cov_std + cov_std.T)
        var = np.maximum(np.diag(cov).copy(), 0.0)
        return PosteriorGaussian(mean=mu, var=var, cov=cov)
    return PosteriorGaussian(mean=mu, var=np.maximum(s2 * var_std, 0.0), cov=None)


def gp_condition_general(mu_z, mu_f, K_zz, K_zf, K_fz, K_ff, z_observed) -> PosteriorGaussian:
    """Condition jointly Gaussian blocks (z, f) on an observed z vector."""
    mu_z = np.asarray(mu_z, dtype=float).ravel()
    mu_f = np.asarray(mu_f, dtype=float).ravel()
    K_zz = np.atleast_2d(np.asarray(K_zz, dtype=float))
    K_zf = np.atleast_2d(np.asarray(K_zf, dtype=float))
    K_fz = np.atleast_2d(np.asarray(K_fz, dtype=float))
    K_ff = np.atleast_2d(np.asarray(K_ff, dtype=float))
    z = np.asarray(z_observed, dtype=float).ravel()
    L, _, _ = _chol_with_jitter(K_zz, start_at_zero=True)
    mu = mu_f + K_fz @ cho_solve((L, True), z - mu_z)
    cov = K_ff - K_fz @ cho_solve((L, True), K_zf)
    cov = 0.5 * (cov + cov.T)
    return PosteriorGaussian(mean=mu, var=np.maximum(np.diag(cov).copy(), 0.0), cov=cov)


def log_marginal_likelihood(model: GPModel) -> float:
    """Log evidence of the (standardized) targets under the fitted model."""
    if model.n == 0:
        return 0.0
    return float(
        -0.5 * model.resid @ model.alpha
        - np.sum(np.log(np.diag(model.L)))
        - 0.5 * model.n * _LOG_2PI
    )


# ---------------------------------------------------------------------------
# hyperparameter fitting


@dataclass(frozen=True)
class FitConfig:
    restarts: int = 8
    seed: int = 0
    max_iter: int = 200
    fit_noise: bool = True
    initial_noise: float = 1e-2      # also the fixed value when fit_noise=False
    noise_bounds: tuple[float, float] = (1e-6, 1.0)
    standardize: bool = True

    def to_config(self) -> dict:
        return {"restarts": self.restarts, "seed": self.seed, "max_iter": self.max_iter,
                "fit_noise": self.fit_noise, "initial_noise": self.initial_noise,
                "noise_bounds": list(self.noise_bounds), "standardize": self.standardize}

    @classmethod
    def from_config(cls, cfg: dict) -> "FitConfig":
        cfg = dict(cfg)
        if "noise_bounds" in cfg:
            cfg["noise_bounds"] = tuple(cfg["noise_bounds"])
        return cls(**cfg)


_FAILED = 1e25


def fit_hyperparams(X, y, kernel: Kernel, mean: MeanFunction | None = None,
                    config: FitConfig | None = None) -> GPHyperparams:
    """Maximize the marginal likelihood over kernel (and noise) parameters.

    Multi-start local search in log-parameter space; the first start is the
    template's own parameters, so the result never scores below the template.
    """
    X, y = _as_xy(X, y)
    if X.shape[0] < 2:
        raise InvalidInputError("hyperparameter fitting needs at least 2 observations")
    mean = mean if mean is not None else ZeroMean()
    cfg = config or FitConfig()

    k_values = kernel.param_values()
    n_kernel = len(k_values)
    values = list(k_values)
    bounds = list(kernel.param_bounds())
    if cfg.fit_noise:
        values.append(cfg.initial_noise)
        bounds.append(cfg.noise_bounds)
    lo = np.log([b[0] for b in bounds])
    hi = np.log([b[1] for b in bounds])

    def neg_mll(theta):
        p = np.exp(np.clip(theta, lo, hi))
        kern = kernel.with_param_values(p[:n_kernel])
        noise = float(p[-1]) if cfg.fit_noise else cfg.initial_noise
        try:
            m = gp_fit(X, y, GPHyperparams(kern, mean, noise), standardize=cfg.standardize)
        except NumericalError:
            return _FAILED
        val = -log_marginal_likelihood(m)
        return val if math.isfinite(val) else _FAILED

    rng = np.random.default_rng(cfg.seed)
    starts = [np.clip(np.log(values), lo, hi)]
    for _ in range(max(cfg.restarts - 1, 0)):
        starts.append(lo + rng.random(len(values)) * (hi - lo))

    best_val, best_theta = np.inf, None
    for theta0 in starts:
        f0 = neg_mll(theta0)
        if f0 < best_val:
            best_val, best_theta = f0, theta0
        res = minimize(neg_mll, theta0, method="L-BFGS-B",
                       bounds=list(zip(lo, hi)), options={"maxiter": cfg.max_iter})
        if np.isfinite(res.fun) and res.fun < best_val:
            best_val, best_theta = float(res.fun), res.x
    if best_theta is None or best_val >= _FAILED:
        raise NumericalError("every hyperparameter start failed to factorize")

    p = np.exp(np.clip(best_theta, lo, hi))
    fitted_kernel = kernel.with_param_values(p[:n_kernel])
    noise = float(p[-1]) if cfg.fit_noise else cfg.initial_noise
    return GPHyperparams(fitted_kernel, mean, noise)


# ---------------------------------------------------------------------------
# posterior sampling and the linear-regression equivalence


def sample_posterior(model: GPModel, Xq, rng: np.random.Generator,
                     count: int = 1) -> np.ndarray:
    """Draw `count` joint samples of f at the query points; shape (count, m)."""
    post = gp_posterior(model, Xq, full_cov=True)
    mu, cov = post.mean, post.cov
    m = mu.shape[0]
    if float(np.trace(cov)) <= 0.0:
        return np.tile(mu, (count, 1))
    L, _, _ = _chol_with_jitter(cov)
    xi = rng.standard_normal((count, m))
    return mu[None, :] + xi @ L.T


def blr_predict(Phi, Sigma_w, noise_variance: float, y, phi_query) -> PosteriorGaussian:
    """Bayesian linear regression predictive for weights ~ N(0, Sigma_w).

    Evaluates the conditional Gaussian of the query outputs given y through
    the observation Gram matrix Phi Sigma_w Phi^T + noise*I.
    """
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, d = Phi.shape
    Sw = np.asarray(Sigma_w, dtype=float)
    if Sw.ndim == 0:
        Sw = float(Sw) * np.eye(d)
    elif Sw.ndim == 1:
        Sw = np.diag(Sw)
    Q = np.asarray(phi_query, dtype=float)
    if Q.ndim == 1:
        Q = Q.reshape(1, -1)
    if Sw.shape != (d, d) or Q.shape[1] != d or y.shape[0] != n:
        raise InvalidInputError("inconsistent feature-map shapes")

    A = Phi @ Sw @ Phi.T + noise_variance * np.eye(n)
    try:
        L = cholesky(A, lower=True)
    except np.linalg.LinAlgError:
        raise NumericalError("observation Gram matrix Phi Sigma_w Phi^T + noise*I is singular")
    C = Q @ Sw @ Phi.T
    mu = C @ cho_solve((L, True), y)
    cov = Q @ Sw @ Q.T - C @ cho_solve((L, True), C.T)
    cov = 0.5 * (cov + cov.T)
    return PosteriorGaussian(mean=mu, var=np.maximum(np.diag(cov).copy(), 0.0), cov=cov)
