"""Independent Gaussian-process surrogates, one per objective.

Inputs are assumed to live in the unit cube; targets are min-max scaled to
the unit interval for fitting and mapped back to natural units on output.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from .core import Dataset

logger = logging.getLogger(__name__)

NOISE_FLOOR = 1e-6
JITTER_LADDER = (0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)
N_RESTARTS = 5
MAX_ITER = 200
GTOL = 1e-6

# log-space box for (lengthscales..., signal variance, noise variance)
_LOG_LS_BOUNDS = (np.log(1e-2), np.log(20.0))
_LOG_SIGNAL_BOUNDS = (np.log(1e-3), np.log(20.0))
_LOG_NOISE_BOUNDS = (np.log(NOISE_FLOOR), np.log(1.0))

SQRT5 = np.sqrt(5.0)


class SurrogateError(RuntimeError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    lengthscales: np.ndarray
    signal_variance: float
    family: str = "matern52"

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if self.family != "matern52":
            raise ValueError(f"unsupported kernel family {self.family!r}")
        if np.any(ls <= 0) or self.signal_variance <= 0:
            raise ValueError("kernel parameters must be strictly positive")
        object.__setattr__(self, "lengthscales", ls)

    def __call__(self, A, B) -> np.ndarray:
        return self.signal_variance * _matern52(_scaled_dist(A, B, self.lengthscales))


def _scaled_dist(A, B, ls):
    A = np.asarray(A, dtype=float) / ls
    B = np.asarray(B, dtype=float) / ls
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.sqrt(np.maximum(sq, 0.0))


def _matern52(r):
    return (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * np.exp(-SQRT5 * r)


def stable_cholesky(K, scale: float | None = None):
    """Cholesky factor of ``K`` with the jitter ladder; returns ``(L, jitter)``.

    Jitter is relative to ``scale`` (defaults to the mean diagonal). An
    all-zero matrix factors to an all-zero ``L``.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if scale is None:
        scale = float(np.mean(np.diag(K))) if n else 0.0
    if scale <= 0.0:
        if np.allclose(K, 0.0, atol=1e-300):
            return np.zeros_like(K), 0.0
        scale = 1.0
    for j in JITTER_LADDER:
        try:
            return np.linalg.cholesky(K + j * scale * np.eye(n)), j * scale
        except np.linalg.LinAlgError:
            continue
    cond = np.linalg.cond(K)
    raise SurrogateError(f"matrix not positive-definite after jitter escalation (condition number {cond:.3e})")


@dataclass
class GaussianProcessModel:
    """Fitted GP for one objective. Treat as immutable after construction."""

    kernel: KernelSpec
    noise_variance: float
    train_inputs: np.ndarray
    train_targets: np.ndarray  # unit-interval scaled
    output_offset: float = 0.0
    output_scale: float = 1.0
    fit_info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.train_inputs = np.atleast_2d(np.asarray(self.train_inputs, dtype=float))
        self.train_targets = np.asarray(self.train_targets, dtype=float).ravel()
        if self.train_inputs.shape[0] != self.train_targets.shape[0]:
            raise ValueError("train inputs and targets differ in length")
        if self.noise_variance < NOISE_FLOOR * (1 - 1e-9):
            raise ValueError("noise variance below the floor")
        self.prior_mean = float(self.train_targets.mean())
        K = self.kernel(self.train_inputs, self.train_inputs)
        K[np.diag_indices_from(K)] += self.noise_variance
        self._chol, _ = stable_cholesky(K, scale=self.kernel.signal_variance)
        self._alpha = cho_solve((self._chol, True), self.train_targets - self.prior_mean)

    @property
    def d(self) -> int:
        return self.train_inputs.shape[1]

    def to_natural(self, t):
        return np.asarray(t) * self.output_scale + self.output_offset

    def predict_scaled(self, X, full_cov=True):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise ValueError(f"pool point dimension {X.shape[1]} does not match model dimension {self.d}")
        Ks = self.kernel(self.train_inputs, X)
        mean = self.prior_mean + Ks.T @ self._alpha
        v = solve_triangular(self._chol, Ks, lower=True)
        if full_cov:
            cov = self.kernel(X, X) - v.T @ v
            return mean, cov
        var = self.kernel.signal_variance - (v * v).sum(0)
        return mean, np.maximum(var, 0.0)

    def predict(self, X):
        """Predictive mean and marginal variance of the latent function in natural units."""
        mean, var = self.predict_scaled(X, full_cov=False)
        return self.to_natural(mean), var * self.output_scale ** 2

    def hyperparameters(self) -> dict:
        return {
            "lengthscales": self.kernel.lengthscales.tolist(),
            "signal_variance": float(self.kernel.signal_variance),
            "noise_variance": float(self.noise_variance),
            "output_offset": float(self.output_offset),
            "output_scale": float(self.output_scale),
        }


def _neg_lml_and_grad(theta, X, t, sq_diffs):
    d = X.shape[1]
    ls = np.exp(theta[:d])
    s = np.exp(theta[d])
    noise = np.exp(theta[d + 1])
    n = X.shape[0]
    scaled = sq_diffs / (ls * ls)  # (n, n, d)
    r = np.sqrt(scaled.sum(-1))
    e = np.exp(-SQRT5 * r)
    Kf = s * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * e
    K = Kf + noise * np.eye(n)
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros_like(theta)
    alpha = cho_solve((L, True), t)
    nlml = 0.5 * t @ alpha + np.log(np.diag(L)).sum() + 0.5 * n * np.log(2 * np.pi)
    W = cho_solve((L, True), np.eye(n)) - np.outer(alpha, alpha)
    grad = np.empty_like(theta)
    common = s * 5.0 / 3.0 * (1.0 + SQRT5 * r) * e
    for i in range(d):
        grad[i] = 0.5 * np.sum(W * (common * scaled[:, :, i]))
    grad[d] = 0.5 * np.sum(W * Kf)
    grad[d + 1] = 0.5 * noise * np.trace(W)
    return nlml, grad


def fit_gp(dataset: Dataset, objective_index: int, seed: int = 0,
           n_restarts: int = N_RESTARTS) -> GaussianProcessModel:
    """Fit a Matern-5/2 ARD GP to one objective by maximizing the marginal likelihood.

    Hyperparameters are optimized in log space with L-BFGS-B from
    ``n_restarts`` starting points (one default, the rest uniform in the box).
    """
    if len(dataset) < 2:
        raise ValueError("at least two observations are required to fit a GP")
    X = dataset.X
    y = dataset.Y[:, objective_index]
    return fit_gp_arrays(X, y, seed=seed, n_restarts=n_restarts)


def fit_gp_arrays(X, y, seed: int = 0, n_restarts: int = N_RESTARTS) -> GaussianProcessModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    lo, hi = float(y.min()), float(y.max())
    span = hi - lo
    if span <= 0.0:
        # constant targets: flat posterior at the constant, variance at the floor
        kernel = KernelSpec(np.full(d, 1.0), NOISE_FLOOR)
        return GaussianProcessModel(kernel, NOISE_FLOOR, X, np.zeros(n), lo, 1.0,
                                    fit_info={"constant_targets": True, "trace": []})
    t = (y - lo) / span
    tc = t - t.mean()
    sq_diffs = (X[:, None, :] - X[None, :, :]) ** 2
    bounds = [_LOG_LS_BOUNDS] * d + [_LOG_SIGNAL_BOUNDS, _LOG_NOISE_BOUNDS]
    rng = np.random.default_rng(seed)
    starts = [np.r_[np.full(d, np.log(0.3)), np.log(0.1), np.log(1e-3)]]
    lo_b = np.array([b[0] for b in bounds])
    hi_b = np.array([b[1] for b in bounds])
    for _ in range(max(0, n_restarts - 1)):
        starts.append(rng.uniform(lo_b, hi_b))

    best = None
    for theta0 in starts:
        trace = []
        cache = {}

        def fun(theta):
            val = _neg_lml_and_grad(theta, X, tc, sq_diffs)
            cache[theta.tobytes()] = val[0]
            return val

        def callback(xk):
            val = cache.get(xk.tobytes())
            if val is None:
                val = _neg_lml_and_grad(xk, X, tc, sq_diffs)[0]
            trace.append(-float(val))

        res = minimize(fun, theta0, jac=True, method="L-BFGS-B", bounds=bounds,
                       callback=callback, options={"maxiter": MAX_ITER, "gtol": GTOL})
        if best is None or res.fun < best[0].fun:
            best = (res, trace)
    res, trace = best
    theta = res.x
    kernel = KernelSpec(np.exp(theta[:d]), float(np.exp(theta[d])))
    noise = max(float(np.exp(theta[d + 1])), NOISE_FLOOR)
    info = {"lml": -float(res.fun), "trace": trace, "converged": bool(res.success), "nit": int(res.nit)}
    return GaussianProcessModel(kernel, noise, X, t, lo, span, fit_info=info)


@dataclass(frozen=True)
class Posterior:
    """Joint predictive distribution of one objective over a pool, natural units."""

    mean: np.ndarray
    cov: np.ndarray
    chol: np.ndarray


def posterior(models, pool) -> list:
    """Per-objective joint posterior (mean, covariance) over ``pool``."""
    pool = np.atleast_2d(np.asarray(pool, dtype=float))
    if pool.shape[0] == 0:
        raise ValueError("pool must be non-empty")
    out = []
    for model in models:
        mean, cov = model.predict_scaled(pool, full_cov=True)
        cov = 0.5 * (cov + cov.T)
        L, jitter = stable_cholesky(cov, scale=model.kernel.signal_variance)
        if jitter:
            cov = cov + jitter * np.eye(cov.shape[0])
        c2 = model.output_scale ** 2
        out.append(Posterior(model.to_natural(mean), cov * c2, L * model.output_scale))
    return out


@dataclass(frozen=True)
class PosteriorSamples:
    values: np.ndarray  # (L, N, M), natural units
    seed: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3:
            raise ValueError("posterior samples must have shape (L, N, M)")
        if not np.all(np.isfinite(v)):
            raise ValueError("posterior samples must be finite")
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    def subset(self, idx) -> "PosteriorSamples":
        return PosteriorSamples(self.values[:, idx, :], self.seed)


def sample_posterior(posteriors, L: int, seed: int) -> PosteriorSamples:
    """``L`` joint draws per objective, independent across objectives."""
    if L < 1:
        raise ValueError("L must be at least 1")
    rng = np.random.default_rng(seed)
    cols = []
    for post in posteriors:
        chol = post.chol
        if chol is None:
            chol, _ = stable_cholesky(post.cov)
        z = rng.standard_normal((L, post.mean.shape[0]))
        cols.append(post.mean[None, :] + z @ chol.T)
    return PosteriorSamples(np.stack(cols, axis=-1), seed)
