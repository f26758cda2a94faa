"""Pool-based batch acquisition: BOtied (v1, v2), NEHVI, NParEGO and random.

Every scorer consumes Monte-Carlo posterior samples of shape ``(L, N, M)``
over the candidate pool and returns the scores together with ``B``
selected pool indices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .copula import VineCopula, fit_vine, pit_transform
from .copula.bivariate import MIN_FIT_SIZE
from .copula.vine import DEFAULT_MC_SAMPLES
from .core import pareto_front
from .indicators import hv_improvement, hv_improvement_2d
from .surrogate import PosteriorSamples

KINDS = ("botied_v1", "botied_v2", "nehvi", "nparego", "random")


@dataclass(frozen=True)
class AcquisitionSpec:
    kind: str = "botied_v1"
    copula_family_policy: str = "gaussian"
    mc_cdf_samples: int = DEFAULT_MC_SAMPLES
    chebyshev_rho: float = 0.05
    seed: int = 0
    cdf_method: str = "auto"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown acquisition kind {self.kind!r}")
        if self.mc_cdf_samples < 1000:
            raise ValueError("mc_cdf_samples must be at least 1000")
        if self.chebyshev_rho < 0:
            raise ValueError("chebyshev_rho must be non-negative")


@dataclass(frozen=True)
class AcquisitionScores:
    scores: np.ndarray
    selected: tuple

    def __post_init__(self):
        sel = tuple(int(i) for i in self.selected)
        if len(set(sel)) != len(sel):
            raise ValueError("selected indices must be distinct")
        if any(i < 0 or i >= len(self.scores) for i in sel):
            raise ValueError("selected index outside the pool")
        object.__setattr__(self, "selected", sel)


def top_b(scores, B: int) -> tuple:
    """Indices of the ``B`` largest scores; ties go to the lower index."""
    scores = np.asarray(scores, dtype=float)
    if B > scores.shape[0]:
        raise ValueError(f"cannot select {B} of {scores.shape[0]} candidates")
    return tuple(int(i) for i in np.argsort(-scores, kind="stable")[:B])


def _values(samples) -> np.ndarray:
    v = samples.values if isinstance(samples, PosteriorSamples) else np.asarray(samples, dtype=float)
    if v.ndim != 3:
        raise ValueError("posterior samples must have shape (L, N, M)")
    return v


def _scoring_vine(u: np.ndarray, spec: AcquisitionSpec) -> VineCopula:
    # too few rows to estimate dependence: score under independence
    if u.shape[0] < MIN_FIT_SIZE:
        return VineCopula.independence(u.shape[1])
    return fit_vine(u, spec.copula_family_policy)


def _cdf(vine: VineCopula, u, spec: AcquisitionSpec) -> np.ndarray:
    return vine.cdf(u, K=spec.mc_cdf_samples, seed=spec.seed, method=spec.cdf_method)


def botied_v1(samples, spec: AcquisitionSpec, B: int = 1) -> AcquisitionScores:
    """Expected CDF score over the samples, with one vine on all ``N * L`` sample rows."""
    v = _values(samples)
    L, N, M = v.shape
    pooled = v.reshape(L * N, M)
    u = pit_transform(pooled).u
    vine = _scoring_vine(u, spec)
    scores = _cdf(vine, u, spec).reshape(L, N).mean(0)
    return AcquisitionScores(scores, top_b(scores, B))


def botied_v2(samples, spec: AcquisitionSpec, B: int = 1) -> AcquisitionScores:
    """CDF score of each candidate's mean pseudo-observation."""
    v = _values(samples)
    L, N, M = v.shape
    u = pit_transform(v.reshape(L * N, M)).u.reshape(L, N, M).mean(0)
    vine = _scoring_vine(u, spec)
    scores = _cdf(vine, u, spec)
    return AcquisitionScores(scores, top_b(scores, B))


def nehvi(samples, observed_samples, ref, B: int = 1) -> AcquisitionScores:
    """Noisy EHVI with sequential-greedy batch selection.

    ``observed_samples`` holds the same posterior draws evaluated at the
    already-observed designs, shape ``(L, n_obs, M)``.
    """
    v = _values(samples)
    obs = _values(observed_samples) if observed_samples is not None else np.empty((v.shape[0], 0, v.shape[2]))
    L, N, M = v.shape
    if B > N:
        raise ValueError(f"cannot select {B} of {N} candidates")
    ref = np.asarray(ref, dtype=float)
    fronts = []
    for j in range(L):
        fronts.append(pareto_front(obs[j]).members if obs.shape[1] else np.empty((0, M)))
    selected: list = []
    first_scores = None
    for _ in range(B):
        if M == 2:
            scores = np.mean([hv_improvement_2d(fronts[j], v[j], ref) for j in range(L)], axis=0)
            scores[selected] = 0.0
        else:
            scores = np.zeros(N)
            for i in range(N):
                if i in selected:
                    continue
                scores[i] = np.mean([hv_improvement(fronts[j], v[j, i], ref) for j in range(L)])
        if first_scores is None:
            first_scores = scores.copy()
        masked = np.where(np.isin(np.arange(N), selected), -np.inf, scores)
        pick = int(np.argsort(-masked, kind="stable")[0])
        selected.append(pick)
        for j in range(L):
            stacked = np.vstack([fronts[j], v[j, pick][None, :]])
            fronts[j] = pareto_front(stacked).members
    return AcquisitionScores(first_scores, tuple(selected))


def chebyshev(Y, w, rho: float) -> np.ndarray:
    """Augmented Chebyshev scalarization ``min_m w_m y_m + rho * sum_m w_m y_m``.

    The minimum runs over objectives with positive weight, so a weight vector
    on a face of the simplex ignores the zero-weight objectives.
    """
    Y = np.asarray(Y, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be non-negative with at least one positive entry")
    wy = Y * w
    return wy[..., w > 0].min(-1) + rho * wy.sum(-1)


def nparego(samples, observed_samples, spec: AcquisitionSpec, B: int = 1,
            observed_Y=None, weights=None) -> AcquisitionScores:
    """Noisy ParEGO: random Chebyshev weights and Monte-Carlo expected improvement.

    Objectives are normalized by the min/max of ``observed_Y`` (defaults to
    the posterior mean at the observed designs).
    """
    v = _values(samples)
    L, N, M = v.shape
    if observed_samples is None:
        raise ValueError("nparego needs samples at the observed designs")
    obs = _values(observed_samples)
    if obs.shape[1] == 0:
        raise ValueError("nparego needs a non-empty observed set")
    if B > N:
        raise ValueError(f"cannot select {B} of {N} candidates")
    basis = np.asarray(observed_Y, dtype=float) if observed_Y is not None else obs.mean(0)
    lo, hi = basis.min(0), basis.max(0)
    span = np.where(hi > lo, hi - lo, 1.0)
    vn = (v - lo) / span
    on = (obs - lo) / span
    rng = np.random.default_rng(spec.seed)
    if weights is None:
        weights = rng.dirichlet(np.ones(M), size=B)
    weights = np.atleast_2d(weights)
    selected: list = []
    first_scores = None
    extra = np.empty((L, 0, M))
    for b in range(B):
        w = weights[b]
        s_pool = chebyshev(vn, w, spec.chebyshev_rho)  # (L, N)
        s_obs = chebyshev(np.concatenate([on, extra], axis=1), w, spec.chebyshev_rho)
        incumbent = s_obs.max(1)  # (L,)
        scores = np.maximum(s_pool - incumbent[:, None], 0.0).mean(0)
        if first_scores is None:
            first_scores = scores.copy()
        masked = np.where(np.isin(np.arange(N), selected), -np.inf, scores)
        pick = int(np.argsort(-masked, kind="stable")[0])
        selected.append(pick)
        extra = np.concatenate([extra, vn[:, pick:pick + 1, :]], axis=1)
    return AcquisitionScores(first_scores, tuple(selected))


def random_select(N: int, B: int, seed: int = 0) -> AcquisitionScores:
    if B > N:
        raise ValueError(f"cannot select {B} of {N} candidates")
    rng = np.random.default_rng(seed)
    sel = rng.choice(N, size=B, replace=False)
    return AcquisitionScores(np.zeros(N), tuple(int(i) for i in sel))


def acquire(spec: AcquisitionSpec, pool_samples, observed_samples=None, ref=None,
            B: int = 1, observed_Y=None) -> AcquisitionScores:
    """Dispatch on ``spec.kind``."""
    if spec.kind == "botied_v1":
        return botied_v1(pool_samples, spec, B)
    if spec.kind == "botied_v2":
        return botied_v2(pool_samples, spec, B)
    if spec.kind == "nehvi":
        if ref is None:
            raise ValueError("nehvi needs a reference point")
        return nehvi(pool_samples, observed_samples, ref, B)
    if spec.kind == "nparego":
        return nparego(pool_samples, observed_samples, spec, B, observed_Y=observed_Y)
    return random_select(_values(pool_samples).shape[1], B, spec.seed)
