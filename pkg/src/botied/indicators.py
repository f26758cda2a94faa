"""Set-quality indicators: hypervolume, hypervolume improvement and the CDF indicator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .copula import EmpiricalMargins, VineCopula, fit_vine
from .copula.vine import DEFAULT_MC_SAMPLES
from .core import ParetoFront, non_dominated_mask


@dataclass(frozen=True)
class IndicatorValue:
    kind: str
    value: float


def _points(front) -> np.ndarray:
    if isinstance(front, ParetoFront):
        return np.asarray(front.members, dtype=float)
    P = np.asarray(front, dtype=float)
    if P.size == 0:
        return P.reshape(0, P.shape[-1] if P.ndim == 2 else 0)
    return np.atleast_2d(P)


def _hv2d(P: np.ndarray) -> float:
    # P: points strictly above the origin, maximization
    order = np.argsort(-P[:, 0], kind="stable")
    x = P[order, 0]
    y = np.maximum.accumulate(P[order, 1])
    prev = np.concatenate([[0.0], y[:-1]])
    return float(np.sum(x * np.maximum(y - prev, 0.0)))


def _nondominated(P: np.ndarray) -> np.ndarray:
    if P.shape[0] <= 1:
        return P
    P = np.unique(P, axis=0)
    return P[non_dominated_mask(P)]


def _wfg(P: np.ndarray) -> float:
    """Exact hypervolume of non-dominated points ``P > 0`` w.r.t. the origin."""
    n, m = P.shape
    if n == 0:
        return 0.0
    if n == 1:
        return float(np.prod(P[0]))
    if m == 2:
        return _hv2d(P)
    P = P[np.argsort(-P[:, -1], kind="stable")]
    total = 0.0
    for k in range(n):
        p = P[k]
        rest = P[k + 1:]
        if rest.shape[0] == 0:
            total += float(np.prod(p))
            continue
        limited = _nondominated(np.minimum(rest, p))
        limited = limited[np.all(limited > 0.0, axis=1)]
        total += float(np.prod(p)) - _wfg(limited)
    return total


def hypervolume(front, ref) -> float:
    """Lebesgue measure of the union of boxes ``[ref, y]`` over the front."""
    ref = np.asarray(ref, dtype=float).ravel()
    P = _points(front)
    if P.shape[0] == 0:
        return 0.0
    if P.shape[1] != ref.shape[0]:
        raise ValueError(f"dimension mismatch: points have {P.shape[1]} objectives, reference {ref.shape[0]}")
    if ref.shape[0] < 2:
        raise ValueError("hypervolume needs at least two objectives")
    shifted = P - ref
    shifted = shifted[np.all(shifted > 0.0, axis=1)]
    if shifted.shape[0] == 0:
        return 0.0
    return _wfg(_nondominated(shifted))


def hv_improvement(front, candidate, ref) -> float:
    """Hypervolume gained by adding ``candidate`` to ``front`` (never negative)."""
    ref = np.asarray(ref, dtype=float).ravel()
    c = np.asarray(candidate, dtype=float).ravel()
    if c.shape != ref.shape:
        raise ValueError(f"dimension mismatch: candidate has {c.shape[0]} objectives, reference {ref.shape[0]}")
    P = _points(front)
    cs = c - ref
    if np.any(cs <= 0.0):
        return 0.0
    if P.shape[0] == 0:
        return float(np.prod(cs))
    if P.shape[1] != ref.shape[0]:
        raise ValueError("dimension mismatch between front and reference point")
    Ps = P - ref
    Ps = Ps[np.all(Ps > 0.0, axis=1)]
    if Ps.shape[0] == 0:
        return float(np.prod(cs))
    if np.any(np.all(Ps >= cs, axis=1)):
        return 0.0
    # exclusive contribution: box of the candidate minus its overlap with the front
    limited = _nondominated(np.minimum(Ps, cs))
    limited = limited[np.all(limited > 0.0, axis=1)]
    return max(float(np.prod(cs)) - _wfg(limited), 0.0)


def hv_improvement_2d(front, candidates, ref) -> np.ndarray:
    """Vectorized ``hv_improvement`` of many candidates against one 2-D front."""
    ref = np.asarray(ref, dtype=float).ravel()
    C = np.atleast_2d(np.asarray(candidates, dtype=float)) - ref
    if C.shape[1] != 2 or ref.shape[0] != 2:
        raise ValueError("hv_improvement_2d needs two objectives")
    P = _points(front)
    P = P - ref if P.shape[0] else np.empty((0, 2))
    P = P[np.all(P > 0.0, axis=1)]
    if P.shape[0]:
        P = _nondominated(P)
        P = P[np.argsort(-P[:, 0], kind="stable")]
    # the front's attainment surface is a step function h(x): segment i spans
    # (lower[i], upper[i]] at height heights[i]
    upper = np.concatenate([[np.inf], P[:, 0]])
    lower = np.concatenate([P[:, 0], [0.0]])
    heights = np.concatenate([[0.0], P[:, 1]])
    cx = np.maximum(C[:, :1], 0.0)
    cy = np.maximum(C[:, 1:], 0.0)
    width = np.clip(np.minimum(cx, upper[None, :]) - lower[None, :], 0.0, None)
    return np.sum(width * np.maximum(cy - heights[None, :], 0.0), axis=1)


class CdfEstimator:
    """Joint-CDF model of a reference sample: empirical margins plus a fitted vine."""

    def __init__(self, reference, family_policy: str = "gaussian", template=None,
                 K: int = DEFAULT_MC_SAMPLES, seed: int = 0, method: str = "auto"):
        self.margins = EmpiricalMargins(reference)
        self.vine: VineCopula = fit_vine(self.margins.pseudo, family_policy, template=template)
        self.K = K
        self.seed = seed
        self.method = method

    @property
    def M(self) -> int:
        return self.margins.M

    def scores(self, Y) -> np.ndarray:
        """CDF value of every row of ``Y``."""
        return self.vine.cdf(self.margins(Y), K=self.K, seed=self.seed, method=self.method)


def cdf_indicator(A, estimator: CdfEstimator) -> float:
    """Maximum joint-CDF value over the members of ``A``."""
    if estimator is None:
        raise ValueError("cdf_indicator needs a fitted estimator")
    P = _points(A)
    if P.shape[0] == 0:
        raise ValueError("cdf_indicator of an empty set is undefined")
    return float(np.max(estimator.scores(P)))


def greedy_topk(points, k: int, indicator_kind: str, context=None) -> list:
    """Greedy selection of ``k`` indices.

    ``context`` is the reference point (hypervolume) or a ``CdfEstimator``
    (cdf; fitted on ``points`` when omitted).
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    n = P.shape[0]
    if k > n:
        raise ValueError(f"cannot select {k} of {n} points")
    if indicator_kind == "cdf":
        est = context if context is not None else CdfEstimator(P)
        scores = est.scores(P)
        return [int(i) for i in np.argsort(-scores, kind="stable")[:k]]
    if indicator_kind != "hypervolume":
        raise ValueError(f"unknown indicator kind {indicator_kind!r}")
    if context is None:
        ref = P.min(0) - 0.01 * (P.max(0) - P.min(0))
    else:
        ref = np.asarray(context, dtype=float)
    picked: list = []
    remaining = list(range(n))
    for _ in range(k):
        front = P[picked] if picked else np.empty((0, P.shape[1]))
        gains = [hv_improvement(front, P[i], ref) for i in remaining]
        best = remaining[int(np.argmax(gains))]
        picked.append(best)
        remaining.remove(best)
    return picked
