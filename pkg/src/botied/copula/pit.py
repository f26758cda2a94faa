"""Rank-based probability integral transform and rank dependence."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import kendalltau, rankdata


@dataclass(frozen=True)
class PseudoObservations:
    """Rank-transformed sample: ``u = rank / (n + 1)`` with averaged ties."""

    u: np.ndarray
    source_ranks: np.ndarray

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def M(self) -> int:
        return self.u.shape[1]


def pit_transform(Y) -> PseudoObservations:
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n = Y.shape[0]
    if n < 2:
        raise ValueError("pit_transform needs at least two rows")
    if not np.all(np.isfinite(Y)):
        raise ValueError("pit_transform needs finite values")
    ranks = rankdata(Y, method="average", axis=0)
    return PseudoObservations(ranks / (n + 1), ranks)


def kendall_tau(u1, u2) -> float:
    """Kendall's tau-b; returns 0 when either input is constant."""
    u1 = np.asarray(u1, dtype=float).ravel()
    u2 = np.asarray(u2, dtype=float).ravel()
    if u1.shape != u2.shape:
        raise ValueError(f"length mismatch: {u1.shape[0]} vs {u2.shape[0]}")
    if u1.shape[0] < 2:
        raise ValueError("kendall_tau needs at least two pairs")
    tau = kendalltau(u1, u2).statistic
    if not np.isfinite(tau):
        return 0.0
    return float(np.clip(tau, -1.0, 1.0))


class EmpiricalMargins:
    """Per-column empirical CDFs of a reference sample.

    Reference values map to their own pseudo-observations. A query strictly
    between two distinct reference values gets the midpoint of their
    pseudo-observations, so the map depends on order alone and commutes with
    any strictly increasing transform of the column. Queries below the
    sample minimum map to ``1/(n+1)``, above the maximum to ``n/(n+1)``.
    """

    def __init__(self, Y):
        Y = np.asarray(Y, dtype=float)
        pit = pit_transform(Y)
        self.n = Y.shape[0]
        self._knots = []
        self._levels = []
        for m in range(Y.shape[1]):
            vals, first = np.unique(Y[:, m], return_index=True)
            self._knots.append(vals)
            self._levels.append(pit.u[first, m])
        self.pseudo = pit

    @property
    def M(self) -> int:
        return len(self._knots)

    def __call__(self, Y) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if Y.shape[1] != self.M:
            raise ValueError(f"dimension mismatch: {Y.shape[1]} vs {self.M}")
        out = np.empty_like(Y)
        for m in range(self.M):
            knots, levels = self._knots[m], self._levels[m]
            y = Y[:, m]
            hi = np.searchsorted(knots, y, side="left")
            exact = (hi < knots.size) & (knots[np.minimum(hi, knots.size - 1)] == y)
            lo_idx = np.clip(hi - 1, 0, knots.size - 1)
            hi_idx = np.clip(hi, 0, knots.size - 1)
            between = 0.5 * (levels[lo_idx] + levels[hi_idx])
            res = np.where(exact, levels[hi_idx], between)
            res = np.where(hi == 0, 1.0 / (self.n + 1), res)
            res = np.where(hi >= knots.size, self.n / (self.n + 1), res)
            out[:, m] = np.where(exact, levels[hi_idx], res)
        return out
