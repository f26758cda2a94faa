"""Domain types and Pareto-dominance primitives.

All objectives follow the maximization convention. Minimization problems are
negated when they are ingested (see :mod:`botied.testbed`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


def _as_vector(a, name="vector") -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def _check_same_length(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


def dominates(a, b) -> bool:
    """True iff ``a`` is at least as good as ``b`` everywhere and strictly better somewhere."""
    a, b = _as_vector(a), _as_vector(b)
    _check_same_length(a, b)
    return bool(np.all(a >= b) and np.any(a > b))


def weakly_dominates(a, b) -> bool:
    """True iff ``a_m >= b_m`` for every objective ``m``."""
    a, b = _as_vector(a), _as_vector(b)
    _check_same_length(a, b)
    return bool(np.all(a >= b))


def non_dominated_mask(Y) -> np.ndarray:
    """Boolean mask of rows of ``Y`` not dominated by any other row.

    Duplicated rows are all kept by the mask; use :func:`pareto_front` for
    deduplicated membership.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError("expected a 2-D array of objective vectors")
    n = Y.shape[0]
    mask = np.ones(n, dtype=bool)
    # chunked to bound memory at n^2 * M booleans
    chunk = max(1, int(4_000_000 // max(1, n * Y.shape[1])))
    for start in range(0, n, chunk):
        block = Y[start:start + chunk]
        ge = np.all(Y[None, :, :] >= block[:, None, :], axis=2)
        gt = np.any(Y[None, :, :] > block[:, None, :], axis=2)
        mask[start:start + chunk] = ~np.any(ge & gt, axis=1)
    return mask


@dataclass(frozen=True)
class Observation:
    design: np.ndarray
    objectives: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        x = _as_vector(self.design, "design")
        y = _as_vector(self.objectives, "objectives")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("observation entries must be finite")
        if y.shape[0] < 2:
            raise ValueError("at least two objectives are required")
        if self.iteration < 0:
            raise ValueError("iteration must be non-negative")
        object.__setattr__(self, "design", x)
        object.__setattr__(self, "objectives", y)


@dataclass(frozen=True)
class Dataset:
    """Ordered, immutable collection of observations sharing ``d`` and ``M``."""

    observations: tuple = ()

    def __post_init__(self):
        obs = tuple(self.observations)
        if obs:
            d, m = obs[0].design.shape[0], obs[0].objectives.shape[0]
            for o in obs:
                if o.design.shape[0] != d or o.objectives.shape[0] != m:
                    raise ValueError("all observations must share d and M")
        object.__setattr__(self, "observations", obs)

    @classmethod
    def from_arrays(cls, X, Y, iteration: int | Sequence[int] = 0) -> "Dataset":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape[0] != Y.shape[0]:
            raise ValueError("X and Y must have the same number of rows")
        its = np.broadcast_to(np.asarray(iteration, dtype=int), (X.shape[0],))
        return cls(tuple(Observation(x, y, int(t)) for x, y, t in zip(X, Y, its)))

    def extend(self, observations: Iterable[Observation]) -> "Dataset":
        return Dataset(self.observations + tuple(observations))

    def __len__(self) -> int:
        return len(self.observations)

    @property
    def X(self) -> np.ndarray:
        return np.array([o.design for o in self.observations])

    @property
    def Y(self) -> np.ndarray:
        return np.array([o.objectives for o in self.observations])

    @property
    def d(self) -> int:
        return self.observations[0].design.shape[0]

    @property
    def M(self) -> int:
        return self.observations[0].objectives.shape[0]


@dataclass(frozen=True)
class ParetoFront:
    """Deduplicated non-dominated objective vectors.

    ``indices`` point back into the input list, keeping the earliest index
    for duplicated values.
    """

    members: np.ndarray
    indices: tuple = field(default=())

    def __len__(self) -> int:
        return self.members.shape[0]

    @property
    def M(self) -> int:
        return self.members.shape[1]


def pareto_front(points) -> ParetoFront:
    """Non-dominated subset of ``points`` with duplicates kept once."""
    Y = np.asarray(points, dtype=float)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Y.shape[0] == 0:
        raise ValueError("pareto_front of an empty set is undefined")
    mask = non_dominated_mask(Y)
    keep = []
    seen = set()
    for i in np.flatnonzero(mask):
        key = tuple(Y[i])
        if key not in seen:
            seen.add(key)
            keep.append(int(i))
    members = Y[keep].copy()
    members.setflags(write=False)
    return ParetoFront(members, tuple(keep))


def _as_set(S, name):
    S = np.asarray(S, dtype=float)
    if S.ndim == 1:
        S = S[None, :]
    if S.shape[0] == 0:
        raise ValueError(f"{name} must be non-empty")
    return S


def set_weakly_dominates(A, B) -> bool:
    """True iff every member of ``B`` is weakly dominated by some member of ``A``."""
    A, B = _as_set(A, "A"), _as_set(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    covered = np.all(A[:, None, :] >= B[None, :, :], axis=2)
    return bool(np.all(np.any(covered, axis=0)))
