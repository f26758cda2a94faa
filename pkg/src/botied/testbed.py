"""Synthetic test problems, the CopulaBC generator and CSV pool ingestion.

All problems follow the maximization convention and are pure: observation
noise is added by the harness, never here.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .copula.bivariate import BivariateCopula

BRANIN_R = 6.0
NORMALIZATION_SAMPLES = 100_000
NORMALIZATION_SEED = 0


def _check_unit(x: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name}: non-finite input")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError(f"{name}: input outside the unit cube")


def branin_currin(x) -> np.ndarray:
    """Negated Branin and Currin objectives on ``[0, 1]^2``.

    The Branin part is evaluated on the standard rescaled box
    ``x1 -> 15 x1 - 5``, ``x2 -> 15 x2`` with ``r = 6``; the Currin part
    uses the raw coordinates. Accepts a 2-vector or an ``(n, 2)`` array.
    """
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != 2:
        raise ValueError("branin_currin takes 2-dimensional inputs")
    _check_unit(X, "branin_currin")
    u, v = X[:, 0], X[:, 1]
    a, b = 15.0 * u - 5.0, 15.0 * v
    f1 = -(b - 5.1 / (4 * np.pi**2) * a**2 + 5.0 / np.pi * a - BRANIN_R) ** 2 \
        + 10.0 * (1.0 - 1.0 / (8 * np.pi)) * np.cos(a) + 10.0
    with np.errstate(divide="ignore", over="ignore"):
        damp = np.where(v > 0.0, 1.0 - np.exp(-1.0 / (2.0 * np.where(v > 0.0, v, 1.0))), 1.0)
    ratio = (2300 * u**3 + 1900 * u**2 + 2092 * u + 60) / (100 * u**3 + 500 * u**2 + 4 * u + 20)
    f2 = -damp * ratio
    out = np.stack([f1, f2], axis=-1)
    return out[0] if single else out


def dtlz2(x, M: int) -> np.ndarray:
    """DTLZ2 with ``M`` objectives, negated for maximization."""
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    d = X.shape[1]
    if M < 2:
        raise ValueError("dtlz2 needs M >= 2")
    if d < M:
        raise ValueError(f"dtlz2 needs d >= M (got d={d}, M={M})")
    _check_unit(X, "dtlz2")
    g = np.sum((X[:, M - 1:] - 0.5) ** 2, axis=1)
    theta = X[:, :M - 1] * (np.pi / 2)
    cos, sin = np.cos(theta), np.sin(theta)
    f = np.empty((X.shape[0], M))
    for m in range(M):
        val = 1.0 + g
        val = val * np.prod(cos[:, :M - 1 - m], axis=1)
        if m > 0:
            val = val * sin[:, M - 1 - m]
        f[:, m] = val
    out = -f
    return out[0] if single else out


@dataclass(frozen=True)
class InputScaler:
    """Affine map from raw inputs to the unit cube."""
    low: np.ndarray
    high: np.ndarray

    def __call__(self, X) -> np.ndarray:
        span = np.where(self.high > self.low, self.high - self.low, 1.0)
        return (np.asarray(X, dtype=float) - self.low) / span

    def inverse(self, Z) -> np.ndarray:
        span = np.where(self.high > self.low, self.high - self.low, 1.0)
        return np.asarray(Z, dtype=float) * span + self.low


@dataclass(frozen=True)
class PoolDataset:
    designs: np.ndarray
    true_objectives: np.ndarray
    scaler: Optional[InputScaler] = None
    x_names: tuple = ()
    y_names: tuple = ()

    def __post_init__(self):
        X = np.array(self.designs, dtype=float)
        Y = np.array(self.true_objectives, dtype=float)
        if X.ndim != 2 or Y.ndim != 2:
            raise ValueError("pool designs and objectives must be 2-D arrays")
        if X.shape[0] != Y.shape[0]:
            raise ValueError("pool designs and objectives differ in length")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "designs", X)
        object.__setattr__(self, "true_objectives", Y)

    def __len__(self) -> int:
        return self.designs.shape[0]

    @property
    def d(self) -> int:
        return self.designs.shape[1]

    @property
    def M(self) -> int:
        return self.true_objectives.shape[1]


@dataclass(frozen=True)
class Problem:
    """An objective function on the unit cube, or a lookup pool."""
    name: str
    d: int
    M: int
    evaluate: Optional[Callable] = None
    pool: Optional[PoolDataset] = None
    noise_sigma: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("problems need at least two objectives")
        if (self.evaluate is None) == (self.pool is None):
            raise ValueError("a problem needs exactly one of evaluate or pool")

    @property
    def is_lookup(self) -> bool:
        return self.pool is not None

    def __call__(self, X) -> np.ndarray:
        if self.evaluate is None:
            raise TypeError(f"{self.name} is a lookup problem; index its pool instead")
        return np.atleast_2d(self.evaluate(np.atleast_2d(X)))

    def objective_range(self, n: int = 1000, seed: int = 12345) -> np.ndarray:
        """Per-objective range over a fixed design sample (or the whole pool)."""
        if self.pool is not None:
            Y = self.pool.true_objectives
        else:
            Y = self(np.random.default_rng(seed).random((n, self.d)))
        return Y.max(0) - Y.min(0)


def _branin_currin_bounds() -> tuple:
    X = np.random.default_rng(NORMALIZATION_SEED).random((NORMALIZATION_SAMPLES, 2))
    Y = branin_currin(X)
    return Y.min(0), Y.max(0)


def copulabc_generate(n: int, theta: float, seed: int = 0) -> PoolDataset:
    """Lookup pool whose objectives follow a survival-Clayton copula with Beta(2, 2) margins.

    Designs are the min-max-normalized Branin-Currin image of the objective
    vectors, clipped to the unit square.
    """
    if n < 2:
        raise ValueError("copulabc_generate needs n >= 2")
    if not np.isfinite(theta) or theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    U = BivariateCopula("clayton", float(theta), 180).sample(n, seed=seed)
    Y = stats.beta(2, 2).ppf(U)
    lo, hi = _branin_currin_bounds()
    X = np.clip((branin_currin(Y) - lo) / (hi - lo), 0.0, 1.0)
    return PoolDataset(X, Y, x_names=("x_0", "x_1"), y_names=("y_0", "y_1"))


def _parse_float(cell: str, row: int, col: str) -> float:
    try:
        val = float(cell)
    except (TypeError, ValueError):
        raise ValueError(f"row {row}: non-numeric value {cell!r} in column {col!r}") from None
    if not np.isfinite(val):
        raise ValueError(f"row {row}: non-finite value in column {col!r}")
    return val


def load_csv_pool(path, scale_inputs: bool = True) -> PoolDataset:
    """Read a pool from CSV with ``x_*`` input and ``y_*`` objective columns.

    Row numbers in error messages count data rows from 1. Inputs are
    min-max scaled to the unit cube; the scaler is kept on the pool.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        xcols = [i for i, h in enumerate(header) if h.startswith("x_")]
        ycols = [i for i, h in enumerate(header) if h.startswith("y_")]
        if not xcols:
            raise ValueError(f"{path}: no x_ columns in header")
        if len(ycols) < 2:
            raise ValueError(f"{path}: need at least two y_ columns")
        X, Y = [], []
        for row, cells in enumerate(reader, start=1):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise ValueError(f"row {row}: expected {len(header)} cells, found {len(cells)}")
            X.append([_parse_float(cells[i], row, header[i]) for i in xcols])
            Y.append([_parse_float(cells[i], row, header[i]) for i in ycols])
    if len(X) < 1:
        raise ValueError(f"{path}: no data rows")
    X = np.asarray(X)
    Y = np.asarray(Y)
    scaler = None
    if scale_inputs:
        scaler = InputScaler(X.min(0), X.max(0))
        X = scaler(X)
    return PoolDataset(X, Y, scaler, tuple(header[i] for i in xcols), tuple(header[i] for i in ycols))


def write_csv_pool(pool: PoolDataset, path, raw_inputs: bool = True) -> None:
    """Write a pool in the format read by ``load_csv_pool``."""
    X = pool.designs
    if raw_inputs and pool.scaler is not None:
        X = pool.scaler.inverse(X)
    xn = pool.x_names or tuple(f"x_{i}" for i in range(pool.d))
    yn = pool.y_names or tuple(f"y_{i}" for i in range(pool.M))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(xn) + list(yn))
        for x, y in zip(X, pool.true_objectives):
            w.writerow([repr(float(v)) for v in x] + [repr(float(v)) for v in y])


def make_problem(name: str, **params) -> Problem:
    """Build a registered problem.

    ``branin_currin``; ``dtlz2`` (``d``, ``M``); ``copulabc`` (``n``,
    ``theta``, ``seed``); ``csv`` (``path``).
    """
    if name == "branin_currin":
        return Problem("branin_currin", 2, 2, evaluate=branin_currin,
                       metadata={"branin_r": BRANIN_R})
    if name == "dtlz2":
        d = int(params.get("d", 9))
        M = int(params.get("M", 4))
        if d < M:
            raise ValueError(f"dtlz2 needs d >= M (got d={d}, M={M})")
        return Problem("dtlz2", d, M, evaluate=lambda X: dtlz2(X, M), metadata={"d": d, "M": M})
    if name == "copulabc":
        n = int(params.get("n", 2000))
        theta = float(params.get("theta", 2.0))
        seed = int(params.get("seed", 0))
        pool = copulabc_generate(n, theta, seed)
        return Problem("copulabc", 2, 2, pool=pool, metadata={"n": n, "theta": theta, "seed": seed})
    if name == "csv":
        if "path" not in params:
            raise ValueError("csv problem needs a path")
        pool = load_csv_pool(params["path"])
        return Problem("csv", pool.d, pool.M, pool=pool, metadata={"path": str(params["path"])})
    raise ValueError(f"unknown problem {name!r}")
