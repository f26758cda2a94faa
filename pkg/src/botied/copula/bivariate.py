"""Bivariate copula families with rotations, CDFs and h-functions.

Conventions: ``h1(u, v) = P(V <= v | U = u)`` and ``h2(u, v) = P(U <= u | V = v)``.
``hinv1(w, u)`` solves ``h1(u, v) = w`` for ``v``; ``hinv2(w, v)`` solves
``h2(u, v) = w`` for ``u``. A rotation by 90 degrees maps ``(U, V)`` to
``(1 - U, V)``, 180 to ``(1 - U, 1 - V)`` and 270 to ``(U, 1 - V)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.special import ndtr, ndtri

from .bvn import bvn_cdf
from .pit import kendall_tau

FAMILIES = ("independence", "gaussian", "clayton", "gumbel", "kde")
ROTATIONS = (0, 90, 180, 270)

INDEPENDENCE_TAU = 0.05
MIN_FIT_SIZE = 10
RHO_MAX = 0.9999
THETA_MAX = 20.0
CLAYTON_THETA_MIN = 1e-4
KDE_GRID = 64
TAIL_CORNER = 0.1

_EPS = 1e-12


def _clip(u):
    return np.clip(u, _EPS, 1.0 - _EPS)


# -- unrotated families -------------------------------------------------------
# Each exchangeable family provides cdf(u, v), h(v | u) = dC/du and its inverse.

def _gauss_cdf(rho, u, v):
    return bvn_cdf(ndtri(_clip(u)), ndtri(_clip(v)), rho)


def _gauss_h(rho, u, v):
    x, y = ndtri(_clip(u)), ndtri(_clip(v))
    return ndtr((y - rho * x) / np.sqrt(1.0 - rho * rho))


def _gauss_hinv(rho, w, u):
    x, z = ndtri(_clip(u)), ndtri(_clip(w))
    return ndtr(z * np.sqrt(1.0 - rho * rho) + rho * x)


def _clayton_cdf(theta, u, v):
    u, v = _clip(u), _clip(v)
    return np.maximum(u ** -theta + v ** -theta - 1.0, 1.0) ** (-1.0 / theta)


def _clayton_h(theta, u, v):
    u, v = _clip(u), _clip(v)
    a = u ** -theta + v ** -theta - 1.0
    return np.clip(u ** (-theta - 1.0) * a ** (-1.0 / theta - 1.0), 0.0, 1.0)


def _clayton_hinv(theta, w, u):
    u, w = _clip(u), _clip(w)
    inner = (w * u ** (theta + 1.0)) ** (-theta / (1.0 + theta)) + 1.0 - u ** -theta
    return np.clip(np.maximum(inner, 1.0) ** (-1.0 / theta), 0.0, 1.0)


def _gumbel_cdf(theta, u, v):
    u, v = _clip(u), _clip(v)
    a = (-np.log(u)) ** theta + (-np.log(v)) ** theta
    return np.exp(-a ** (1.0 / theta))


def _gumbel_h(theta, u, v):
    u, v = _clip(u), _clip(v)
    lu = -np.log(u)
    a = lu ** theta + (-np.log(v)) ** theta
    c = np.exp(-a ** (1.0 / theta))
    return np.clip(c * a ** (1.0 / theta - 1.0) * lu ** (theta - 1.0) / u, 0.0, 1.0)


def _gumbel_hinv(theta, w, u):
    w = np.asarray(w, dtype=float)
    u = np.broadcast_to(np.asarray(u, dtype=float), w.shape)
    lo = np.zeros(w.shape)
    hi = np.ones(w.shape)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = _gumbel_h(theta, u, mid) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


_BASE = {
    "gaussian": (_gauss_cdf, _gauss_h, _gauss_hinv),
    "clayton": (_clayton_cdf, _clayton_h, _clayton_hinv),
    "gumbel": (_gumbel_cdf, _gumbel_h, _gumbel_hinv),
}


# -- nonparametric family -------------------------------------------------------

class KdeGrid:
    """Piecewise-constant copula density on a ``G x G`` grid with uniform margins.

    Cell masses come from a histogram smoothed by a Gaussian kernel with
    mirror reflection at the edges of the unit square, then rebalanced by
    iterative proportional fitting so every row and column holds ``1/G``.
    """

    def __init__(self, mass: np.ndarray):
        self.mass = np.asarray(mass, dtype=float)
        self.G = self.mass.shape[0]
        node = np.zeros((self.G + 1, self.G + 1))
        node[1:, 1:] = self.mass.cumsum(0).cumsum(1)
        self.node_cdf = node
        # column-wise conditional CDFs of V given U in cell i, at v nodes
        self.cond_v = np.zeros((self.G, self.G + 1))
        self.cond_v[:, 1:] = (self.mass * self.G).cumsum(1)
        self.cond_u = np.zeros((self.G, self.G + 1))
        self.cond_u[:, 1:] = (self.mass.T * self.G).cumsum(1)

    @classmethod
    def fit(cls, u, v, G: int = KDE_GRID, bandwidth: float | None = None) -> "KdeGrid":
        u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
        n = u.shape[0]
        counts, _, _ = np.histogram2d(u, v, bins=G, range=[[0, 1], [0, 1]])
        if bandwidth is None:
            bandwidth = np.sqrt(1.0 / 12.0) * n ** (-1.0 / 6.0)
        dens = gaussian_filter(counts, sigma=bandwidth * G, mode="reflect")
        dens = dens + 1e-9 * dens.max() + 1e-300
        mass = dens / dens.sum()
        for _ in range(500):
            mass *= (1.0 / G) / mass.sum(1, keepdims=True)
            mass *= (1.0 / G) / mass.sum(0, keepdims=True)
            if np.abs(mass.sum(1) - 1.0 / G).max() < 1e-15:
                break
        return cls(mass)

    def cdf(self, u, v):
        G = self.G
        x = np.clip(np.asarray(u, dtype=float), 0.0, 1.0) * G
        y = np.clip(np.asarray(v, dtype=float), 0.0, 1.0) * G
        i = np.minimum(np.floor(x).astype(int), G - 1)
        j = np.minimum(np.floor(y).astype(int), G - 1)
        fx, fy = x - i, y - j
        c = self.node_cdf
        return ((1 - fx) * (1 - fy) * c[i, j] + fx * (1 - fy) * c[i + 1, j]
                + (1 - fx) * fy * c[i, j + 1] + fx * fy * c[i + 1, j + 1])

    @staticmethod
    def _cond(table, a, b):
        G = table.shape[0]
        i = np.minimum(np.floor(np.clip(a, 0, 1) * G).astype(int), G - 1)
        y = np.clip(b, 0.0, 1.0) * G
        j = np.minimum(np.floor(y).astype(int), G - 1)
        f = y - j
        return (1 - f) * table[i, j] + f * table[i, j + 1]

    @staticmethod
    def _cond_inv(table, w, a):
        G = table.shape[0]
        w = np.asarray(w, dtype=float)
        a = np.broadcast_to(np.asarray(a, dtype=float), w.shape)
        i = np.minimum(np.floor(np.clip(a, 0, 1) * G).astype(int), G - 1)
        out = np.empty(w.shape)
        nodes = np.linspace(0.0, 1.0, G + 1)
        for col in np.unique(i):
            sel = i == col
            out[sel] = np.interp(w[sel], table[col], nodes)
        return out

    def h1(self, u, v):
        return self._cond(self.cond_v, u, v)

    def h2(self, u, v):
        return self._cond(self.cond_u, v, u)

    def hinv1(self, w, u):
        return self._cond_inv(self.cond_v, w, u)

    def hinv2(self, w, v):
        return self._cond_inv(self.cond_u, w, v)


# -- public type -------------------------------------------------------------------

@dataclass(frozen=True)
class BivariateCopula:
    family: str = "independence"
    parameter: float | None = None
    rotation: int = 0
    kde_grid: KdeGrid | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown copula family {self.family!r}")
        if self.rotation not in ROTATIONS:
            raise ValueError(f"rotation must be one of {ROTATIONS}")
        p = self.parameter
        if self.family == "gaussian" and not (p is not None and -1.0 < p < 1.0):
            raise ValueError("gaussian copula needs rho in (-1, 1)")
        if self.family == "clayton" and not (p is not None and p > 0.0):
            raise ValueError("clayton copula needs theta > 0")
        if self.family == "gumbel" and not (p is not None and p >= 1.0):
            raise ValueError("gumbel copula needs theta >= 1")
        if self.family == "kde" and self.kde_grid is None:
            raise ValueError("kde copula needs a fitted grid")

    # unrotated pieces, exchangeable for parametric families
    def _c0(self, u, v):
        if self.family == "independence":
            return u * v
        if self.family == "kde":
            return self.kde_grid.cdf(u, v)
        return _BASE[self.family][0](self.parameter, u, v)

    def _h0_1(self, u, v):
        if self.family == "independence":
            return np.broadcast_to(v, np.broadcast(u, v).shape).astype(float)
        if self.family == "kde":
            return self.kde_grid.h1(u, v)
        return _BASE[self.family][1](self.parameter, u, v)

    def _h0_2(self, u, v):
        if self.family == "independence":
            return np.broadcast_to(u, np.broadcast(u, v).shape).astype(float)
        if self.family == "kde":
            return self.kde_grid.h2(u, v)
        return _BASE[self.family][1](self.parameter, v, u)

    def _hinv0_1(self, w, u):
        if self.family == "independence":
            return np.broadcast_to(w, np.broadcast(w, u).shape).astype(float)
        if self.family == "kde":
            return self.kde_grid.hinv1(w, u)
        return _BASE[self.family][2](self.parameter, w, u)

    def _hinv0_2(self, w, v):
        if self.family == "independence":
            return np.broadcast_to(w, np.broadcast(w, v).shape).astype(float)
        if self.family == "kde":
            return self.kde_grid.hinv2(w, v)
        return _BASE[self.family][2](self.parameter, w, v)

    def cdf(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        rot = self.rotation
        if rot == 0:
            c = self._c0(u, v)
        elif rot == 90:
            c = v - self._c0(1.0 - u, v)
        elif rot == 180:
            c = u + v - 1.0 + self._c0(1.0 - u, 1.0 - v)
        else:
            c = u - self._c0(u, 1.0 - v)
        # exact boundary conditions of a copula
        c = np.where((u <= 0.0) | (v <= 0.0), 0.0, c)
        c = np.where(u >= 1.0, v, c)
        c = np.where(v >= 1.0, u, c)
        return np.clip(c, np.maximum(u + v - 1.0, 0.0), np.minimum(u, v))

    def h1(self, u, v):
        rot = self.rotation
        if rot == 0:
            return self._h0_1(u, v)
        if rot == 90:
            return self._h0_1(1.0 - u, v)
        if rot == 180:
            return 1.0 - self._h0_1(1.0 - u, 1.0 - v)
        return 1.0 - self._h0_1(u, 1.0 - v)

    def h2(self, u, v):
        rot = self.rotation
        if rot == 0:
            return self._h0_2(u, v)
        if rot == 90:
            return 1.0 - self._h0_2(1.0 - u, v)
        if rot == 180:
            return 1.0 - self._h0_2(1.0 - u, 1.0 - v)
        return self._h0_2(u, 1.0 - v)

    def hinv1(self, w, u):
        rot = self.rotation
        if rot == 0:
            return self._hinv0_1(w, u)
        if rot == 90:
            return self._hinv0_1(w, 1.0 - u)
        if rot == 180:
            return 1.0 - self._hinv0_1(1.0 - w, 1.0 - u)
        return 1.0 - self._hinv0_1(1.0 - w, u)

    def hinv2(self, w, v):
        rot = self.rotation
        if rot == 0:
            return self._hinv0_2(w, v)
        if rot == 90:
            return 1.0 - self._hinv0_2(1.0 - w, v)
        if rot == 180:
            return 1.0 - self._hinv0_2(1.0 - w, 1.0 - v)
        return self._hinv0_2(w, 1.0 - v)

    def sample(self, n: int, seed=None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        u = rng.uniform(size=n)
        w = rng.uniform(size=n)
        return np.column_stack([u, self.hinv1(w, u)])

    def to_dict(self) -> dict:
        out = {"family": self.family, "rotation": self.rotation}
        if self.parameter is not None:
            out["parameter"] = float(self.parameter)
        if self.kde_grid is not None:
            out["kde_mass"] = self.kde_grid.mass.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "BivariateCopula":
        grid = KdeGrid(np.asarray(data["kde_mass"])) if "kde_mass" in data else None
        return cls(data["family"], data.get("parameter"), int(data.get("rotation", 0)), grid)


def bivariate_cdf(c: BivariateCopula, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((u < 0) | (u > 1) | (v < 0) | (v > 1)) or np.any(np.isnan(u) | np.isnan(v)):
        raise ValueError("copula arguments must lie in [0, 1]")
    return c.cdf(u, v)


def _tail_rotation(u, v, tau, lower_tail_at_zero: bool) -> int:
    """Rotation whose tail sits in the corner holding the most empirical mass."""
    q = TAIL_CORNER
    if tau > 0:
        lower = np.mean((u < q) & (v < q))
        upper = np.mean((u > 1 - q) & (v > 1 - q))
        tail_low = lower >= upper
        if lower_tail_at_zero:
            return 0 if tail_low else 180
        return 180 if tail_low else 0
    # negative dependence: mass near (1, 0) or (0, 1)
    right_low = np.mean((u > 1 - q) & (v < q))
    left_high = np.mean((u < q) & (v > 1 - q))
    if lower_tail_at_zero:
        # clayton: 90 puts the tail at (1, 0), 270 at (0, 1)
        return 90 if right_low >= left_high else 270
    # gumbel: 90 puts the tail at (0, 1), 270 at (1, 0)
    return 270 if right_low >= left_high else 90


def fit_bivariate(u1, u2, family_policy: str = "gaussian") -> BivariateCopula:
    """Fit one pair copula by inversion of Kendall's tau (kde: smoothed grid)."""
    u1 = np.asarray(u1, dtype=float).ravel()
    u2 = np.asarray(u2, dtype=float).ravel()
    if u1.shape != u2.shape:
        raise ValueError("u1 and u2 must have equal length")
    if u1.shape[0] < MIN_FIT_SIZE:
        raise ValueError(f"need at least {MIN_FIT_SIZE} pairs to fit a copula, got {u1.shape[0]}")
    if family_policy not in FAMILIES:
        raise ValueError(f"unknown family policy {family_policy!r}")
    tau = kendall_tau(u1, u2)
    if abs(tau) < INDEPENDENCE_TAU or family_policy == "independence":
        return BivariateCopula("independence")
    if family_policy == "gaussian":
        rho = float(np.clip(np.sin(np.pi * tau / 2.0), -RHO_MAX, RHO_MAX))
        return BivariateCopula("gaussian", rho)
    if family_policy == "kde":
        return BivariateCopula("kde", kde_grid=KdeGrid.fit(u1, u2))
    a = min(abs(tau), 1.0 - 1e-9)
    if family_policy == "clayton":
        theta = float(np.clip(2.0 * a / (1.0 - a), CLAYTON_THETA_MIN, THETA_MAX))
        return BivariateCopula("clayton", theta, _tail_rotation(u1, u2, tau, True))
    theta = float(np.clip(1.0 / (1.0 - a), 1.0, THETA_MAX))
    return BivariateCopula("gumbel", theta, _tail_rotation(u1, u2, tau, False))
