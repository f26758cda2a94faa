"""Regular vine copulas: structure selection, fitting, sampling and CDF evaluation.

Tree 1 is the maximum spanning tree of ``|tau|`` between variables. Tree
``t + 1`` connects edges of tree ``t`` that share a node (proximity
condition), again by maximum spanning tree over ``|tau|`` of the
conditional pseudo-observations produced by h-functions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bivariate import MIN_FIT_SIZE, BivariateCopula, fit_bivariate
from .pit import PseudoObservations, kendall_tau

DEFAULT_MC_SAMPLES = 10_000
_OPEN = 1e-12


class VineError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    """Pair copula slot ``(a, b | D)``; the copula sees ``u_{a|D}`` first."""

    conditioned: tuple
    conditioning: tuple = ()
    children: tuple | None = None

    @property
    def all_vars(self) -> frozenset:
        return frozenset(self.conditioned) | frozenset(self.conditioning)

    def label(self) -> str:
        a, b = self.conditioned
        if self.conditioning:
            return f"{a},{b}|{','.join(map(str, self.conditioning))}"
        return f"{a},{b}"


@dataclass(frozen=True)
class VineStructure:
    M: int
    trees: tuple

    def __post_init__(self):
        trees = tuple(tuple(t) for t in self.trees)
        object.__setattr__(self, "trees", trees)
        if len(trees) != self.M - 1:
            raise VineError(f"a vine on {self.M} variables has {self.M - 1} trees, got {len(trees)}")
        for t, tree in enumerate(trees, start=1):
            if len(tree) != self.M - t:
                raise VineError(f"tree {t} must have {self.M - t} edges, got {len(tree)}")
            for e in tree:
                if len(e.conditioning) != t - 1 or len(e.all_vars) != t + 1:
                    raise VineError(f"edge {e.label()} is malformed for tree {t}")
                if t >= 2:
                    if e.children is None:
                        raise VineError(f"edge {e.label()} lacks child links")
                    c1, c2 = (trees[t - 2][i] for i in e.children)
                    if c1.all_vars | c2.all_vars != e.all_vars:
                        raise VineError(f"edge {e.label()} violates the proximity condition")
                    if t >= 3 and not set(c1.children) & set(c2.children):
                        raise VineError(f"edge {e.label()} joins edges without a common node")

    @property
    def n_edges(self) -> int:
        return sum(len(t) for t in self.trees)

    def edge_index(self) -> dict:
        out = {}
        for t, tree in enumerate(self.trees):
            for i, e in enumerate(tree):
                out[(frozenset(e.conditioned), frozenset(e.conditioning))] = (t, i)
        return out

    def to_dict(self) -> dict:
        return {"M": self.M, "trees": [[{"conditioned": list(e.conditioned),
                                         "conditioning": list(e.conditioning)} for e in tree]
                                       for tree in self.trees]}

    @classmethod
    def from_edges(cls, M: int, trees) -> "VineStructure":
        """Build from per-tree ``(conditioned, conditioning)`` pairs, deriving child links."""
        built = []
        for t, tree in enumerate(trees, start=1):
            row = []
            for conditioned, conditioning in tree:
                conditioned = tuple(int(v) for v in conditioned)
                conditioning = tuple(sorted(int(v) for v in conditioning))
                children = None
                if t >= 2:
                    allv = frozenset(conditioned) | frozenset(conditioning)
                    want = [allv - {conditioned[1]}, allv - {conditioned[0]}]
                    prev = built[t - 2]
                    found = [[i for i, e in enumerate(prev) if e.all_vars == w] for w in want]
                    if not all(found):
                        raise VineError(f"edge {conditioned}|{conditioning} has no parent edges in tree {t - 1}")
                    children = (found[0][0], found[1][0])
                row.append(Edge(conditioned, conditioning, children))
            built.append(row)
        return cls(M, built)


def _max_spanning_tree(n_nodes: int, weights: dict) -> list:
    """Prim's algorithm on an undirected graph; ties resolve to the smallest pair."""
    if n_nodes == 1:
        return []
    in_tree = {0}
    chosen = []
    while len(in_tree) < n_nodes:
        best = None
        for (i, j), w in weights.items():
            if (i in in_tree) == (j in in_tree):
                continue
            if best is None or w > best[0] or (w == best[0] and (i, j) < best[1]):
                best = (w, (i, j))
        if best is None:
            raise VineError("candidate graph is disconnected")
        chosen.append(best[1])
        in_tree.update(best[1])
    return sorted(chosen)


class _Conditionals:
    """Memoized conditional pseudo-observations ``u_{x|D}``."""

    def __init__(self, trees, copulas, base: dict):
        self.trees = trees
        self.copulas = copulas
        self.memo = {(v, frozenset()): col for v, col in base.items()}
        self.reindex()

    def reindex(self):
        self.index = {}
        for t, tree in enumerate(self.trees):
            for i, e in enumerate(tree):
                self.index[(frozenset(e.conditioned), frozenset(e.conditioning))] = (t, i)

    def find_edge(self, x: int, D: frozenset):
        for y in sorted(D):
            loc = self.index.get((frozenset((x, y)), D - {y}))
            if loc is not None:
                return y, loc
        raise VineError(f"no edge yields u_{x}|{sorted(D)}")

    def get(self, x: int, D: frozenset) -> np.ndarray:
        key = (x, D)
        if key in self.memo:
            return self.memo[key]
        y, (t, i) = self.find_edge(x, D)
        edge = self.trees[t][i]
        c = self.copulas[t][i]
        ux = self.get(x, D - {y})
        uy = self.get(y, D - {y})
        val = c.h2(ux, uy) if edge.conditioned[0] == x else c.h1(uy, ux)
        val = np.clip(val, _OPEN, 1.0 - _OPEN)
        self.memo[key] = val
        return val


def _sampling_order(structure: VineStructure) -> list:
    """Variables in sampling order, each with its chain of edges from tree 1 upward."""
    remaining = [list(tree) for tree in structure.trees]
    variables = set(range(structure.M))
    peeled = []
    while len(variables) > 1:
        top_tree = len(variables) - 2
        top = remaining[top_tree][0]
        for x in top.conditioned:
            chain = [top]
            ok = True
            current = top
            for t in range(top_tree - 1, -1, -1):
                target = current.all_vars - {[v for v in current.conditioned if v != x][0]}
                nxt = [e for e in remaining[t] if e.all_vars == target and x in e.conditioned]
                if not nxt:
                    ok = False
                    break
                current = nxt[0]
                chain.append(current)
            if not ok:
                continue
            rest = [[e for e in remaining[t] if e not in chain] for t in range(top_tree + 1)]
            if any(x in e.all_vars for tree in rest for e in tree):
                continue
            break
        else:
            raise VineError("structure cannot be peeled into a sampling order")
        peeled.append((x, tuple(reversed(chain))))
        remaining = rest[:-1]
        variables.discard(x)
    peeled.append((variables.pop(), ()))
    return list(reversed(peeled))


def _count_leq(samples: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Number of sample rows componentwise below each query row.

    Samples are sorted on the first coordinate so each chunk of (sorted)
    queries only scans the prefix that can possibly qualify.
    """
    K = samples.shape[0]
    S = samples[np.argsort(samples[:, 0], kind="stable")]
    first, rest = S[:, 0], S[:, 1:]
    qorder = np.argsort(Q[:, 0], kind="stable")
    Qs = Q[qorder]
    chunk = max(1, 2_000_000 // K)
    out = np.empty(Q.shape[0], dtype=np.int64)
    for s in range(0, Qs.shape[0], chunk):
        q = Qs[s:s + chunk]
        p = int(np.searchsorted(first, q[-1, 0], side="right"))
        ok = first[None, :p] <= q[:, :1]
        for m in range(rest.shape[1]):
            ok &= rest[None, :p, m] <= q[:, m + 1:m + 2]
        out[qorder[s:s + chunk]] = ok.sum(1)
    return out


@dataclass
class VineCopula:
    """Fitted vine. Treat as immutable; the MC sample cache fills lazily."""

    structure: VineStructure
    pair_copulas: tuple
    fitted_n: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.pair_copulas = tuple(tuple(t) for t in self.pair_copulas)
        if [len(t) for t in self.pair_copulas] != [len(t) for t in self.structure.trees]:
            raise VineError("pair copula count does not match the structure")

    @property
    def M(self) -> int:
        return self.structure.M

    @classmethod
    def independence(cls, M: int) -> "VineCopula":
        trees = [[((i, i + t), tuple(range(i + 1, i + t))) for i in range(M - t)] for t in range(1, M)]
        structure = VineStructure.from_edges(M, trees)
        cops = [[BivariateCopula("independence") for _ in tree] for tree in structure.trees]
        return cls(structure, cops, 0)

    def families(self) -> list:
        return [c.family for tree in self.pair_copulas for c in tree]

    def sample(self, n: int, seed=None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        W = rng.uniform(size=(n, self.M))
        U = np.empty((n, self.M))
        order = _sampling_order(self.structure)
        cond = _Conditionals(self.structure.trees, self.pair_copulas, {})
        index = self.structure.edge_index()
        for x, chain in order:
            w = W[:, x]
            for edge in reversed(chain):
                y = edge.conditioned[1] if edge.conditioned[0] == x else edge.conditioned[0]
                t, i = index[(frozenset(edge.conditioned), frozenset(edge.conditioning))]
                c = self.pair_copulas[t][i]
                uy = cond.get(y, frozenset(edge.conditioning))
                w = c.hinv2(w, uy) if edge.conditioned[0] == x else c.hinv1(w, uy)
                w = np.clip(w, _OPEN, 1.0 - _OPEN)
            U[:, x] = w
            cond.memo[(x, frozenset())] = U[:, x]
        return U

    def mc_samples(self, K: int = DEFAULT_MC_SAMPLES, seed: int = 0) -> np.ndarray:
        key = (int(K), int(seed))
        if key not in self._cache:
            s = self.sample(K, seed)
            s.setflags(write=False)
            self._cache[key] = s
        return self._cache[key]

    def cdf(self, u, K: int = DEFAULT_MC_SAMPLES, seed: int = 0, method: str = "auto") -> np.ndarray:
        """Joint CDF at rows of ``u``.

        ``method="auto"`` is exact for two variables and Monte Carlo over the
        cached ``K`` vine samples otherwise; ``"mc"`` forces the cache.
        """
        U = np.atleast_2d(np.asarray(u, dtype=float))
        if U.shape[1] != self.M:
            raise ValueError(f"dimension mismatch: {U.shape[1]} vs {self.M}")
        if np.any((U < 0) | (U > 1)) or np.any(np.isnan(U)):
            raise ValueError("vine_cdf arguments must lie in the unit cube")
        if method not in ("auto", "exact", "mc"):
            raise ValueError(f"unknown cdf method {method!r}")
        if method == "exact" and self.M != 2:
            raise ValueError("exact evaluation is available for two variables only")
        if method != "mc" and self.M == 2:
            return self.pair_copulas[0][0].cdf(U[:, 0], U[:, 1])
        samples = self.mc_samples(K, seed)
        return _count_leq(samples, U) / samples.shape[0]

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "fitted_n": self.fitted_n,
            "trees": [[{"conditioned": list(e.conditioned), "conditioning": list(e.conditioning),
                        "copula": c.to_dict()} for e, c in zip(tree, cops)]
                      for tree, cops in zip(self.structure.trees, self.pair_copulas)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VineCopula":
        trees = [[(e["conditioned"], e["conditioning"]) for e in tree] for tree in data["trees"]]
        structure = VineStructure.from_edges(int(data["M"]), trees)
        cops = [[BivariateCopula.from_dict(e["copula"]) for e in tree] for tree in data["trees"]]
        return cls(structure, cops, int(data.get("fitted_n", 0)))


@dataclass(frozen=True)
class VineTemplate:
    """User-imposed structure with a family (and optional rotation) per edge."""

    structure: VineStructure
    families: tuple
    rotations: tuple

    @classmethod
    def from_dict(cls, data: dict) -> "VineTemplate":
        trees = [[(e["conditioned"], e.get("conditioning", [])) for e in tree] for tree in data["trees"]]
        structure = VineStructure.from_edges(int(data["M"]), trees)
        fams = tuple(tuple(e.get("family", "gaussian") for e in tree) for tree in data["trees"])
        rots = tuple(tuple(e.get("rotation") for e in tree) for tree in data["trees"])
        return cls(structure, fams, rots)


def save_vine(vine: VineCopula, path) -> None:
    Path(path).write_text(json.dumps(vine.to_dict(), indent=1))


def load_vine(path) -> VineCopula:
    return VineCopula.from_dict(json.loads(Path(path).read_text()))


def load_vine_template(path) -> VineTemplate:
    return VineTemplate.from_dict(json.loads(Path(path).read_text()))


def _fit_edge(ua, ub, family, rotation=None) -> BivariateCopula:
    c = fit_bivariate(ua, ub, family)
    if rotation is not None and c.family in ("clayton", "gumbel") and c.rotation != rotation:
        c = BivariateCopula(c.family, c.parameter, int(rotation))
    return c


def fit_vine(U, family_policy: str = "gaussian", template: VineTemplate | None = None) -> VineCopula:
    """Fit a vine to pseudo-observations (``PseudoObservations`` or an ``(n, M)`` array)."""
    u = U.u if isinstance(U, PseudoObservations) else np.asarray(U, dtype=float)
    if u.ndim != 2 or u.shape[1] < 2:
        raise VineError("fit_vine needs an (n, M) array with M >= 2")
    n, M = u.shape
    if n < MIN_FIT_SIZE:
        raise VineError(f"need at least {MIN_FIT_SIZE} rows to fit a vine, got {n}")
    if not np.all(np.isfinite(u)) or np.any((u <= 0) | (u >= 1)):
        raise VineError("pseudo-observations must be finite and inside (0, 1)")
    if template is not None:
        return _fit_template(u, template)

    base = {i: u[:, i] for i in range(M)}
    trees = []
    cops = []
    # tree 1
    weights = {}
    for i in range(M):
        for j in range(i + 1, M):
            weights[(i, j)] = abs(kendall_tau(u[:, i], u[:, j]))
    tree_edges = [Edge((i, j)) for i, j in _max_spanning_tree(M, weights)]
    trees.append(tree_edges)
    cops.append([_fit_edge(u[:, e.conditioned[0]], u[:, e.conditioned[1]], family_policy) for e in tree_edges])
    cond = _Conditionals(trees, cops, base)
    for t in range(2, M):
        prev = trees[-1]
        cond.reindex()
        weights = {}
        payload = {}
        for p in range(len(prev)):
            for q in range(p + 1, len(prev)):
                ep, eq = prev[p], prev[q]
                shared = (set(ep.conditioned) & set(eq.conditioned)) if t == 2 else (set(ep.children) & set(eq.children))
                if not shared:
                    continue
                S1, S2 = ep.all_vars, eq.all_vars
                (a,), (b,) = tuple(S1 - S2), tuple(S2 - S1)
                D = S1 & S2
                if a > b:
                    a, b = b, a
                    first, second = (q, p)
                else:
                    first, second = (p, q)
                ua, ub = cond.get(a, D), cond.get(b, D)
                weights[(p, q)] = abs(kendall_tau(ua, ub))
                payload[(p, q)] = (a, b, tuple(sorted(D)), (first, second), ua, ub)
        new_edges, new_cops = [], []
        for pq in _max_spanning_tree(len(prev), weights):
            a, b, D, children, ua, ub = payload[pq]
            new_edges.append(Edge((a, b), D, children))
            new_cops.append(_fit_edge(ua, ub, family_policy))
        trees.append(new_edges)
        cops.append(new_cops)
    return VineCopula(VineStructure(M, trees), cops, n)


def _fit_template(u, template: VineTemplate) -> VineCopula:
    structure = template.structure
    if structure.M != u.shape[1]:
        raise VineError(f"template is for {structure.M} variables, data has {u.shape[1]}")
    cops = []
    cond = _Conditionals(structure.trees, cops, {i: u[:, i] for i in range(u.shape[1])})
    for tree, fams, rots in zip(structure.trees, template.families, template.rotations):
        row = []
        cops.append(row)
        for e, fam, rot in zip(tree, fams, rots):
            D = frozenset(e.conditioning)
            a, b = e.conditioned
            row.append(_fit_edge(cond.get(a, D), cond.get(b, D), fam, rot))
    return VineCopula(structure, cops, u.shape[0])


def vine_sample(vine: VineCopula, n: int, seed=None) -> np.ndarray:
    if not isinstance(vine, VineCopula):
        raise VineError("vine_sample needs a fitted VineCopula")
    return vine.sample(n, seed)


def vine_cdf(vine: VineCopula, u, K: int = DEFAULT_MC_SAMPLES, seed: int = 0, method: str = "auto"):
    """Joint CDF of a fitted vine; scalar for a single point, array for rows."""
    arr = np.asarray(u, dtype=float)
    out = vine.cdf(arr, K=K, seed=seed, method=method)
    return float(out[0]) if arr.ndim == 1 else out
