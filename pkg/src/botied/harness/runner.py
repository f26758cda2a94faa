"""The batched, pool-based BO loop and its run record."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from ..acquisition import acquire
from ..indicators import CdfEstimator, cdf_indicator, hypervolume
from ..surrogate import SurrogateError, fit_gp_arrays, posterior, sample_posterior
from ..testbed import Problem, make_problem
from .config import RunConfig, dump_config

TRACE_COLUMNS = ("iteration", "n_evaluated", "hypervolume", "cdf_indicator", "acq_time_s", "selected")
WALL_TIME_COLUMNS = ("acq_time_s",)
STREAMS = ("init", "pool", "noise", "gp", "posterior", "acquisition")


class RunError(RuntimeError):
    pass


@dataclass
class RunRecord:
    config: dict
    rows: list
    ref_point: list
    noise_sigma: list
    hyperparameters: list = field(default_factory=list)

    @property
    def method(self) -> str:
        return RunConfig.from_dict(self.config).method_key()

    @property
    def seed(self) -> int:
        return int(self.config["seed"])

    @property
    def final_hv(self) -> float:
        return float(self.rows[-1]["hypervolume"])

    @property
    def final_cdf(self) -> float:
        return float(self.rows[-1]["cdf_indicator"])

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "trace.csv").open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS)
            w.writeheader()
            for row in self.rows:
                w.writerow({k: _fmt(row[k]) for k in TRACE_COLUMNS})
        with (out / "curves.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "seed", "iteration", "metric", "value"])
            for row in self.rows:
                for metric in ("hypervolume", "cdf_indicator"):
                    w.writerow([self.method, self.seed, row["iteration"], metric, _fmt(row[metric])])
        resolved = dict(self.config)
        resolved["resolved"] = {"ref_point": self.ref_point, "noise_sigma": self.noise_sigma}
        (out / "resolved_config.yaml").write_text(yaml.safe_dump(resolved, sort_keys=False))
        (out / "hyperparameters.json").write_text(json.dumps(self.hyperparameters, indent=1))
        return out

    @classmethod
    def read(cls, run_dir) -> "RunRecord":
        run_dir = Path(run_dir)
        config = yaml.safe_load((run_dir / "resolved_config.yaml").read_text())
        extra = config.pop("resolved", {})
        rows = []
        with (run_dir / "trace.csv").open(newline="") as fh:
            for r in csv.DictReader(fh):
                rows.append({
                    "iteration": int(r["iteration"]),
                    "n_evaluated": int(r["n_evaluated"]),
                    "hypervolume": float(r["hypervolume"]),
                    "cdf_indicator": float(r["cdf_indicator"]),
                    "acq_time_s": float(r["acq_time_s"]),
                    "selected": tuple(int(i) for i in r["selected"].split(";") if i),
                })
        hp_path = run_dir / "hyperparameters.json"
        hp = json.loads(hp_path.read_text()) if hp_path.exists() else []
        return cls(config, rows, extra.get("ref_point", []), extra.get("noise_sigma", []), hp)


def _fmt(value):
    if isinstance(value, tuple):
        return ";".join(str(i) for i in value)
    if isinstance(value, float):
        return repr(value)
    return value


def _streams(seed: int) -> dict:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(c) for name, c in zip(STREAMS, children)}


def _seed_from(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**31 - 1))


def reference_point(Y: np.ndarray) -> np.ndarray:
    """Componentwise minimum minus 1% of the range."""
    lo, hi = Y.min(0), Y.max(0)
    return lo - 0.01 * (hi - lo)


class _Loop:
    """State of one replicate: evaluated designs and their true/noisy objectives."""

    def __init__(self, config: RunConfig, problem: Problem):
        self.problem = problem
        self.config = config.resolved(problem.d)
        c = self.config
        self.rng = _streams(c.seed)
        self.sigma = c.noise_fraction * problem.objective_range()
        if problem.is_lookup:
            n = len(problem.pool)
            if c.N0 + c.B > n:
                raise RunError(f"lookup pool of {n} points is too small for N0={c.N0} plus a batch")
            self.idx = list(self.rng["init"].choice(n, size=c.N0, replace=False))
            self.X = problem.pool.designs[self.idx].copy()
            self.Y_true = problem.pool.true_objectives[self.idx].copy()
        else:
            self.idx = []
            self.X = self.rng["init"].random((c.N0, problem.d))
            self.Y_true = problem(self.X)
        self.Y_obs = self.Y_true + self.rng["noise"].normal(size=self.Y_true.shape) * self.sigma
        self.ref = reference_point(self.Y_true)
        self._fixed_pool = None
        self._pools = None
        if not problem.is_lookup:
            # continuous pools depend only on the seed, so they can be drawn up front
            if c.resample_pool:
                self._pools = [self.rng["pool"].random((c.pool_size, problem.d)) for _ in range(c.T)]
            else:
                self._fixed_pool = self.rng["pool"].random((c.pool_size, problem.d))

    def pool(self, t: int):
        """Candidate designs (and lookup indices) for iteration ``t`` (1-based)."""
        c = self.config
        if not self.problem.is_lookup:
            P = self._pools[t - 1] if self._pools is not None else self._fixed_pool
            return P, None
        available = np.setdiff1d(np.arange(len(self.problem.pool)), self.idx)
        if available.shape[0] < c.B:
            raise RunError(f"iteration {t}: lookup pool exhausted ({available.shape[0]} left)")
        size = min(c.pool_size, available.shape[0])
        chosen = np.sort(self.rng["pool"].choice(available, size=size, replace=False))
        return self.problem.pool.designs[chosen], chosen

    def metric_reference(self) -> np.ndarray:
        """Reference sample of the shared CDF estimator."""
        if self.problem.is_lookup:
            return self.problem.pool.true_objectives
        last = self._pools[-1] if self._pools is not None else self._fixed_pool
        return np.vstack([self.problem(last), self.Y_true[:self.config.N0]])

    def evaluate(self, designs, lookup):
        if lookup is not None:
            Y = self.problem.pool.true_objectives[lookup]
            self.idx.extend(int(i) for i in lookup)
        else:
            Y = self.problem(designs)
        noisy = Y + self.rng["noise"].normal(size=Y.shape) * self.sigma
        self.X = np.vstack([self.X, designs])
        self.Y_true = np.vstack([self.Y_true, Y])
        self.Y_obs = np.vstack([self.Y_obs, noisy])


def run_bo(config: RunConfig, write: bool = True, problem: Optional[Problem] = None) -> RunRecord:
    """Run one BO replicate; writes the record to ``config.output_dir`` when set."""
    problem = problem or make_problem(config.problem.name, **config.problem.params)
    loop = _Loop(config, problem)
    c = loop.config
    mc = c.metric
    estimator = CdfEstimator(loop.metric_reference(), mc.family_policy, K=mc.mc_samples, seed=mc.seed)
    rows, hypers = [], []
    for t in range(1, c.T + 1):
        designs, lookup = loop.pool(t)
        gp_seed = _seed_from(loop.rng["gp"])
        post_seed = _seed_from(loop.rng["posterior"])
        acq_seed = _seed_from(loop.rng["acquisition"])
        spec = replace(c.acquisition, seed=acq_seed)
        n_obs = loop.X.shape[0]
        pool_s = obs_s = None
        if spec.kind != "random":
            try:
                models = [fit_gp_arrays(loop.X, loop.Y_obs[:, m], seed=gp_seed + m, n_restarts=c.gp_restarts)
                          for m in range(problem.M)]
                joint = posterior(models, np.vstack([loop.X, designs]))
                samples = sample_posterior(joint, c.L, post_seed).values
            except SurrogateError as exc:
                raise RunError(f"iteration {t}: surrogate failure: {exc}") from exc
            hypers.append({"iteration": t, "models": [m.hyperparameters() for m in models]})
            obs_s, pool_s = samples[:, :n_obs], samples[:, n_obs:]
        else:
            pool_s = np.zeros((1, designs.shape[0], problem.M))
        start = time.perf_counter()
        result = acquire(spec, pool_s, obs_s, ref=loop.ref, B=c.B, observed_Y=loop.Y_obs)
        elapsed = max(time.perf_counter() - start, 1e-9)
        sel = np.asarray(result.selected)
        loop.evaluate(designs[sel], None if lookup is None else lookup[sel])
        rows.append({
            "iteration": t,
            "n_evaluated": int(loop.X.shape[0]),
            "hypervolume": hypervolume(loop.Y_true, loop.ref),
            "cdf_indicator": cdf_indicator(loop.Y_true, estimator),
            "acq_time_s": elapsed,
            "selected": tuple(int(i) for i in result.selected),
        })
    record = RunRecord(c.to_dict(), rows, loop.ref.tolist(), loop.sigma.tolist(), hypers)
    if write and c.output_dir:
        record.write(c.output_dir)
    return record
