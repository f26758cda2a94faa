"""Cross-seed aggregation and the per-call timing benchmark."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from ..acquisition import AcquisitionSpec, acquire
from ..surrogate import fit_gp_arrays, posterior, sample_posterior
from ..testbed import make_problem
from .runner import RunRecord, reference_point

# fields allowed to differ between records of one comparison
_FREE_KEYS = {"seed", "output_dir", "acquisition"}


@dataclass(frozen=True)
class SummaryRow:
    method: str
    n_seeds: int
    hv_mean: float
    hv_std: float
    cdf_mean: float
    cdf_std: float


def _mean_std(values) -> tuple:
    # sorted so the result does not depend on record order
    v = np.sort(np.asarray(values, dtype=float))
    std = float(np.std(v, ddof=1)) if v.shape[0] > 1 else 0.0
    return float(np.mean(v)), std


def _comparable(config: dict) -> dict:
    c = {k: v for k, v in config.items() if k not in _FREE_KEYS}
    c["acquisition"] = {k: v for k, v in config["acquisition"].items() if k != "seed"}
    return c


def aggregate(records) -> list:
    """Mean and sample standard deviation of the final HV and CDF indicator per method."""
    records = list(records)
    if not records:
        raise ValueError("aggregate needs at least one record")
    base = {k: v for k, v in _comparable(records[0].config).items() if k != "acquisition"}
    groups: dict = {}
    for r in records:
        c = _comparable(r.config)
        acq = c.pop("acquisition")
        if c != base:
            diff = sorted(k for k in set(c) | set(base) if c.get(k) != base.get(k))
            raise ValueError(f"inconsistent configs across records: {diff}")
        key = r.method
        if key in groups and groups[key][0] != acq:
            raise ValueError(f"inconsistent acquisition settings for {key}")
        groups.setdefault(key, (acq, []))[1].append(r)
    rows = []
    for method in sorted(groups):
        recs = groups[method][1]
        seeds = [r.seed for r in recs]
        if len(set(seeds)) != len(seeds):
            raise ValueError(f"duplicate seeds for {method}")
        hv = _mean_std([r.final_hv for r in recs])
        cdf = _mean_std([r.final_cdf for r in recs])
        rows.append(SummaryRow(method, len(recs), hv[0], hv[1], cdf[0], cdf[1]))
    return rows


SUMMARY_COLUMNS = ("method", "n_seeds", "hv_mean", "hv_std", "cdf_mean", "cdf_std")


def summary_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in rows:
        w.writerow([r.method, r.n_seeds, repr(r.hv_mean), repr(r.hv_std), repr(r.cdf_mean), repr(r.cdf_std)])
    return buf.getvalue()


def summary_text(rows) -> str:
    table = [("method", "seeds", "HV", "CDF")]
    for r in rows:
        table.append((r.method, str(r.n_seeds), f"{r.hv_mean:.2f} ({r.hv_std:.2f})",
                      f"{r.cdf_mean:.3f} ({r.cdf_std:.3f})"))
    widths = [max(len(row[i]) for row in table) for i in range(4)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TimingRow:
    M: int
    kind: str
    median_s: float  # NaN when skipped
    times: tuple
    skipped: bool = False


def _timing_inputs(problem_name: str, M: int, N: int, L: int, n_observed: int, seed: int):
    d = max(9, M) if problem_name == "dtlz2" else None
    problem = make_problem(problem_name, **({"d": d, "M": M} if d else {}))
    rng = np.random.default_rng(seed)
    X = rng.random((n_observed, problem.d))
    Y = problem(X)
    Y_obs = Y + 0.01 * (Y.max(0) - Y.min(0)) * rng.normal(size=Y.shape)
    pool = rng.random((N, problem.d))
    models = [fit_gp_arrays(X, Y_obs[:, m], seed=seed + m) for m in range(problem.M)]
    samples = sample_posterior(posterior(models, np.vstack([X, pool])), L, seed).values
    return samples[:, n_observed:], samples[:, :n_observed], reference_point(Y), Y_obs


def timing_benchmark(problem: str = "dtlz2", Ms=(2, 4, 6), acquisitions=("botied_v1", "nehvi"),
                     repeats: int = 3, N: int = 100, L: int = 20, n_observed: int = 30,
                     nehvi_max_M=None, seed: int = 0, B: int = 1) -> list:
    """Median wall time of one acquisition scoring round per (M, acquisition)."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    rows = []
    for M in Ms:
        pool_s, obs_s, ref, Y_obs = _timing_inputs(problem, M, N, L, n_observed, seed)
        for kind in acquisitions:
            if kind == "nehvi" and nehvi_max_M is not None and M > nehvi_max_M:
                rows.append(TimingRow(M, kind, float("nan"), (), True))
                continue
            spec = AcquisitionSpec(kind=kind, seed=seed)
            times = []
            for _ in range(repeats):
                # each call rebuilds its estimator, so no cache carries over
                start = time.perf_counter()
                acquire(spec, pool_s, obs_s, ref=ref, B=B, observed_Y=Y_obs)
                times.append(time.perf_counter() - start)
            rows.append(TimingRow(M, kind, float(np.median(times)), tuple(times)))
    return rows


def timing_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["M", "acquisition", "median_s", "n_calls", "skipped"])
    for r in rows:
        w.writerow([r.M, r.kind, "" if r.skipped else repr(r.median_s), len(r.times), int(r.skipped)])
    return buf.getvalue()


def read_records(paths) -> list:
    return [RunRecord.read(p) for p in paths]
