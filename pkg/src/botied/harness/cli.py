"""Command-line entry point: ``botied run|sweep|aggregate|timing|gen-copulabc``."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from threadpoolctl import threadpool_limits

from ..acquisition import KINDS
from ..testbed import copulabc_generate, write_csv_pool
from .config import RunConfig, load_config, save_config
from .runner import run_bo
from .summary import aggregate, read_records, summary_csv, summary_text, timing_benchmark, timing_csv

log = logging.getLogger("botied")


def _config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    if args.output_dir:
        config = replace(config, output_dir=str(args.output_dir))
    return config


def _run_one(config: RunConfig, threads):
    with threadpool_limits(limits=threads):
        record = run_bo(config)
    return config.output_dir, record.final_hv, record.final_cdf


def cmd_run(args) -> int:
    config = _config(args)
    if not config.output_dir:
        config = replace(config, output_dir="out")
    out, hv, cdf = _run_one(config, args.threads)
    print(f"{out}: final HV {hv:.4f}, CDF {cdf:.4f}")
    return 0


def cmd_sweep(args) -> int:
    base = _config(args)
    root = Path(args.output_dir or base.output_dir or "sweep")
    kinds = args.acquisitions or [base.acquisition.kind]
    for k in kinds:
        if k not in KINDS:
            raise SystemExit(f"unknown acquisition {k!r}")
    jobs = []
    for kind in kinds:
        for seed in args.seeds:
            out = root / kind / f"seed_{seed}"
            jobs.append(replace(base, acquisition=replace(base.acquisition, kind=kind),
                                seed=seed, output_dir=str(out)))
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_run_one, jobs, [args.threads] * len(jobs)))
    else:
        results = [_run_one(j, args.threads) for j in jobs]
    for out, hv, cdf in results:
        log.info("%s: HV %.4f CDF %.4f", out, hv, cdf)
    rows = aggregate(read_records(r[0] for r in results))
    (root / "summary.csv").write_text(summary_csv(rows))
    text = summary_text(rows)
    (root / "summary.txt").write_text(text)
    print(text, end="")
    return 0


def cmd_aggregate(args) -> int:
    dirs = []
    for p in args.runs:
        p = Path(p)
        if (p / "trace.csv").exists():
            dirs.append(p)
        else:
            dirs.extend(sorted(t.parent for t in p.rglob("trace.csv")))
    if not dirs:
        raise SystemExit("no run directories found")
    rows = aggregate(read_records(dirs))
    text = summary_text(rows)
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.csv").write_text(summary_csv(rows))
        (out / "summary.txt").write_text(text)
    print(text, end="")
    return 0


def cmd_timing(args) -> int:
    with threadpool_limits(limits=args.threads):
        rows = timing_benchmark(args.problem, args.M, args.acquisitions, args.repeats, N=args.N,
                                L=args.L, n_observed=args.n_observed, nehvi_max_M=args.nehvi_max_M)
    text = timing_csv(rows)
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "timing.csv").write_text(text)
    print(text, end="")
    return 0


def cmd_gen_copulabc(args) -> int:
    pool = copulabc_generate(args.n, args.theta, args.seed)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv_pool(pool, out)
    print(f"wrote {len(pool)} rows to {out}")
    return 0


def cmd_init_config(args) -> int:
    save_config(RunConfig(), args.path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="botied", description="Multi-objective BO experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", help="YAML run configuration")
        sp.add_argument("--output-dir", help="output directory (overrides the config)")
        sp.add_argument("--threads", type=int, default=None, help="BLAS thread limit")
        if seed:
            sp.add_argument("--seed", type=int, default=None)

    sp = sub.add_parser("run", help="run one BO replicate")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="run acquisitions x seeds and aggregate")
    common(sp, seed=False)
    sp.add_argument("--acquisitions", nargs="+", default=None)
    sp.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2, 3, 4])
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("aggregate", help="summarize finished runs")
    sp.add_argument("runs", nargs="+", help="run directories or their parents")
    sp.add_argument("--output-dir")
    sp.set_defaults(func=cmd_aggregate)

    sp = sub.add_parser("timing", help="per-call acquisition wall time")
    sp.add_argument("--problem", default="dtlz2")
    sp.add_argument("--M", nargs="+", type=int, default=[2, 4, 6])
    sp.add_argument("--acquisitions", nargs="+", default=["botied_v1", "botied_v2", "nehvi", "nparego"])
    sp.add_argument("--repeats", type=int, default=3)
    sp.add_argument("--N", type=int, default=100)
    sp.add_argument("--L", type=int, default=20)
    sp.add_argument("--n-observed", type=int, default=30)
    sp.add_argument("--nehvi-max-M", type=int, default=None)
    sp.add_argument("--output-dir")
    sp.add_argument("--threads", type=int, default=None)
    sp.set_defaults(func=cmd_timing)

    sp = sub.add_parser("gen-copulabc", help="write a CopulaBC lookup pool as CSV")
    sp.add_argument("--n", type=int, default=2000)
    sp.add_argument("--theta", type=float, default=2.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--output", required=True)
    sp.set_defaults(func=cmd_gen_copulabc)

    sp = sub.add_parser("init-config", help="write the default configuration")
    sp.add_argument("path")
    sp.set_defaults(func=cmd_init_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
