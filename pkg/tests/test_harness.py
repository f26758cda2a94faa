import csv
import math

import numpy as np
import pytest
import yaml

from botied.acquisition import AcquisitionSpec
from botied.harness import (ProblemConfig, RunConfig, RunError, RunRecord, aggregate, dump_config, load_config,
                            run_bo, summary_csv, summary_text, timing_benchmark)
from botied.harness.cli import main
from botied.testbed import copulabc_generate, write_csv_pool


def small(kind="random", **kw):
    base = dict(acquisition=AcquisitionSpec(kind=kind), T=3, B=2, pool_size=40, L=4, gp_restarts=2)
    base.update(kw)
    return RunConfig(**base)


def fake_record(hv, cdf, seed, kind="random"):
    config = small(kind, seed=seed).resolved(2).to_dict()
    rows = [{"iteration": 1, "n_evaluated": 8, "hypervolume": hv, "cdf_indicator": cdf,
             "acq_time_s": 0.1, "selected": (0, 1)}]
    return RunRecord(config, rows, [0.0, 0.0], [0.1, 0.1])


def read_trace(path, drop=("acq_time_s",)):
    with open(path, newline="") as fh:
        return [{k: v for k, v in row.items() if k not in drop} for row in csv.DictReader(fh)]


class TestConfig:
    def test_defaults(self):
        c = RunConfig().resolved(2)
        assert (c.B, c.pool_size, c.L, c.N0) == (4, 400, 20, 6)

    def test_validation(self):
        with pytest.raises(ValueError):
            RunConfig(T=0)
        with pytest.raises(ValueError):
            RunConfig(N0=1)
        with pytest.raises(ValueError):
            RunConfig.from_dict({"bogus": 1})
        with pytest.raises(ValueError):
            RunConfig.from_dict({"acquisition": {"kind": "nehvi", "bogus": 2}})

    def test_yaml_round_trip(self, tmp_path):
        c = small("nehvi", problem=ProblemConfig("dtlz2", {"d": 5, "M": 3}), seed=4)
        (tmp_path / "c.yaml").write_text(dump_config(c))
        assert load_config(tmp_path / "c.yaml") == c


class TestRunBo:
    def test_bookkeeping(self):
        rec = run_bo(RunConfig(acquisition=AcquisitionSpec(kind="random"), T=1, B=1), write=False)
        assert len(rec.rows) == 1
        assert rec.rows[0]["n_evaluated"] == 6 + 1

    @pytest.mark.parametrize("kind", ["botied_v1", "nehvi", "nparego"])
    def test_trace(self, kind):
        rec = run_bo(small(kind), write=False)
        assert [r["iteration"] for r in rec.rows] == [1, 2, 3]
        hv = [r["hypervolume"] for r in rec.rows]
        assert np.all(np.diff(hv) >= 0)
        assert all(0 <= r["cdf_indicator"] <= 1 for r in rec.rows)
        assert all(r["acq_time_s"] > 0 for r in rec.rows)
        assert len(rec.hyperparameters) == 3

    def test_deterministic(self, tmp_path):
        a = run_bo(small("botied_v2", output_dir=str(tmp_path / "a")))
        b = run_bo(small("botied_v2", output_dir=str(tmp_path / "b")))
        assert read_trace(tmp_path / "a" / "trace.csv") == read_trace(tmp_path / "b" / "trace.csv")
        assert [r["selected"] for r in a.rows] == [r["selected"] for r in b.rows]

    def test_shared_estimator_across_methods(self):
        # same seed, different methods: identical D0, and so identical first reference point
        a, b = run_bo(small("random"), write=False), run_bo(small("botied_v1"), write=False)
        assert a.ref_point == b.ref_point
        assert a.noise_sigma == b.noise_sigma

    def test_outputs_and_rerun_from_resolved_config(self, tmp_path):
        out = tmp_path / "run"
        rec = run_bo(small("nparego", output_dir=str(out)))
        for name in ("trace.csv", "curves.csv", "resolved_config.yaml", "hyperparameters.json"):
            assert (out / name).exists()
        resolved = yaml.safe_load((out / "resolved_config.yaml").read_text())
        assert resolved["resolved"]["ref_point"] == rec.ref_point
        resolved.pop("resolved")
        resolved["output_dir"] = str(tmp_path / "again")
        run_bo(RunConfig.from_dict(resolved))
        assert read_trace(out / "trace.csv") == read_trace(tmp_path / "again" / "trace.csv")
        back = RunRecord.read(out)
        assert back.final_hv == rec.final_hv and back.rows[0]["selected"] == rec.rows[0]["selected"]

    def test_lookup_problem(self, tmp_path):
        write_csv_pool(copulabc_generate(60, 2.0, 0), tmp_path / "p.csv")
        problem = ProblemConfig("csv", {"path": str(tmp_path / "p.csv")})
        rec = run_bo(small("botied_v1", problem=problem, pool_size=20), write=False)
        picked = [i for r in rec.rows for i in r["selected"]]
        assert rec.rows[-1]["n_evaluated"] == 6 + 6
        assert len(picked) == 6

    def test_lookup_exhaustion(self):
        problem = ProblemConfig("copulabc", {"n": 10})
        with pytest.raises(RunError, match="exhausted"):
            run_bo(small("random", problem=problem, T=5, B=2, pool_size=2, N0=4), write=False)

    def test_dtlz_runs(self):
        problem = ProblemConfig("dtlz2", {"d": 5, "M": 3})
        rec = run_bo(small("botied_v1", problem=problem, T=2), write=False)
        assert rec.rows[-1]["n_evaluated"] == 2 * 6 + 4


class TestAggregate:
    def test_single(self):
        (row,) = aggregate([fake_record(5.0, 0.5, 0)])
        assert row.hv_std == 0.0 and row.cdf_std == 0.0 and row.n_seeds == 1

    def test_two(self):
        (row,) = aggregate([fake_record(1.0, 0.2, 0), fake_record(3.0, 0.4, 1)])
        assert row.hv_mean == 2.0
        assert row.hv_std == pytest.approx(math.sqrt(2))

    def test_permutation(self):
        recs = [fake_record(float(h), h / 10, s, k) for s, (h, k) in
                enumerate([(1, "random"), (2, "nehvi"), (7, "random"), (3, "nehvi"), (0.1, "random")])]
        a = aggregate(recs)
        b = aggregate(recs[::-1])
        assert summary_csv(a) == summary_csv(b)
        assert summary_text(a) == summary_text(b)
        assert [r.method for r in a] == ["nehvi", "random"]

    def test_inconsistent(self):
        r = fake_record(1.0, 0.1, 0)
        other = fake_record(1.0, 0.1, 1)
        other.config["T"] = 99
        with pytest.raises(ValueError, match="inconsistent"):
            aggregate([r, other])
        with pytest.raises(ValueError):
            aggregate([])


class TestTiming:
    def test_one_repeat(self):
        rows = timing_benchmark("dtlz2", Ms=(2, 3), acquisitions=("botied_v1", "nehvi"), repeats=1,
                                N=20, L=4, n_observed=8, nehvi_max_M=2)
        assert len(rows) == 4
        for r in rows:
            assert r.skipped == (r.kind == "nehvi" and r.M == 3)
            assert r.skipped or (len(r.times) == 1 and r.median_s > 0)


class TestCli:
    def test_run_sweep_aggregate(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text(dump_config(small("random", T=2)))
        assert main(["run", "--config", str(cfg), "--output-dir", str(tmp_path / "r"), "--seed", "3"]) == 0
        assert (tmp_path / "r" / "trace.csv").exists()
        assert main(["sweep", "--config", str(cfg), "--output-dir", str(tmp_path / "s"),
                     "--acquisitions", "random", "nparego", "--seeds", "0", "1"]) == 0
        assert (tmp_path / "s" / "summary.csv").exists()
        assert main(["aggregate", str(tmp_path / "s"), "--output-dir", str(tmp_path / "agg")]) == 0
        text = (tmp_path / "agg" / "summary.txt").read_text()
        assert "nparego" in text and "random" in text

    def test_gen_copulabc_and_timing(self, tmp_path, capsys):
        assert main(["gen-copulabc", "--n", "40", "--output", str(tmp_path / "p.csv")]) == 0
        assert (tmp_path / "p.csv").read_text().startswith("x_0,x_1,y_0,y_1")
        assert main(["timing", "--M", "2", "--acquisitions", "botied_v2", "--repeats", "1", "--N", "10",
                     "--L", "3", "--n-observed", "6"]) == 0
        assert "botied_v2" in capsys.readouterr().out

    def test_error_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("T: 0\n")
        assert main(["run", "--config", str(bad), "--output-dir", str(tmp_path / "x")]) == 2
        assert "error" in capsys.readouterr().err
