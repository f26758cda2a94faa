import mpmath as mp
import numpy as np
import pytest
from scipy import stats

from botied.copula import kendall_tau
from botied.testbed import (PoolDataset, branin_currin, copulabc_generate, dtlz2, load_csv_pool, make_problem,
                            write_csv_pool)


def branin_currin_mp(x1, x2):
    mp.mp.dps = 50
    x1, x2 = mp.mpf(x1), mp.mpf(x2)
    a, b = 15 * x1 - 5, 15 * x2
    f1 = -(b - mp.mpf("5.1") / (4 * mp.pi ** 2) * a ** 2 + 5 / mp.pi * a - 6) ** 2 \
        + 10 * (1 - 1 / (8 * mp.pi)) * mp.cos(a) + 10
    f2 = -(1 - mp.exp(-1 / (2 * x2))) * (2300 * x1 ** 3 + 1900 * x1 ** 2 + 2092 * x1 + 60) \
        / (100 * x1 ** 3 + 500 * x1 ** 2 + 4 * x1 + 20)
    return float(f1), float(f2)


class TestBraninCurrin:
    def test_golden_center(self):
        assert np.allclose(branin_currin([0.5, 0.5]), branin_currin_mp(0.5, 0.5), rtol=1e-13)

    def test_random_points_match_high_precision(self):
        for x in np.random.default_rng(0).random((20, 2)):
            assert np.allclose(branin_currin(x), branin_currin_mp(*x), rtol=1e-12, atol=1e-12)

    def test_near_zero_x2(self):
        assert np.all(np.isfinite(branin_currin([0.3, 1e-9])))
        assert np.isfinite(branin_currin([0.3, 0.0])).all()

    def test_pure(self):
        x = np.array([0.21, 0.77])
        assert np.array_equal(branin_currin(x), branin_currin(x))

    def test_domain(self):
        with pytest.raises(ValueError):
            branin_currin([1.2, 0.5])
        with pytest.raises(ValueError):
            branin_currin([0.1, 0.2, 0.3])

    def test_finite_everywhere(self):
        X = np.random.default_rng(1).random((100_000, 2))
        assert np.all(np.isfinite(branin_currin(X)))


class TestDtlz2:
    @pytest.mark.parametrize("M", [4, 6, 8])
    def test_sphere(self, M):
        X = np.random.default_rng(M).random((100, 9))
        X[:, M - 1:] = 0.5
        assert np.max(np.abs((dtlz2(X, M) ** 2).sum(1) - 1)) < 1e-12

    def test_zero_head(self):
        x = np.full(9, 0.5)
        x[:3] = 0
        f = dtlz2(x, 4)
        assert f[0] == pytest.approx(-1.0)
        assert np.allclose(f[1:], 0.0, atol=1e-15)

    def test_bound(self):
        X = np.random.default_rng(2).random((10_000, 9))
        g = ((X[:, 5:] - 0.5) ** 2).sum(1)
        assert np.all(np.abs(dtlz2(X, 6)) <= (1 + g)[:, None] + 1e-12)

    def test_d_less_than_M(self):
        with pytest.raises(ValueError):
            dtlz2(np.zeros(3), 4)

    def test_finite_everywhere(self):
        assert np.all(np.isfinite(dtlz2(np.random.default_rng(3).random((100_000, 9)), 8)))


class TestCopulaBC:
    def test_beta_median(self):
        assert stats.beta(2, 2).ppf(0.5) == pytest.approx(0.5)

    def test_tau_and_support(self):
        pool = copulabc_generate(5000, 2.0, 0)
        Y = pool.true_objectives
        assert abs(kendall_tau(Y[:, 0], Y[:, 1]) - 0.5) <= 0.03
        assert np.all((Y > 0) & (Y < 1))
        assert np.all((pool.designs >= 0) & (pool.designs <= 1))

    def test_upper_tail(self):
        Y = copulabc_generate(5000, 2.0, 1).true_objectives
        q = stats.beta(2, 2).ppf(0.1)
        assert np.mean((Y[:, 0] > 1 - q) & (Y[:, 1] > 1 - q)) > np.mean((Y[:, 0] < q) & (Y[:, 1] < q))

    def test_deterministic(self):
        a, b = copulabc_generate(300, 1.5, 7), copulabc_generate(300, 1.5, 7)
        assert np.array_equal(a.designs, b.designs)
        assert np.array_equal(a.true_objectives, b.true_objectives)

    def test_invalid(self):
        with pytest.raises(ValueError):
            copulabc_generate(100, 0.0, 0)
        with pytest.raises(ValueError):
            copulabc_generate(1, 2.0, 0)


class TestCsvPool:
    def test_small_file(self, tmp_path):
        p = tmp_path / "pool.csv"
        p.write_text("x_a,x_b,y_1,y_2\n1,2,0.5,0.1\n3,4,0.2,0.3\n5,6,0.9,0.0\n")
        pool = load_csv_pool(p)
        assert len(pool) == 3 and pool.d == 2 and pool.M == 2
        assert pool.designs[:, 0].tolist() == [0.0, 0.5, 1.0]
        assert pool.scaler.low.tolist() == [1.0, 2.0]

    def test_non_numeric(self, tmp_path):
        p = tmp_path / "pool.csv"
        p.write_text("x_a,y_1,y_2\n1,0.5,0.1\n2,abc,0.3\n")
        with pytest.raises(ValueError, match="row 2"):
            load_csv_pool(p)

    def test_width_and_columns(self, tmp_path):
        p = tmp_path / "pool.csv"
        p.write_text("x_a,y_1,y_2\n1,0.5\n")
        with pytest.raises(ValueError, match="row 1"):
            load_csv_pool(p)
        p.write_text("a,y_1,y_2\n1,0.5,0.2\n")
        with pytest.raises(ValueError, match="x_"):
            load_csv_pool(p)

    def test_round_trip(self, tmp_path):
        pool = copulabc_generate(50, 2.0, 3)
        write_csv_pool(pool, tmp_path / "a.csv")
        back = load_csv_pool(tmp_path / "a.csv")
        assert np.allclose(back.scaler.inverse(back.designs), pool.designs, atol=1e-12)
        assert np.allclose(back.true_objectives, pool.true_objectives, atol=1e-12)
        write_csv_pool(back, tmp_path / "b.csv")
        again = load_csv_pool(tmp_path / "b.csv")
        assert np.allclose(again.designs, back.designs, atol=1e-12)


class TestRegistry:
    def test_problems(self, tmp_path):
        bc = make_problem("branin_currin")
        assert (bc.d, bc.M, bc.metadata["branin_r"]) == (2, 2, 6.0)
        dz = make_problem("dtlz2", d=9, M=6)
        assert dz(np.full((1, 9), 0.5)).shape == (1, 6)
        cb = make_problem("copulabc", n=100)
        assert cb.is_lookup and len(cb.pool) == 100
        with pytest.raises(TypeError):
            cb(np.zeros((1, 2)))
        with pytest.raises(ValueError):
            make_problem("penicillin")

    def test_pool_validation(self):
        with pytest.raises(ValueError):
            PoolDataset(np.zeros((3, 2)), np.zeros((2, 2)))
