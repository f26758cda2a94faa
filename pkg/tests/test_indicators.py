import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from botied.core import pareto_front, set_weakly_dominates
from botied.indicators import (CdfEstimator, cdf_indicator, greedy_topk, hv_improvement, hv_improvement_2d,
                               hypervolume)


def mc_volume(P, ref, n, seed):
    rng = np.random.default_rng(seed)
    hi = P.max(0)
    S = ref + rng.random((n, P.shape[1])) * (hi - ref)
    dom = np.zeros(n, dtype=bool)
    for p in P:
        dom |= np.all(S <= p, axis=1)
    return dom.mean() * np.prod(hi - ref)


def sweep_2d(P, ref):
    P = sorted(map(tuple, P), key=lambda p: -p[0])
    area, best = 0.0, ref[1]
    for x, y in P:
        if y > best:
            area += (x - ref[0]) * (y - best)
            best = y
    return area


class TestHypervolume:
    def test_examples(self):
        assert hypervolume([(1, 1)], (0, 0)) == 1.0
        assert hypervolume([(2, 1), (1, 2)], (0, 0)) == 3.0

    def test_points_below_reference_ignored(self):
        assert hypervolume([(1, 1), (-1, 5)], (0, 0)) == 1.0
        assert hypervolume([(-1, -1)], (0, 0)) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            hypervolume([(1, 1)], (0, 0, 0))

    def test_two_d_sweep(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            P = rng.random((rng.integers(1, 20), 2))
            assert hypervolume(P, np.zeros(2)) == pytest.approx(sweep_2d(P, np.zeros(2)), rel=1e-12)

    @pytest.mark.parametrize("M", [3, 4])
    def test_against_rejection_sampling(self, M):
        rng = np.random.default_rng(M)
        P = rng.random((12, M)) + 0.1
        ref = np.zeros(M)
        assert hypervolume(P, ref) == pytest.approx(mc_volume(P, ref, 400_000, 1), rel=0.02)

    def test_inclusion_exclusion_3d(self):
        P = np.array([[3.0, 1.0, 1.0], [1.0, 3.0, 1.0], [1.0, 1.0, 3.0]])
        # three boxes of volume 3 with pairwise and triple overlaps of 1
        assert hypervolume(P, np.zeros(3)) == pytest.approx(9 - 3 + 1)

    def test_scale_law(self):
        rng = np.random.default_rng(2)
        P, ref = rng.random((10, 3)), -rng.random(3)
        c = 2.5
        assert hypervolume(c * P, c * ref) == pytest.approx(c ** 3 * hypervolume(P, ref), rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 4), st.integers(1, 12), st.integers(0, 10_000))
    def test_monotone(self, M, n, seed):
        rng = np.random.default_rng(seed)
        P = rng.random((n, M))
        x = rng.random(M)
        assert hypervolume(np.vstack([P, x]), np.zeros(M)) >= hypervolume(P, np.zeros(M)) - 1e-12


class TestImprovement:
    def test_examples(self):
        assert hv_improvement([(2, 2)], (1, 1), (0, 0)) == 0.0
        assert hv_improvement(np.empty((0, 2)), (1, 1), (0, 0)) == 1.0

    def test_definitional(self):
        rng = np.random.default_rng(3)
        for M in (2, 3, 4):
            for _ in range(30):
                P = rng.random((rng.integers(1, 10), M))
                c = rng.random(M)
                ref = np.zeros(M)
                diff = hypervolume(np.vstack([P, c]), ref) - hypervolume(P, ref)
                assert hv_improvement(P, c, ref) == pytest.approx(max(diff, 0.0), abs=1e-12)

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            P = rng.random((rng.integers(0, 8), 2))
            C = rng.random((15, 2)) * 1.2 - 0.1
            ref = np.array([0.05, 0.1])
            expected = [hv_improvement(P, c, ref) for c in C]
            assert np.allclose(hv_improvement_2d(P, C, ref), expected, atol=1e-12)


@pytest.fixture(scope="module")
def reference_sample():
    rng = np.random.default_rng(5)
    Z = rng.multivariate_normal(np.zeros(3), [[1, -0.3, 0.2], [-0.3, 1, 0.1], [0.2, 0.1, 1]], size=200)
    return Z


class TestCdfIndicator:
    def test_whole_reference(self, reference_sample):
        est = CdfEstimator(reference_sample)
        assert cdf_indicator(reference_sample, est) == np.max(est.scores(reference_sample))

    def test_componentwise_max_is_largest(self, reference_sample):
        est = CdfEstimator(reference_sample)
        top = cdf_indicator(reference_sample.max(0, keepdims=True), est)
        assert top >= cdf_indicator(reference_sample, est)

    def test_empty_and_unfitted(self, reference_sample):
        with pytest.raises(ValueError):
            cdf_indicator(np.empty((0, 3)), CdfEstimator(reference_sample))
        with pytest.raises(ValueError):
            cdf_indicator(reference_sample, None)

    def test_front_attains_max(self, reference_sample):
        est = CdfEstimator(reference_sample)
        A = reference_sample[:40]
        assert cdf_indicator(A, est) == cdf_indicator(pareto_front(A).members, est)

    def test_pareto_compliance(self, reference_sample):
        est = CdfEstimator(reference_sample)
        rng = np.random.default_rng(6)
        trials = 0
        while trials < 60:
            B = rng.normal(size=(rng.integers(1, 6), 3))
            A = B + rng.random(B.shape) * rng.integers(0, 2, size=B.shape)
            if not (set_weakly_dominates(A, B) and not set_weakly_dominates(B, A)):
                continue
            trials += 1
            assert cdf_indicator(A, est) >= cdf_indicator(B, est)

    def test_transform_invariance(self, reference_sample):
        A = reference_sample[:10] + 0.1
        R2, A2 = reference_sample.copy(), A.copy()
        R2[:, 1], A2[:, 1] = np.exp(R2[:, 1]), np.exp(A2[:, 1])
        assert cdf_indicator(A, CdfEstimator(reference_sample)) == cdf_indicator(A2, CdfEstimator(R2))


class TestGreedyTopk:
    @pytest.mark.parametrize("kind", ["cdf", "hypervolume"])
    def test_full_permutation(self, kind):
        P = np.random.default_rng(7).random((12, 2))
        assert sorted(greedy_topk(P, 12, kind)) == list(range(12))

    @pytest.mark.parametrize("kind", ["cdf", "hypervolume"])
    def test_dominator_first(self, kind):
        P = np.random.default_rng(8).random((15, 2))
        P[6] = [2.0, 2.0]
        assert greedy_topk(P, 3, kind)[0] == 6

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            greedy_topk(np.zeros((3, 2)), 4, "cdf")

    def test_hv_greedy_gains_decrease(self):
        P = np.random.default_rng(9).random((20, 3))
        ref = np.zeros(3)
        order = greedy_topk(P, 6, "hypervolume", ref)
        hvs = [hypervolume(P[order[:k]], ref) for k in range(1, 7)]
        gains = np.diff([0.0] + hvs)
        assert np.all(np.diff(gains) <= 1e-12)

    def test_scaling_leaves_cdf_top5(self):
        P = np.random.default_rng(10).normal(size=(60, 2))
        Q = P.copy()
        Q[:, 1] *= 1000
        assert set(greedy_topk(P, 5, "cdf")) == set(greedy_topk(Q, 5, "cdf"))
