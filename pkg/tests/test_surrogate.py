import numpy as np
import pytest

from botied.core import Dataset
from botied.surrogate import (NOISE_FLOOR, GaussianProcessModel, KernelSpec, Posterior, SurrogateError,
                              fit_gp, fit_gp_arrays, posterior, sample_posterior, stable_cholesky)


def smooth(x):
    return np.sin(6 * x[:, 0]) + 0.5 * x[:, 0]


class TestFit:
    def test_interpolates_noiseless_line(self):
        X = np.linspace(0, 1, 5)[:, None]
        model = fit_gp(Dataset.from_arrays(X, np.c_[X[:, 0], -X[:, 0]]), 0)
        mean, _ = model.predict(X)
        # at the learned noise floor the residual is exactly noise * alpha
        expected = model.noise_variance * model._alpha * model.output_scale
        assert np.allclose(X[:, 0] - mean, expected, atol=1e-10)
        assert model.noise_variance == pytest.approx(NOISE_FLOOR)
        assert np.max(np.abs(mean - X[:, 0])) < 1e-3

    def test_constant_targets(self):
        X = np.random.default_rng(0).random((6, 2))
        model = fit_gp_arrays(X, np.full(6, 3.5))
        Xq = np.random.default_rng(1).random((20, 2))
        mean, var = model.predict(Xq)
        assert np.allclose(mean, 3.5)
        assert np.all(var <= NOISE_FLOOR)

    def test_beats_mean_predictor_on_held_out(self):
        rng = np.random.default_rng(3)
        X = rng.random((40, 1))
        y = smooth(X)
        model = fit_gp_arrays(X[:30], y[:30], seed=0)
        pred, _ = model.predict(X[30:])
        rmse_gp = np.sqrt(np.mean((pred - y[30:]) ** 2))
        rmse_mean = np.sqrt(np.mean((y[:30].mean() - y[30:]) ** 2))
        assert rmse_gp < rmse_mean

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            fit_gp(Dataset.from_arrays(np.zeros((1, 1)), np.zeros((1, 2))), 0)

    def test_lml_trace_non_decreasing(self):
        rng = np.random.default_rng(4)
        X = rng.random((25, 2))
        model = fit_gp_arrays(X, smooth(X) + 0.05 * rng.normal(size=25), seed=1)
        trace = np.asarray(model.fit_info["trace"])
        assert trace.size > 0
        assert np.all(np.diff(trace) >= -1e-8 * np.maximum(1.0, np.abs(trace[1:])))

    def test_scaling_equivariance(self):
        rng = np.random.default_rng(5)
        X = rng.random((15, 2))
        y = smooth(X)
        a = fit_gp_arrays(X, y, seed=0)
        c = 7.0
        frozen = GaussianProcessModel(a.kernel, a.noise_variance, X, a.train_targets,
                                      c * a.output_offset, c * a.output_scale)
        Xq = rng.random((10, 2))
        assert np.allclose(frozen.predict(Xq)[0], c * a.predict(Xq)[0], rtol=1e-12, atol=1e-12)
        pa = sample_posterior(posterior([a], Xq), 4, 9).values
        pb = sample_posterior(posterior([frozen], Xq), 4, 9).values
        assert np.allclose(pb, c * pa, rtol=1e-12, atol=1e-12)
        # a real refit agrees up to optimizer tolerance
        b = fit_gp_arrays(X, c * y, seed=0)
        assert np.allclose(b.predict(Xq)[0], c * a.predict(Xq)[0], rtol=1e-4, atol=1e-4)

class TestPosterior:
    @pytest.fixture(scope="class")
    @staticmethod
    def model():
        rng = np.random.default_rng(6)
        X = rng.random((12, 1)) * 0.2
        return fit_gp_arrays(X, smooth(X) + 0.01 * rng.normal(size=12), seed=0)

    def test_symmetric_psd(self, model):
        pool = np.random.default_rng(7).random((40, 1))
        (post,) = posterior([model], pool)
        assert np.max(np.abs(post.cov - post.cov.T)) < 1e-10
        assert np.linalg.eigvalsh(post.cov).min() >= -1e-10

    def test_single_point(self, model):
        (post,) = posterior([model], np.array([[0.5]]))
        _, var = model.predict(np.array([[0.5]]))
        assert post.cov.shape == (1, 1)
        assert post.cov[0, 0] >= 0
        assert post.cov[0, 0] == pytest.approx(var[0], rel=1e-6, abs=1e-10)

    def test_training_inputs(self):
        X = np.linspace(0, 1, 6)[:, None]
        model = fit_gp_arrays(X, X[:, 0] ** 2)
        (post,) = posterior([model], X)
        assert np.allclose(X[:, 0] ** 2 - post.mean, model.noise_variance * model._alpha * model.output_scale,
                           atol=1e-10)
        assert np.max(np.abs(post.mean - X[:, 0] ** 2)) < 1e-3

    def test_distant_points_decorrelate(self):
        kernel = KernelSpec(np.array([0.05]), 1.0)
        X = np.array([[0.0], [0.02]])
        model = GaussianProcessModel(kernel, NOISE_FLOOR, X, np.array([0.0, 1.0]))
        (post,) = posterior([model], np.array([[0.3], [0.9]]))
        corr = post.cov[0, 1] / np.sqrt(post.cov[0, 0] * post.cov[1, 1])
        assert abs(corr) < 0.1

    def test_dimension_mismatch(self, model):
        with pytest.raises(ValueError):
            posterior([model], np.zeros((3, 2)))


class TestSampling:
    def test_clt_bound(self):
        X = np.random.default_rng(8).random((10, 1))
        model = fit_gp_arrays(X, smooth(X), seed=0)
        x = np.array([[0.37]])
        (post,) = posterior([model], x)
        s = sample_posterior([post], 1000, 0).values[:, 0, 0]
        sd = np.sqrt(post.cov[0, 0])
        assert abs(s.mean() - post.mean[0]) <= 4 * sd / np.sqrt(1000)

    def test_zero_variance(self):
        post = Posterior(np.array([1.0, 2.0]), np.zeros((2, 2)), None)
        s = sample_posterior([post, post], 5, 0).values
        assert s.shape == (5, 2, 2)
        assert np.all(s == np.array([1.0, 2.0])[None, :, None])

    def test_deterministic(self):
        post = Posterior(np.zeros(3), np.eye(3), None)
        a = sample_posterior([post], 7, 11).values
        b = sample_posterior([post], 7, 11).values
        assert np.array_equal(a, b)

    def test_bad_L(self):
        with pytest.raises(ValueError):
            sample_posterior([Posterior(np.zeros(1), np.eye(1), None)], 0, 0)


class TestCholesky:
    def test_escalates_jitter(self):
        v = np.ones((3, 1))
        L, jitter = stable_cholesky(v @ v.T)
        assert jitter > 0
        assert np.allclose(L @ L.T, v @ v.T + jitter * np.eye(3), atol=1e-12)

    def test_failure_reports_condition(self):
        K = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(SurrogateError, match="condition"):
            stable_cholesky(K)
