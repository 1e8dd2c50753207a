import numpy as np
import pytest

from subcls.data import case_models
from subcls.geometry import Subspace
from subcls.gmm import (
    ErrorEstimate,
    GaussianClassModel,
    MapClassifier,
    covariance,
    empirical_map_error,
    map_classify,
    sample,
)

from conftest import random_subspace


def axis_model(n, axes, eigenvalues, noise_var):
    basis = np.eye(n)[:, list(axes)]
    return GaussianClassModel(Subspace(basis), np.asarray(eigenvalues, float), noise_var)


class TestModelValidation:
    def test_rejects_increasing_eigenvalues(self):
        with pytest.raises(ValueError, match="nonincreasing"):
            axis_model(3, [0, 1], [1.0, 2.0], 0.1)

    def test_rejects_nonpositive_eigenvalues(self):
        with pytest.raises(ValueError, match="positive"):
            axis_model(3, [0, 1], [1.0, 0.0], 0.1)

    def test_zero_noise_needs_full_rank(self):
        with pytest.raises(ValueError, match="full-rank"):
            axis_model(3, [0, 1], [1.0, 1.0], 0.0)
        axis_model(2, [0, 1], [1.0, 1.0], 0.0)  # d = n is fine


class TestCovariance:
    def test_axis_aligned(self):
        m = axis_model(2, [0], [1.0], 0.01)
        assert np.allclose(covariance(m), np.diag([1.01, 0.01]), atol=1e-15)

    def test_case1_class1(self):
        m1, _ = case_models(1, 0.01)
        assert np.allclose(covariance(m1), np.diag([1.01, 1.01, 0.01, 0.01]), atol=1e-15)

    def test_small_eigenvalue_limit(self):
        m = axis_model(3, [0], [1e-12], 1.0)
        assert np.allclose(covariance(m), np.eye(3), atol=1e-11)

    def test_symmetric(self):
        rng = np.random.default_rng(0)
        m = GaussianClassModel(random_subspace(rng, 7, 3), np.array([3.0, 2.0, 0.5]), 0.2)
        cov = covariance(m)
        assert np.max(np.abs(cov - cov.T)) < 1e-12


class TestSample:
    def test_covariance_converges(self):
        rng = np.random.default_rng(1)
        m = GaussianClassModel(random_subspace(rng, 5, 2), np.array([2.0, 1.0]), 0.1)
        draws = sample(m, 100_000, 42)
        emp = draws @ draws.T / draws.shape[1]
        cov = covariance(m)
        assert np.linalg.norm(emp - cov) / np.linalg.norm(cov) < 0.05

    def test_full_rank_identity(self):
        m = axis_model(3, [0, 1, 2], [1.0, 1.0, 1.0], 0.0)
        draws = sample(m, 200_000, 7)
        emp = draws @ draws.T / draws.shape[1]
        assert np.linalg.norm(emp - np.eye(3)) / np.sqrt(3) < 0.05

    def test_deterministic(self):
        m = axis_model(4, [0, 2], [2.0, 1.0], 0.3)
        assert np.array_equal(sample(m, 50, 9), sample(m, 50, 9))


class TestMapClassify:
    def test_aligned_energy(self):
        m1 = axis_model(2, [0], [1.0], 0.01)
        m2 = axis_model(2, [1], [1.0], 0.01)
        assert map_classify(np.array([3.0, 0.0]), [m1, m2]) == 0

    def test_zero_vector_tie_break(self):
        m1 = axis_model(2, [0], [1.0], 0.01)
        m2 = axis_model(2, [1], [1.0], 0.01)
        # equal spectra: identical log-dets, tie resolved to the first model
        assert map_classify(np.zeros(2), [m1, m2]) == 0

    def test_non_finite_rejected(self):
        m1 = axis_model(2, [0], [1.0], 0.01)
        m2 = axis_model(2, [1], [1.0], 0.01)
        with pytest.raises(ValueError, match="finite"):
            map_classify(np.array([np.nan, 0.0]), [m1, m2])

    def test_swap_relabels(self):
        rng = np.random.default_rng(14)
        m1 = GaussianClassModel(random_subspace(rng, 6, 2), np.array([2.0, 1.0]), 0.05)
        m2 = GaussianClassModel(random_subspace(rng, 6, 2), np.array([1.5, 0.5]), 0.05)
        x = rng.standard_normal((6, 200))
        fwd = MapClassifier([m1, m2]).classify_batch(x)
        rev = MapClassifier([m2, m1]).classify_batch(x)
        assert np.array_equal(fwd, 1 - rev)

    def test_matches_dense_oracle(self):
        # factorized log-density vs direct dense computation
        rng = np.random.default_rng(15)
        for _ in range(20):
            n = int(rng.integers(2, 9))
            d = int(rng.integers(1, n + 1))
            lam = np.sort(rng.uniform(0.5, 3.0, d))[::-1]
            m = GaussianClassModel(random_subspace(rng, n, d), lam, float(rng.uniform(0.05, 1.0)))
            clf = MapClassifier([m, m])
            x = rng.standard_normal(n)
            cov = covariance(m)
            direct = -0.5 * np.linalg.slogdet(cov)[1] - 0.5 * x @ np.linalg.inv(cov) @ x
            assert abs(clf.log_scores(x)[0] - direct) < 1e-8


class TestEmpiricalError:
    def test_identical_models_chance_level(self):
        rng = np.random.default_rng(21)
        m = GaussianClassModel(random_subspace(rng, 5, 2), np.array([1.0, 1.0]), 0.1)
        est = empirical_map_error(m, m, 20_000, 3)
        assert abs(est.mean - 0.5) < 3 * est.std_err + 1e-9

    def test_case2_beats_case1_at_high_snr(self):
        s2 = 1e-4
        e1 = empirical_map_error(*case_models(1, s2), 100_000, 5)
        e2 = empirical_map_error(*case_models(2, s2), 100_000, 6)
        assert e2.mean < e1.mean - 3 * (e1.std_err + e2.std_err)

    def test_deterministic(self):
        m1, m2 = case_models(2, 1e-3)
        a = empirical_map_error(m1, m2, 10_000, 11)
        b = empirical_map_error(m1, m2, 10_000, 11)
        assert a.mean == b.mean

    def test_order_symmetric_within_noise(self):
        m1, m2 = case_models(2, 1e-3)
        a = empirical_map_error(m1, m2, 50_000, 12)
        b = empirical_map_error(m2, m1, 50_000, 12)
        assert abs(a.mean - b.mean) < 3 * (a.std_err + b.std_err) + 1e-9

    def test_below_high_snr_bound(self):
        from subcls.bounds import high_snr_bound

        m1, m2 = case_models(1, 1e-3)
        est = empirical_map_error(m1, m2, 100_000, 13)
        assert est.mean <= high_snr_bound(m1, m2).value


class TestErrorEstimate:
    def test_bernoulli_stderr_identity(self):
        est = ErrorEstimate.from_bernoulli(25, 1000, 0)
        assert est.std_err == pytest.approx(np.sqrt(est.mean * (1 - est.mean) / 1000))

    def test_rejects_bad_mean(self):
        with pytest.raises(ValueError):
            ErrorEstimate(1.5, 0.0, 10, 0)
