import math

import numpy as np
import pytest

from subcls.bounds import (
    BoundReport,
    ErrorFloor,
    RegimeViolation,
    bhattacharyya_K,
    bhattacharyya_bound,
    high_snr_bound,
    lemma1_constants,
    logdet_taylor_bounds,
    low_snr_bounds,
    low_snr_spectrum_ok,
    moderate_snr_bound,
    trace_product_bounds,
)
from subcls.data import case_models
from subcls.geometry import Subspace
from subcls.gmm import GaussianClassModel, covariance

from conftest import random_subspace


def scalar_model(var, noise):
    return GaussianClassModel(Subspace(np.array([[1.0]])), np.array([var - noise]), noise)


def random_pair(rng, n, d, lam_range=(0.5, 3.0), noise=0.2):
    lam = lambda: np.sort(rng.uniform(*lam_range, d))[::-1]
    return (
        GaussianClassModel(random_subspace(rng, n, d), lam(), noise),
        GaussianClassModel(random_subspace(rng, n, d), lam(), noise),
    )


def dense_K(m1, m2):
    s1, s2 = covariance(m1), covariance(m2)
    return 0.5 * np.linalg.slogdet((s1 + s2) / 2)[1] - 0.25 * (
        np.linalg.slogdet(s1)[1] + np.linalg.slogdet(s2)[1]
    )


class TestBhattacharyya:
    def test_identical_models(self):
        m1, _ = case_models(1, 0.01)
        assert bhattacharyya_K(m1, m1) == pytest.approx(0.0, abs=1e-12)
        assert bhattacharyya_bound(m1, m1) == pytest.approx(0.5)

    def test_scalar_closed_form(self):
        # variances 4 and 1: K = (1/2) ln((a+b) / (2 sqrt(ab)))
        a = scalar_model(4.0, 0.5)
        b = scalar_model(1.0, 0.5)
        expected = 0.5 * math.log((4.0 + 1.0) / (2.0 * math.sqrt(4.0)))
        assert bhattacharyya_K(a, b) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.11157, abs=1e-5)

    def test_matches_dense_oracle_case1(self):
        m1, m2 = case_models(1, 0.01)
        assert bhattacharyya_K(m1, m2) == pytest.approx(dense_K(m1, m2), abs=1e-9)

    def test_matches_dense_oracle_random(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(2, 9))
            d = int(rng.integers(1, n + 1))
            m1, m2 = random_pair(rng, n, d)
            assert bhattacharyya_K(m1, m2) == pytest.approx(dense_K(m1, m2), abs=1e-9)

    def test_analytic_half_and_quarter(self):
        # K = ln 2 gives a bound of exactly 1/4
        assert 0.5 * math.exp(-math.log(2.0)) == pytest.approx(0.25)

    def test_zero_noise_rejected(self):
        m = GaussianClassModel(Subspace(np.eye(2)), np.array([1.0, 1.0]), 0.0)
        with pytest.raises(ValueError, match="positive"):
            bhattacharyya_K(m, m)

    def test_case2_below_case1_at_high_snr(self):
        s2 = 1e-4
        assert bhattacharyya_bound(*case_models(2, s2)) < bhattacharyya_bound(
            *case_models(1, s2)
        )

    def test_symmetry(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            m1, m2 = random_pair(rng, 6, 2)
            assert bhattacharyya_K(m1, m2) == pytest.approx(bhattacharyya_K(m2, m1), abs=1e-10)

    def test_large_ambient_dimension(self):
        # log-det route stays finite where raw determinants would underflow
        rng = np.random.default_rng(5)
        m1, m2 = random_pair(rng, 400, 3, noise=1e-3)
        val = bhattacharyya_K(m1, m2)
        assert np.isfinite(val) and val > 0


class TestHighSnr:
    def test_case2_constant_and_value(self):
        s2 = 1e-6
        m1, m2 = case_models(2, s2)
        report = high_snr_bound(m1, m2)
        # r = 0, unit eigenvalues: c1 = 2^{(2d-r)/2 - 1} = 2 and the angle
        # product is sin^4(pi/4) = 1/4, so the value is 4 s2
        assert report.constants["c1"] == pytest.approx(2.0, abs=1e-12)
        assert report.constants["r"] == 0
        assert report.value == pytest.approx(4.0 * s2, rel=1e-9)

    def test_case1_scaling_exponent(self):
        m1a, m2a = case_models(1, 1e-8)
        m1b, m2b = case_models(1, 1e-6)
        va = high_snr_bound(m1a, m2a).value
        vb = high_snr_bound(m1b, m2b).value
        slope = (math.log(vb) - math.log(va)) / (math.log(1e-6) - math.log(1e-8))
        assert slope == pytest.approx(0.5, abs=1e-9)  # (d - r)/2 with r = 1

    def test_asymptotic_ratio_random_pairs(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            u1 = random_subspace(rng, 8, 2)
            u2 = random_subspace(rng, 8, 2)
            m1 = GaussianClassModel(u1, np.ones(2), 1e-8)
            m2 = GaussianClassModel(u2, np.ones(2), 1e-8)
            ratio = bhattacharyya_bound(m1, m2) / high_snr_bound(m1, m2).value
            assert abs(ratio - 1.0) < 0.05

    def test_error_floor(self):
        rng = np.random.default_rng(7)
        s = random_subspace(rng, 5, 2)
        m = GaussianClassModel(s, np.ones(2), 0.01)
        with pytest.raises(ErrorFloor, match="error floor"):
            high_snr_bound(m, m)

    def test_hypothesis_violation(self):
        # exact geometry forces r >= 2d - n, so the dimension guard can only
        # fire when the zero tolerance undercuts the shared-angle noise floor
        rng = np.random.default_rng(40)
        m1 = GaussianClassModel(random_subspace(rng, 5, 3), np.ones(3), 0.01)
        m2 = GaussianClassModel(random_subspace(rng, 5, 3), np.ones(3), 0.01)
        with pytest.raises(ValueError, match="n >= 2"):
            high_snr_bound(m1, m2, zero_tol=0.0)

    def test_symmetry(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            m1, m2 = random_pair(rng, 7, 2, noise=1e-4)
            a = high_snr_bound(m1, m2).value
            b = high_snr_bound(m2, m1).value
            assert a == pytest.approx(b, rel=1e-10)


class TestLowSnr:
    def test_cases_coincide(self):
        # both worked cases have sum cos^2 = 1 and identical spectra
        for s2 in (5.0, 10.0, 50.0):
            r1 = low_snr_bounds(*case_models(1, s2))
            r2 = low_snr_bounds(*case_models(2, s2))
            assert abs(r1.upper - r2.upper) < 1e-12
            assert abs(r1.lower - r2.lower) < 1e-12

    def test_sandwich_at_sigma2_ten(self):
        m1, m2 = case_models(2, 10.0)
        report = low_snr_bounds(m1, m2)
        exact = bhattacharyya_bound(m1, m2)
        assert report.lower < exact < report.upper

    def test_sandwich_random_pairs(self):
        rng = np.random.default_rng(9)
        violations = 0
        for _ in range(100):
            n = int(rng.integers(3, 11))
            d = int(rng.integers(1, min(n, 4) + 1))
            s2 = float(rng.choice([5.0, 10.0, 50.0]))
            m1 = GaussianClassModel(random_subspace(rng, n, d), np.ones(d), s2)
            m2 = GaussianClassModel(random_subspace(rng, n, d), np.ones(d), s2)
            report = low_snr_bounds(m1, m2)
            exact = bhattacharyya_bound(m1, m2)
            if not (report.lower <= exact <= report.upper):
                violations += 1
        assert violations == 0

    def test_identical_models_ordering(self):
        rng = np.random.default_rng(10)
        m = GaussianClassModel(random_subspace(rng, 6, 2), np.array([2.0, 1.0]), 8.0)
        report = low_snr_bounds(m, m)
        assert report.constants["unclamped_lower"] < report.constants["unclamped_upper"]

    def test_spectrum_flag(self):
        assert low_snr_spectrum_ok(*case_models(2, 5.0))
        assert not low_snr_spectrum_ok(*case_models(2, 0.1))

    def test_symmetry(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            m1, m2 = random_pair(rng, 6, 2, noise=7.0)
            a = low_snr_bounds(m1, m2)
            b = low_snr_bounds(m2, m1)
            assert a.lower == pytest.approx(b.lower, abs=1e-10)
            assert a.upper == pytest.approx(b.upper, abs=1e-10)


class TestLemma1Constants:
    def test_reference_values(self):
        assert lemma1_constants(4.0).c_of_p == pytest.approx(3.44, abs=0.01)
        assert lemma1_constants(5.0).c_of_p == pytest.approx(2.79, abs=0.01)

    def test_small_p_unbounded(self):
        # the gap at 0 is positive for p = 1.5, so L = 0 and c = +inf
        consts = lemma1_constants(1.5)
        assert consts.l_of_p == 0.0 and math.isinf(consts.c_of_p)

    def test_root_satisfies_gap_equation(self):
        for p in (2.5, 4.0, 7.0, 30.0):
            consts = lemma1_constants(p)
            if consts.l_of_p > 0:
                gap = (
                    math.log1p(consts.l_of_p)
                    - math.log1p(p)
                    - (consts.l_of_p - p) / (1 + p)
                    + (consts.l_of_p - p) ** 2 / (1 + p) ** 2
                )
                assert abs(gap) < 1e-10
                assert 0 < consts.l_of_p < (p - 1) / 2
                assert consts.c_of_p == pytest.approx(p / (2 * consts.l_of_p))

    def test_rejects_p_at_most_one(self):
        with pytest.raises(ValueError):
            lemma1_constants(1.0)


class TestModerateSnr:
    def test_case1_bound_exceeds_case2(self):
        # equal chordal terms; the difference enters through 2d - r
        p = 6.0
        s2 = 0.25
        b1 = moderate_snr_bound(*case_models(1, s2), p)
        b2 = moderate_snr_bound(*case_models(2, s2), p)
        assert b1.value > b2.value
        assert b1.constants["r"] == 1 and b2.constants["r"] == 0

    def test_regime_violation_names_eigenvalue(self):
        m1, m2 = case_models(1, 1e-3)
        with pytest.raises(RegimeViolation, match="class 1 eigenvalue 1"):
            moderate_snr_bound(m1, m2, 6.0)

    def test_range_and_identical_models(self):
        rng = np.random.default_rng(12)
        s = random_subspace(rng, 6, 2)
        m = GaussianClassModel(s, np.ones(2), 0.25)
        report = moderate_snr_bound(m, m, 6.0)
        assert 0 < report.value <= 0.5

    def test_bound_covers_empirical_on_window(self):
        from subcls.gmm import empirical_map_error

        p = 6.0
        window = np.linspace(1 / p, lemma1_constants(p).c_of_p / p, 4)
        for i, s2 in enumerate(window):
            m1, m2 = case_models(2, float(s2))
            est = empirical_map_error(m1, m2, 50_000, 100 + i)
            bound = moderate_snr_bound(m1, m2, p).value
            assert bound >= est.mean - 3 * est.std_err

    def test_symmetry(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            m1, m2 = random_pair(rng, 6, 2, lam_range=(0.9, 1.2), noise=0.3)
            a = moderate_snr_bound(m1, m2, 6.0).value
            b = moderate_snr_bound(m2, m1, 6.0).value
            assert a == pytest.approx(b, abs=1e-10)


class TestWeylWindow:
    def test_top_block_and_ceiling(self):
        # admissible pairs: all signal-average eigenvalues stay at or below
        # p, and the top d stay above p / (2 c(p))
        rng = np.random.default_rng(14)
        p = 6.0
        c_of_p = lemma1_constants(p).c_of_p
        for _ in range(100):
            n, d = 12, 2
            s2 = float(rng.uniform(1 / p, c_of_p / p))
            lam = np.sort(rng.uniform(p / c_of_p, p, d))[::-1] * s2
            m1 = GaussianClassModel(random_subspace(rng, n, d), lam, s2)
            m2 = GaussianClassModel(random_subspace(rng, n, d), lam, s2)
            f = np.hstack(
                [
                    m1.subspace.basis * np.sqrt(m1.eigenvalues),
                    m2.subspace.basis * np.sqrt(m2.eigenvalues),
                ]
            )
            eigs = np.sort(np.linalg.eigvalsh(f.T @ f))[::-1] / (2 * s2)
            assert eigs[0] <= p + 1e-9
            assert np.all(eigs[:d] >= p / (2 * c_of_p) - 1e-9)

    def test_bottom_block_can_leave_window(self):
        # pinned counterexample: at the top of the admissible window the
        # smallest nonzero eigenvalue (1 - cos(pi/4)) / (2 s2) drops below
        # p / (2 c(p)), so the full sandwich claim does not hold in general
        p = 6.0
        c_of_p = lemma1_constants(p).c_of_p
        s2 = c_of_p / p
        m1, m2 = case_models(2, s2)
        smallest = (1 - math.cos(math.pi / 4)) / (2 * s2)
        assert smallest < p / (2 * c_of_p)


class TestLogdetTaylor:
    def test_zero_matrix(self):
        lo, hi = logdet_taylor_bounds(np.zeros((3, 3)))
        assert lo == 0.0 and hi == 0.0

    def test_half_identity(self):
        # tr D = 1, tr D^2 = 1/2: bracket (1 - 1/4, 1 - 1/8) around 2 ln 1.5
        lo, hi = logdet_taylor_bounds(0.5 * np.eye(2))
        assert lo == pytest.approx(0.75)
        assert hi == pytest.approx(0.875)
        assert lo <= 2 * math.log(1.5) <= hi

    def test_rejects_eigenvalue_at_one(self):
        with pytest.raises(ValueError, match="below 1"):
            logdet_taylor_bounds(np.eye(2))

    def test_bracket_on_random_psd(self):
        rng = np.random.default_rng(15)
        violations = 0
        for _ in range(1000):
            n = int(rng.integers(2, 7))
            q = np.linalg.qr(rng.standard_normal((n, n)))[0]
            eigs = rng.uniform(0.0, 0.99, n)
            mat = (q * eigs) @ q.T
            mat = (mat + mat.T) / 2
            lo, hi = logdet_taylor_bounds(mat)
            truth = float(np.sum(np.log1p(eigs)))
            if not lo - 1e-10 <= truth <= hi + 1e-10:
                violations += 1
        assert violations == 0


class TestTraceProduct:
    def test_uniform_spectra_tight(self):
        rng = np.random.default_rng(16)
        u = random_subspace(rng, 8, 3).basis
        v = random_subspace(rng, 8, 3).basis
        ones = np.ones(3)
        lo, hi = trace_product_bounds(u, ones, v, ones)
        truth = np.trace(u @ u.T @ v @ v.T)
        assert lo == pytest.approx(hi, rel=1e-12)
        assert truth == pytest.approx(lo, rel=1e-10)

    def test_shared_basis_inside_bracket(self):
        rng = np.random.default_rng(17)
        u = random_subspace(rng, 8, 3).basis
        phi = np.array([3.0, 2.0, 1.0])
        psi = np.array([2.0, 1.5, 0.5])
        lo, hi = trace_product_bounds(u, phi, u, psi)
        truth = float(np.sum(phi * psi))
        assert lo - 1e-10 <= truth <= hi + 1e-10

    def test_rejects_unsorted_diagonal(self):
        u = np.eye(4)[:, :2]
        with pytest.raises(ValueError, match="descending"):
            trace_product_bounds(u, np.array([1.0, 2.0]), u, np.array([2.0, 1.0]))

    def test_bracket_on_random_draws(self):
        rng = np.random.default_rng(18)
        violations = 0
        for _ in range(1000):
            n = int(rng.integers(2, 13))
            d = int(rng.integers(1, min(n, 4) + 1))
            u = random_subspace(rng, n, d).basis
            v = random_subspace(rng, n, d).basis
            phi = np.sort(rng.uniform(0.0, 3.0, d))[::-1]
            psi = np.sort(rng.uniform(0.0, 3.0, d))[::-1]
            lo, hi = trace_product_bounds(u, phi, v, psi)
            truth = float(np.trace((u * phi) @ u.T @ (v * psi) @ v.T))
            if not lo - 1e-9 <= truth <= hi + 1e-9:
                violations += 1
        assert violations == 0


class TestBoundReport:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            BoundReport(kind="mystery", value=0.1)

    def test_rejects_out_of_range_value(self):
        with pytest.raises(ValueError):
            BoundReport(kind="high_snr", value=0.75)

    def test_pair_needs_ordering(self):
        with pytest.raises(ValueError):
            BoundReport(kind="low_snr_pair", lower=0.4, upper=0.3)
