import math

import numpy as np
import pytest
import scipy.integrate
import scipy.special
import scipy.stats
from numpy.testing import assert_allclose

from entsense.special import (
    RngStream,
    hyp1f1,
    hyp1f1_regularized,
    lambert_w0,
    laguerre,
    sample_scaled_chi2,
    scaled_chi2_pdf,
)

# Frozen oracle values (brute-force series / exact rational / bisection).
L5_HALF = -1711.0 / 3840.0  # exact rational finite sum
HYP_HALF_2_1 = 1.3281918274866849  # 200-term series
W0_TEN = 1.7455280027406994  # bisection on [0, 3]


class TestLaguerre:
    def test_degree_zero_is_one(self):
        assert laguerre(0, 3.7) == 1.0

    def test_degree_one(self):
        assert laguerre(1, 2.0) == -1.0

    def test_degree_five_matches_series_oracle(self):
        assert_allclose(laguerre(5, 0.5), L5_HALF, rtol=1e-12)

    def test_vectorized(self):
        x = np.linspace(-2, 2, 7)
        got = laguerre(3, x)
        want = np.array([laguerre(3, xi) for xi in x])
        assert_allclose(got, want, rtol=0, atol=0)

    @pytest.mark.parametrize("n", [2, 17, 60, 199])
    def test_three_term_recurrence(self, n):
        x = np.linspace(-50, 50, 41)
        lhs = (n + 1) * laguerre(n + 1, x)
        rhs = (2 * n + 1 - x) * laguerre(n, x) - n * laguerre(n - 1, x)
        scale = np.maximum(np.abs(lhs), np.abs(rhs))
        assert np.all(np.abs(lhs - rhs) <= 1e-10 * np.maximum(scale, 1.0))

    def test_rejects_negative_degree(self):
        with pytest.raises(ValueError):
            laguerre(-1, 0.0)


class TestHyp1f1:
    def test_z_zero(self):
        assert hyp1f1(0.3, 1.7, 0.0) == 1.0

    def test_terminating_equals_laguerre(self):
        assert_allclose(hyp1f1(-3, 1, 1.5), laguerre(3, 1.5), rtol=1e-13)

    def test_series_oracle(self):
        assert_allclose(hyp1f1(0.5, 2.0, 1.0), HYP_HALF_2_1, rtol=1e-12)

    @pytest.mark.parametrize(
        "a, b, z, want",
        [
            (0.5, 2.0, -100.0, 0.11255475054034959),  # mpmath
            (1.3, 2.7, 85.0, 2.8021494699524978e34),  # mpmath
        ],
    )
    def test_large_argument_branches(self, a, b, z, want):
        assert_allclose(hyp1f1(a, b, z), want, rtol=1e-10)

    @pytest.mark.parametrize("a", [0.25, 0.5, 1.5, 2.75])
    @pytest.mark.parametrize("b", [0.6, 1.0, 3.5])
    @pytest.mark.parametrize("z", [-80.0, -31.0, -12.0, -0.5, 4.0, 29.0, 45.0])
    def test_kummer_transform(self, a, b, z):
        lhs = hyp1f1(a, b, z)
        rhs = math.exp(z) * hyp1f1(b - a, b, -z)
        assert_allclose(lhs, rhs, rtol=1e-9)

    def test_matches_scipy_on_grid(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            a = rng.uniform(-4, 4)
            b = rng.uniform(0.1, 6)
            z = rng.uniform(-60, 60)
            want = scipy.special.hyp1f1(a, b, z)
            assert_allclose(hyp1f1(a, b, z), want, rtol=2e-9, atol=1e-300)

    def test_nonpositive_integer_b_rejected(self):
        with pytest.raises(ValueError):
            hyp1f1(0.5, -2, 1.0)

    def test_overflow_signaled(self):
        with pytest.raises(OverflowError):
            hyp1f1(0.5, 1.0, 2000.0)


class TestHyp1f1Regularized:
    def test_reduces_to_plain_over_gamma(self):
        a, b, z = 0.7, 2.3, -4.0
        assert_allclose(
            hyp1f1_regularized(a, b, z),
            hyp1f1(a, b, z) / scipy.special.gamma(b),
            rtol=1e-12,
        )

    def test_nonpositive_integer_b_limit(self):
        # Oracle: limit value computed with mpmath via b -> -2 + 1e-20.
        assert_allclose(hyp1f1_regularized(0.7, -2.0, 1.1), 1.98669180806909, rtol=1e-10)

    def test_nonpositive_integer_b_zero_argument(self):
        assert hyp1f1_regularized(0.7, -3.0, 0.0) == 0.0

    def test_large_b_no_overflow(self):
        # 1/Gamma(b) underflow regime must stay finite.
        val = hyp1f1_regularized(1.0, 250.0, 5.0)
        want = float(scipy.special.hyp1f1(1.0, 250.0, 5.0)) * math.exp(
            -math.lgamma(250.0)
        )
        assert_allclose(val, want, rtol=1e-10)


class TestLambertW0:
    def test_zero(self):
        assert lambert_w0(0.0) == 0.0

    def test_at_e(self):
        assert_allclose(lambert_w0(math.e), 1.0, rtol=1e-14)

    def test_bisection_oracle(self):
        assert_allclose(lambert_w0(10.0), W0_TEN, rtol=1e-12)

    def test_round_trip_over_domain(self):
        xs = np.concatenate(
            [
                [-1 / math.e + 1e-6, -0.2, -1e-4],
                np.logspace(-6, 6, 40),
            ]
        )
        for x in xs:
            w = lambert_w0(x)
            assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, abs(x))

    def test_matches_scipy(self):
        for x in [-0.3, -0.05, 0.2, 1.0, 7.7, 1e3, 1e6]:
            assert_allclose(lambert_w0(x), float(scipy.special.lambertw(x).real), rtol=1e-12)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            lambert_w0(-1.0)


class TestScaledChi2Pdf:
    def test_m1_is_exponential(self):
        xi = 0.3
        x = np.linspace(0, 5, 20)
        assert_allclose(
            scaled_chi2_pdf(x, 1, xi), np.exp(-x / (2 * xi)) / (2 * xi), rtol=1e-12
        )

    def test_mean_m3(self):
        val, _ = scipy.integrate.quad(
            lambda x: x * scaled_chi2_pdf(x, 3, 0.2), 0, np.inf
        )
        assert_allclose(val, 1.2, rtol=1e-9)

    def test_against_scipy_chi2(self):
        x = np.linspace(1e-3, 10, 50)
        for m, xi in [(1, 0.5), (4, 0.1), (25, 0.02)]:
            want = scipy.stats.chi2(2 * m, scale=xi).pdf(x)
            assert_allclose(scaled_chi2_pdf(x, m, xi), want, rtol=1e-10)

    def test_sampling_oracle_value(self):
        # (0.5, 4, 0.1) against a Monte-Carlo histogram of xi * sum of 8
        # squared normals.
        rng = np.random.default_rng(2026)
        draws = 0.1 * np.sum(rng.standard_normal((10**6, 8)) ** 2, axis=1)
        width = 0.05
        count = np.count_nonzero(np.abs(draws - 0.5) < width / 2)
        p_hat = count / draws.size / width
        sigma = math.sqrt(count) / draws.size / width
        assert abs(scaled_chi2_pdf(0.5, 4, 0.1) - p_hat) < 3 * sigma

    @pytest.mark.parametrize("m", [1, 10, 100])
    def test_normalization(self, m):
        xi = 0.07
        val, _ = scipy.integrate.quad(
            lambda x: scaled_chi2_pdf(x, m, xi), 0, np.inf, limit=200
        )
        assert abs(val - 1.0) <= 1e-8

    def test_x_zero_edge(self):
        assert scaled_chi2_pdf(0.0, 1, 0.5) == 1.0
        assert scaled_chi2_pdf(0.0, 2, 0.5) == 0.0


class TestScaledChi2PdfLargeM:
    # High-precision reference values at the mean and +/-5 sigma; the naive
    # log-sum formula loses ~6 digits out here to lgamma cancellation.
    @pytest.mark.parametrize(
        "m, x, want",
        [
            (2 * 10**6, 0.3985857864376269, 0.005121446787151881),
            (2 * 10**6, 0.39999999999999997, 1410.4739000996437),
            (2 * 10**6, 0.40141421356237306, 0.005394025135034549),
            (3 * 10**8, 59.98267949192431, 0.0004282711608262311),
            (3 * 10**8, 60.0, 115.16471645845496),
            (3 * 10**8, 60.01732050807569, 0.0004300882630343607),
        ],
    )
    def test_reference_values(self, m, x, want):
        # Attainable accuracy is ~ m * delta * eps at +/-5 sigma.
        assert_allclose(scaled_chi2_pdf(x, m, 1e-7), want, rtol=1e-10)

    def test_zero_edge(self):
        assert scaled_chi2_pdf(0.0, 2 * 10**6, 1e-7) == 0.0


class TestSampleScaledChi2:
    def test_moments(self):
        rng = RngStream(11, 0)
        xs = sample_scaled_chi2(10, 0.01, rng, size=10**6)
        mean, var = xs.mean(), xs.var()
        # mean 0.2, variance 0.004; MC sigma for the mean is sqrt(var/n)
        assert abs(mean - 0.2) < 3 * math.sqrt(0.004 / xs.size)
        assert abs(var - 0.004) < 3 * 0.004 * math.sqrt(2.0 / xs.size) * 2

    def test_ks_statistic(self):
        rng = RngStream(5, 3)
        xs = sample_scaled_chi2(6, 0.4, rng, size=10**5)
        stat = scipy.stats.kstest(xs, scipy.stats.chi2(12, scale=0.4).cdf).statistic
        assert stat < 1.63 / math.sqrt(xs.size)  # 1% critical value

    def test_gaussian_surrogate_regime(self):
        rng = RngStream(1, 0)
        m = 3 * 10**6
        xi = 1e-7
        xs = sample_scaled_chi2(m, xi, rng, size=200_000)
        assert np.all(xs >= 0)
        assert_allclose(xs.mean(), 2 * m * xi, rtol=5e-4)
        assert_allclose(xs.std(), 2 * math.sqrt(m) * xi, rtol=2e-2)

    def test_scalar_draw(self):
        x = sample_scaled_chi2(4, 0.2, RngStream(9).generator())
        assert isinstance(x, float) and x > 0


class TestRngStream:
    def test_replay(self):
        a = RngStream(123, 4).generator().random(16)
        b = RngStream(123, 4).generator().random(16)
        assert np.array_equal(a, b)

    def test_trial_replay_and_distinctness(self):
        s = RngStream(123, 4)
        t0 = s.trial_generator(0).random(8)
        t0_again = s.trial_generator(0).random(8)
        t1 = s.trial_generator(1).random(8)
        assert np.array_equal(t0, t0_again)
        assert not np.array_equal(t0, t1)

    def test_streams_uncorrelated_smoke(self):
        n = 10**5
        a = RngStream(7, 0).generator().standard_normal(n)
        b = RngStream(7, 1).generator().standard_normal(n)
        corr = float(np.corrcoef(a, b)[0, 1])
        assert abs(corr) < 4.0 / math.sqrt(n)

    def test_validation(self):
        with pytest.raises(ValueError):
            RngStream(-1)
        with pytest.raises(ValueError):
            RngStream(0, -2)
