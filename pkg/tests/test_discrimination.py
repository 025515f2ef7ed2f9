import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from entsense.conversion import conversion_params
from entsense.discrimination import (
    PatternHypothesis,
    c2d_exponent_bounds,
    helstrom_numeric,
    lemma1_upper_bound,
    multi_hypothesis_prefactor,
    nair_gu_bound,
    p_c2d,
    p_classical_coherent,
    pattern_exponents,
    qcb_gaussian,
)
from entsense.fockstates import DisplacedThermal, FockMatrix, recommended_dim, to_fock
from entsense.gaussian import ChannelParams, GaussianState

FIG2A = ChannelParams(0.01, 0.0, 20.0)

# frozen closed-form value of (1 - sqrt(1 - e^{-1}))/2
PURE_HELSTROM_ONE = 0.10246995118967495


def displaced_thermal_gaussian(alpha, e_noise):
    alpha = complex(alpha)
    return GaussianState(
        1,
        [2 * alpha.real, 2 * alpha.imag],
        (2 * e_noise + 1) * np.eye(2),
    )


class TestHelstromNumeric:
    def test_identical_states(self):
        fm = to_fock(DisplacedThermal(0.4, 0.2), recommended_dim(0.16, 0.2))
        assert helstrom_numeric(fm, fm) == pytest.approx(0.5, abs=1e-12)

    def test_vacuum_vs_unit_coherent(self):
        dim = recommended_dim(1.0, 0.0)
        rho = to_fock(DisplacedThermal(0.0, 0.0), dim)
        sigma = to_fock(DisplacedThermal(1.0, 0.0), dim)
        assert helstrom_numeric(rho, sigma) == pytest.approx(
            PURE_HELSTROM_ONE, abs=1e-12
        )

    def test_orthogonal_states(self):
        vac = np.zeros((4, 4), dtype=complex)
        vac[0, 0] = 1.0
        one = np.zeros((4, 4), dtype=complex)
        one[1, 1] = 1.0
        p = helstrom_numeric(FockMatrix(4, vac), FockMatrix(4, one))
        assert p == pytest.approx(0.0, abs=1e-14)

    def test_certain_prior(self):
        dim = recommended_dim(0.25, 0.3)
        fm = to_fock(DisplacedThermal(0.0, 0.3), dim)
        other = to_fock(DisplacedThermal(0.5, 0.3), dim)
        assert helstrom_numeric(fm, other, p0=1.0) == pytest.approx(0.0, abs=1e-9)

    def test_dimension_mismatch(self):
        a = to_fock(DisplacedThermal(0.0, 0.0), 4)
        b = to_fock(DisplacedThermal(0.0, 0.0), 5)
        with pytest.raises(ValueError, match="mismatch"):
            helstrom_numeric(a, b)

    def test_bad_prior(self):
        fm = to_fock(DisplacedThermal(0.0, 0.0), 4)
        with pytest.raises(ValueError):
            helstrom_numeric(fm, fm, p0=1.2)


class TestQcbGaussian:
    def test_identical_states(self):
        s = displaced_thermal_gaussian(0.3 + 0.1j, 0.4)
        r = qcb_gaussian(s, s)
        assert r.bound == pytest.approx(0.5, abs=1e-9)
        assert r.exponent() == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("alpha", [0.5, 0.9 - 0.4j, 2.0j])
    def test_pure_states_flat_overlap(self, alpha):
        r = qcb_gaussian(
            displaced_thermal_gaussian(0.0, 0.0),
            displaced_thermal_gaussian(alpha, 0.0),
        )
        assert r.bound == pytest.approx(0.5 * math.exp(-abs(alpha) ** 2), rel=1e-9)

    @pytest.mark.parametrize("n_b, amp_sq", [(20.0, 3.0), (1.0, 0.5), (100.0, 10.0)])
    def test_thermal_displaced_exponent(self, n_b, amp_sq):
        r = qcb_gaussian(
            displaced_thermal_gaussian(0.0, n_b),
            displaced_thermal_gaussian(math.sqrt(amp_sq), n_b),
        )
        want = amp_sq * (math.sqrt(n_b + 1.0) - math.sqrt(n_b)) ** 2
        assert r.exponent() == pytest.approx(want, rel=1e-9)
        # the minimum sits at the symmetric point for these isotropic pairs
        assert abs(r.s_opt - 0.5) < 1e-3

    @pytest.mark.parametrize(
        "pair",
        [
            ((0.0, 0.5), (1.0, 0.5)),
            ((0.3, 0.1), (1.2, 0.4)),
            ((0.0, 2.0), (0.8, 1.5)),
        ],
    )
    def test_upper_bounds_helstrom(self, pair):
        (a1, e1), (a2, e2) = pair
        dim = max(recommended_dim(a1**2, e1), recommended_dim(a2**2, e2))
        p_h = helstrom_numeric(
            to_fock(DisplacedThermal(a1, e1), dim),
            to_fock(DisplacedThermal(a2, e2), dim),
        )
        q = qcb_gaussian(
            displaced_thermal_gaussian(a1, e1),
            displaced_thermal_gaussian(a2, e2),
        )
        assert p_h <= q.bound + 1e-12

    def test_mode_mismatch(self):
        one = displaced_thermal_gaussian(0.0, 0.0)
        two = GaussianState(2, np.zeros(4), np.eye(4))
        with pytest.raises(ValueError, match="modes"):
            qcb_gaussian(one, two)


class TestPC2d:
    def test_no_target_is_coin_flip(self):
        assert p_c2d(0.001, ChannelParams(0.0, 0.0, 20.0), 100) == 0.5

    def test_regression_value(self):
        assert p_c2d(0.001, FIG2A, 10**6) == pytest.approx(
            0.19262873744743636, rel=1e-5
        )

    def test_approaches_quarter_power_law(self):
        xi = conversion_params(0.001, FIG2A).xi
        p = p_c2d(0.001, FIG2A, 10**7)
        approx = 0.25 * (1 + 2 * xi) ** (-(10**7))
        assert abs(p - approx) / approx < 0.05

    def test_single_mode_weak_signal(self):
        ch = ChannelParams(0.001, 0.0, 5.0)
        xi = conversion_params(0.01, ch).xi
        p = p_c2d(0.01, ch, 1)
        assert 0.5 - 10 * math.sqrt(xi) < p < 0.5

    def test_monotone_in_copies_and_transmissivity(self):
        ps = [p_c2d(0.001, FIG2A, m) for m in (10**5, 10**6, 10**7)]
        assert ps[0] > ps[1] > ps[2]
        pk = [
            p_c2d(0.001, ChannelParams(k, 0.0, 20.0), 10**6)
            for k in (0.005, 0.01, 0.02)
        ]
        assert pk[0] > pk[1] > pk[2]

    def test_truncation_robustness(self):
        base = p_c2d(0.001, FIG2A, 10**6, fock_dim=40)
        doubled = p_c2d(0.001, FIG2A, 10**6, fock_dim=80)
        assert abs(doubled - base) / base < 1e-8

    def test_rejects_rotated_hypotheses(self):
        with pytest.raises(ValueError, match="theta"):
            p_c2d(0.001, ChannelParams(0.01, 0.3, 20.0), 100)

    def test_reports_achieved_tolerance(self):
        _, achieved = p_c2d(0.001, FIG2A, 10**6, with_achieved=True)
        assert achieved <= 1e-6


class TestPClassicalCoherent:
    def test_no_target_is_coin_flip(self):
        assert p_classical_coherent(0.001, ChannelParams(0.0, 0.0, 20.0), 100) == \
            pytest.approx(0.5, abs=1e-12)

    def test_pure_background_closed_form(self):
        got = p_classical_coherent(0.4, ChannelParams(0.25, 0.0, 0.0), 10)
        want = 0.5 * (1 - math.sqrt(1 - math.exp(-0.25 * 10 * 0.4)))
        assert got == pytest.approx(want, abs=1e-10)


class TestAnalyticBounds:
    def test_nair_gu_no_target(self):
        assert nair_gu_bound(0.001, ChannelParams(0.0, 0.0, 20.0), 100) == 0.25

    def test_nair_gu_exponent_close_to_conversion(self):
        beta = -math.log1p(-0.01 / 21.0)
        per_copy = beta * 0.001
        two_xi = 2 * conversion_params(0.001, FIG2A).xi
        assert per_copy == pytest.approx(4.7632e-7, rel=1e-4)
        assert abs(per_copy - two_xi) / two_xi < 1e-3

    def test_lemma1_no_signal(self):
        assert lemma1_upper_bound(0.001, ChannelParams(0.0, 0.0, 20.0), 100) == 0.5

    def test_lemma1_regression(self):
        assert lemma1_upper_bound(0.001, FIG2A, 10**6) == pytest.approx(
            0.31962459202120896, rel=1e-9
        )

    def test_lemma1_below_symmetric_relaxation(self):
        n_s, m = 0.001, 10**6
        params = conversion_params(n_s, FIG2A)
        h = lambda y: (math.sqrt(y + 1) + math.sqrt(y)) ** 2
        relaxed = (1 + 4 * params.xi / (h(n_s) + h(params.e_noise))) ** (-m)
        assert lemma1_upper_bound(n_s, FIG2A, m) <= relaxed

    def test_sandwich_on_grid(self):
        for n_s in np.geomspace(1e-4, 1e-2, 5):
            for n_b in np.geomspace(1.0, 100.0, 5):
                for kappa in np.geomspace(1e-3, 0.1, 3):
                    ch = ChannelParams(kappa, 0.0, n_b)
                    xi = conversion_params(n_s, ch).xi
                    m = max(1, int(math.log(25.0) / math.log1p(2 * xi)))
                    p = p_c2d(n_s, ch, m)
                    assert 1e-4 < p < 0.3
                    lo = nair_gu_bound(n_s, ch, m)
                    hi = lemma1_upper_bound(n_s, ch, m)
                    assert lo <= p * (1 + 1e-6)
                    assert p <= hi * (1 + 1e-6)


class TestC2dExponents:
    def test_reference_ratio(self):
        ex = c2d_exponent_bounds(0.001, FIG2A)
        assert ex.r_asymptotic / ex.r_cs == pytest.approx(3.90808341838422, rel=1e-9)
        assert ex.r_asymptotic == pytest.approx(4.7666645e-7, rel=1e-5)

    def test_lower_bound_form(self):
        n_s = 0.02
        ex = c2d_exponent_bounds(n_s, FIG2A)
        shrink = (math.sqrt(n_s + 1) - math.sqrt(n_s)) ** 2
        assert ex.r_c2d_lb == pytest.approx(ex.r_asymptotic * shrink, rel=1e-12)

    def test_advantage_crosses_one_on_diagonal(self):
        for y in (0.5, 2.0, 10.0):
            ex = c2d_exponent_bounds(y, ChannelParams(1e-5, 0.0, y))
            assert ex.r_c2d_lb / ex.r_cs == pytest.approx(1.0, rel=1e-4)
        better = c2d_exponent_bounds(0.5, ChannelParams(1e-5, 0.0, 2.0))
        worse = c2d_exponent_bounds(2.0, ChannelParams(1e-5, 0.0, 0.5))
        assert better.r_c2d_lb / better.r_cs > 1.0 > worse.r_c2d_lb / worse.r_cs

    def test_deep_asymptotic_ratio_is_four(self):
        ex = c2d_exponent_bounds(1e-8, ChannelParams(1e-8, 0.0, 1e8))
        assert ex.r_c2d_lb / ex.r_cs == pytest.approx(4.0, rel=1e-3)


class TestPatternExponents:
    def test_identical_hypotheses(self):
        h = PatternHypothesis(((0.3, 0.1), (0.7, -0.4)), 50.0)
        ex = pattern_exponents(h, h, [0.01, 0.02])
        assert ex.classical == 0.0 and ex.entangled == 0.0

    def test_reduces_to_target_detection(self):
        n_s, kappa, n_b = 1e-3, 0.01, 20.0
        h1 = PatternHypothesis(((0.0, 0.0),), n_b)
        h2 = PatternHypothesis(((kappa, 0.0),), n_b)
        ex = pattern_exponents(h1, h2, [n_s])
        ref = c2d_exponent_bounds(n_s, ChannelParams(kappa, 0.0, n_b))
        assert ex.classical == pytest.approx(ref.r_cs, rel=1e-12)
        assert ex.entangled == pytest.approx(kappa * n_s / n_b, rel=1e-12)

    def test_bright_background_ratio(self):
        h1 = PatternHypothesis(((0.0, 0.0),), 1e4)
        h2 = PatternHypothesis(((0.01, 0.0),), 1e4)
        ex = pattern_exponents(h1, h2, [1e-4])
        assert ex.entangled / ex.classical == pytest.approx(4.0, abs=1e-3)
        assert ex.entangled_refined / ex.classical == pytest.approx(
            3.9205999774535507, rel=1e-9
        )
        assert ex.n_b_large and ex.n_s_small

    def test_ratio_identity_any_amplitudes(self):
        # entangled/classical depends only on the background brightness
        rng = np.random.default_rng(3)
        amps = rng.uniform(0.001, 0.05, size=4)
        h1 = PatternHypothesis(tuple((k, t) for k, t in zip(
            rng.uniform(0, 1, 4), rng.uniform(-3, 3, 4))), 30.0)
        h2 = PatternHypothesis(tuple((k, t) for k, t in zip(
            rng.uniform(0, 1, 4), rng.uniform(-3, 3, 4))), 30.0)
        ex = pattern_exponents(h1, h2, amps)
        ident = ex.entangled / ex.classical * 30.0 * (
            math.sqrt(31.0) - math.sqrt(30.0)
        ) ** 2
        assert ident == pytest.approx(1.0, rel=1e-12)

    def test_phase_only_patterns_separate(self):
        h1 = PatternHypothesis(((0.5, 0.0), (0.5, 0.0)), 10.0)
        h2 = PatternHypothesis(((0.5, math.pi), (0.5, 0.0)), 10.0)
        ex = pattern_exponents(h1, h2, [0.01, 0.01])
        # delta for the flipped subchannel is |sqrt(k)+sqrt(k)|^2 = 4k
        assert ex.entangled == pytest.approx(0.01 * 4 * 0.5 / 10.0, rel=1e-12)

    def test_mismatches_rejected(self):
        h1 = PatternHypothesis(((0.3, 0.0),), 10.0)
        h2 = PatternHypothesis(((0.3, 0.0), (0.1, 0.0)), 10.0)
        with pytest.raises(ValueError, match="subchannel"):
            pattern_exponents(h1, h2, [0.01])
        h3 = PatternHypothesis(((0.3, 0.0),), 20.0)
        with pytest.raises(ValueError, match="brightness"):
            pattern_exponents(h1, h3, [0.01])

    def test_kappa_validation(self):
        with pytest.raises(ValueError, match="kappa"):
            PatternHypothesis(((1.2, 0.0),), 10.0)


class TestMultiHypothesisPrefactor:
    def test_binary_shape(self):
        got = multi_hypothesis_prefactor(2, 100, 1.0, 1.0)
        assert got == pytest.approx(10.0 * 101.0**2 * 0.5, rel=1e-12)

    def test_monotone_in_hypothesis_count(self):
        vals = [multi_hypothesis_prefactor(r, 50, 1.0, 1.0) for r in range(2, 7)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_dominated_by_exponential(self):
        pre = multi_hypothesis_prefactor(3, 10**4, 1.0, 2.0)
        assert pre < math.exp(10**4 * 0.01)

    def test_prior_validation(self):
        with pytest.raises(ValueError, match="priors"):
            multi_hypothesis_prefactor(3, 10, 1.0, 1.0, priors=[0.5, 0.5])
