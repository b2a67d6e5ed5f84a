import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from genrf.quadform import (
    MixtureSpec,
    cumulants,
    moment_match_tail,
    tail_prob_weighted_chisq,
)


def two_weight_oracle(a, b, x):
    """P(a*chi2_1 + b*chi2_1 > x) by conditioning on the first term."""

    def cond(s):
        t = x - a * s
        if b > 0:
            return stats.chi2.sf(t / b, 1)
        return stats.chi2.cdf(t / b, 1)

    f = lambda s: stats.chi2.pdf(s, 1) * cond(s)
    head, _ = integrate.quad(f, 0, 1, limit=200)
    tail, _ = integrate.quad(f, 1, np.inf, limit=200)
    return head + tail


def difference_oracle(x):
    """P(chi2_1 - chi2_1' > x): the density of Z1^2 - Z2^2 is K0(|x|/2) / (2 pi)."""
    if x >= 0:
        v, _ = integrate.quad(lambda t: special.k0(t / 2) / (2 * math.pi), x, np.inf)
        return v
    return 1.0 - difference_oracle(-x)


class TestClosedForms:
    @pytest.mark.parametrize(
        "lam, x, expected",
        [
            ((1.0,), 3.841459, 0.05),
            ((1.0, 1.0), 5.991465, 0.05),
            ((1.0, 1.0, 1.0, 1.0), 9.487729, 0.05),
            ((1.0, -1.0), 0.0, 0.5),
        ],
    )
    def test_known_values(self, lam, x, expected):
        assert tail_prob_weighted_chisq(lam, x) == pytest.approx(expected, abs=1e-4)

    @pytest.mark.parametrize("df", [1, 2, 3, 7, 20])
    @pytest.mark.parametrize("x", [0.5, 3.0, 12.0, 40.0])
    def test_equal_weights_match_chi2(self, df, x):
        assert tail_prob_weighted_chisq([2.5] * df, 2.5 * x) == pytest.approx(
            stats.chi2.sf(x, df), abs=1e-6
        )

    @pytest.mark.parametrize("x", [-3.0, -0.5, 1.0, 4.0])
    def test_difference_of_chi2(self, x):
        assert tail_prob_weighted_chisq([1.0, -1.0], x) == pytest.approx(
            difference_oracle(x), abs=1e-6
        )

    def test_difference_reference_value(self):
        assert tail_prob_weighted_chisq([1.0, -1.0], 1.0) == pytest.approx(0.204894, abs=1e-5)

    @pytest.mark.parametrize(
        "a, b, x", [(2.0, 1.0, 5.0), (3.0, 0.2, 4.0), (1.0, -0.3, 2.0), (0.5, -2.0, -1.0)]
    )
    def test_two_weights_against_convolution(self, a, b, x):
        assert tail_prob_weighted_chisq([a, b], x) == pytest.approx(
            two_weight_oracle(a, b, x), abs=1e-6
        )

    def test_monte_carlo(self):
        lam = np.array([2.0, 1.0, 0.5])
        rng = np.random.default_rng(7)
        n = 4_000_000
        q = (rng.standard_normal((n, 3)) ** 2) @ lam
        mc = np.mean(q > 5.0)
        se = math.sqrt(mc * (1 - mc) / n)
        p = tail_prob_weighted_chisq(lam, 5.0)
        assert abs(p - mc) < 3 * se
        assert p == pytest.approx(0.226432, abs=1e-5)


class TestShortcuts:
    def test_positive_weights_nonpositive_threshold(self):
        assert tail_prob_weighted_chisq([1.0, 0.3], 0.0) == 1.0
        assert tail_prob_weighted_chisq([1.0, 0.3], -2.0) == 1.0

    def test_negative_weights_nonnegative_threshold(self):
        assert tail_prob_weighted_chisq([-1.0, -0.3], 0.0) == 0.0

    def test_full_output(self):
        p, info = tail_prob_weighted_chisq([1.0, 0.5, -0.2], 1.0, full_output=True)
        assert info.p_value == p
        assert not info.approximate
        assert info.method == "imhof"
        assert info.abserr < 1e-6

    def test_spec_input(self):
        spec = MixtureSpec((2.0, 1.0, 0.5), 5.0)
        assert tail_prob_weighted_chisq(spec) == tail_prob_weighted_chisq([2.0, 1.0, 0.5], 5.0)

    def test_zero_weights_ignored(self):
        assert tail_prob_weighted_chisq([2.0, 0.0, 1.0], 3.0) == pytest.approx(
            tail_prob_weighted_chisq([2.0, 1.0], 3.0), abs=1e-12
        )


class TestValidation:
    @pytest.mark.parametrize("lam", [(), (0.0, 0.0), (1.0, np.nan), (np.inf,)])
    def test_bad_weights(self, lam):
        with pytest.raises(ValueError):
            MixtureSpec(lam, 1.0)

    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            tail_prob_weighted_chisq([1.0], np.nan)


class TestMomentMatch:
    def test_cumulants(self):
        np.testing.assert_allclose(cumulants([1.0, 2.0]), [3.0, 10.0, 72.0])

    def test_single_weight_exact(self):
        for x in (0.3, 3.841459, 10.0):
            assert moment_match_tail([1.0], x) == pytest.approx(stats.chi2.sf(x, 1), abs=1e-12)

    def test_equal_weights(self):
        assert moment_match_tail([1.0] * 4, 9.488) == pytest.approx(0.05, abs=1e-3)

    def test_unequal_weights_close_to_exact(self):
        exact = tail_prob_weighted_chisq([3.0, 1.0, 0.2], 4.0)
        assert moment_match_tail([3.0, 1.0, 0.2], 4.0) == pytest.approx(exact, abs=0.01)

    def test_symmetric_mixture_is_normal(self):
        assert moment_match_tail([1.0, -1.0], 0.0) == pytest.approx(0.5, abs=1e-12)


weights = st.lists(
    st.floats(0.05, 10.0) | st.floats(-10.0, -0.05), min_size=1, max_size=8
)


class TestProperties:
    @settings(max_examples=40, deadline=None)
    @given(weights, st.floats(-20.0, 20.0), st.floats(0.01, 100.0))
    def test_scale_invariance(self, lam, x, c):
        lam = np.array(lam)
        assert tail_prob_weighted_chisq(c * lam, c * x) == pytest.approx(
            tail_prob_weighted_chisq(lam, x), abs=1e-5
        )

    @settings(max_examples=40, deadline=None)
    @given(weights, st.floats(-20.0, 20.0), st.floats(0.1, 5.0))
    def test_monotone_in_threshold(self, lam, x, dx):
        assert tail_prob_weighted_chisq(lam, x + dx) <= tail_prob_weighted_chisq(lam, x) + 2e-6

    @settings(max_examples=40, deadline=None)
    @given(weights, st.floats(-50.0, 50.0))
    def test_in_unit_interval(self, lam, x):
        p = tail_prob_weighted_chisq(lam, x)
        assert 0.0 <= p <= 1.0

    @settings(max_examples=40, deadline=None)
    @given(weights, st.floats(-5.0, 5.0))
    def test_reflection(self, lam, x):
        # P(Q > x) + P(-Q > -x) = 1 because Q has no atoms
        lam = np.array(lam)
        total = tail_prob_weighted_chisq(lam, x) + tail_prob_weighted_chisq(-lam, -x)
        assert total == pytest.approx(1.0, abs=1e-5)

    def test_far_left_tail(self):
        assert tail_prob_weighted_chisq([1.0, -0.5, 0.25], -200.0) == pytest.approx(1.0, abs=1e-6)
