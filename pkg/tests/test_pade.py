import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from mvpert.errors import NoValidAlpha, PadePole
from mvpert.pade import (
    PadeInputs,
    extrapolate_infinity,
    is_oscillating,
    pade_0,
    pade_1,
    pade_2_02,
    pade_2_11,
    pade_sequence,
    second_order_choice,
)


def geometric(a, r):
    return PadeInputs(a, a * r, a * r * r)


class TestApproximants:
    def test_pade_0(self):
        assert pade_0(PadeInputs(1.0, 0.3, 0.2)) == 1.0
        assert pade_0(PadeInputs(0.0625, 5, 5)) == 0.0625

    def test_pade_1(self):
        assert pade_1(PadeInputs(0.7, 0.0, 0.0)) == 0.7
        assert pade_1(PadeInputs(1.0, 0.1, 0.0)) == pytest.approx(1 / 0.9, rel=1e-15)
        with pytest.raises(PadePole):
            pade_1(PadeInputs(1.0, 1.0, 0.0))

    def test_pade_1_taylor(self):
        i0, i1 = 0.8, 1e-4
        assert pade_1(PadeInputs(i0, i1, 0)) == pytest.approx(i0 + i1 + i1**2 / i0 + i1**3 / i0**2, abs=1e-14)

    def test_pade_2_11(self):
        assert pade_2_11(PadeInputs(1.0, 0.3, 0.0)) == 1.3
        assert pade_2_11(geometric(1.0, 0.3)) == pytest.approx(1 / 0.7, rel=1e-14)
        assert pade_2_11(PadeInputs(1.0, 0.1, 0.02)) == pytest.approx(1.125, rel=1e-14)
        with pytest.raises(PadePole):
            pade_2_11(PadeInputs(1.0, 0.2, 0.2))
        with pytest.raises(PadePole):
            pade_2_11(PadeInputs(1.0, 0.0, 0.02))

    def test_pade_2_11_terminated_series(self):
        assert pade_2_11(PadeInputs(0.4, 0.0, 0.0)) == 0.4

    def test_pade_2_02(self):
        # reciprocal of the second-order expansion of 1/(i0 + i1 + i2)
        assert pade_2_02(PadeInputs(1.0, 0.1, 0.02)) == pytest.approx(1 / 0.89, rel=1e-14)
        assert pade_2_02(geometric(2.0, 0.25)) == pytest.approx(2.0 / 0.75, rel=1e-14)
        assert pade_2_02(PadeInputs(0.3, 0.0, 0.0)) == 0.3
        with pytest.raises(PadePole):
            pade_2_02(PadeInputs(0.0, 0.1, 0.0))

    def test_printed_variant_fails_series_matching(self):
        # dividing i2 by i1 instead of i0 leaves an O(r) error, so it cannot match the partial sum
        a, r = 1.0, 1e-3
        i0, i1, i2 = a, a * r, a * r * r
        printed = i0 / (1 - i1 / i0 - i2 / i1 + (i1 / i0) ** 2)
        assert abs(printed - (i0 + i1 + i2)) > 1e-4
        assert abs(pade_2_02(PadeInputs(i0, i1, i2)) - (i0 + i1 + i2)) < 10 * r**3

    @given(st.floats(0.05, 5), st.floats(-0.7, 0.7))
    def test_geometric_exact(self, a, r):
        assume(abs(r) > 1e-3)
        g = geometric(a, r)
        np.testing.assert_allclose(pade_1(g), a / (1 - r), rtol=1e-12)
        np.testing.assert_allclose(pade_2_11(g), a / (1 - r), rtol=1e-12)
        np.testing.assert_allclose(pade_2_02(g), a / (1 - r), rtol=1e-12)

    @given(st.floats(0.1, 3), st.floats(-3, 3), st.floats(-3, 3))
    def test_series_matching(self, a, b1, b2):
        # I^(g) = a b_g r^g with arbitrary coefficients: each approximant matches the partial sum
        assume(abs(b1) > 0.05 and abs(b2) > 0.05 and abs(b1 - b2 * 1e-3) > 1e-3)
        r = 1e-3
        i0, i1, i2 = a, a * b1 * r, a * b2 * r * r
        p = PadeInputs(i0, i1, i2)
        assert abs(pade_1(p) - (i0 + i1)) <= 10 * a * (1 + b1 * b1) * r**2
        assert abs(pade_2_02(p) - (i0 + i1 + i2)) <= 10 * a * (1 + abs(b1) + abs(b2)) ** 3 * r**3
        if abs(b1) > 0.2:
            assert abs(pade_2_11(p) - (i0 + i1 + i2)) <= 10 * a * (1 + abs(b2 / b1)) * abs(b2) * r**3

    def test_second_order_choice(self):
        assert second_order_choice(1.125, 1.40845, "max") == 1.40845
        assert second_order_choice(1.125, 1.40845, "average") == pytest.approx(1.266725)
        assert second_order_choice(0.5, 0.5, "max") == second_order_choice(0.5, 0.5, "average") == 0.5
        with pytest.raises(ValueError):
            second_order_choice(1, 2, "min")


class TestExtrapolation:
    def test_converged(self):
        i_inf, alpha = extrapolate_infinity(0.3, 0.3, 0.3)
        assert i_inf == 0.3 and alpha == math.inf

    def test_monotone_geometric(self):
        i_inf, alpha = extrapolate_infinity(1.1, 1.05, 1.025)
        assert i_inf == pytest.approx(1.0, abs=1e-12)
        assert math.exp(-alpha) == pytest.approx(0.5, abs=1e-12)

    def test_oscillating(self):
        p = [1 + 0.1 * (-0.5) ** b for b in range(3)]
        assert is_oscillating(*p)
        i_inf, alpha = extrapolate_infinity(*p)
        assert i_inf == pytest.approx(1.0, abs=1e-12)
        assert math.exp(-alpha) == pytest.approx(0.5, abs=1e-12)

    @given(st.floats(-2, 2), st.floats(0.01, 1), st.floats(0.05, 0.95), st.booleans())
    def test_exact_on_ansatz(self, i_inf, amp, q, osc):
        g = (lambda b: math.cos(math.pi * b)) if osc else (lambda b: 1.0)
        p = [amp * q**b * g(b) + i_inf for b in range(3)]
        got, alpha = extrapolate_infinity(*p, oscillating=osc)
        assert got == pytest.approx(i_inf, abs=1e-12 * max(1.0, amp / (1 - q) ** 2))
        assert math.exp(-alpha) == pytest.approx(q, rel=1e-8)

    def test_no_valid_alpha(self):
        with pytest.raises(NoValidAlpha):
            # growing differences: q > 1
            extrapolate_infinity(1.0, 1.1, 1.3)
        with pytest.raises(NoValidAlpha):
            extrapolate_infinity(1.0, 2.0, 3.0)

    def test_zero_difference_is_monotone(self):
        assert not is_oscillating(1.0, 1.0, 2.0)


class TestSequence:
    def test_fallbacks_recorded(self):
        seq = pade_sequence(1.0, 1.0, 0.5)
        assert seq.pade1 == 2.0
        assert any("PadePole" in w for w in seq.warnings)

    def test_no_alpha_falls_back_to_pade2(self):
        seq = pade_sequence(1.0, 0.0, 1.0)
        assert seq.i_infinity == seq.pade2
        assert math.isnan(seq.alpha)
        assert any("NoValidAlpha" in w for w in seq.warnings)

    def test_policy(self):
        a = pade_sequence(1.0, 0.1, 0.02, policy="max")
        b = pade_sequence(1.0, 0.1, 0.02, policy="average")
        assert a.pade2 == max(a.pade2_11, a.pade2_02)
        assert b.pade2 == pytest.approx(0.5 * (b.pade2_11 + b.pade2_02))
