import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from owenseries.numkernel import mp_context, std_normal_cdf
from owenseries.oracle import phi2_h0_quadrature, phi2_plackett_quadrature
from owenseries.owent import owen_t
from owenseries.tetrachoric import (
    SLOW_RHO,
    HermiteEvenSeq,
    TetrachoricResult,
    hermite_scaled,
    owen_t_tetrachoric,
    phi2_tetrachoric_h0,
    phi2_tetrachoric_xy,
)

CRAMER_K = 1.086435


def phi(x):
    return math.exp(-x * x / 2) / math.sqrt(2 * math.pi)


class TestHermite:
    def test_plain_polynomials(self):
        seq = HermiteEvenSeq(2.0)
        assert (seq.even, seq.odd) == (1.0, 2.0)
        seq.advance()
        # He_2 = x^2 - 1, He_3 = x^3 - 3x
        assert (seq.even, seq.odd) == (3.0, 2.0)
        seq.advance()
        # He_4 = x^4 - 6x^2 + 3, He_5 = x^5 - 10x^3 + 15x
        assert (seq.k, seq.even, seq.odd) == (2, -5.0, -18.0)

    @pytest.mark.parametrize("x", [-2.5, -0.3, 0.0, 1.0, 3.7])
    def test_scaled_matches_plain(self, x):
        seq = HermiteEvenSeq(x)
        it = hermite_scaled(x)
        for k in range(8):
            a_even, a_odd = next(it), next(it)
            np.testing.assert_allclose(
                [a_even, a_odd],
                [phi(x) * seq.even / math.sqrt(math.factorial(2 * k)),
                 phi(x) * seq.odd / math.sqrt(math.factorial(2 * k + 1))],
                rtol=1e-12,
                atol=1e-15,
            )
            seq.advance()

    @pytest.mark.parametrize("x", np.linspace(-12, 12, 25))
    def test_cramer_bound(self, x):
        bound = CRAMER_K * math.exp(-x * x / 4) / math.sqrt(2 * math.pi)
        it = hermite_scaled(x)
        values = np.array([next(it) for _ in range(400)])
        assert np.all(np.abs(values) <= bound * (1 + 1e-12))


class TestBivariateSeries:
    @pytest.mark.parametrize("x,y", [(0.0, 0.0), (1.0, -0.5), (-1.3, 2.2), (2.0, 2.0)])
    @pytest.mark.parametrize("rho", [-0.9, -0.5, 0.1, 0.6, 0.9])
    def test_against_quadrature(self, x, y, rho):
        res = phi2_tetrachoric_xy(x, y, rho)
        assert isinstance(res, TetrachoricResult)
        assert abs(res.value - phi2_plackett_quadrature(x, y, rho)) <= 1e-13

    def test_orthant_at_zero(self):
        rho = 0.5
        res = phi2_tetrachoric_xy(0.0, 0.0, rho)
        assert res.value == pytest.approx(0.25 + math.asin(rho) / (2 * math.pi), abs=1e-15)

    def test_independent(self):
        res = phi2_tetrachoric_xy(0.4, -1.1, 0.0)
        assert res.value == std_normal_cdf(0.4) * std_normal_cdf(-1.1)
        assert res.iterations == 0

    @given(st.floats(-6, 6), st.floats(-6, 6), st.floats(-0.95, 0.95))
    def test_swap_is_bitwise(self, x, y, rho):
        assert phi2_tetrachoric_xy(x, y, rho).value == phi2_tetrachoric_xy(y, x, rho).value

    def test_slow_flag(self):
        assert phi2_tetrachoric_xy(0.5, 0.5, 0.995).slow
        assert not phi2_tetrachoric_xy(0.5, 0.5, SLOW_RHO).slow

    @pytest.mark.parametrize("rho", [1.0, -1.0, 1.5])
    def test_rejects_degenerate(self, rho):
        with pytest.raises(ValueError):
            phi2_tetrachoric_xy(0.0, 0.0, rho)

    def test_eps_stop(self):
        full = phi2_tetrachoric_xy(0.3, 0.7, 0.8)
        rough = phi2_tetrachoric_xy(0.3, 0.7, 0.8, eps=1e-6)
        assert rough.iterations < full.iterations
        assert abs(rough.value - full.value) <= 1e-6


class TestHalfPlaneSeries:
    @pytest.mark.parametrize("h", [-3.0, -0.7, 0.0, 0.4, 2.1, 5.0])
    @pytest.mark.parametrize("rho", [-0.95, -0.6, 0.2, 0.7, 0.95])
    @pytest.mark.parametrize("accelerated", [False, True])
    def test_against_quadrature(self, h, rho, accelerated):
        res = phi2_tetrachoric_h0(h, rho, accelerated)
        assert abs(res.value - phi2_h0_quadrature(h, rho)) <= 1e-13

    def test_acceleration_saves_terms(self):
        plain = phi2_tetrachoric_h0(1.0, 0.97)
        fast = phi2_tetrachoric_h0(1.0, 0.97, accelerated=True)
        assert plain.slow is False and fast.slow is False
        assert fast.iterations < plain.iterations / 4
        assert abs(fast.value - plain.value) <= 1e-15

    def test_acceleration_only_above_half(self):
        a = phi2_tetrachoric_h0(0.8, 0.6, accelerated=True)
        b = phi2_tetrachoric_h0(0.8, 0.6)
        assert a == b

    def test_high_precision(self):
        ctx = mp_context(200)
        h = ctx.convert(3) / 4
        rho = ctx.convert(1) / 3
        res = phi2_tetrachoric_h0(h, rho, ctx=ctx)
        r = rho / ctx.sqrt(1 - rho * rho)
        ref = ctx.ncdf(h) / 2 + owen_t(h, r, ctx=ctx).value
        assert abs(res.value - ref) < 2.0**-190


class TestOwenTTetrachoric:
    @pytest.mark.parametrize("h", [0.0, 0.5, -1.5, 3.0])
    @pytest.mark.parametrize("r", [-5.0, -1.0, 0.3, 0.9, 2.0, 12.0])
    def test_matches_recursion(self, h, r):
        ref = owen_t(h, r).value
        assert abs(owen_t_tetrachoric(h, r).value - ref) <= 1e-15
        if abs(r) <= 2:
            assert abs(owen_t_tetrachoric(h, r, accelerated=False).value - ref) <= 1e-15

    def test_zero_slope(self):
        res = owen_t_tetrachoric(1.0, 0.0)
        assert res.value == 0 and res.iterations == 0

    def test_unaccelerated_large_slope_is_slow(self):
        assert owen_t_tetrachoric(0.5, 20.0, accelerated=False).slow
        assert not owen_t_tetrachoric(0.5, 20.0).slow
