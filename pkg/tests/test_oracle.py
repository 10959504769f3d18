import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from owenseries.oracle import (
    QuadratureError,
    QuadratureSpec,
    adaptive_quad,
    gauss_kronrod,
    incomplete_gamma_direct,
    ncdf_erfc,
    owen_t_quadrature,
    phi2_h0_quadrature,
    phi2_plackett_quadrature,
)

TOL = 1e-13


class TestRules:
    def test_polynomial_exact(self):
        v, e = gauss_kronrod(lambda t: t**12 - 3 * t**5, -1.0, 2.0)
        assert v == pytest.approx((2**13 + 1) / 13 - 0.5 * (64 - 1), rel=1e-14)
        assert e < 1e-10

    def test_adaptive(self):
        res = adaptive_quad(math.sqrt, [0.0, 1.0], QuadratureSpec(1e-12))
        assert abs(res.value - 2 / 3) <= 1e-12
        assert res.error <= 1e-12 and res.intervals > 4

    def test_budget(self):
        with pytest.raises(QuadratureError):
            adaptive_quad(lambda t: 1 / math.sqrt(t) if t else 0.0, [0.0, 1.0], QuadratureSpec(1e-15, max_intervals=20))

    @pytest.mark.parametrize("kwargs", [{"tol": 0.0}, {"max_intervals": 0}, {"initial_panels": 0}])
    def test_spec_validation(self, kwargs):
        with pytest.raises(ValueError):
            QuadratureSpec(**kwargs)

    def test_ncdf(self):
        assert ncdf_erfc(0.0) == 0.5
        assert ncdf_erfc(-37.0) > 0


class TestOwenTQuadrature:
    def test_examples(self):
        assert owen_t_quadrature(0.0, 1.0) == pytest.approx(0.125, abs=TOL)
        p = ncdf_erfc(2.1)
        assert owen_t_quadrature(2.1, 1.0) == pytest.approx(0.5 * p * (1 - p), abs=TOL)
        assert owen_t_quadrature(1.3, 0.0) == 0.0

    @given(st.floats(-8, 8), st.floats(-20, 20))
    def test_odd_in_a(self, h, a):
        assert owen_t_quadrature(h, -a) == -owen_t_quadrature(h, a)

    @pytest.mark.parametrize("h,a", [(0.5, 0.5), (2.0, 3.0), (-4.0, 0.9), (7.0, 100.0)])
    def test_self_consistency(self, h, a):
        assert abs(owen_t_quadrature(h, a, TOL) - owen_t_quadrature(h, a, TOL / 10)) <= 2 * TOL

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            owen_t_quadrature(math.inf, 1.0)


class TestPlackett:
    def test_examples(self):
        assert phi2_plackett_quadrature(0.0, 0.0, 0.5) == pytest.approx(1 / 3, abs=TOL)
        assert phi2_plackett_quadrature(0.7, -0.2, 0.0) == ncdf_erfc(0.7) * ncdf_erfc(-0.2)
        p = ncdf_erfc(2.1)
        s = math.sqrt(0.5)
        assert phi2_plackett_quadrature(2.1, 0.0, s) == pytest.approx(p * (1 - p / 2), abs=TOL)
        assert phi2_plackett_quadrature(2.1, 0.0, -s) == pytest.approx(p * p / 2, abs=TOL)

    @given(st.floats(-8, 8), st.floats(-8, 8), st.floats(-0.9999, 0.9999))
    def test_frechet(self, x, y, rho):
        v = phi2_plackett_quadrature(x, y, rho)
        px, py = ncdf_erfc(x), ncdf_erfc(y)
        assert max(0.0, px + py - 1) - TOL <= v <= min(px, py) + TOL

    @pytest.mark.parametrize("rho", [-0.999999, -0.6, 0.3, 0.7, 0.999999])
    def test_anchors_agree_with_h0_form(self, rho):
        assert abs(phi2_plackett_quadrature(1.2, 0.0, rho) - phi2_h0_quadrature(1.2, rho)) <= 2 * TOL

    def test_rejects(self):
        with pytest.raises(ValueError):
            phi2_plackett_quadrature(0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            phi2_h0_quadrature(0.0, -1.0)


class TestIncompleteGamma:
    def test_examples(self):
        assert incomplete_gamma_direct(0, 1.5) == pytest.approx(math.exp(-1.5), rel=1e-15)
        assert incomplete_gamma_direct(3, 0.0) == 1.0
        assert incomplete_gamma_direct(1, 1.0) == pytest.approx(2 / math.e, rel=1e-15)

    def test_rejects(self):
        with pytest.raises(ValueError):
            incomplete_gamma_direct(-1, 1.0)
        with pytest.raises(ValueError):
            incomplete_gamma_direct(1, -1.0)
