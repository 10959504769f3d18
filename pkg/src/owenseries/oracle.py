"""Brute-force reference evaluators used by the tests.

Nothing here is used by the production code paths.  The quadrature is a
plain adaptive Gauss-Kronrod (7/15 point) scheme with a global error queue;
the normal distribution function comes straight from ``math.erfc`` so the
oracle does not share code with :mod:`owenseries.numkernel`.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import mpmath
from scipy.optimize import minimize_scalar

__all__ = [
    "QuadratureError",
    "QuadratureSpec",
    "QuadResult",
    "gauss_kronrod",
    "adaptive_quad",
    "owen_t_quadrature",
    "phi2_plackett_quadrature",
    "phi2_h0_quadrature",
    "ncdf_erfc",
    "incomplete_gamma_direct",
]

# 15-point Kronrod abscissae (nonnegative half) and weights, plus the
# embedded 7-point Gauss weights for the odd-indexed abscissae.
_XGK = (
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
)
_WGK = (
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
)
_WG = (
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
)

_SQRT_HALF = math.sqrt(0.5)
_TWO_PI = 2.0 * math.pi


class QuadratureError(ArithmeticError):
    """The requested tolerance was not reached within the interval budget."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Absolute tolerance, interval budget, integrand label and initial panels per segment."""

    tol: float = 1e-13
    max_intervals: int = 4000
    integrand: str = ""
    initial_panels: int = 4

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_intervals < 1:
            raise ValueError("max_intervals must be >= 1")
        if self.initial_panels < 1:
            raise ValueError("initial_panels must be >= 1")


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    intervals: int


def gauss_kronrod(f: Callable[[float], float], a: float, b: float) -> tuple[float, float]:
    """15-point Kronrod estimate on ``[a, b]`` and its distance to the 7-point Gauss one."""
    c = 0.5 * (a + b)
    hw = 0.5 * (b - a)
    fc = f(c)
    kron = fc * _WGK[7]
    gauss = fc * _WG[3]
    for j in range(7):
        dx = hw * _XGK[j]
        s = f(c - dx) + f(c + dx)
        kron += _WGK[j] * s
        if j % 2 == 1:
            gauss += _WG[j // 2] * s
    return kron * hw, abs((kron - gauss) * hw)


def adaptive_quad(
    f: Callable[[float], float],
    points: list[float],
    spec: QuadratureSpec = QuadratureSpec(),
) -> QuadResult:
    """Integrate ``f`` over ``[points[0], points[-1]]`` with breakpoints ``points``.

    The interval with the largest error estimate is bisected until the summed
    estimate falls below ``spec.tol``.

    Raises:
        QuadratureError: if ``spec.max_intervals`` is exhausted first.
    """
    heap: list[tuple[float, float, float, float]] = []
    for a, b in zip(points[:-1], points[1:]):
        if not b > a:
            continue
        # a few panels up front keep the error estimate honest for peaked integrands
        edges = [a + (b - a) * i / spec.initial_panels for i in range(spec.initial_panels)] + [b]
        for lo, hi in zip(edges[:-1], edges[1:]):
            v, e = gauss_kronrod(f, lo, hi)
            heapq.heappush(heap, (-e, lo, hi, v))
    while True:
        err = math.fsum(-item[0] for item in heap)
        if err <= spec.tol or not heap:
            return QuadResult(math.fsum(item[3] for item in heap), err, len(heap))
        if len(heap) >= spec.max_intervals:
            raise QuadratureError(
                f"{spec.integrand or 'quadrature'}: error estimate {err:.3g} above tolerance {spec.tol:.3g}"
            )
        _, a, b, _ = heapq.heappop(heap)
        m = 0.5 * (a + b)
        if not a < m < b:
            raise QuadratureError("interval cannot be bisected further")
        for lo, hi in ((a, m), (m, b)):
            v, e = gauss_kronrod(f, lo, hi)
            heapq.heappush(heap, (-e, lo, hi, v))


def ncdf_erfc(x: float) -> float:
    """``Phi(x)`` straight from ``math.erfc``."""
    return 0.5 * math.erfc(-x * _SQRT_HALF)


_ncdf = ncdf_erfc


def _peak(g: Callable[[float], float], lo: float, hi: float) -> list[float]:
    """Breakpoints ``[lo, argmin g, hi]`` (the argmin only if interior)."""
    if not hi > lo:
        return [lo, hi]
    res = minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * (hi - lo)})
    t = float(res.x)
    if lo < t < hi:
        return [lo, t, hi]
    return [lo, hi]


def owen_t_quadrature(h: float, a: float, tol: float = 1e-13) -> float:
    """Owen's ``T(h, a) = (1/2 pi) int_0^a exp(-h^2 (1+x^2)/2) / (1+x^2) dx``.

    Evaluated after the substitution ``x = tan(t)``, which turns the
    integrand into ``exp(-h^2 / (2 cos^2 t)) / (2 pi)`` on ``[0, atan a]``.
    """
    h, a = float(h), float(a)
    if not (math.isfinite(h) and math.isfinite(a)):
        raise ValueError("h and a must be finite")
    if a == 0:
        return 0.0
    half_h2 = 0.5 * h * h

    def f(t: float) -> float:
        c = math.cos(t)
        return math.exp(-half_h2 / (c * c)) / _TWO_PI

    res = adaptive_quad(f, [0.0, math.atan(abs(a))], QuadratureSpec(tol, integrand="owen_t"))
    return math.copysign(res.value, a)


def phi2_plackett_quadrature(x: float, y: float, rho: float, tol: float = 1e-13) -> float:
    """``Phi2_rho(x, y)`` by integrating the density over the correlation.

    The integral starts from the closest anchor with a closed form:
    ``Phi(x) Phi(y)`` at ``rho = 0`` when ``|rho| <= 1/2``, otherwise the
    degenerate limits at ``+-1``::

        Phi2 = min(Phi(x), Phi(y)) - int_rho^1 phi_s ds            (rho > 1/2)
        Phi2 = max(Phi(x) + Phi(y) - 1, 0) + int_-1^rho phi_s ds   (rho < -1/2)

    With ``s = sin(t)`` the integrand becomes
    ``exp(-(x^2 - 2 s x y + y^2) / (2 cos^2 t)) / (2 pi)``; near the endpoints
    the exponent is rewritten in ``u = pi/2 -+ t`` without cancellation.
    A breakpoint is placed at the integrand maximum.
    """
    x, y, rho = float(x), float(y), float(rho)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError("x and y must be finite")
    if not abs(rho) < 1:
        raise ValueError("rho must satisfy |rho| < 1")
    px, py = _ncdf(x), _ncdf(y)
    if rho == 0:
        return px * py
    spec = QuadratureSpec(tol, integrand="plackett")

    if abs(rho) <= 0.5:
        q0 = x * x + y * y

        def expo(t: float) -> float:
            c = math.cos(t)
            return (q0 - 2.0 * math.sin(t) * x * y) / (2.0 * c * c)

        t_end = math.asin(abs(rho))
        sgn_r = 1.0 if rho > 0 else -1.0
        g = (lambda t: expo(sgn_r * t))
        pts = _peak(g, 0.0, t_end)
        res = adaptive_quad(lambda t: math.exp(-g(t)) / _TWO_PI, pts, spec)
        return px * py + sgn_r * res.value

    gap = 1.0 - abs(rho)
    u_end = 2.0 * math.asin(math.sqrt(gap / 2.0))
    if rho > 0:
        d2, cross = (x - y) ** 2, x * y
    else:
        d2, cross = (x + y) ** 2, -x * y

    def g(u: float) -> float:
        if u == 0.0:
            return math.inf if d2 > 0 else cross / 2.0
        su = math.sin(u)
        cu = math.cos(0.5 * u)
        return d2 / (2.0 * su * su) + cross / (2.0 * cu * cu)

    def f(u: float) -> float:
        v = g(u)
        return 0.0 if v == math.inf else math.exp(-v) / _TWO_PI

    pts = _peak(g, 0.0, u_end)
    res = adaptive_quad(f, pts, spec)
    if rho > 0:
        return min(px, py) - res.value
    return max(px + py - 1.0, 0.0) + res.value


def phi2_h0_quadrature(h: float, rho: float, tol: float = 1e-13) -> float:
    """``Phi2_rho(h, 0) = Phi(h)/2 + T(h, rho / sqrt(1 - rho^2))`` with a quadrature T."""
    rho = float(rho)
    if not abs(rho) < 1:
        raise ValueError("rho must satisfy |rho| < 1")
    r = rho / math.sqrt((1.0 - rho) * (1.0 + rho))
    return 0.5 * ncdf_erfc(h) + owen_t_quadrature(h, r, tol)


_GAMMA_CTX = mpmath.MPContext()
_GAMMA_CTX.prec = 256


def incomplete_gamma_direct(k: int, q: float) -> float:
    """``Q(k+1, q) = exp(-q) sum_{i=0..k} q^i / i!`` summed in 256-bit arithmetic."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if not q >= 0:
        raise ValueError("q must be >= 0")
    ctx = _GAMMA_CTX
    qq = ctx.mpf(q)
    term = ctx.mpf(1)
    total = ctx.mpf(1)
    for i in range(1, k + 1):
        term = term * qq / i
        total += term
    return float(ctx.exp(-qq) * total)
