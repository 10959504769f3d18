"""Tetrachoric (Hermite) series for the bivariate normal distribution.

The series are written with scaled Hermite functions
``A_k(x) = phi(x) He_k(x) / sqrt(k!)``, which obey the bounded three-term
recursion ``A_{k+1} = (x A_k - sqrt(k) A_{k-1}) / sqrt(k+1)``.  Cramer's
inequality ``|A_k(x)| <= K exp(-x^2/4) / sqrt(2 pi)`` with ``K = 1.086435``
gives a rigorous tail bound that drives termination.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

from .numkernel import RealContext, resolve_context, sgn

__all__ = [
    "TetrachoricResult",
    "HermiteEvenSeq",
    "hermite_scaled",
    "phi2_tetrachoric_xy",
    "phi2_tetrachoric_h0",
    "owen_t_tetrachoric",
    "SLOW_RHO",
]

_CRAMER_K = 1.086435
SLOW_RHO = 0.99
_MAX_TERMS = 2_000_000


class TetrachoricResult(NamedTuple):
    """Series value, number of terms summed, and the slow-regime flag."""

    value: object
    iterations: int
    slow: bool


@dataclass
class HermiteEvenSeq:
    """Adjacent pair ``He_{2k}(x), He_{2k+1}(x)`` of probabilists' Hermite values.

    Plain (unscaled) polynomials; intended for small orders and tests.
    """

    x: float
    k: int = 0
    even: float = 1.0
    odd: float = 0.0

    def __post_init__(self):
        if self.k == 0:
            self.even = 1.0
            self.odd = self.x

    def advance(self) -> "HermiteEvenSeq":
        n = 2 * self.k + 1
        nxt_even = self.x * self.odd - n * self.even
        nxt_odd = self.x * nxt_even - (n + 1) * self.odd
        self.k += 1
        self.even, self.odd = nxt_even, nxt_odd
        return self


def hermite_scaled(x, ctx: RealContext | None = None) -> Iterator:
    """Yield ``A_0(x), A_1(x), ...`` where ``A_k = phi(x) He_k(x) / sqrt(k!)``."""
    ctx = resolve_context(ctx)
    x = ctx.convert(x)
    prev = ctx.convert(0)
    cur = ctx.exp(-x * x / 2) / ctx.sqrt(2 * ctx.pi)
    k = 0
    while True:
        yield cur
        nxt = (x * cur - ctx.sqrt(ctx.convert(k)) * prev) / ctx.sqrt(ctx.convert(k + 1))
        prev, cur = cur, nxt
        k += 1


def _check_rho(rho) -> None:
    if not abs(rho) < 1:
        raise ValueError("tetrachoric series need |rho| < 1")


def _xy_series(x, y, rho, eps, ctx: RealContext):
    """``sum_k A_k(x) A_k(y) rho^(k+1) / (k+1)``; returns (sum, terms)."""
    arho = abs(rho)
    if rho == 0:
        return ctx.convert(0), 0
    scale = _CRAMER_K**2 * ctx.exp(-(x * x + y * y) / 4) / (2 * ctx.pi)
    gap = 1 - arho
    # a priori bound on the whole series
    if scale * arho / gap < ctx.epsilon * ctx.tiny:
        return ctx.convert(0), 0
    total = ctx.convert(0)
    power = rho
    k = 0
    for ax, ay in zip(hermite_scaled(x, ctx), hermite_scaled(y, ctx)):
        total = total + ax * ay * power / (k + 1)
        power = power * rho
        k += 1
        tail = scale * abs(power) / ((k + 1) * gap)
        if tail < eps or tail <= ctx.epsilon * abs(total) / 4 or k >= _MAX_TERMS:
            break
    return total, k


def _h0_series(h, rho, eps, ctx: RealContext):
    """``sum_k A_{2k}(h) w_k (-1)^k rho^(2k+1) / ((2k+1) sqrt(2 pi))``.

    ``w_k = (2k-1)!! / sqrt((2k)!)``.
    """
    if rho == 0:
        return ctx.convert(0), 0
    rho2 = rho * rho
    scale = _CRAMER_K * ctx.exp(-h * h / 4) / (2 * ctx.pi)
    gap = 1 - rho2
    if scale * abs(rho) / gap < ctx.epsilon * ctx.tiny:
        return ctx.convert(0), 0
    root2pi = ctx.sqrt(2 * ctx.pi)
    total = ctx.convert(0)
    w = ctx.convert(1)
    power = rho
    k = 0
    it = hermite_scaled(h, ctx)
    while True:
        a_even = next(it)
        term = a_even * w * power / ((2 * k + 1) * root2pi)
        total = total - term if k % 2 else total + term
        next(it)
        w = w * ctx.sqrt(ctx.convert(2 * k + 1) / (2 * k + 2))
        power = power * rho2
        k += 1
        tail = scale * abs(power) / ((2 * k + 1) * gap)
        if tail < eps or tail <= ctx.epsilon * abs(total) / 4 or k >= _MAX_TERMS:
            break
    return total, k


def phi2_tetrachoric_xy(x, y, rho, eps=-1.0, ctx: RealContext | None = None) -> TetrachoricResult:
    """``Phi2_rho(x, y) = Phi(x) Phi(y) + sum_k A_k(x) A_k(y) rho^(k+1)/(k+1)``.

    Terms are multiplied in the order ``A_k(x) * A_k(y)`` which is commutative
    in IEEE arithmetic, so swapping ``x`` and ``y`` gives the same bits.
    Convergence is roughly geometric with ratio ``|rho|``; ``slow`` is set
    for ``|rho| > 0.99``.
    """
    ctx = resolve_context(ctx)
    x, y, rho = ctx.convert(x), ctx.convert(y), ctx.convert(rho)
    _check_rho(rho)
    series, n = _xy_series(x, y, rho, eps, ctx)
    value = ctx.ncdf(x) * ctx.ncdf(y) + series
    return TetrachoricResult(value, n, bool(abs(rho) > SLOW_RHO))


def _slope_parts(rho, ctx: RealContext):
    """``r = rho/sqrt(1-rho^2)`` and ``rho_bar = sgn(rho) sqrt(1-rho^2)``."""
    s = ctx.sqrt((1 - rho) * (1 + rho))
    return rho / s, sgn(rho) * s


def owen_t_tetrachoric(
    h, r, accelerated: bool = True, eps=-1.0, ctx: RealContext | None = None
) -> TetrachoricResult:
    """Owen's ``T(h, r) = Phi2_rho(h, 0) - Phi(h)/2`` from the tetrachoric series.

    With ``accelerated`` and ``|r| > 1`` the complementary pair
    ``(r h, 1/r)`` is summed and Owen's reflection identity applied.
    """
    from .owent import owen_u

    ctx = resolve_context(ctx)
    h, r = ctx.convert(h), ctx.convert(r)
    if r == 0:
        return TetrachoricResult(ctx.convert(0), 0, False)
    ar = abs(r)
    if ar <= 1:
        rho = ar / ctx.sqrt(1 + ar * ar)
    else:
        rho = 1 / ctx.sqrt(1 + 1 / (ar * ar))
    if accelerated and ar > 1:
        rho_bar = 1 / (ar * ctx.sqrt(1 + 1 / (ar * ar)))
        series, n = _h0_series(ar * h, rho_bar, eps, ctx)
        value = owen_u(h, ar, ctx) - series
        slow = bool(rho_bar > SLOW_RHO)
    else:
        series, n = _h0_series(h, rho, eps, ctx)
        value = series
        slow = bool(rho > SLOW_RHO)
    return TetrachoricResult(sgn(r) * value, n, slow)


def phi2_tetrachoric_h0(
    h, rho, accelerated: bool = False, eps=-1.0, ctx: RealContext | None = None
) -> TetrachoricResult:
    """``Phi2_rho(h, 0)`` from the even-order tetrachoric series.

    Plain form: ``Phi(h)/2 + sum_k A_2k(h) w_k (-1)^k rho^(2k+1)/((2k+1) sqrt(2 pi))``.
    Accelerated form (used when ``rho^2 > 1/2``): with ``r = rho/sqrt(1-rho^2)``
    and ``rho_bar = sgn(rho) sqrt(1-rho^2)``,
    ``Phi(h) + Phi(rh)/2 - Phi(h) Phi(rh) - series(rh, rho_bar) - beta``.
    """
    from .owent import owen_u

    ctx = resolve_context(ctx)
    h, rho = ctx.convert(h), ctx.convert(rho)
    _check_rho(rho)
    half_phi = ctx.ncdf(h) / 2
    if accelerated and rho * rho > ctx.convert(0.5):
        r, rho_bar = _slope_parts(rho, ctx)
        series, n = _h0_series(r * h, rho_bar, eps, ctx)
        # Phi(h) + Phi(rh)/2 - Phi(h)Phi(rh) - beta == Phi(h)/2 + U(h, r)
        value = half_phi + owen_u(h, r, ctx) - series
        slow = bool(abs(rho_bar) > SLOW_RHO)
    else:
        series, n = _h0_series(h, rho, eps, ctx)
        value = half_phi + series
        slow = bool(abs(rho) > SLOW_RHO)
    return TetrachoricResult(value, n, slow)
