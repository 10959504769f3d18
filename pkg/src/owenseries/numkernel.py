"""Precision-generic scalar contexts and low-level special-function kernels.

Everything above this module is written against a :class:`RealContext`, a
small object that knows how to convert inputs and evaluate the handful of
elementary functions the series need.  Two realizations ship:

* :data:`BINARY64` -- plain Python floats and :mod:`math`.
* :func:`mp_context` -- an :mod:`mpmath` context with a private working
  precision (no global ``mp.prec`` mutation).

Arithmetic (``+ - * /`` and comparisons) is done with the native operators of
the value type, so the same recursion code runs unchanged in either context.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple

import mpmath

__all__ = [
    "RealContext",
    "Binary64",
    "MPReal",
    "BINARY64",
    "mp_context",
    "resolve_context",
    "GammaSeqState",
    "ArctanSeries",
    "std_normal_cdf",
    "reg_gamma_q_seq",
    "reg_gamma_half_seq",
    "iter_gamma_seq",
    "arctan_euler",
    "arctan_arcsin_series",
    "sgn",
]

_INV_SQRT2_HI = 0.7071067811865476
_INV_SQRT2_LO = -4.833646656726457e-17
_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_SPLITTER = 134217729.0  # 2**27 + 1
_ARCTAN_MAX_TERMS = 1_000_000


def sgn(x) -> int:
    """Sign with ``sgn(0) = +1``."""
    return 1 if x >= 0 else -1


# ---------------------------------------------------------------------------
# error-free transformations (binary64 only)
# ---------------------------------------------------------------------------


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _fast_two_sum(a: float, b: float) -> tuple[float, float]:
    # requires |a| >= |b|
    s = a + b
    return s, b - (s - a)


def _split(a: float) -> tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a: float, b: float) -> tuple[float, float]:
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    if not math.isfinite(err):
        # splitting overflows near the top of the range; drop the residue
        return p, 0.0
    return p, err


# Double-double helpers.  Plain arithmetic only, so they work elementwise on
# numpy arrays as well as on floats and give identical bits either way.


def _two_prod_raw(a, b):
    c = _SPLITTER * a
    ah = c - (c - a)
    c = _SPLITTER * b
    bh = c - (c - b)
    p = a * b
    return p, ((ah * bh - p) + ah * (b - bh) + (a - ah) * bh) + (a - ah) * (b - bh)


def _dd_add(ah, al, bh, bl):
    s = ah + bh
    bb = s - ah
    e = (ah - (s - bb)) + (bh - bb) + (al + bl)
    hi = s + e
    return hi, e - (hi - s)


def _dd_mul(ah, al, bh, bl):
    p, e = _two_prod_raw(ah, bh)
    e = e + (ah * bl + al * bh)
    hi = p + e
    return hi, e - (hi - p)


def _dd_mul_d(ah, al, b):
    p, e = _two_prod_raw(ah, b)
    e = e + al * b
    hi = p + e
    return hi, e - (hi - p)


def _dd_div_d(ah, al, b):
    q1 = ah / b
    p, e = _two_prod_raw(q1, b)
    q2 = (((ah - p) - e) + al) / b
    hi = q1 + q2
    return hi, q2 - (hi - q1)


def _normal_upper_tail(x: float) -> float:
    """Phi(-x) for x >= 0 via erfc, correcting the rounding of x/sqrt(2).

    erfc amplifies a relative argument error by about 2 t**2, which would cost
    tens of ulps near the underflow threshold without the first-order fix.
    """
    t = x * _INV_SQRT2_HI
    _, err = _two_prod(x, _INV_SQRT2_HI)
    delta = err + x * _INV_SQRT2_LO
    c = math.erfc(t)
    if c == 0.0:
        return 0.0
    g = _TWO_OVER_SQRT_PI * math.exp(-t * t) / c
    return 0.5 * c * (1.0 - g * delta)


def ncdf_neg_product(a: float, b: float) -> float:
    """``Phi(-a b)`` for ``a, b >= 0`` in binary64 without the rounding of ``a b``.

    The product is split into ``p + e`` exactly and ``Phi(-(p + e))`` is
    corrected to first order in ``e``; deep in the tail an unrounded argument
    is worth about ``a b`` ulps.
    """
    p, e = _two_prod(a, b)
    c = _normal_upper_tail(p)
    if c == 0.0 or e == 0.0:
        return c
    hazard = _INV_SQRT_2PI * math.exp(-0.5 * p * p) / c
    return c * (1.0 - hazard * e)


def _ncdf64(h: float) -> float:
    if h > 0.0:
        return 1.0 - _normal_upper_tail(h)
    return _normal_upper_tail(-h)


# ---------------------------------------------------------------------------
# contexts
# ---------------------------------------------------------------------------


class RealContext:
    """Abstract real-number realization.

    Subclasses provide conversion, the elementary functions used by the
    series, and two precision queries: :attr:`epsilon` (``2**-bits``) and
    :attr:`tiny` (smallest positive normal number, the underflow threshold).
    """

    name: str = "abstract"
    bits: int = 0

    def convert(self, x):
        raise NotImplementedError

    def exp(self, x):
        raise NotImplementedError

    def expm1(self, x):
        raise NotImplementedError

    def log(self, x):
        raise NotImplementedError

    def sqrt(self, x):
        raise NotImplementedError

    def atan(self, x):
        raise NotImplementedError

    def asin(self, x):
        raise NotImplementedError

    def ncdf(self, x):
        raise NotImplementedError

    def isfinite(self, x) -> bool:
        raise NotImplementedError

    @property
    def pi(self):
        raise NotImplementedError

    @property
    def epsilon(self):
        raise NotImplementedError

    @property
    def tiny(self):
        raise NotImplementedError

    def to_float(self, x) -> float:
        return float(x)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(bits={self.bits})"


class Binary64(RealContext):
    """IEEE double precision through :mod:`math`."""

    name = "binary64"
    bits = 53

    convert = staticmethod(float)
    exp = staticmethod(math.exp)
    expm1 = staticmethod(math.expm1)
    log = staticmethod(math.log)
    sqrt = staticmethod(math.sqrt)
    atan = staticmethod(math.atan)
    asin = staticmethod(math.asin)
    ncdf = staticmethod(_ncdf64)
    isfinite = staticmethod(math.isfinite)

    pi = math.pi
    epsilon = 2.0**-53
    tiny = 2.2250738585072014e-308


class MPReal(RealContext):
    """Arbitrary precision through a private :class:`mpmath.MPContext`.

    The exponent range of mpmath numbers is unbounded, so :attr:`tiny` is a
    symbolic ``2**-(2**40)`` that no realistic computation reaches.
    """

    name = "mpmath"

    def __init__(self, bits: int):
        if bits < 2:
            raise ValueError("precision must be at least 2 bits")
        self.bits = int(bits)
        self._ctx = mpmath.MPContext()
        self._ctx.prec = self.bits
        c = self._ctx
        self.convert = c.mpf
        self.exp = c.exp
        self.expm1 = c.expm1
        self.log = c.log
        self.sqrt = c.sqrt
        self.atan = c.atan
        self.asin = c.asin
        self.ncdf = c.ncdf
        self._pi = +c.pi
        self._eps = c.ldexp(c.mpf(1), -self.bits)
        self._tiny = c.ldexp(c.mpf(1), -(1 << 40))

    def isfinite(self, x) -> bool:
        return bool(self._ctx.isfinite(x))

    @property
    def mpctx(self) -> mpmath.MPContext:
        return self._ctx

    @property
    def pi(self):
        return self._pi

    @property
    def epsilon(self):
        return self._eps

    @property
    def tiny(self):
        return self._tiny


BINARY64 = Binary64()


@lru_cache(maxsize=None)
def mp_context(bits: int) -> MPReal:
    """Shared :class:`MPReal` for ``bits`` of precision (cached)."""
    return MPReal(bits)


def resolve_context(ctx: RealContext | int | None) -> RealContext:
    """Accept a context, a bit count, or ``None`` (binary64)."""
    if ctx is None:
        return BINARY64
    if isinstance(ctx, RealContext):
        return ctx
    bits = int(ctx)
    return BINARY64 if bits == 53 else mp_context(bits)


# ---------------------------------------------------------------------------
# standard normal cdf
# ---------------------------------------------------------------------------


def std_normal_cdf(h, ctx: RealContext | None = None):
    """Standard normal distribution function Phi(h).

    In binary64 the value comes from ``erfc`` with the argument-rounding error
    of ``h/sqrt(2)`` corrected to first order, which keeps relative accuracy
    in the lower tail down to the underflow threshold (``h`` near -38).
    ``Phi(h)`` for ``h > 0`` is formed as ``1 - Phi(-h)``.
    """
    ctx = resolve_context(ctx)
    return ctx.ncdf(ctx.convert(h))


# ---------------------------------------------------------------------------
# regularized incomplete gamma sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GammaSeqState:
    """One step of the upper regularized gamma recursion.

    ``d`` is ``Q(k+1, q)`` (or ``Q(k+1/2, q)`` for the half-integer variant)
    and ``b`` the increment that produced it.
    """

    q: object
    k: int
    b: object
    d: object
    half: bool = False


def iter_gamma_seq(q, half: bool = False, ctx: RealContext | None = None) -> Iterator[GammaSeqState]:
    """Endless plain recursion for ``Q(k+1, q)`` or ``Q(k+1/2, q)``."""
    ctx = resolve_context(ctx)
    q = ctx.convert(q)
    if half:
        if q <= 0:
            raise ValueError("half-integer gamma recursion needs q > 0")
        b = ctx.exp(-q) / ctx.sqrt(q * ctx.pi)
        d = 2 * ctx.ncdf(-ctx.sqrt(2 * q))
        shift = ctx.convert(0.5)
    else:
        if q < 0:
            raise ValueError("q must be nonnegative")
        b = ctx.exp(-q)
        d = b
        shift = 1
    k = 0
    while True:
        yield GammaSeqState(q, k, b, d, half)
        b = q * b / (k + shift)
        d = d + b
        k += 1


def reg_gamma_q_seq(q, n: int, ctx: RealContext | None = None) -> list:
    """``[Q(1, q), Q(2, q), ..., Q(n+1, q)]`` by the additive recursion.

    ``b_0 = e^-q``, ``b_{k+1} = q b_k / (k+1)``, ``d_{k+1} = d_k + b_{k+1}``.
    In binary64 both ``b_k`` and ``d_k`` are carried as double-double pairs so
    the only error of note is the one in ``e^-q`` itself.  If ``e^-q`` falls
    below the smallest normal number every entry is that underflowed value.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    ctx = resolve_context(ctx)
    q = ctx.convert(q)
    if q < 0:
        raise ValueError("q must be nonnegative")
    b0 = ctx.exp(-q)
    if b0 < ctx.tiny:
        return [b0] * (n + 1)
    if ctx is not BINARY64:
        out = []
        for state in iter_gamma_seq(q, ctx=ctx):
            out.append(state.d)
            if state.k == n:
                return out

    bh, bl = b0, 0.0
    dh, dl = b0, 0.0
    out = [b0]
    for k in range(n):
        m = float(k + 1)
        p, e = _two_prod(bh, q)
        e += bl * q
        qh = p / m
        rh, rl = _two_prod(qh, m)
        ql = (((p - rh) - rl) + e) / m
        bh, bl = _fast_two_sum(qh, ql)
        s, err = _two_sum(dh, bh)
        err += dl + bl
        dh, dl = _fast_two_sum(s, err)
        out.append(dh)
    return out


def reg_gamma_half_seq(q, n: int, ctx: RealContext | None = None) -> list:
    """``[Q(1/2, q), Q(3/2, q), ..., Q(n+1/2, q)]``; requires ``q > 0``.

    Seeded with ``Q(1/2, q) = 2 (1 - Phi(sqrt(2 q)))`` and
    ``b_0 = e^-q / sqrt(pi q)``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    out = []
    for state in iter_gamma_seq(q, half=True, ctx=ctx):
        out.append(state.d)
        if state.k == n:
            return out
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# arctangent series
# ---------------------------------------------------------------------------


class ArctanSeries(NamedTuple):
    """Partial sum of an arctangent series.

    ``bound`` is the lower remainder estimate ``B_n`` and ``max_error`` the
    matching upper one, so ``bound <= |arctan r - value| <= max_error``.
    """

    value: object
    terms: int
    bound: object
    max_error: object


def arctan_euler(
    r,
    eps=-1.0,
    *,
    n: int | None = None,
    complement: bool | None = None,
    ctx: RealContext | None = None,
) -> ArctanSeries:
    """Euler's arctangent series with its two-sided remainder bound.

    ``arctan r = r/(1+r^2) * sum_k (2k)!!/(2k+1)!! * (r^2/(1+r^2))^k``.

    Args:
        r: argument.
        eps: stop once the upper remainder bound drops below ``eps``; a
            negative value runs until the partial sum stops changing.
        n: if given, truncate after exactly the ``n``-th term (``n = -1``
            keeps no term at all) and ignore ``eps``.
        complement: sum the series for ``1/r`` and use
            ``arctan r = sgn(r) (pi/2 - arctan(1/|r|))``.  Defaults to
            ``|r| > 1``, where it converges faster.
        ctx: numeric context.
    """
    ctx = resolve_context(ctx)
    r = ctx.convert(r)
    if not ctx.isfinite(r):
        raise ValueError("r must be finite")
    if complement is None:
        complement = abs(r) > 1
    if r == 0 and not complement:
        return ArctanSeries(r * 0, 0, r * 0, r * 0)

    x = 1 / abs(r) if complement else r
    x2 = x * x
    p = x2 / (1 + x2)
    a = x / (1 + x2)
    s = a * 0
    term = a  # a * (2k)!!/(2k+1)!! * p^k
    k = 0
    limit = n if n is not None else _ARCTAN_MAX_TERMS
    while k <= limit:
        s_new = s + term
        term = term * p * (2 * k + 2) / (2 * k + 3)
        k += 1
        stalled = s_new == s
        s = s_new
        if n is None and (stalled or (1 + x2) * abs(term) < eps):
            break
    bound = abs(term)
    value = sgn(r) * (ctx.pi / 2 - s) if complement else s
    return ArctanSeries(value, k, bound, (1 + x2) * bound)


def arctan_arcsin_series(r, eps=-1.0, ctx: RealContext | None = None):
    """Arctangent via the arcsine Taylor series of ``r/sqrt(1+r^2)``.

    ``arctan r = r/sqrt(1+r^2) * sum_k (2k-1)!!/((2k)!! (2k+1)) (r^2/(1+r^2))^k``.
    Arguments with ``|r| > 1`` go through ``pi/2 - arctan(1/|r|)``.
    """
    ctx = resolve_context(ctx)
    r = ctx.convert(r)
    if not ctx.isfinite(r):
        raise ValueError("r must be finite")
    if r == 0:
        return r * 0
    if abs(r) > 1:
        return sgn(r) * (ctx.pi / 2 - arctan_arcsin_series(1 / abs(r), eps, ctx))
    x2 = r * r
    p = x2 / (1 + x2)
    w = ctx.convert(1)  # (2k-1)!!/(2k)!!
    pk = ctx.convert(1)
    s = w
    k = 0
    while True:
        w = w * (2 * k + 1) / (2 * k + 2)
        pk = pk * p
        k += 1
        term = w * pk / (2 * k + 1)
        s_new = s + term
        if s_new == s or term / (1 - p) < eps:
            s = s_new
            break
        s = s_new
    return r / ctx.sqrt(1 + x2) * s
