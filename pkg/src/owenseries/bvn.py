"""Bivariate standard normal distribution function.

The production path reduces ``Phi2_rho(x, y)`` to two Owen's T values,

    Phi2_rho(x, y) = (Phi(x) + Phi(y)) / 2 - T(x, r_x) - T(y, r_y) - beta,

with ``r_x = (y - rho x) / (x sqrt(1 - rho^2))`` and its mirror ``r_y``.
Near ``|rho| = 1`` with ``x`` close to ``y sgn(rho)`` the density exceeds one
and the problem is first split into two well-conditioned sub-problems.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

from .numkernel import RealContext, resolve_context, sgn
from .owent import DEFAULT_VARIANT, SeriesVariant, owen_t
from .tetrachoric import owen_t_tetrachoric

__all__ = [
    "METHODS",
    "BvnDecomposition",
    "CriticalSplit",
    "phi2",
    "phi2_h0",
    "decompose",
    "critical_split",
    "density",
    "stable_q",
    "l_complement",
    "phi2_unified",
    "owen5_transform_identity",
    "owen_t_function",
    "MEYER_THRESHOLD",
]

METHODS = ("novel", "tetrachoric", "tetrachoric-accelerated")
MEYER_THRESHOLD = 0.9
_UNIFIED_MAX_TERMS = 200_000
_TINY_COORD = 2.0**-500
_LIFT = 2.0**600


class BvnDecomposition(NamedTuple):
    """Slopes, reflection constant and exponent of the Owen reduction."""

    r_x: object
    r_y: object
    beta: float
    q: object


class CriticalSplit(NamedTuple):
    """Parameters of the two-term split used near ``|rho| = 1``."""

    rho_tilde: object
    y_tilde: object
    z: object
    lead: object
    sign: int


TFunc = Callable[[object, object], object]


def _check_inputs(x, y, rho, ctx: RealContext):
    x, y, rho = ctx.convert(x), ctx.convert(y), ctx.convert(rho)
    if not (ctx.isfinite(x) and ctx.isfinite(y) and ctx.isfinite(rho)):
        raise ValueError("x, y and rho must be finite")
    if abs(rho) > 1:
        raise ValueError("rho must lie in [-1, 1]")
    return x, y, rho


def owen_t_function(
    method: str = "novel",
    variant: SeriesVariant | str = DEFAULT_VARIANT,
    eps=-1.0,
    ctx: RealContext | None = None,
) -> TFunc:
    """Return ``T(h, r)`` for the chosen method, extended to ``r = +-inf``.

    ``T(h, +-inf) = +-Phi(-|h|) / 2``.
    """
    ctx = resolve_context(ctx)
    if method == "novel":
        def base(h, r):
            return owen_t(h, r, variant, eps, ctx=ctx).value
    elif method == "tetrachoric":
        def base(h, r):
            return owen_t_tetrachoric(h, r, False, eps, ctx).value
    elif method == "tetrachoric-accelerated":
        def base(h, r):
            return owen_t_tetrachoric(h, r, True, eps, ctx).value
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")

    def tfunc(h, r):
        if not ctx.isfinite(r):
            return sgn(r) * ctx.ncdf(-abs(h)) / 2
        return base(h, r)

    return tfunc


def stable_q(x, y, rho, ctx: RealContext | None = None):
    """``q = (x^2 - 2 rho x y + y^2) / (2 (1 - rho^2))`` without cancellation.

    Written as ``((x - y)^2 + 2 (1 - rho) x y)`` for ``rho >= 0`` and
    ``((x + y)^2 - 2 (1 + rho) x y)`` for ``rho < 0`` over the same
    denominator, so ``x`` close to ``y sgn(rho)`` keeps its digits.
    """
    ctx = resolve_context(ctx)
    x, y, rho = ctx.convert(x), ctx.convert(y), ctx.convert(rho)
    one_m, one_p = 1 - rho, 1 + rho
    if rho >= 0:
        d = x - y
        num = d * d + 2 * one_m * x * y
    else:
        d = x + y
        num = d * d - 2 * one_p * x * y
    return num / (2 * one_m * one_p)


def density(x, y, rho, ctx: RealContext | None = None):
    """Bivariate normal density ``exp(-q) / (2 pi sqrt(1 - rho^2))``."""
    ctx = resolve_context(ctx)
    x, y, rho = _check_inputs(x, y, rho, ctx)
    if abs(rho) == 1:
        raise ValueError("density is undefined for |rho| = 1")
    q = stable_q(x, y, rho, ctx)
    return ctx.exp(-q) / (2 * ctx.pi * ctx.sqrt((1 - rho) * (1 + rho)))


def _beta(x, y) -> float:
    # signs compared directly: the product of tiny coordinates underflows
    if (x > 0 and y > 0) or (x < 0 and y < 0) or ((x == 0 or y == 0) and x + y >= 0):
        return 0.0
    return 0.5


def _slope(u, v, rho, s, meyer: bool, ctx: RealContext):
    """``(v - rho u) / (u s)`` for ``u != 0``, optionally in Meyer's form."""
    # dividing by u and s separately keeps u * s from underflowing to zero
    if meyer and rho > 0:
        return (v - u) / u / s + ctx.sqrt((1 - rho) / (1 + rho))
    if meyer and rho < 0:
        return (u + v) / u / s - ctx.sqrt((1 + rho) / (1 - rho))
    return (v - rho * u) / u / s


def decompose(
    x, y, rho, ctx: RealContext | None = None, meyer_threshold: float = MEYER_THRESHOLD
) -> BvnDecomposition:
    """Slopes ``r_x, r_y``, constant ``beta`` and ``q`` of the Owen reduction.

    For ``|rho| >= meyer_threshold`` the slopes use the algebraically equal
    forms ``(y - x)/(x s) + sqrt((1-rho)/(1+rho))`` (``rho > 0``) and
    ``(x + y)/(x s) - sqrt((1+rho)/(1-rho))`` (``rho < 0``), which subtract
    nearly equal arguments exactly.  A zero coordinate gives an infinite slope
    whose sign is that of the other coordinate.  At ``|rho| = 1`` with
    ``x = y sgn(rho)`` the slopes are 0.
    """
    ctx = resolve_context(ctx)
    x, y, rho = _check_inputs(x, y, rho, ctx)
    if x == 0 and y == 0:
        raise ValueError("decompose needs x != 0 or y != 0")
    beta = _beta(x, y)
    if abs(rho) == 1:
        if x - y * sgn(rho) == 0:
            zero = ctx.convert(0)
            return BvnDecomposition(zero, zero, beta, zero)
        raise ValueError("|rho| = 1 has no finite decomposition unless x = y sgn(rho)")
    s = ctx.sqrt((1 - rho) * (1 + rho))
    meyer = abs(rho) >= meyer_threshold
    inf = ctx.convert(math.inf)
    q = stable_q(x, y, rho, ctx)
    # slopes are scale invariant; lift tiny binary64 inputs out of the subnormal range
    if isinstance(x, float) and max(abs(x), abs(y)) < _TINY_COORD:
        x, y = x * _LIFT, y * _LIFT
    r_x = sgn(y) * inf if x == 0 else _slope(x, y, rho, s, meyer, ctx)
    r_y = sgn(x) * inf if y == 0 else _slope(y, x, rho, s, meyer, ctx)
    return BvnDecomposition(r_x, r_y, beta, q)


def critical_split(x, y, rho, ctx: RealContext | None = None) -> CriticalSplit:
    """Parameters of ``Phi2_rho(x,y) = lead + s (Phi2_rt(z, yt) + Phi2_rt(-z, x))``.

    ``s = sgn(rho)``, ``rt = -sqrt((1-|rho|)/2)``, ``yt = y s``,
    ``z = (x - yt) / sqrt(2 (1 - |rho|))`` and ``lead = (1 - s) Phi(x) / 2``.
    """
    ctx = resolve_context(ctx)
    x, y, rho = _check_inputs(x, y, rho, ctx)
    if rho == 0 or abs(rho) == 1:
        raise ValueError("critical split needs 0 < |rho| < 1")
    s = sgn(rho)
    gap = 1 - abs(rho)
    rho_t = -ctx.sqrt(gap / 2)
    y_t = y * s
    z = (x - y_t) / ctx.sqrt(2 * gap)
    lead = ctx.ncdf(x) if s < 0 else ctx.convert(0)
    return CriticalSplit(rho_t, y_t, z, lead, s)


def _frechet_lower(x, y, ctx: RealContext):
    # Phi(x) + Phi(y) - 1 == Phi(min) - Phi(-max), which avoids 1 - Phi cancellation
    lo, hi = min(x, y), max(x, y)
    return max(ctx.ncdf(lo) - ctx.ncdf(-hi), ctx.convert(0))


def _degenerate(x, y, rho, ctx: RealContext):
    if rho > 0:
        return min(ctx.ncdf(x), ctx.ncdf(y))
    return _frechet_lower(x, y, ctx)


def _h0(h, rho, tfunc: TFunc, ctx: RealContext):
    s = ctx.sqrt((1 - rho) * (1 + rho))
    return ctx.ncdf(h) / 2 + tfunc(h, rho / s)


def phi2_h0(
    h,
    rho,
    variant: SeriesVariant | str = DEFAULT_VARIANT,
    *,
    method: str = "novel",
    eps=-1.0,
    ctx: RealContext | None = None,
):
    """``Phi2_rho(h, 0) = Phi(h)/2 + T(h, rho / sqrt(1 - rho^2))``.

    ``|rho| = 1`` returns the degenerate limits ``min(Phi(h), 1/2)`` and
    ``max(Phi(h) - 1/2, 0)``.
    """
    ctx = resolve_context(ctx)
    h, _, rho = _check_inputs(h, 0, rho, ctx)
    if abs(rho) == 1:
        return _degenerate(h, ctx.convert(0), rho, ctx)
    return _h0(h, rho, owen_t_function(method, variant, eps, ctx), ctx)


def _phi2_core(x, y, rho, tfunc: TFunc, split: bool, meyer_threshold: float, ctx: RealContext):
    if abs(rho) == 1:
        return _degenerate(x, y, rho, ctx)
    if x == 0 and y == 0:
        return ctx.convert(0.25) + ctx.asin(rho) / (2 * ctx.pi)
    if rho == 0:
        return ctx.ncdf(x) * ctx.ncdf(y)
    if split and density(x, y, rho, ctx) > 1:
        cs = critical_split(x, y, rho, ctx)
        a = _phi2_core(cs.z, cs.y_tilde, cs.rho_tilde, tfunc, False, meyer_threshold, ctx)
        b = _phi2_core(-cs.z, x, cs.rho_tilde, tfunc, False, meyer_threshold, ctx)
        return cs.lead + cs.sign * (a + b)
    if y == 0:
        return _h0(x, rho, tfunc, ctx)
    if x == 0:
        return _h0(y, rho, tfunc, ctx)
    dec = decompose(x, y, rho, ctx, meyer_threshold)
    half = (ctx.ncdf(x) + ctx.ncdf(y)) / 2
    return half - tfunc(x, dec.r_x) - tfunc(y, dec.r_y) - dec.beta


def phi2(
    x,
    y,
    rho,
    *,
    method: str = "novel",
    variant: SeriesVariant | str = DEFAULT_VARIANT,
    eps=-1.0,
    split: bool = True,
    meyer_threshold: float = MEYER_THRESHOLD,
    ctx: RealContext | None = None,
):
    """Bivariate standard normal distribution function ``Phi2_rho(x, y)``.

    Args:
        x, y: upper integration limits.
        rho: correlation in ``[-1, 1]``.
        method: Owen's T evaluator: ``novel`` (gamma series),
            ``tetrachoric`` or ``tetrachoric-accelerated``.
        variant: gamma-series variant for the ``novel`` method.
        eps: truncation tolerance; negative runs to stagnation.
        split: use the two-term split when the density exceeds 1.
        meyer_threshold: ``|rho|`` from which the cancellation-free slope
            formulas are used.
        ctx: numeric context.

    The result is clipped to the Frechet bounds
    ``[max(0, Phi(x) + Phi(y) - 1), min(Phi(x), Phi(y))]``.
    """
    ctx = resolve_context(ctx)
    x, y, rho = _check_inputs(x, y, rho, ctx)
    # fixed argument order makes the result exactly symmetric
    x, y = min(x, y), max(x, y)
    tfunc = owen_t_function(method, variant, eps, ctx)
    value = _phi2_core(x, y, rho, tfunc, split, meyer_threshold, ctx)
    lower = _frechet_lower(x, y, ctx)
    upper = ctx.ncdf(x)
    return min(max(value, lower), upper)


def l_complement(x, y, rho, **kwargs):
    """Joint upper tail ``L(x, y, rho) = P(X > x, Y > y) = Phi2_rho(-x, -y)``."""
    return phi2(-x, -y, rho, **kwargs)


def phi2_unified(
    x,
    y,
    rho,
    variant: SeriesVariant | str = SeriesVariant.ATAN_EXT_YES,
    eps=-1.0,
    ctx: RealContext | None = None,
):
    """``Phi2_rho(x, y)`` from a single gamma-weighted series in ``q``.

    With ``rho_x = (rho x - y) sgn(x) / sqrt(x^2 - 2 rho x y + y^2)`` and its
    mirror ``rho_y``, ``c_k = (2k)!!/(2k+1)!!`` and
    ``W_k = |x| rho_x^(2k+1) + |y| rho_y^(2k+1)``:

    * atan-ext-no: ``(Phi(x)+Phi(y))/2 + sum c_k Q(k+1,q) W_k / (2 pi sqrt(2q)) - beta``
    * atan-ext-yes: ``(Phi(x)+Phi(y))/2 + (asin rho_x + asin rho_y)/(2 pi)
      - sum c_k P(k+1,q) W_k / (2 pi sqrt(2q)) - beta``

    The ``x`` and ``y`` parts are summed separately so each stays monotone.
    Meant for cross-validation rather than production use.  When ``exp(-q)``
    underflows the value is returned only if the neglected tail is provably
    below rounding level; otherwise ``ArithmeticError`` is raised.  The Q-weighted
    form decays like ``rho_x^(2k)`` and needs very many terms when
    ``|rho_x|`` is close to 1, hence the P-weighted default.
    """
    ctx = resolve_context(ctx)
    x, y, rho = _check_inputs(x, y, rho, ctx)
    if x == 0 and y == 0:
        raise ValueError("phi2_unified needs x^2 + y^2 > 0")
    if abs(rho) == 1:
        raise ValueError("phi2_unified needs |rho| < 1")
    variant = SeriesVariant.parse(variant)
    yes = variant is SeriesVariant.ATAN_EXT_YES
    q = stable_q(x, y, rho, ctx)
    root = ctx.sqrt(2 * q * (1 - rho) * (1 + rho))  # sqrt(x^2 - 2 rho x y + y^2)
    parts = []
    edge = ctx.convert(0)  # limit of a part whose weight |u| vanishes
    for u, v in ((x, y), (y, x)):
        rho_u = (rho * u - v) * sgn(u) / root
        if u == 0:
            edge = edge + sgn(rho_u) * ctx.convert(0.25)
        else:
            parts.append((abs(u), rho_u))

    b = ctx.exp(-q)
    underflow = b < ctx.tiny
    zero = ctx.convert(0)
    sums = [zero for _ in parts]
    active = [True for _ in parts]
    powers = [ru for _, ru in parts]
    if not underflow:
        d = b
        ratio = ctx.convert(1)
        weight = (1 - d) if yes else d
        sums = [ratio * weight * pw for pw in powers]
        k = 0
        cap = _UNIFIED_MAX_TERMS
        while any(active) and k < cap:
            b = q * b / (k + 1)
            d = d + b
            ratio = ratio * (2 * k + 2) / (2 * k + 3)
            k += 1
            weight = (1 - d) if yes else d
            for i, (_, ru) in enumerate(parts):
                if not active[i]:
                    continue
                powers[i] = powers[i] * ru * ru
                new = sums[i] + ratio * weight * powers[i]
                if abs(new) <= abs(sums[i]) or new == sums[i]:
                    active[i] = False
                else:
                    sums[i] = new
            if eps > 0 and ratio * abs(max(powers, key=abs)) < eps:
                break
    scale = 2 * ctx.pi * ctx.sqrt(2 * q)
    series = zero
    for (au, _), s_u in zip(parts, sums):
        series = series + au * s_u / scale
    half = (ctx.ncdf(x) + ctx.ncdf(y)) / 2 + edge
    beta = _beta(x, y)
    if underflow:
        # Q(k+1, q) underflows; the value is half - beta plus the Q-weighted
        # tail, bounded by exp(-0.153 q) for k < q/2 and |rho_u|^q beyond
        lead = half - beta
        tail = zero
        for au, ru in parts:
            gap = (1 - ru) * (1 + ru)
            if gap <= 0:
                raise ArithmeticError("phi2_unified: exp(-q) underflows with |rho_u| = 1")
            tail = tail + au * (ctx.exp(-q * ctx.convert(0.153)) + abs(ru) ** q) / (gap * scale)
        if tail > ctx.epsilon * abs(lead) + ctx.tiny:
            raise ArithmeticError("phi2_unified: exp(-q) underflows and the series tail is not negligible")
        return lead
    if yes:
        asins = sum((ctx.asin(ru) for _, ru in parts), zero) / (2 * ctx.pi)
        return half + asins - series - beta
    return half + series - beta


def owen5_transform_identity(
    h, rho, variant: SeriesVariant | str = DEFAULT_VARIANT, ctx: RealContext | None = None
):
    """Residual of ``Phi2_rho(h,0) + Phi2_rb(rh,0) = Phi(h) + Phi(rh) - Phi(h) Phi(rh) - beta``.

    ``r = rho / sqrt(1 - rho^2)``, ``rb = sgn(rho) sqrt(1 - rho^2)``,
    ``beta = 1/2`` for ``rho < 0``.
    """
    ctx = resolve_context(ctx)
    h, _, rho = _check_inputs(h, 0, rho, ctx)
    if rho == 0 or abs(rho) == 1:
        raise ValueError("identity needs 0 < |rho| < 1")
    s = ctx.sqrt((1 - rho) * (1 + rho))
    r = rho / s
    rho_bar = sgn(rho) * s
    rh = r * h
    lhs = phi2_h0(h, rho, variant, ctx=ctx) + phi2_h0(rh, rho_bar, variant, ctx=ctx)
    ph, prh = ctx.ncdf(h), ctx.ncdf(rh)
    beta = 0.5 if rho < 0 else 0.0
    rhs = ph + prh - ph * prh - beta
    return lhs - rhs
