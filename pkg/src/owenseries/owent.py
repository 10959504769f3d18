"""Owen's T function through regularized incomplete gamma series.

Two monotone recursions are provided.  The *atan-ext-no* variant sums

    T(h, r) = r / (2 pi (1 + r^2)) * sum_k c_k Q(k+1, q) p^k

and needs nothing but the four basic operations and one exponential.  The
*atan-ext-yes* variant sums the complementary series with ``P = 1 - Q`` and
subtracts it from ``arctan(r) / (2 pi)``.  Here ``c_k = (2k)!!/(2k+1)!!``,
``p = r^2/(1+r^2)`` and ``q = (1+r^2) h^2 / 2``.  For ``|r| > 1`` both are
applied to ``(r h, 1/r)`` and combined with Owen's reflection
``T(h, r) + T(rh, 1/r) = U(h, r)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .numkernel import (
    BINARY64,
    Binary64,
    RealContext,
    _dd_add,
    _dd_div_d,
    _dd_mul,
    _dd_mul_d,
    _fast_two_sum,
    _two_prod,
    _two_sum,
    iter_gamma_seq,
    ncdf_neg_product,
    resolve_context,
    sgn,
)

__all__ = [
    "SeriesVariant",
    "OwenParams",
    "RecursionState",
    "CoreResult",
    "EvalReport",
    "TruncationBound",
    "NonConvergenceError",
    "recursion_core",
    "owen_t",
    "owen_u",
    "truncation_bound",
    "owen_t_alternating",
    "owen_t_batch",
    "std_normal_cdf_via_series",
    "iteration_cap",
]


class NonConvergenceError(ArithmeticError):
    """A series failed to converge within its term budget."""


class SeriesVariant(str, enum.Enum):
    """Which of the two recursions evaluates the series."""

    ATAN_EXT_NO = "atan-ext-no"
    ATAN_EXT_YES = "atan-ext-yes"

    @classmethod
    def parse(cls, value: "SeriesVariant | str") -> "SeriesVariant":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        for member in cls:
            if key == member.value.replace("-", ""):
                return member
        raise ValueError(f"unknown series variant: {value!r}")


DEFAULT_VARIANT = SeriesVariant.ATAN_EXT_NO

_SEED_EXPONENT = 700.0


_INV_2PI_HI = 0.15915494309189535
_INV_2PI_LO = -9.839338337591243e-18
_DD_LIMIT = 1e150  # error-free products need headroom below overflow


def _dd_pq(h: float, r: float) -> tuple[float, float, float, float]:
    """``p = r^2/(1+r^2)`` and ``q = (h^2 + (rh)^2)/2`` as unevaluated hi + lo pairs."""
    if not (abs(h) < _DD_LIMIT and abs(r) < _DD_LIMIT and abs(r * h) < _DD_LIMIT):
        return math.nan, 0.0, math.nan, 0.0
    hh, hh_lo = _two_prod(h, h)
    rh, rh_lo = _two_prod(r, h)
    rr_, rr_lo = _two_prod(rh, rh)
    rr_lo += 2.0 * rh * rh_lo
    s, t = _two_sum(hh, rr_)
    q, q_lo = _fast_two_sum(s, t + hh_lo + rr_lo)
    # p = u / (1 + u) with u = r^2
    u, u_lo = _two_prod(r, r)
    den, den_lo = _two_sum(1.0, u)
    den, den_lo = _fast_two_sum(den, den_lo + u_lo)
    p = u / den
    ph, pl = _two_prod(p, den)
    p_lo = ((u - ph) - pl + u_lo - p * den_lo) / den
    return p, p_lo, 0.5 * q, 0.5 * q_lo


@dataclass(frozen=True)
class OwenParams:
    """Arguments ``(h, r)`` together with the derived ``p`` and ``q``.

    ``q`` is computed as ``(h^2 + (r h)^2) / 2`` so it survives slopes whose
    square overflows, and is shared exactly by the transformed pair.  In
    binary64 the rounding residues ``p_lo`` and ``q_lo`` are kept as well:
    the series is sensitive to ``p`` and ``q`` roughly in proportion to ``q``,
    so they feed a first-order correction of the sum.
    """

    h: object
    r: object
    p: object
    q: object
    transformed: bool = False
    p_lo: float = 0.0
    q_lo: float = 0.0

    @classmethod
    def from_hr(cls, h, r, ctx: RealContext | None = None) -> "OwenParams":
        ctx = resolve_context(ctx)
        h = ctx.convert(h)
        r = ctx.convert(r)
        if not (ctx.isfinite(h) and ctx.isfinite(r)):
            raise ValueError("h and r must be finite")
        if isinstance(ctx, Binary64):
            p, p_lo, q, q_lo = _dd_pq(h, r)
            if math.isfinite(p):
                return cls(h, r, p, q, False, p_lo, q_lo)
        rh = r * h
        q = (h * h + rh * rh) / 2
        if abs(r) <= 1:
            r2 = r * r
            p = r2 / (1 + r2)
        else:
            ir = 1 / r
            p = 1 / (1 + ir * ir)
        return cls(h, r, p, q)

    def transform(self) -> "OwenParams":
        """Parameters ``(r h, 1/r)``; ``q`` is carried over unchanged."""
        if self.r == 0:
            raise ValueError("cannot transform r = 0")
        if self.p_lo or self.q_lo:
            # pbar = 1 - p exactly, as a hi + lo pair
            s, t = _two_sum(1.0, -self.p)
            pbar, pbar_lo = _fast_two_sum(s, t - self.p_lo)
            return OwenParams(self.r * self.h, 1 / self.r, pbar, self.q, not self.transformed, pbar_lo, self.q_lo)
        if abs(self.r) <= 1:
            r2 = self.r * self.r
            pbar = 1 / (1 + r2)
        else:
            ir = 1 / self.r
            ir2 = ir * ir
            pbar = ir2 / (1 + ir2)
        return OwenParams(self.r * self.h, 1 / self.r, pbar, self.q, not self.transformed)


@dataclass
class RecursionState:
    """Live variables of the recursions after step ``k``."""

    k: int
    a: object
    b: object
    d: object
    S: object
    e: object


class CoreResult(NamedTuple):
    """Outcome of :func:`recursion_core`.

    ``S`` is signed by ``sgn(r)``.  ``underflow`` marks ``e^-q`` below the
    smallest normal number, in which case ``S`` is zero and the represented
    T-contribution is negligible.
    """

    S: object
    iterations: int
    e: object
    converged: bool
    underflow: bool = False


@dataclass(frozen=True)
class EvalReport:
    """Result of one Owen's T evaluation.

    Attributes:
        value: computed T(h, r).
        iterations: number of recursion steps taken.
        bound: final truncation bound ``e_k`` when the tolerance stopped the
            recursion, otherwise 0 (stagnation).
        variant: recursion used.
        transformed: whether the ``(r h, 1/r)`` path was taken.
        beta_applied: constant of the reflection identity (0 or 1/2).
        converged: False if the iteration cap was hit.
        method: evaluation method label.
    """

    value: object
    iterations: int
    bound: object
    variant: SeriesVariant
    transformed: bool
    beta_applied: float = 0.0
    converged: bool = True
    method: str = "novel"


class TruncationBound(NamedTuple):
    """Upper bound ``B_n`` for the remainder after the ``n``-th term."""

    n: int
    B_n: object
    variant: SeriesVariant
    transformed: bool


def iteration_cap(ctx: RealContext | None = None, q=0.0) -> int:
    """Hard ceiling on recursion steps.

    Ten times the precision in bits, plus ``q``: for large ``q`` the
    Q-weighted terms peak near ``k = q p`` and need that many steps just to
    reach the bulk of the sum.
    """
    return 10 * resolve_context(ctx).bits + int(math.ceil(float(q)))


def recursion_core(
    params: OwenParams,
    variant: SeriesVariant | str = DEFAULT_VARIANT,
    eps=-1.0,
    *,
    ctx: RealContext | None = None,
    max_k: int | None = None,
    modified: bool = False,
    on_step: Callable[[RecursionState], None] | None = None,
) -> CoreResult:
    """Run the gamma-series recursion for atan-ext-no or atan-ext-yes.

    Args:
        params: evaluation point.  Only ``|r|``, ``p`` and ``q`` are used;
            the sign of ``r`` is applied to the final sum.
        variant: which recursion to run.
        eps: stop once ``e_k < eps``.  Negative values leave stagnation
            ``S_k <= S_{k-1}`` as the only stopping rule.
        ctx: numeric context.
        max_k: stop after the term with index ``max_k`` regardless of the
            other rules; used to inspect partial sums.
        modified: for atan-ext-yes, start from
            ``a_0 (1 - d_0) - arctan|r| / (2 pi)`` so the sums approach
            ``-T`` from below.
        on_step: callback receiving the state after every step.

    Returns:
        :class:`CoreResult` with ``S = sgn(r) * S_k``.
    """
    ctx = resolve_context(ctx)
    variant = SeriesVariant.parse(variant)
    yes = variant is SeriesVariant.ATAN_EXT_YES
    r = params.r
    zero = ctx.convert(0)
    if r == 0:
        return CoreResult(zero, 1, zero, True)

    ar = abs(r)
    p = params.p
    q = params.q
    b = ctx.exp(-q)
    rescale = None
    if b < ctx.tiny:
        # the sum is at most |r| exp(-q (1 - p)) / (2 pi); negligible when
        # that is below the smallest subnormal
        negligible = ctx.log(ar) - q * (1 - p) < ctx.log(ctx.tiny) + ctx.log(ctx.epsilon)
        if yes or negligible:
            return CoreResult(zero, 1, zero, True, True)
        # the atan-ext-no sum is linear in e^-q: start from a representable
        # seed and scale back at the end
        shift = q - _SEED_EXPONENT
        b = ctx.exp(-(q - shift))
        rescale = ctx.exp(-shift / 2)
    if not yes and isinstance(ctx, Binary64) and q < _DD_LIMIT:
        return _recursion_no_dd(params, b, rescale, eps, max_k, on_step)
    d = b
    two_pi = 2 * ctx.pi
    a = ar * (1 - p) / two_pi
    if yes:
        one_minus_b = -ctx.expm1(-q)
        g = one_minus_b * p
        S = a * one_minus_b
        if modified:
            S = S - ctx.atan(ar) / two_pi
        e = ar * one_minus_b * g / (3 * ctx.pi)
    else:
        g = p
        S = a * d
        e = ar * p / (3 * ctx.pi)

    cap = iteration_cap(ctx, q)
    k = 0
    if on_step is not None:
        on_step(RecursionState(k, a, b, d, S, e))
    converged = True
    stopped_by_eps = e < eps
    while not stopped_by_eps and (max_k is None or k < max_k):
        if k >= cap:
            converged = False
            break
        a = (2 * k + 2) * p * a / (2 * k + 3)
        b = q * b / (k + 1)
        d = d + b
        S_prev = S
        S = S + a * (1 - d) if yes else S + a * d
        e = (2 * k + 4) * g * e / (2 * k + 5)
        k += 1
        if on_step is not None:
            on_step(RecursionState(k, a, b, d, S, e))
        if e < eps:
            stopped_by_eps = True
        elif S <= S_prev and max_k is None:
            S = S_prev
            break
    iterations = max(k, 1)
    bound = e if stopped_by_eps else zero
    if rescale is not None:
        S = S * rescale * rescale
    return CoreResult(sgn(r) * S, iterations, bound, converged)


def _no_seed_dd(ar, p, p_lo, b, q_lo):
    """Initial ``a_0 = |r| (1 - p) / (2 pi)`` and ``b_0 = e^-q`` as double-double pairs."""
    s, t = _dd_add(1.0, 0.0, -p, -p_lo)
    a = _dd_mul(*_dd_mul_d(s, t, ar), _INV_2PI_HI, _INV_2PI_LO)
    # e^-(q + q_lo) = e^-q (1 - q_lo) to first order
    return a, _dd_add(b, 0.0, -b * q_lo, 0.0)


def _no_step_dd(k, a, b, d, S, P, Q):
    """One step of the atan-ext-no recursion with every quantity a hi + lo pair."""
    a = _dd_div_d(*_dd_mul_d(*_dd_mul(*a, *P), 2.0 * k + 2.0), 2.0 * k + 3.0)
    b = _dd_div_d(*_dd_mul(*b, *Q), k + 1.0)
    d = _dd_add(*d, *b)
    S = _dd_add(*S, *_dd_mul(*a, *d))
    return a, b, d, S


def _recursion_no_dd(params: OwenParams, b0: float, rescale, eps, max_k, on_step) -> CoreResult:
    """Binary64 atan-ext-no recursion carried in double-double.

    Rounding in the recurrences for ``a_k``, ``b_k`` and in the two running
    sums otherwise accumulates to several ulps once ``q`` reaches a few tens.
    Stagnation is judged on the rounded sum, so the step count matches the
    plain recursion.
    """
    ar = abs(params.r)
    p, q = params.p, params.q
    P = (p, params.p_lo)
    Q = (q, params.q_lo)
    a, b = _no_seed_dd(ar, p, params.p_lo, b0, params.q_lo)
    d = b
    S = _dd_mul(*a, *d)
    e = ar * p / (3 * math.pi)
    cap = iteration_cap(None, q)
    k = 0
    if on_step is not None:
        on_step(RecursionState(k, a[0], b[0], d[0], S[0], e))
    converged = True
    stopped_by_eps = e < eps
    while not stopped_by_eps and (max_k is None or k < max_k):
        if k >= cap:
            converged = False
            break
        a, b, d, S_new = _no_step_dd(k, a, b, d, S, P, Q)
        e = (2 * k + 4) * p * e / (2 * k + 5)
        k += 1
        if on_step is not None:
            on_step(RecursionState(k, a[0], b[0], d[0], S_new[0], e))
        if S_new[0] <= S[0] and max_k is None and not e < eps:
            break
        S = S_new
        stopped_by_eps = e < eps
    value = S[0] + S[1]
    if rescale is not None:
        value = value * rescale * rescale
    return CoreResult(sgn(params.r) * value, max(k, 1), e if stopped_by_eps else 0.0, converged)


def owen_u(h, r, ctx: RealContext | None = None):
    """``U(h, r) = (Phi(h) + Phi(rh)) / 2 - Phi(h) Phi(rh) - beta``.

    ``beta`` is 1/2 for ``r < 0`` and 0 otherwise.  The value is assembled
    from the lower tails ``A = Phi(-|h|)`` and ``B = Phi(-|rh|)`` as
    ``sgn(r) (A (1 - B) + B (1 - A)) / 2``, which avoids cancellation.
    """
    ctx = resolve_context(ctx)
    h = ctx.convert(h)
    r = ctx.convert(r)
    ah = abs(h)
    A = ctx.ncdf(-ah)
    if isinstance(ctx, Binary64):
        B = ncdf_neg_product(abs(r), ah)
    else:
        B = ctx.ncdf(-(abs(r) * ah))
    return sgn(r) * ((A * (1 - B) + B * (1 - A)) / 2)


def owen_t(
    h,
    r,
    variant: SeriesVariant | str = DEFAULT_VARIANT,
    eps=-1.0,
    *,
    ctx: RealContext | None = None,
    transform: bool | None = None,
    max_k: int | None = None,
) -> EvalReport:
    """Owen's T function ``T(h, r)``.

    Args:
        h: first argument.
        r: slope.
        variant: ``atan-ext-no`` (default) keeps relative accuracy for tiny
            values; ``atan-ext-yes`` converges in fewer steps.
        eps: truncation tolerance; negative runs to stagnation.
        ctx: numeric context.
        transform: force (True) or suppress (False) the ``(rh, 1/r)`` path.
            Defaults to ``|r| > 1``.
        max_k: truncate the series after this term index.

    The evaluation uses ``|h|`` and ``|r|`` and applies ``sgn(r)`` at the
    end, so the result is exactly even in ``h`` and odd in ``r``.
    """
    ctx = resolve_context(ctx)
    variant = SeriesVariant.parse(variant)
    params = OwenParams.from_hr(abs(ctx.convert(h)), abs(ctx.convert(r)), ctx)
    s = sgn(r)
    zero = ctx.convert(0)
    if params.r == 0:
        return EvalReport(zero, 0, zero, variant, False)
    if transform is None:
        transform = params.r > 1
    two_pi = 2 * ctx.pi

    target = params.transform() if transform else params
    core = recursion_core(target, variant, eps, ctx=ctx, max_k=max_k)
    if core.underflow:
        part = zero
    elif variant is SeriesVariant.ATAN_EXT_YES:
        part = ctx.atan(target.r) / two_pi - core.S
    else:
        part = core.S
    if transform:
        value = owen_u(params.h, params.r, ctx) - part
        beta = 0.5 if s < 0 else 0.0
    else:
        value = part
        beta = 0.0
    return EvalReport(
        s * value,
        core.iterations,
        core.e,
        variant,
        bool(transform),
        beta,
        core.converged,
    )


def _double_factorial_ratio(n: int, ctx: RealContext):
    """``(2n+2)!!/(2n+3)!!`` for ``n >= -1``."""
    out = ctx.convert(1)
    for j in range(n + 1):
        out = out * (2 * j + 2) / (2 * j + 3)
    return out


def truncation_bound(
    n: int,
    params: OwenParams,
    variant: SeriesVariant | str = DEFAULT_VARIANT,
    ctx: RealContext | None = None,
) -> TruncationBound:
    """Bound on the remainder after keeping terms ``0..n`` of either series.

    ``B_n = (2n+2)!!/(2n+3)!! * |r|/(2 pi) * p^(n+1)`` for atan-ext-no, with
    an extra factor ``(1 - e^-q)^(n+2)`` for atan-ext-yes.  ``n = -1`` bounds
    the whole series.  For transformed parameters pass ``params.transform()``.
    """
    if n < -1:
        raise ValueError("n must be >= -1")
    ctx = resolve_context(ctx)
    variant = SeriesVariant.parse(variant)
    B = _double_factorial_ratio(n, ctx) * abs(params.r) / (2 * ctx.pi) * params.p ** (n + 1)
    if variant is SeriesVariant.ATAN_EXT_YES:
        B = B * (-ctx.expm1(-params.q)) ** (n + 2)
    return TruncationBound(n, B, variant, params.transformed)


def owen_t_alternating(h, r, max_terms: int = 2000, ctx: RealContext | None = None):
    """Owen's original alternating series, for comparison only.

    ``T(h, r) = (arctan r - sum_j (-1)^j r^(2j+1)/(2j+1) P(j+1, h^2/2)) / (2 pi)``.
    Cancellation makes it lose accuracy as ``|h r|`` grows.

    Raises:
        NonConvergenceError: if the terms have not died out after
            ``max_terms`` terms.
    """
    ctx = resolve_context(ctx)
    h = ctx.convert(h)
    r = ctx.convert(r)
    if not (ctx.isfinite(h) and ctx.isfinite(r)):
        raise ValueError("h and r must be finite")
    if r == 0:
        return ctx.convert(0)
    x = h * h / 2
    r2 = r * r
    power = r
    total = ctx.convert(0)
    for state in iter_gamma_seq(x, ctx=ctx):
        j = state.k
        if j >= max_terms:
            raise NonConvergenceError(f"alternating series did not converge in {max_terms} terms")
        term = power * (1 - state.d) / (2 * j + 1)
        new = total + term if j % 2 == 0 else total - term
        if new == total and j > 0:
            break
        total = new
        power = power * r2
        if not ctx.isfinite(power):
            raise NonConvergenceError("alternating series overflowed")
    return (ctx.atan(r) - total) / (2 * ctx.pi)


def owen_t_batch(
    h: float | Sequence[float] | np.ndarray,
    r: float | Sequence[float] | np.ndarray,
    variant: SeriesVariant | str = DEFAULT_VARIANT,
    eps: float = -1.0,
    shared_iterations: bool = True,
) -> list[EvalReport]:
    """Vectorized binary64 evaluation with shared termination.

    Scalars broadcast against vectors.  Every component stops updating at the
    step where it would stop on its own, so values equal scalar
    :func:`owen_t` calls bit for bit.  The iteration count in each report is
    the count of the worst component, or the component's own count when
    ``shared_iterations`` is False.
    """
    variant = SeriesVariant.parse(variant)
    yes = variant is SeriesVariant.ATAN_EXT_YES
    h_arr = np.atleast_1d(np.asarray(h, dtype=np.float64))
    r_arr = np.atleast_1d(np.asarray(r, dtype=np.float64))
    h_scalar = np.ndim(h) == 0
    r_scalar = np.ndim(r) == 0
    if not h_scalar and not r_scalar and h_arr.shape != r_arr.shape:
        raise ValueError("h and r vectors must have the same length")
    n = max(h_arr.size, r_arr.size) if (h_scalar or r_scalar) else h_arr.size
    if h_scalar and r_scalar:
        n = 1
    if n == 0:
        return []
    h_arr = np.broadcast_to(h_arr, (n,)).astype(np.float64)
    r_arr = np.broadcast_to(r_arr, (n,)).astype(np.float64)
    if not (np.all(np.isfinite(h_arr)) and np.all(np.isfinite(r_arr))):
        raise ValueError("h and r must be finite")

    # per-component setup through the scalar code paths
    sign = np.where(r_arr >= 0, 1.0, -1.0)
    transformed = np.abs(r_arr) > 1
    rr = np.empty(n)  # |r| or 1/|r| fed to the recursion
    p = np.empty(n)
    q = np.empty(n)
    p_lo = np.zeros(n)
    q_lo = np.zeros(n)
    b = np.empty(n)
    u_term = np.zeros(n)
    atan_term = np.zeros(n)
    omb = np.empty(n)  # 1 - e^-q
    fallback: dict[int, EvalReport] = {}
    active = np.ones(n, dtype=bool)
    for i in range(n):
        params = OwenParams.from_hr(abs(h_arr[i]), abs(r_arr[i]))
        if transformed[i]:
            params = params.transform()
        rr[i], p[i], q[i] = params.r, params.p, params.q
        p_lo[i], q_lo[i] = params.p_lo, params.q_lo
        b[i] = math.exp(-params.q)
        if params.r == 0:
            active[i] = False
        elif b[i] < BINARY64.tiny:
            # rare underflow path: delegate to the scalar evaluator
            active[i] = False
            fallback[i] = owen_t(h_arr[i], r_arr[i], variant, eps)
        omb[i] = -math.expm1(-params.q)
        if transformed[i]:
            u_term[i] = owen_u(abs(h_arr[i]), abs(r_arr[i]))
        if yes and active[i]:
            atan_term[i] = math.atan(params.r) / (2 * math.pi)

    base_iter = np.where(r_arr == 0, 0, 1)
    S = np.zeros(n)
    done_iter = base_iter.copy()
    converged = np.ones(n, dtype=bool)
    bound = np.zeros(n)
    if np.any(active):
        with np.errstate(all="ignore"):
            if yes:
                S, bound = _batch_yes(rr, p, q, b, omb, active, eps, done_iter, converged)
            else:
                S, bound = _batch_no_dd(rr, p, p_lo, q, q_lo, b, active, eps, done_iter, converged)
    for i, rep in fallback.items():
        done_iter[i] = rep.iterations
        converged[i] = rep.converged
    shared = int(done_iter.max())
    S = np.where(active, S, 0.0)
    part = atan_term - S if yes else S
    values = sign * np.where(transformed, u_term - part, part)
    out = []
    for i in range(n):
        if i in fallback:
            rep = fallback[i]
            count = shared if shared_iterations else rep.iterations
            out.append(EvalReport(rep.value, count, rep.bound, variant, rep.transformed,
                                  rep.beta_applied, rep.converged))
            continue
        beta = 0.5 if (transformed[i] and sign[i] < 0) else 0.0
        out.append(
            EvalReport(
                float(values[i]),
                shared if shared_iterations else int(done_iter[i]),
                float(bound[i]),
                variant,
                bool(transformed[i]),
                beta,
                bool(converged[i]),
            )
        )
    return out


def _batch_yes(rr, p, q, b, omb, active, eps, done_iter, converged):
    """Vectorized atan-ext-yes recursion; fills ``done_iter`` and ``converged``."""
    d = b.copy()
    a = rr * (1 - p) / (2 * math.pi)
    g = omb * p
    S = np.where(active, a * omb, 0.0)
    e = rr * omb * g / (3 * math.pi)
    running = active & ~(e < eps)
    bound = np.where(active & (e < eps), e, 0.0)
    cap = np.array([iteration_cap(q=qi) for qi in q])
    k = 0
    while True:
        capped = running & (k >= cap)
        converged[capped] = False
        done_iter[capped] = max(k, 1)
        running &= ~capped
        if not np.any(running):
            return S, bound
        a_n = (2 * k + 2) * p * a / (2 * k + 3)
        b_n = q * b / (k + 1)
        d_n = d + b_n
        S_n = S + a_n * (1 - d_n)
        e_n = (2 * k + 4) * g * e / (2 * k + 5)
        k += 1
        hit_eps = running & (e_n < eps)
        stalled = running & ~hit_eps & (S_n <= S)
        advance = running & ~stalled
        a = np.where(advance, a_n, a)
        b = np.where(advance, b_n, b)
        d = np.where(advance, d_n, d)
        S = np.where(advance, S_n, S)
        e = np.where(advance, e_n, e)
        bound = np.where(hit_eps, e_n, bound)
        finished = hit_eps | stalled
        done_iter[finished] = k
        running &= ~finished


def _batch_no_dd(rr, p, p_lo, q, q_lo, b0, active, eps, done_iter, converged):
    """Vectorized double-double atan-ext-no recursion, bit-identical to the scalar one."""
    a, b = _no_seed_dd(rr, p, p_lo, b0, q_lo)
    d = b
    S = _dd_mul(*a, *d)
    P, Q = (p, p_lo), (q, q_lo)
    e = rr * p / (3 * math.pi)
    running = active & ~(e < eps)
    bound = np.where(active & (e < eps), e, 0.0)
    cap = np.array([iteration_cap(q=qi) for qi in q])
    k = 0
    while True:
        capped = running & (k >= cap)
        converged[capped] = False
        done_iter[capped] = max(k, 1)
        running &= ~capped
        if not np.any(running):
            return np.where(active, S[0] + S[1], 0.0), bound
        a_n, b_n, d_n, S_n = _no_step_dd(k, a, b, d, S, P, Q)
        e_n = (2 * k + 4) * p * e / (2 * k + 5)
        k += 1
        hit_eps = running & (e_n < eps)
        stalled = running & ~hit_eps & (S_n[0] <= S[0])
        advance = running & ~stalled
        a = tuple(np.where(advance, x, y) for x, y in zip(a_n, a))
        b = tuple(np.where(advance, x, y) for x, y in zip(b_n, b))
        d = tuple(np.where(advance, x, y) for x, y in zip(d_n, d))
        S = tuple(np.where(advance, x, y) for x, y in zip(S_n, S))
        e = np.where(advance, e_n, e)
        bound = np.where(hit_eps, e_n, bound)
        finished = hit_eps | stalled
        done_iter[finished] = k
        running &= ~finished


def std_normal_cdf_via_series(h, ctx: RealContext | None = None):
    """``Phi(h) = 1/2 + sgn(h) sqrt(S)`` with a gamma-weighted arctangent-type sum.

    ``S = (1/(2 pi)) sum_k (2k)!!/(2k+1)!! P(k+1, h^2) / 2^k``.  Intended as a
    validation identity rather than a production CDF.
    """
    ctx = resolve_context(ctx)
    h = ctx.convert(h)
    if not ctx.isfinite(h):
        raise ValueError("h must be finite")
    half = ctx.convert(0.5)
    if h == 0:
        return half
    q = h * h
    P = -ctx.expm1(-q)
    b = ctx.exp(-q)
    c = ctx.convert(1)
    S = P
    k = 0
    while True:
        b = q * b / (k + 1)
        P = P - b
        c = c * (2 * k + 2) / (2 * k + 3) / 2
        k += 1
        S_new = S + c * P
        if S_new <= S:
            break
        S = S_new
    S = S / (2 * ctx.pi)
    return half + sgn(h) * ctx.sqrt(S)
