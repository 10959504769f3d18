"""Command-line interface: single evaluations, grid and random benchmarks, precision ladder.

Subcommands::

    owenseries eval --owen-t -h 0 -r 1
    owenseries eval --phi2 -x 0 -y 0 --rho 0.5
    owenseries grid --out grid.csv
    owenseries random --count 100000 --star --out random.csv
    owenseries compare --bits 53 64 128 256

CSV goes to ``--out`` (``-`` for standard output); summaries go to
standard output.  Binary64 numbers are written with 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from . import __version__
from .bvn import METHODS, density, phi2, phi2_h0
from .numkernel import RealContext, resolve_context
from .oracle import QuadratureError, owen_t_quadrature, phi2_h0_quadrature, phi2_plackett_quadrature
from .owent import SeriesVariant, owen_t, owen_t_alternating, owen_t_batch
from .tetrachoric import owen_t_tetrachoric

EVAL_METHODS = METHODS + ("alternating", "oracle")
VARIANTS = tuple(v.value for v in SeriesVariant)
DEFAULT_BITS = (53, 64, 128, 256, 512, 1024)


def format_number(v, ctx: RealContext | None = None) -> str:
    """Full-precision scientific notation: 17 significant digits at binary64."""
    ctx = resolve_context(ctx)
    if ctx.bits == 53 or isinstance(v, (float, int, np.floating)):
        return f"{float(v):.16e}"
    digits = int(math.ceil(ctx.bits * math.log10(2))) + 1
    return ctx.mpctx.nstr(v, digits, min_fixed=1, max_fixed=0, strip_zeros=False)


def _open_out(path: str | None):
    if path is None:
        return None
    if path == "-":
        return sys.stdout
    return open(path, "w", newline="")


def _close_out(fh: TextIO | None) -> None:
    if fh is not None and fh is not sys.stdout:
        fh.close()


def _series_labels(methods: Sequence[str], variants: Sequence[str]) -> list[tuple[str, str]]:
    out = []
    for m in methods:
        if m == "novel":
            out.extend((m, v) for v in variants)
        else:
            out.append((m, ""))
    return out


def _label(method: str, variant: str) -> str:
    return f"{method}/{variant}" if variant else method


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def _slope_from_rho(rho, ctx: RealContext):
    if abs(rho) >= 1:
        raise ValueError("--rho must satisfy |rho| < 1 for Owen's T")
    return rho / ctx.sqrt((1 - rho) * (1 + rho))


def _rho_from_slope(r, ctx: RealContext):
    if not ctx.isfinite(r):
        return ctx.convert(1 if r > 0 else -1)
    return r / ctx.sqrt(1 + r * r)


def cmd_eval(args: argparse.Namespace) -> int:
    ctx = resolve_context(args.precision_bits)
    method = args.method
    if method in ("alternating", "oracle") and ctx.bits != 53:
        raise ValueError(f"method {method!r} is binary64 only")
    iterations: object = ""
    bound: object = ""
    transformed: object = ""
    variant = args.variant if method == "novel" else ""
    if args.owen_t:
        if args.h is None:
            raise ValueError("--owen-t needs -h")
        h = ctx.convert(args.h)
        if args.r is not None:
            r = ctx.convert(args.r)
        elif args.rho is not None:
            r = _slope_from_rho(ctx.convert(args.rho), ctx)
        else:
            raise ValueError("--owen-t needs -r or --rho")
        quantity = "owen_t"
        if method == "novel":
            rep = owen_t(h, r, args.variant, args.eps, ctx=ctx)
            value, iterations, bound, transformed = rep.value, rep.iterations, rep.bound, rep.transformed
            if not rep.converged:
                raise ArithmeticError("recursion hit the iteration cap")
        elif method in ("tetrachoric", "tetrachoric-accelerated"):
            res = owen_t_tetrachoric(h, r, method == "tetrachoric-accelerated", args.eps, ctx)
            value, iterations = res.value, res.iterations
        elif method == "alternating":
            value = owen_t_alternating(float(h), float(r))
        else:
            value = owen_t_quadrature(float(h), float(r), args.oracle_tol)
    else:
        x = ctx.convert(args.x if args.x is not None else (args.h if args.h is not None else 0.0))
        y = ctx.convert(args.y if args.y is not None else 0.0)
        if args.rho is not None:
            rho = ctx.convert(args.rho)
        elif args.r is not None:
            rho = _rho_from_slope(ctx.convert(args.r), ctx)
        else:
            raise ValueError("--phi2 needs --rho or -r")
        quantity = "phi2"
        if method in METHODS:
            value = phi2(x, y, rho, method=method, variant=args.variant, eps=args.eps, ctx=ctx)
        elif method == "oracle":
            value = phi2_plackett_quadrature(float(x), float(y), float(rho), args.oracle_tol)
        else:
            raise ValueError("method 'alternating' is only available with --owen-t")
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["quantity", "method", "variant", "bits", "value", "iterations", "bound", "transformed"])
    writer.writerow(
        [
            quantity,
            method,
            variant,
            ctx.bits,
            format_number(value, ctx),
            iterations,
            format_number(bound, ctx) if bound != "" else "",
            str(transformed).lower() if transformed != "" else "",
        ]
    )
    return 0


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """``h = -10..10`` step 0.1 and ``rho = -0.99..0.99`` step 0.01 (39,999 points)."""

    h_max: float = 10.0
    h_step: float = 0.1
    rho_max: float = 0.99
    rho_step: float = 0.01

    def __post_init__(self):
        if not (self.h_step > 0 and self.rho_step > 0):
            raise ValueError("grid steps must be positive")
        if not (0 < self.rho_max < 1):
            raise ValueError("rho_max must lie in (0, 1)")

    def h_values(self) -> np.ndarray:
        return _symmetric_ladder(self.h_max, self.h_step)

    def rho_values(self) -> np.ndarray:
        return _symmetric_ladder(self.rho_max, self.rho_step)

    @property
    def size(self) -> int:
        return len(self.h_values()) * len(self.rho_values())


def _symmetric_ladder(top: float, step: float) -> np.ndarray:
    n = int(round(top / step))
    k = np.arange(-n, n + 1)
    inv = 1.0 / step
    # k / 10 rather than k * 0.1 so grid points are the nearest doubles
    if abs(inv - round(inv)) < 1e-9:
        return k / float(round(inv))
    return k * step


@dataclass
class GridResult:
    """Per-point values and iteration counts, indexed ``[rho, h]``."""

    h: np.ndarray
    rho: np.ndarray
    values: np.ndarray
    iterations: np.ndarray
    bounds: np.ndarray

    def summary(self, reference: np.ndarray | None) -> dict:
        it = self.iterations
        out = {
            "average_iter_1_h_vector": float(it.max(axis=1).mean()),
            "average_iter_1_r_vector": float(it.max(axis=0).mean()),
            "average_iter_2": float(it.mean()),
            "maximum_iter": int(it.max()),
        }
        if reference is not None:
            err = np.abs(self.values - reference)
            out["max_abs_err"] = float(err.max())
            out["mean_abs_err"] = float(err.mean())
        return out


def grid_evaluate(spec: GridSpec, method: str, variant: str = "", eps: float = -1.0) -> GridResult:
    """``Phi2_rho(h, 0)`` and the Owen's T iteration counts over the grid."""
    hs, rhos = spec.h_values(), spec.rho_values()
    shape = (len(rhos), len(hs))
    values = np.empty(shape)
    iters = np.zeros(shape, dtype=np.int64)
    bounds = np.zeros(shape)
    for i, rho in enumerate(rhos):
        r = rho / math.sqrt((1.0 - rho) * (1.0 + rho))
        if method == "novel":
            # one vectorized pass per row; values match scalar calls exactly
            reports = owen_t_batch(hs, r, variant, eps, shared_iterations=False)
            rows = [(rep.value, rep.iterations, rep.bound) for rep in reports]
        else:
            rows = []
            for h in hs:
                res = owen_t_tetrachoric(h, r, method == "tetrachoric-accelerated", eps)
                rows.append((res.value, res.iterations, 0.0))
        for j, (t, n, b) in enumerate(rows):
            values[i, j] = _h0_from_t(hs[j], t)
            iters[i, j] = n
            bounds[i, j] = b
    return GridResult(hs, rhos, values, iters, bounds)


def _h0_from_t(h: float, t: float) -> float:
    # same arithmetic as phi2_h0
    return resolve_context(None).ncdf(h) / 2 + t


def grid_reference(spec: GridSpec, tol: float = 1e-13) -> np.ndarray:
    """Quadrature-oracle values of ``Phi2_rho(h, 0)`` on the grid."""
    hs, rhos = spec.h_values(), spec.rho_values()
    return np.array([[phi2_h0_quadrature(h, rho, tol) for h in hs] for rho in rhos])


def cmd_grid(args: argparse.Namespace) -> int:
    spec = GridSpec(h_step=args.h_step, rho_step=args.rho_step)
    reference = None if args.no_reference else grid_reference(spec, args.oracle_tol)
    results = {}
    for method, variant in _series_labels(args.method, args.variant):
        results[(method, variant)] = grid_evaluate(spec, method, variant, args.eps)

    fh = _open_out(args.out)
    if fh is not None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["h", "rho", "r", "method", "value", "iterations", "bound", "abs_err_vs_reference"])
        for (method, variant), res in results.items():
            label = _label(method, variant)
            for i, rho in enumerate(res.rho):
                r = rho / math.sqrt((1.0 - rho) * (1.0 + rho))
                for j, h in enumerate(res.h):
                    err = "" if reference is None else format_number(abs(res.values[i, j] - reference[i, j]))
                    writer.writerow(
                        [
                            format_number(h),
                            format_number(rho),
                            format_number(r),
                            label,
                            format_number(res.values[i, j]),
                            int(res.iterations[i, j]),
                            format_number(res.bounds[i, j]),
                            err,
                        ]
                    )
        _close_out(fh)

    out = sys.stderr if args.out == "-" else sys.stdout
    print(f"grid points: {spec.size}", file=out)
    print("reference: " + ("none" if reference is None else f"quadrature oracle, tol {args.oracle_tol:g}"), file=out)
    for (method, variant), res in results.items():
        s = res.summary(reference)
        print(f"[{_label(method, variant)}]", file=out)
        print(f"  Average iter. 1 (h vectors): {s['average_iter_1_h_vector']:.2f}", file=out)
        print(f"  Average iter. 1 (r vectors): {s['average_iter_1_r_vector']:.2f}", file=out)
        print(f"  Average iter. 2: {s['average_iter_2']:.2f}", file=out)
        print(f"  Maximum iter.: {s['maximum_iter']}", file=out)
        if reference is not None:
            print(f"  max abs err: {s['max_abs_err']:.3e}", file=out)
            print(f"  mean abs err: {s['mean_abs_err']:.3e}", file=out)
    novel = [results[k].values for k in results if k[0] == "novel"]
    if len(novel) == 2:
        print(f"variant cross-difference: {float(np.abs(novel[0] - novel[1]).max()):.3e}", file=out)
    return 0


# ---------------------------------------------------------------------------
# random
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomSpec:
    """Uniform triplets ``x, y`` in (-10, 10) and ``rho`` in (-1, 1) from a seeded PCG64 stream.

    With ``star`` the correlation is mapped to ``rho* = 2 Phi(8 rho) - 1``,
    which crowds it towards ``+-1``.
    """

    count: int = 1_000_000
    seed: int = 123
    star: bool = False

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be >= 0")

    def draw(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rng = np.random.default_rng(self.seed)
        x = rng.uniform(-10.0, 10.0, self.count)
        y = rng.uniform(-10.0, 10.0, self.count)
        rho = rng.uniform(-1.0, 1.0, self.count)
        if self.star:
            rho = star_transform(rho)
        # keep the open interval
        rho = np.clip(rho, -np.nextafter(1.0, 0.0), np.nextafter(1.0, 0.0))
        return x, y, rho


def star_transform(rho: np.ndarray) -> np.ndarray:
    """``2 Phi(8 rho) - 1`` written as ``Phi(8 rho) - Phi(-8 rho)``."""
    ncdf = resolve_context(None).ncdf
    return np.array([ncdf(8.0 * v) - ncdf(-8.0 * v) for v in np.asarray(rho, dtype=float)])


# (x, y, rho, value) pairs with closed forms
def closed_form_points() -> list[tuple[float, float, float, float]]:
    ncdf = resolve_context(None).ncdf
    p = ncdf(2.1)
    s = math.sqrt(0.5)
    return [
        (0.0, 0.0, 0.5, 1.0 / 3.0),
        (0.0, 0.0, -0.5, 1.0 / 6.0),
        (1.0, 1.0, 0.0, ncdf(1.0) ** 2),
        (2.1, 0.0, s, p * (1.0 - 0.5 * p)),
        (2.1, 0.0, -s, 0.5 * p * p),
    ]


def quantiles(err: np.ndarray) -> dict:
    if err.size == 0:
        return {k: float("nan") for k in ("median", "mean", "q3", "p99", "max")}
    return {
        "median": float(np.median(err)),
        "mean": float(err.mean()),
        "q3": float(np.quantile(err, 0.75)),
        "p99": float(np.quantile(err, 0.99)),
        "max": float(err.max()),
    }


def cmd_random(args: argparse.Namespace) -> int:
    spec = RandomSpec(args.count, args.seed, args.star)
    x, y, rho = spec.draw()
    n_ref = min(args.oracle_count, spec.count)
    reference = np.full(spec.count, np.nan)
    for i in range(n_ref):
        reference[i] = phi2_plackett_quadrature(x[i], y[i], rho[i], args.oracle_tol)
    dens = np.array([density(a, b, c) for a, b, c in zip(x, y, rho)])
    split = dens > 1.0
    labels = _series_labels(args.method, args.variant)
    values = {}
    for method, variant in labels:
        values[(method, variant)] = np.array(
            [phi2(a, b, c, method=method, variant=variant or "atan-ext-no", eps=args.eps) for a, b, c in zip(x, y, rho)]
        )

    fh = _open_out(args.out)
    if fh is not None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "x", "y", "rho", "method", "value", "density", "split", "reference", "abs_err"])
        for (method, variant), vals in values.items():
            label = _label(method, variant)
            for i in range(spec.count):
                has_ref = i < n_ref
                writer.writerow(
                    [
                        i,
                        format_number(x[i]),
                        format_number(y[i]),
                        format_number(rho[i]),
                        label,
                        format_number(vals[i]),
                        format_number(dens[i]),
                        int(split[i]),
                        format_number(reference[i]) if has_ref else "",
                        format_number(abs(vals[i] - reference[i])) if has_ref else "",
                    ]
                )
        _close_out(fh)

    out = sys.stderr if args.out == "-" else sys.stdout
    print(f"triplets: {spec.count} (seed {spec.seed}, star {'on' if spec.star else 'off'})", file=out)
    print(f"split triggers (density > 1): {int(split.sum())}", file=out)
    if spec.count:
        print(f"fraction |rho| > 0.9999: {float(np.mean(np.abs(rho) > 0.9999)):.4f}", file=out)
    print(f"reference: quadrature oracle on first {n_ref} points, tol {args.oracle_tol:g}", file=out)
    cf = closed_form_points()
    for method, variant in labels:
        s = quantiles(np.abs(values[(method, variant)][:n_ref] - reference[:n_ref]))
        cf_err = max(
            abs(phi2(a, b, c, method=method, variant=variant or "atan-ext-no") - v) for a, b, c, v in cf
        )
        print(f"[{_label(method, variant)}]", file=out)
        print(
            "  abs err vs oracle: "
            + "  ".join(f"{k} {s[k]:.3e}" for k in ("median", "mean", "q3", "p99", "max")),
            file=out,
        )
        print(f"  closed-form max abs err: {cf_err:.3e}", file=out)
    return 0


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def _parse_rho(text: str, ctx: RealContext):
    t = text.strip().lower().replace(" ", "")
    sign = -1 if t.startswith("-") else 1
    body = t.lstrip("+-")
    if body in ("sqrt2/2", "sqrt(2)/2"):
        return sign * ctx.sqrt(ctx.convert(2)) / 2
    return ctx.convert(text) if ctx.bits != 53 else float(text)


def closed_form_h0(h, rho, ctx: RealContext):
    """``Phi2_rho(h, 0)`` for ``rho = +-sqrt(2)/2``, else ``None``."""
    half = ctx.sqrt(ctx.convert(2)) / 2
    p = ctx.ncdf(h)
    if abs(rho - half) <= 4 * ctx.epsilon:
        return p * (1 - p / 2)
    if abs(rho + half) <= 4 * ctx.epsilon:
        return p * p / 2
    return None


def compare_rows(h: str, rho: str, bits: Iterable[int], variants: Sequence[str]) -> list[dict]:
    """Precision ladder: value, iterations and error against a doubled-precision reference."""
    rows = []
    for b in bits:
        ctx = resolve_context(b)
        ref_ctx = resolve_context(2 * b)
        hv, rv = ctx.convert(h), _parse_rho(rho, ctx)
        h2, r2 = ref_ctx.convert(h), _parse_rho(rho, ref_ctx)
        ref = closed_form_h0(h2, r2, ref_ctx)
        ref_kind = "closed form"
        for v in variants:
            if ref is None:
                ref_v = phi2_h0(h2, r2, v, ctx=ref_ctx)
                ref_kind = "doubled-precision series"
            else:
                ref_v = ref
            slope = rv / ctx.sqrt((1 - rv) * (1 + rv))
            rep = owen_t(hv, slope, v, ctx=ctx)
            value = ctx.ncdf(hv) / 2 + rep.value
            err = abs(ref_ctx.convert(value) - ref_v)
            rows.append(
                {
                    "bits": b,
                    "variant": v,
                    "value": value,
                    "abs_err": float(err),
                    "iterations": rep.iterations,
                    "unit": 2.0**-b,
                    "reference": ref_kind,
                    "ctx": ctx,
                }
            )
    return rows


def cmd_compare(args: argparse.Namespace) -> int:
    rows = compare_rows(args.h, args.rho, args.bits, args.variant)
    fh = _open_out(args.out) or sys.stdout
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["bits", "variant", "value", "abs_err", "iterations", "unit", "reference"])
    for row in rows:
        writer.writerow(
            [
                row["bits"],
                row["variant"],
                format_number(row["value"], row["ctx"]),
                f"{row['abs_err']:.3e}",
                row["iterations"],
                f"{row['unit']:.3e}",
                row["reference"],
            ]
        )
    _close_out(fh)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _bits(text: str) -> int:
    v = int(text)
    if v < 53:
        raise argparse.ArgumentTypeError("precision must be at least 53 bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="owenseries", description="Owen's T and bivariate normal probabilities.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--variant", choices=VARIANTS, default=SeriesVariant.ATAN_EXT_NO.value)
    common.add_argument("--eps", type=float, default=-1.0, help="truncation tolerance; negative runs to stagnation")
    common.add_argument("--oracle-tol", type=_positive, default=1e-13)

    # -h is an argument here, so help moves to --help
    ev = sub.add_parser("eval", parents=[common], add_help=False, help="evaluate one value")
    ev.add_argument("--help", action="help", help="show this help message and exit")
    what = ev.add_mutually_exclusive_group(required=True)
    what.add_argument("--owen-t", action="store_true", help="Owen's T(h, r)")
    what.add_argument("--phi2", action="store_true", help="bivariate normal Phi2_rho(x, y)")
    ev.add_argument("-h", dest="h", type=float)
    ev.add_argument("-x", dest="x", type=float)
    ev.add_argument("-y", dest="y", type=float)
    ev.add_argument("--rho", type=float)
    ev.add_argument("-r", "--r", dest="r", type=float)
    ev.add_argument("--method", choices=EVAL_METHODS, default="novel")
    ev.add_argument("--precision-bits", type=_bits, default=None)
    ev.set_defaults(func=cmd_eval)

    gr = sub.add_parser("grid", help="grid benchmark over (h, rho)")
    gr.add_argument("--method", nargs="+", choices=METHODS, default=["novel"])
    gr.add_argument("--variant", nargs="+", choices=VARIANTS, default=list(VARIANTS))
    gr.add_argument("--eps", type=float, default=-1.0)
    gr.add_argument("--oracle-tol", type=_positive, default=1e-13)
    gr.add_argument("--no-reference", action="store_true", help="skip the quadrature reference")
    gr.add_argument("--h-step", type=_positive, default=0.1)
    gr.add_argument("--rho-step", type=_positive, default=0.01)
    gr.add_argument("--out", default=None, help="CSV path, '-' for standard output")
    gr.set_defaults(func=cmd_grid)

    ra = sub.add_parser("random", help="random-triplet benchmark")
    ra.add_argument("--count", type=int, default=1_000_000)
    ra.add_argument("--seed", type=int, default=123)
    ra.add_argument("--star", action="store_true", help="map rho to 2 Phi(8 rho) - 1")
    ra.add_argument("--method", nargs="+", choices=METHODS, default=["novel"])
    ra.add_argument("--variant", nargs="+", choices=VARIANTS, default=[SeriesVariant.ATAN_EXT_NO.value])
    ra.add_argument("--eps", type=float, default=-1.0)
    ra.add_argument("--oracle-count", type=int, default=10_000)
    ra.add_argument("--oracle-tol", type=_positive, default=1e-13)
    ra.add_argument("--out", default=None, help="CSV path, '-' for standard output")
    ra.set_defaults(func=cmd_random)

    co = sub.add_parser("compare", add_help=False, help="precision ladder against a closed form")
    co.add_argument("--help", action="help", help="show this help message and exit")
    co.add_argument("-h", dest="h", default="2.1", help="h as a decimal string")
    co.add_argument("--rho", default="sqrt2/2", help="decimal or +-sqrt2/2")
    co.add_argument("--bits", nargs="+", type=_bits, default=list(DEFAULT_BITS))
    co.add_argument("--variant", nargs="+", choices=VARIANTS, default=[SeriesVariant.ATAN_EXT_YES.value])
    co.add_argument("--out", default=None)
    co.set_defaults(func=cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ArithmeticError, QuadratureError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
