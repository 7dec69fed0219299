"""Kernel series, balancing-identity residuals, and the damped iteration.

The balancing identity for a weight ``f`` of height ``alpha`` in ``n``
variables reads

    (alpha-1)...(alpha-n) * lambda^2 / f(x)^alpha  =  sum_J x^J / I_J,

where ``I_J`` are the moments of ``f``.  The balancing map inverts it:

    T(f) = ((alpha-1)...(alpha-n) * lambda^2 / S)^(1/alpha),
    S = sum_J x^J / I_J,

and the damped iteration ``f <- (1-theta) f + theta T(f)`` searches for a
fixed point, re-normalizing ``lambda`` each step by pinning the identity
at the origin.  For the disk (n = 1, alpha = 3) the unique analytic fixed
point is the hyperbolic weight ``lambda (1 - x)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import csv
import io

import gmpy2

from .backend import Backend, Number, sqrt_number
from .errors import (
    AlphaTooSmall,
    NonpositiveConstantTerm,
    OrderExceedsTable,
    PositivityLost,
)
from .moments import MomentTable, moment, moment_table, simplex_moment_table
from .series import (
    TailBound,
    TruncatedSeries,
    series_add,
    series_eval,
    series_power,
    series_scale,
    series_sub,
)
from .weights import RadialWeight, make_weight, simplex_grid, to_float_weight

DEFAULT_TAIL_TOL = 1e-6
DEFAULT_GRID_STOP = Fraction(9, 10)
DEFAULT_GRID_COUNT = 32


def height_factor(alpha, n: int):
    """(alpha-1)(alpha-2)...(alpha-n)."""
    out = 1
    for k in range(1, n + 1):
        out = out * (alpha - k)
    return out


def residual_grid(backend: Backend, n: int = 1,
                  stop: Fraction = DEFAULT_GRID_STOP,
                  count: int = DEFAULT_GRID_COUNT):
    """Default evaluation grid: coordinate sums up to ``stop`` (0.9)."""
    if n == 1:
        return tuple(backend.number(stop * Fraction(i, count)) for i in range(1, count + 1))
    return simplex_grid(n, backend, radii=max(count // 3, 4), max_sum=stop)


def kernel_series(table: MomentTable, order: int) -> TruncatedSeries:
    """Series with coefficient 1/I_J at exponent J, truncated at ``order``."""
    if order > table.max_order:
        raise OrderExceedsTable(
            f"order {order} exceeds table max_order {table.max_order}"
        )
    backend = table.backend
    with backend.context():
        coeffs = {}
        for J, I in table.sorted_items():
            if sum(J) > order:
                continue
            coeffs[J] = 1 / I
    return TruncatedSeries(table.n, order, coeffs, backend)


def weighted_moment_table(f: RadialWeight, max_order: int, alpha=3,
                          n: int = 1) -> MomentTable:
    """Moment table of f at height alpha (integrand f^(alpha-(n+1))).

    Integer alpha follows the exact simplex path.  Non-integer alpha is an
    exploratory mode (float backend only): the integrand series is itself
    a truncation, so results inherit its truncation error.
    """
    if isinstance(alpha, int):
        if n == 1 and alpha == 3:
            return moment_table(f, max_order)
        return simplex_moment_table(f, max_order, alpha, n)
    if n != 1:
        raise AlphaTooSmall("non-integer alpha is supported only for n = 1")
    if float(alpha) <= n + 1:
        raise AlphaTooSmall(f"alpha must exceed n+1 = {n + 1}, got {alpha}")
    s = f.series
    p = s.backend.number(alpha) - (n + 1)
    integrand = series_power(s, p, max(4 * s.order, max_order, 64))
    entries = {(j,): moment(integrand, j) for j in range(max_order + 1)}
    return MomentTable(n=1, alpha=alpha, entries=entries, max_order=max_order,
                       backend=s.backend)


def normalize_lambda(f: RadialWeight, table: MomentTable) -> Number:
    """The lambda that makes the identity exact at the origin.

    Solves ``(alpha-1)...(alpha-n) lambda^2 / f(0)^alpha = 1 / I_0``, i.e.
    ``lambda = sqrt(f(0)^alpha / ((alpha-1)...(alpha-n) I_0))``; for the
    disk this is ``sqrt(f(0)^3 / (2 I_0))``.
    """
    s = f.series
    f0 = s.constant_term()
    if not f0 > 0:
        raise NonpositiveConstantTerm(f"f(0) = {f0} must be > 0")
    alpha, n = table.alpha, table.n
    I0 = table.entry((0,) * n)
    with s.backend.context():
        if isinstance(alpha, int):
            lam2 = f0**alpha / (height_factor(alpha, n) * I0)
        else:
            a = s.backend.number(alpha)
            lam2 = f0**a / (height_factor(a, n) * I0)
    return sqrt_number(lam2, s.backend)


@dataclass(frozen=True)
class ResidualReport:
    """Grid residuals of the balancing identity with tail diagnostics."""

    grid: Tuple
    residuals: Tuple[Number, ...]
    tail_bounds: Tuple[TailBound, ...]
    sup_norm: Number
    l2_norm: Number
    trusted: bool
    tail_bound_max: Number
    lam: Number
    order: int
    mode: str  # "two-sided" or "difference"
    lhs_values: Optional[Tuple[Number, ...]] = None
    rhs_values: Optional[Tuple[Number, ...]] = None
    lhs_tail_bounds: Optional[Tuple[TailBound, ...]] = None

    def to_json(self, backend: Backend) -> dict:
        ts = backend.to_str
        out = {
            "mode": self.mode,
            "order": self.order,
            "lambda": ts(self.lam),
            "sup_norm": ts(self.sup_norm),
            "l2_norm": ts(self.l2_norm),
            "trusted": self.trusted,
            "tail_bound_max": ts(self.tail_bound_max),
            "points": [],
        }
        for i, x in enumerate(self.grid):
            row = {
                "x": [ts(v) for v in x] if isinstance(x, tuple) else ts(x),
                "residual": ts(self.residuals[i]),
                "tail_bound": ts(self.tail_bounds[i].value),
                "tail_valid": self.tail_bounds[i].valid,
            }
            if self.lhs_values is not None:
                row["lhs"] = ts(self.lhs_values[i])
                row["rhs"] = ts(self.rhs_values[i])
            out["points"].append(row)
        return out

    def to_csv(self, backend: Backend) -> str:
        ts = backend.to_str
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "lhs", "rhs", "residual", "tail_bound", "tail_valid"])
        for i, x in enumerate(self.grid):
            xs = ";".join(ts(v) for v in x) if isinstance(x, tuple) else ts(x)
            lhs = ts(self.lhs_values[i]) if self.lhs_values is not None else ""
            rhs = ts(self.rhs_values[i]) if self.rhs_values is not None else ""
            writer.writerow([xs, lhs, rhs, ts(self.residuals[i]),
                             ts(self.tail_bounds[i].value),
                             self.tail_bounds[i].valid])
        return buf.getvalue()


def _lhs_series(f: RadialWeight, lam, alpha, n: int, order: int) -> TruncatedSeries:
    s = f.series
    backend = s.backend
    with backend.context():
        lamv = lam if isinstance(lam, (Fraction, gmpy2.mpfr)) else backend.number(lam)
        if isinstance(alpha, int):
            scale = height_factor(alpha, n) * lamv * lamv
            inv = series_power(s, -alpha, order)
        else:
            a = backend.number(alpha)
            scale = height_factor(a, n) * lamv * lamv
            inv = series_power(s, -a, order)
    return series_scale(inv, scale)


def _trusted(tails: Sequence[TailBound], tail_tol: float) -> bool:
    for tb in tails:
        if not tb.valid:
            return False
        if float(tb.value) > tail_tol:
            return False
    return True


def _norms(residuals, backend: Backend):
    sup = backend.zero()
    sq = backend.zero()
    with backend.context():
        for r in residuals:
            a = abs(r)
            if a > sup:
                sup = a
            sq += a * a
    return sup, sqrt_number(sq, backend)


def residual(f: RadialWeight, lam, table: MomentTable, grid=None,
             order: int = None, tail_tol: float = DEFAULT_TAIL_TOL,
             mapper=None) -> ResidualReport:
    """Two-sided residual: truncated lhs and rhs evaluated independently.

    ``trusted`` is True only when every tail bound (both sides) is valid
    and at most ``tail_tol``; the report is returned either way.
    ``mapper`` may be a parallel map; grid points are independent and the
    output order is fixed by the grid, so results do not depend on it.
    """
    backend = f.backend
    alpha, n = table.alpha, table.n
    if order is None:
        order = table.max_order
    if grid is None:
        grid = residual_grid(backend, n)
    lhs = _lhs_series(f, lam, alpha, n, order)
    rhs = kernel_series(table, order)

    def eval_point(x):
        with backend.context():
            lv, lt = series_eval(lhs, x)
            rv, rt = series_eval(rhs, x)
            return lv, lt, rv, rt, lv - rv

    rows = list((mapper or map)(eval_point, grid))
    lhs_vals = [r[0] for r in rows]
    lhs_tails = [r[1] for r in rows]
    rhs_vals = [r[2] for r in rows]
    rhs_tails = [r[3] for r in rows]
    res = [r[4] for r in rows]
    sup, l2 = _norms(res, backend)
    all_tails = list(rhs_tails) + list(lhs_tails)
    trusted = _trusted(all_tails, tail_tol)
    tmax = max((tb.value for tb in all_tails), default=backend.zero())
    lamv = lam if isinstance(lam, (Fraction, gmpy2.mpfr)) else backend.number(lam)
    return ResidualReport(
        grid=tuple(grid), residuals=tuple(res), tail_bounds=tuple(rhs_tails),
        sup_norm=sup, l2_norm=l2, trusted=trusted, tail_bound_max=tmax,
        lam=lamv, order=order, mode="two-sided",
        lhs_values=tuple(lhs_vals), rhs_values=tuple(rhs_vals),
        lhs_tail_bounds=tuple(lhs_tails),
    )


def difference_residual(f: RadialWeight, lam, table: MomentTable, grid=None,
                        order: int = None,
                        tail_tol: float = DEFAULT_TAIL_TOL,
                        mapper=None) -> ResidualReport:
    """Residual of the identity assembled as one difference series.

    The lhs and kernel series are subtracted coefficient-wise before
    evaluation, so the reported tail bound measures the truncation of the
    discrepancy itself.  On the exact backend a weight that satisfies the
    identity gives exactly zero residuals and a zero bound.
    """
    backend = f.backend
    alpha, n = table.alpha, table.n
    if order is None:
        order = table.max_order
    if grid is None:
        grid = residual_grid(backend, n)
    diff = series_sub(_lhs_series(f, lam, alpha, n, order),
                      kernel_series(table, order))

    def eval_point(x):
        with backend.context():
            return series_eval(diff, x)

    rows = list((mapper or map)(eval_point, grid))
    res = [r[0] for r in rows]
    tails = [r[1] for r in rows]
    sup, l2 = _norms(res, backend)
    trusted = _trusted(tails, tail_tol)
    tmax = max((tb.value for tb in tails), default=backend.zero())
    lamv = lam if isinstance(lam, (Fraction, gmpy2.mpfr)) else backend.number(lam)
    return ResidualReport(
        grid=tuple(grid), residuals=tuple(res), tail_bounds=tuple(tails),
        sup_norm=sup, l2_norm=l2, trusted=trusted, tail_bound_max=tmax,
        lam=lamv, order=order, mode="difference",
    )


def balancing_map(f: RadialWeight, lam, order: int, alpha=3,
                  n: int = 1) -> RadialWeight:
    """One application of T; float backend (the 1/alpha power is irrational).

    Raises :class:`PositivityLost` when the image is not positive on the
    weight's sample grid; the iteration must stop and report.
    """
    table = weighted_moment_table(f, order, alpha, n)
    S = kernel_series(table, order)
    backend = f.backend
    with backend.context():
        if not S.constant_term() > 0:
            raise NonpositiveConstantTerm("kernel series has S(0) <= 0")
        lamv = lam if isinstance(lam, (Fraction, gmpy2.mpfr)) else backend.number(lam)
        a = backend.number(alpha)
        c = height_factor(a, n) * lamv * lamv
        body = series_power(S, -1 / a, order)
        image = series_scale(body, c ** (1 / a))
    return make_weight(image, grid=f.positivity_grid, lambda_hint=lamv)


@dataclass(frozen=True)
class IterationStep:
    iteration: int
    lam: Number
    residual_sup: Number
    coeff_distance: Optional[Number]
    positivity_ok: bool


@dataclass(frozen=True)
class IterationTrace:
    """Per-step record of the damped balancing iteration."""

    steps: Tuple[IterationStep, ...]
    final_weight: RadialWeight
    converged: bool
    failure: Optional[str] = None

    def to_json(self, backend: Backend) -> dict:
        ts = backend.to_str
        return {
            "converged": self.converged,
            "failure": self.failure,
            "iterations": len(self.steps),
            "steps": [
                {
                    "iter": st.iteration,
                    "lambda": ts(st.lam),
                    "residual_sup": ts(st.residual_sup),
                    "coeff_distance": (
                        ts(st.coeff_distance) if st.coeff_distance is not None else None
                    ),
                    "positivity_ok": st.positivity_ok,
                }
                for st in self.steps
            ],
        }

    def to_csv(self, backend: Backend) -> str:
        ts = backend.to_str
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iter", "lambda", "residual_sup", "coeff_distance"])
        for st in self.steps:
            writer.writerow([
                st.iteration, ts(st.lam), ts(st.residual_sup),
                ts(st.coeff_distance) if st.coeff_distance is not None else "",
            ])
        return buf.getvalue()


def _coeff_distance(series: TruncatedSeries, lam, reference: TruncatedSeries):
    """sup coefficient gap between series/lam and the reference."""
    backend = series.backend
    with backend.context():
        sup = backend.zero()
        keys = set(series.coeffs) | set(reference.coeffs)
        zero = backend.zero()
        for k in keys:
            a = series.coeffs.get(k, zero) / lam
            b = reference.coeffs.get(k, zero)
            gap = abs(a - b)
            if gap > sup:
                sup = gap
    return sup


def _lift(series: TruncatedSeries, order: int) -> TruncatedSeries:
    if series.order >= order:
        return series
    return TruncatedSeries(series.n_vars, order, dict(series.coeffs), series.backend)


def iterate(f0: RadialWeight, theta=0.5, maxiter: int = 200, tol=1e-10,
            order: int = 80, alpha=3, n: int = 1,
            reference: Optional[RadialWeight] = None, grid=None,
            tail_tol: float = DEFAULT_TAIL_TOL, mapper=None) -> IterationTrace:
    """Damped fixed-point iteration f <- (1-theta) f + theta T(f).

    lambda is re-normalized every step by origin pinning.  Stops when the
    residual sup-norm drops to ``tol``, when positivity is lost (trace
    returned, ``converged`` False), or after ``maxiter`` update steps.
    Step rows do not carry per-point tail flags; the residual sup-norm at
    the grid edge inherits the truncation error of ``order``.
    """
    if not 0 < float(theta) <= 1:
        raise ValueError("theta must lie in (0, 1]")
    if f0.backend.exact:
        f0 = to_float_weight(f0)
    backend = f0.backend
    with backend.context():
        theta_v = backend.number(theta)
        tol_v = backend.number(tol)
    if grid is None:
        grid = residual_grid(backend, n)
    ref_series = reference.series if reference is not None else None
    current = RadialWeight(_lift(f0.series, order), f0.positivity_grid,
                           f0.lambda_hint)
    steps: List[IterationStep] = []
    converged = False
    failure = None
    for it in range(maxiter + 1):
        table = weighted_moment_table(current, order, alpha, n)
        lam = normalize_lambda(current, table)
        rep = residual(current, lam, table, grid, order, tail_tol, mapper=mapper)
        dist = None
        if ref_series is not None:
            dist = _coeff_distance(current.series, lam, ref_series)
        steps.append(IterationStep(iteration=it, lam=lam,
                                   residual_sup=rep.sup_norm,
                                   coeff_distance=dist, positivity_ok=True))
        if rep.sup_norm <= tol_v:
            converged = True
            break
        if it == maxiter:
            break
        try:
            image = balancing_map(current, lam, order, alpha, n)
            with backend.context():
                blended = series_add(series_scale(current.series, 1 - theta_v),
                                     series_scale(image.series, theta_v))
            current = make_weight(blended, grid=f0.positivity_grid,
                                  lambda_hint=lam)
        except PositivityLost as exc:
            failure = f"positivity lost at update {it + 1}: {exc}"
            break
    return IterationTrace(steps=tuple(steps), final_weight=current,
                          converged=converged, failure=failure)
