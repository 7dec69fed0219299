"""Boundary diagnostics at x = 1: derivative profile, the a_j sequence,
the analytic remainder z(x), and polynomial-growth witnesses.

For a weight ``f`` with moment table ``I_j`` (height 3, one variable) the
central object is

    a_j = 1/I_j - (j+1)(j+2) - f'''(1),

the coefficient sequence of

    z(x) = 2/f(x)^3 - 2/(1-x)^3 - f'''(1)/(1-x).

At the hyperbolic weight both vanish identically; away from it the decay
of ``a_j`` and the size of ``z`` quantify the defect.  Big-O statements
are not finitely testable, so the growth checker reports witness
constants over declared ranges instead.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .backend import Backend, Number, float_backend
from .errors import OrderExceedsTable, SingularProfile, UntrustedTail, VarCountMismatch
from .moments import MomentTable
from .series import TruncatedSeries, recenter_at_one, series_eval, series_make
from .weights import RadialWeight

DEFAULT_GROWTH_FACTOR = 1.5


def _series_of(f) -> TruncatedSeries:
    return f.series if isinstance(f, RadialWeight) else f


def _flag_tol(backend: Backend):
    """Default pass/fail tolerance: exact zero, or 10^-(precision_bits/4)."""
    if backend.exact:
        return Fraction(0)
    return backend.number(10) ** -(backend.precision_bits // 4)


@dataclass(frozen=True)
class BoundaryProfile:
    """Derivatives f^(k)(1) with pass/fail flags for the boundary values
    a balanced weight must take: f(1) = 0, f'(1) = -1, f''(1) = 0."""

    derivatives: Tuple[Number, ...]
    value_zero: bool
    slope_minus_one: bool
    second_zero: bool
    tolerance: Number

    @property
    def all_pass(self) -> bool:
        return self.value_zero and self.slope_minus_one and self.second_zero


def boundary_profile(f, K: int, tol=None) -> BoundaryProfile:
    """Exact recentering at x = 1 plus boundary flags (within ``tol``)."""
    s = _series_of(f)
    if s.n_vars != 1:
        raise VarCountMismatch("boundary_profile needs a one-variable weight")
    derivs = recenter_at_one(s, K)
    if tol is None:
        tol = _flag_tol(s.backend)
    with s.backend.context():
        value_zero = abs(derivs[0]) <= tol
        slope = abs(derivs[1] + 1) <= tol if K >= 1 else False
        second = abs(derivs[2]) <= tol if K >= 2 else True
    return BoundaryProfile(derivatives=tuple(derivs), value_zero=value_zero,
                           slope_minus_one=slope, second_zero=second,
                           tolerance=tol)


def defect_sequence(table: MomentTable, f3_at_one, jmax: int) -> List[Number]:
    """a_j = 1/I_j - (j+1)(j+2) - f'''(1) for j = 0..jmax."""
    if table.n != 1:
        raise VarCountMismatch("defect_sequence needs a one-variable table")
    if jmax > table.max_order:
        raise OrderExceedsTable(f"jmax {jmax} exceeds table order {table.max_order}")
    backend = table.backend
    with backend.context():
        f3v = (backend.number(f3_at_one)
               if isinstance(f3_at_one, (int, float, str)) else f3_at_one)
        out = []
        for j in range(jmax + 1):
            out.append(1 / table.entry(j) - (j + 1) * (j + 2) - f3v)
    return out


def default_edge_grid(backend: Backend, count: int = 12):
    """Points in (0.5, 0.999) approaching the boundary."""
    lo, hi = Fraction(11, 20), Fraction(99, 100)
    return tuple(
        backend.number(lo + (hi - lo) * Fraction(i, count - 1)) for i in range(count)
    )


def analytic_remainder(f, grid=None, profile_tol=1e-6) -> List[Number]:
    """Pointwise values of z(x) = 2/f^3 - 2/(1-x)^3 - f'''(1)/(1-x).

    Rejects weights whose boundary profile makes z singular: requires
    f(1) = 0 and f'(1) = -1 within ``profile_tol``.  f'''(1) is always read
    from the recentering, never fitted.
    """
    s = _series_of(f)
    if s.n_vars != 1:
        raise VarCountMismatch("analytic_remainder needs a one-variable weight")
    backend = s.backend
    derivs = recenter_at_one(s, min(3, s.order))
    zero = backend.zero()
    d0 = derivs[0]
    d1 = derivs[1] if len(derivs) > 1 else zero
    f3 = derivs[3] if len(derivs) > 3 else zero
    with backend.context():
        tolv = backend.number(profile_tol)
        if abs(d0) > tolv or abs(d1 + 1) > tolv:
            raise SingularProfile(
                f"boundary profile f(1) = {d0}, f'(1) = {d1} makes z singular"
            )
        if grid is None:
            grid = default_edge_grid(backend)
        out = []
        for x in grid:
            xv = backend.number(x) if isinstance(x, (int, float, str)) else x
            fx, _ = series_eval(s, xv)
            one_minus = 1 - xv
            out.append(2 / fx**3 - 2 / one_minus**3 - f3 / one_minus)
    return out


@dataclass(frozen=True)
class GrowthWitnessResult:
    """Witness constants for c_j = O((j+1)^r0) and S(x) = O((1-x)^-(r0+1))."""

    r0: int
    c_bound: float
    s_bound: float
    holds: bool
    coeff_growth_ok: bool
    tails_valid: bool


def growth_witness_check(c, r0: int, jmax: int = 200, grid=None,
                         backend: Optional[Backend] = None,
                         growth_factor: float = DEFAULT_GROWTH_FACTOR,
                         ) -> GrowthWitnessResult:
    """Finite witness test of the polynomial-growth transfer to S(x).

    ``c`` is a callable j -> c_j or a sequence.  The coefficient witness is
    C = max |c_j| / (j+1)^r0 over the tested range; the growth flag fails
    when the second-half witness exceeds ``growth_factor`` times the
    first-half one (a bounded sequence stabilizes, a super-polynomial one
    keeps climbing).  S is evaluated by truncated summation; if the
    coefficient bound holds but some grid tail is invalid the s-side is
    untestable and :class:`UntrustedTail` is raised.
    """
    if r0 < 0:
        raise ValueError("r0 must be >= 0")
    if backend is None:
        backend = float_backend()
    values = [c(j) for j in range(jmax + 1)] if callable(c) else list(c)[: jmax + 1]
    jmax = len(values) - 1
    if jmax < 10:
        raise ValueError("jmax must be >= 10")
    with backend.context():
        cs = [backend.number(v) if isinstance(v, (int, float, str)) else v
              for v in values]
        witness = [abs(cj) / (backend.number(j + 1) ** r0)
                   for j, cj in enumerate(cs)]
        half = jmax // 2
        first = max(witness[: half + 1])
        second = max(witness[half + 1:]) if half + 1 <= jmax else first
        coeff_ok = float(second) <= growth_factor * float(first)
        c_bound = float(max(witness))
        if grid is None:
            lo, hi = Fraction(1, 2), Fraction(49, 50)
            grid = tuple(backend.number(lo + (hi - lo) * Fraction(i, 15))
                         for i in range(16))
        series = series_make(1, jmax, {j: cj for j, cj in enumerate(cs)}, backend)
        tails_valid = True
        s_bound = 0.0
        for x in grid:
            xv = backend.number(x) if isinstance(x, (int, float, str)) else x
            value, tb = series_eval(series, xv)
            if not tb.valid:
                tails_valid = False
                continue
            v = float(abs(value) * (1 - xv) ** (r0 + 1))
            if v > s_bound:
                s_bound = v
    if coeff_ok and not tails_valid:
        raise UntrustedTail(
            "coefficient bound holds but the truncated S(x) carries an "
            "invalid tail bound on the grid; increase jmax or shrink the grid"
        )
    holds = coeff_ok and tails_valid
    return GrowthWitnessResult(r0=r0, c_bound=c_bound, s_bound=s_bound,
                               holds=holds, coeff_growth_ok=coeff_ok,
                               tails_valid=tails_valid)


@dataclass(frozen=True)
class DecayResult:
    all_zero: bool
    slope: Optional[float]
    indices_used: int


def decay_diagnostic(defect_seq: Sequence, zero_tol=None,
                     backend: Optional[Backend] = None) -> DecayResult:
    """Fit a_j ~ c j^-d on the top half of nonzero indices (log-log LSQ).

    Reports ``all_zero`` instead when every |a_j| is at or below
    ``zero_tol`` (exact zero on the exact backend by default).
    """
    if len(defect_seq) < 20:
        raise ValueError("need at least 20 terms for a decay fit")
    if zero_tol is None:
        if backend is None or backend.exact:
            zero_tol = 0
        else:
            zero_tol = _flag_tol(backend)
    nonzero = [(j, abs(a)) for j, a in enumerate(defect_seq)
               if j >= 1 and abs(a) > zero_tol]
    if not nonzero and all(abs(a) <= zero_tol for a in defect_seq):
        return DecayResult(all_zero=True, slope=None, indices_used=0)
    top = nonzero[len(nonzero) // 2:]
    if len(top) < 2:
        return DecayResult(all_zero=False, slope=None, indices_used=len(top))
    logj = np.array([np.log(float(j)) for j, _ in top])
    loga = np.array([float(_log_float(a)) for _, a in top])
    coef = np.polyfit(logj, loga, 1)
    return DecayResult(all_zero=False, slope=float(-coef[0]),
                       indices_used=len(top))


def _log_float(value) -> float:
    # values can be far outside double range; go through Fraction exponents
    import gmpy2

    if isinstance(value, Fraction):
        return float(gmpy2.log(gmpy2.mpfr(value.numerator, 512)
                               / gmpy2.mpfr(value.denominator, 512)))
    return float(gmpy2.log(value))


@dataclass(frozen=True)
class AsymptoticsReport:
    boundary_derivatives: Tuple[Number, ...]
    defect_seq: Tuple[Number, ...]
    decay_slope: Optional[float]
    all_zero: bool

    def to_json(self, backend: Backend) -> dict:
        ts = backend.to_str
        return {
            "boundary_derivatives": [ts(v) for v in self.boundary_derivatives],
            "defect_seq": [ts(v) for v in self.defect_seq],
            "decay_slope": self.decay_slope,
            "all_zero": self.all_zero,
        }


def asymptotics_report(f, table: MomentTable, K: int = 3,
                       jmax: Optional[int] = None) -> AsymptoticsReport:
    """Assemble the standard boundary report for a one-variable weight."""
    s = _series_of(f)
    profile = boundary_profile(s, min(K, s.order))
    zero = s.backend.zero()
    f3 = profile.derivatives[3] if len(profile.derivatives) > 3 else zero
    if jmax is None:
        jmax = table.max_order
    seq = defect_sequence(table, f3, jmax)
    decay = decay_diagnostic(seq, backend=s.backend)
    return AsymptoticsReport(
        boundary_derivatives=profile.derivatives,
        defect_seq=tuple(seq),
        decay_slope=decay.slope,
        all_zero=decay.all_zero,
    )


def defect_seq_to_csv(defect_seq: Sequence, backend: Backend) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["j", "a_j"])
    for j, a in enumerate(defect_seq):
        writer.writerow([j, backend.to_str(a)])
    return buf.getvalue()
