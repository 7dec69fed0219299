"""Radial weights: positive truncated series on (0,1) or on the simplex."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

from .backend import Backend, DEFAULT_PRECISION_BITS, EXACT, Number, float_backend
from .errors import PositivityLost
from .series import TruncatedSeries, series_eval, series_from_json, series_make, series_to_json

DEFAULT_GRID_COUNT = 48


def unit_interval_grid(backend: Backend, count: int = DEFAULT_GRID_COUNT):
    """Sample points i/(count+1), i = 1..count, strictly inside (0,1).

    With count >= 32 the top point exceeds 0.95, which the positivity
    contract requires.
    """
    if count < 32:
        raise ValueError("positivity grid needs at least 32 points")
    return tuple(backend.number(Fraction(i, count + 1)) for i in range(1, count + 1))


# Interior directions used to sample the open simplex; each row sums to 1.
_SIMPLEX_DIRECTIONS = {
    1: ((1,),),
    2: ((Fraction(1, 2), Fraction(1, 2)),
        (Fraction(3, 10), Fraction(7, 10)),
        (Fraction(7, 10), Fraction(3, 10))),
    3: ((Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)),
        (Fraction(3, 5), Fraction(1, 5), Fraction(1, 5)),
        (Fraction(1, 5), Fraction(3, 5), Fraction(1, 5)),
        (Fraction(1, 5), Fraction(1, 5), Fraction(3, 5))),
}


def simplex_grid(n: int, backend: Backend, radii: int = 12,
                 max_sum: Fraction = Fraction(19, 20)):
    """Deterministic sample of the open simplex along interior rays."""
    if n == 1:
        return unit_interval_grid(backend)
    if n not in _SIMPLEX_DIRECTIONS:
        raise ValueError(f"no simplex grid template for n = {n}")
    pts = []
    for i in range(1, radii + 1):
        s = max_sum * Fraction(i, radii)
        for direction in _SIMPLEX_DIRECTIONS[n]:
            pts.append(tuple(backend.number(s * u) for u in direction))
    return tuple(pts)


@dataclass(frozen=True)
class RadialWeight:
    """A series certified positive on a sample grid of its open domain."""

    series: TruncatedSeries
    positivity_grid: Tuple
    lambda_hint: Optional[Number] = None

    @property
    def backend(self) -> Backend:
        return self.series.backend

    @property
    def n_vars(self) -> int:
        return self.series.n_vars

    def value_at(self, x) -> Number:
        return series_eval(self.series, x)[0]


def make_weight(series: TruncatedSeries, grid=None,
                lambda_hint=None) -> RadialWeight:
    """Wrap a series as a weight, checking positivity on the grid.

    Raises :class:`PositivityLost` with the offending point when the series
    is not strictly positive everywhere on the grid.
    """
    if grid is None:
        if series.n_vars == 1:
            grid = unit_interval_grid(series.backend)
        else:
            grid = simplex_grid(series.n_vars, series.backend)
    elif series.n_vars == 1:
        pts = [float(x) for x in grid]
        if len(pts) < 32 or max(pts) < 0.95:
            raise ValueError(
                "positivity grid must cover (0,1) with >= 32 points "
                "including one >= 0.95"
            )
    for x in grid:
        value, _ = series_eval(series, x)
        if not value > 0:
            raise PositivityLost(
                f"weight not positive on grid: value {value} at x = {x}"
            )
    return RadialWeight(series=series, positivity_grid=tuple(grid),
                        lambda_hint=lambda_hint)


def hyperbolic_weight(backend: Backend = EXACT, order: int = 8) -> RadialWeight:
    """The weight 1 - x (one variable).

    Stored with truncation cap ``order`` (degree stays 1) so boundary
    recentering up to a few derivatives works out of the box.
    """
    series = series_make(1, max(order, 1), {0: 1, 1: -1}, backend)
    return make_weight(series)


def flat_simplex_weight(n: int, backend: Backend = EXACT,
                        order: int = 1) -> RadialWeight:
    """The weight 1 - x_1 - ... - x_n on the open simplex."""
    if n == 1:
        return hyperbolic_weight(backend, order)
    coeffs = {(0,) * n: 1}
    for i in range(n):
        e = [0] * n
        e[i] = 1
        coeffs[tuple(e)] = -1
    series = series_make(n, max(order, 1), coeffs, backend)
    return make_weight(series)


def to_float_weight(w: RadialWeight,
                    precision_bits: int = DEFAULT_PRECISION_BITS) -> RadialWeight:
    """Re-express a weight on the float backend at the given precision."""
    if not w.backend.exact and w.backend.precision_bits == precision_bits:
        return w
    fb = float_backend(precision_bits)
    series = series_make(w.n_vars, w.series.order,
                         dict(w.series.coeffs), fb)
    grid = tuple(
        tuple(fb.number(v) for v in x) if isinstance(x, tuple) else fb.number(x)
        for x in w.positivity_grid
    )
    hint = fb.number(w.lambda_hint) if w.lambda_hint is not None else None
    return make_weight(series, grid=grid, lambda_hint=hint)


def weight_to_json(w: RadialWeight) -> dict:
    return series_to_json(w.series)


def weight_from_json(obj: dict, grid=None, lambda_hint=None) -> RadialWeight:
    return make_weight(series_from_json(obj), grid=grid, lambda_hint=lambda_hint)
