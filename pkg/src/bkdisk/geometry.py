"""Kernel-side diagnostics for radial potentials on the unit disk.

Given a weight ``h(x) = e^{-Phi}`` (``x = |z|^2``), the monomial basis has
norms ``b_j = 1 / (pi I_j)`` with ``I_j`` the moments of ``h``, and the
diagonal kernel is ``K(x) = sum_j b_j x^j``.  The metric of height
``alpha`` is balanced exactly when ``log K - alpha Phi`` is constant, so
the check reports the sup of ``|d/dx (log K + alpha log h)|`` over a grid:
a gauge-free quantity that vanishes (up to truncation) iff the metric is
balanced.  Derivatives are taken by centered finite differences of
high-precision values rather than series differentiation, which
cross-checks the series path.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

import gmpy2

from .backend import Backend, DEFAULT_PRECISION_BITS, Number, float_backend
from .errors import AlphaTooSmall, NonpositiveWeight
from .moments import moment
from .series import (
    TailBound,
    TruncatedSeries,
    differentiate,
    log_series,
    series_eval,
    series_make,
)
from .weights import RadialWeight, to_float_weight

DEFAULT_FD_STEP = "1e-6"
DEFAULT_LOG_ORDER = 800


@dataclass(frozen=True)
class PotentialProfile:
    """A radial potential presented through its weight h = e^{-Phi}.

    ``phi0_gauge`` is the additive constant of Phi; it is reported by the
    balanced check, never assumed.
    """

    h: RadialWeight
    alpha: Number
    phi0_gauge: Optional[Number] = None


@dataclass(frozen=True)
class KernelDiagnostic:
    """Basis norms, kernel values, gauge drift and metric coefficients."""

    b: Tuple[Number, ...]
    grid: Tuple[Number, ...]
    kernel_values: Tuple[Number, ...]
    kernel_tails: Tuple[TailBound, ...]
    gauge_derivatives: Tuple[Number, ...]
    gauge_drift: Number
    metric_values: Tuple[Number, ...]
    gauge_constant: Number
    trusted: bool

    def to_json(self, backend: Backend) -> dict:
        ts = backend.to_str
        return {
            "gauge_drift": ts(self.gauge_drift),
            "gauge_constant": ts(self.gauge_constant),
            "trusted": self.trusted,
            "basis_norms": [ts(v) for v in self.b],
            "points": [
                {
                    "x": ts(x),
                    "K": ts(self.kernel_values[i]),
                    "tail_bound": ts(self.kernel_tails[i].value),
                    "tail_valid": self.kernel_tails[i].valid,
                    "g": ts(self.metric_values[i]),
                    "gauge_derivative": ts(self.gauge_derivatives[i]),
                }
                for i, x in enumerate(self.grid)
            ],
        }

    def to_csv(self, backend: Backend) -> str:
        ts = backend.to_str
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "K", "g", "gauge_derivative"])
        for i, x in enumerate(self.grid):
            writer.writerow([ts(x), ts(self.kernel_values[i]),
                             ts(self.metric_values[i]),
                             ts(self.gauge_derivatives[i])])
        return buf.getvalue()


def _float_weight(h: RadialWeight, precision_bits: Optional[int]) -> RadialWeight:
    if h.backend.exact:
        return to_float_weight(h, precision_bits or DEFAULT_PRECISION_BITS)
    if precision_bits and h.backend.precision_bits != precision_bits:
        return to_float_weight(h, precision_bits)
    return h


def basis_norms(h: RadialWeight, jmax: int,
                precision_bits: Optional[int] = None) -> List[Number]:
    """b_j = 1 / (pi * I_j(h)) for j = 0..jmax (float: pi is irrational)."""
    hf = _float_weight(h, precision_bits)
    backend = hf.backend
    with backend.context():
        pi = gmpy2.const_pi()
        out = [1 / (pi * moment(hf, j)) for j in range(jmax + 1)]
    return out


def kernel_diagonal(b, x) -> Tuple[Number, TailBound]:
    """Truncated kernel sum_j b_j x^j with its tail bound."""
    if not len(b):
        raise ValueError("empty basis norm list")
    first = b[0]
    bits = first.precision if isinstance(first, gmpy2.mpfr) else DEFAULT_PRECISION_BITS
    backend = float_backend(bits)
    series = series_make(1, len(b) - 1, {j: v for j, v in enumerate(b)}, backend)
    return series_eval(series, x)


def geometry_grid(backend: Backend, count: int = 16,
                  start: Fraction = Fraction(1, 20),
                  stop: Fraction = Fraction(4, 5)):
    """Default check grid inside (0, 0.9]; capped at 0.8 so that the
    truncated-kernel drift stays below the certification target."""
    return tuple(
        backend.number(start + (stop - start) * Fraction(i, count - 1))
        for i in range(count)
    )


def balanced_check(profile: PotentialProfile, grid=None, jmax: int = 400,
                   fd_step=DEFAULT_FD_STEP,
                   precision_bits: Optional[int] = None,
                   log_order: int = DEFAULT_LOG_ORDER,
                   mapper=None) -> KernelDiagnostic:
    """Gauge drift sup |d/dx (log K(x) + alpha log h(x))| over the grid.

    Centered differences with step ``fd_step`` on high-precision values;
    the drift is ~0 (truncation floor) iff the metric has height alpha.
    Grid points are independent; ``mapper`` may be a parallel map.
    """
    alpha = profile.alpha
    if not float(alpha) > 0:
        raise AlphaTooSmall(f"alpha must be positive, got {alpha}")
    h = _float_weight(profile.h, precision_bits)
    backend = h.backend
    b = basis_norms(h, jmax)
    kernel = series_make(1, jmax, {j: v for j, v in enumerate(b)}, backend)
    if grid is None:
        grid = geometry_grid(backend)
    phi1, phi2 = _metric_series(h, log_order)

    def eval_point(x):
        with backend.context():
            alpha_v = backend.number(alpha) \
                if isinstance(alpha, (int, float, str)) else alpha
            step = backend.number(fd_step)
            xv = backend.number(x) if isinstance(x, (int, float, str)) else x
            kv, kt = series_eval(kernel, xv)
            gauge = (-gmpy2.log(series_eval(h.series, xv)[0])
                     - gmpy2.log(kv) / alpha_v)
            fd = (_gauge(kernel, h, xv + step, alpha_v)
                  - _gauge(kernel, h, xv - step, alpha_v)) / (2 * step)
            g1 = series_eval(phi1, xv)[0]
            g2 = series_eval(phi2, xv)[0]
            return kv, kt, gauge, fd, g1 + xv * g2

    rows = list((mapper or map)(eval_point, grid))
    k_values = [r[0] for r in rows]
    k_tails = [r[1] for r in rows]
    gauge_vals = [r[2] for r in rows]
    fd_list = [r[3] for r in rows]
    metric_list = [r[4] for r in rows]
    with backend.context():
        drift = max(abs(v) for v in fd_list)
        gauge_constant = sum(gauge_vals) / len(gauge_vals)
    trusted = all(t.valid for t in k_tails)
    return KernelDiagnostic(
        b=tuple(b), grid=tuple(grid), kernel_values=tuple(k_values),
        kernel_tails=tuple(k_tails), gauge_derivatives=tuple(fd_list),
        gauge_drift=drift, metric_values=tuple(metric_list),
        gauge_constant=gauge_constant, trusted=trusted,
    )


def _gauge(kernel: TruncatedSeries, h: RadialWeight, x, alpha_v) -> Number:
    kv = series_eval(kernel, x)[0]
    hv = series_eval(h.series, x)[0]
    if not hv > 0:
        raise NonpositiveWeight(f"h({x}) = {hv} <= 0")
    return gmpy2.log(kv) + alpha_v * gmpy2.log(hv)


def _metric_series(h: RadialWeight, log_order: int):
    """First and second derivative series of Phi = -log h."""
    L = log_series(h.series, log_order)
    phi1 = differentiate(L)
    phi2 = differentiate(phi1)
    # Phi = -L
    from .series import series_scale

    return series_scale(phi1, -1), series_scale(phi2, -1)


def metric_coefficient(h, x, log_order: int = DEFAULT_LOG_ORDER,
                       precision_bits: Optional[int] = None) -> Number:
    """Radial metric coefficient g(x) = Phi'(x) + x Phi''(x), Phi = -log h.

    Runs with 64 guard bits over the weight's precision so the result is
    accurate well past the nominal precision of the inputs.
    """
    weight = h.h if isinstance(h, PotentialProfile) else h
    base_bits = precision_bits or (
        DEFAULT_PRECISION_BITS if weight.backend.exact
        else weight.backend.precision_bits
    )
    hf = _float_weight(weight, base_bits + 64)
    backend = hf.backend
    with backend.context():
        xv = backend.number(x) if isinstance(x, (int, float, str)) else x
        hx, _ = series_eval(hf.series, xv)
        if not hx > 0:
            raise NonpositiveWeight(f"h({x}) = {hx} <= 0")
        phi1, phi2 = _metric_series(hf, log_order)
        return series_eval(phi1, xv)[0] + xv * series_eval(phi2, xv)[0]
