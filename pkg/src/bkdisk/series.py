"""Truncated power series in one or several variables.

A :class:`TruncatedSeries` stores the coefficients of a polynomial /
truncated power series of total degree ``<= order`` as a sparse map from
exponent multi-indices to backend numbers.  Arithmetic follows the usual
truncation rules (a Cauchy product keeps only degrees up to the smaller
order), powers ``f^p`` with real ``p`` are generated by the first-order
recurrence ``g' f = p f' g`` seeded with ``g(0) = f(0)^p``, and evaluation
runs in a fixed ascending-degree order so results are reproducible no
matter how callers parallelize.

Evaluations return a heuristic geometric tail bound: with ``t`` the
magnitude of the top retained degree term and ``r`` the largest
coefficient-magnitude ratio over the last ten degrees, the discarded tail
is modelled by ``t * rho / (1 - rho)`` with ``rho = r * |x|``.  The bound
carries an explicit validity flag and is no better than its geometric
model; ``valid`` is False whenever ``rho >= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import gmpy2

from .backend import (
    Backend,
    Number,
    as_float,
    backend_from_json,
    backend_to_json,
)
from .errors import (
    BackendMismatch,
    DegreeOverflow,
    ExactBackendFractionalPower,
    KTooLarge,
    NonpositiveConstantTerm,
    VarCountMismatch,
)

Exponent = Tuple[int, ...]
Point = Union[Number, Sequence[Number]]


@dataclass(frozen=True)
class TailBound:
    """Geometric-ratio estimate of a truncation tail at one point."""

    value: Number
    valid: bool
    ratio_estimate: Number

    def as_floats(self) -> Tuple[float, float]:
        return float(self.value), float(self.ratio_estimate)


@dataclass(frozen=True)
class TruncatedSeries:
    """Polynomial truncation of a power series, immutable after creation."""

    n_vars: int
    order: int
    coeffs: Mapping[Exponent, Number]
    backend: Backend

    def __post_init__(self):
        if self.n_vars < 1:
            raise VarCountMismatch("n_vars must be >= 1")
        if self.order < 0:
            raise DegreeOverflow("order must be >= 0")

    def coefficient(self, expo) -> Number:
        key = _as_exponent(expo, self.n_vars)
        return self.coeffs.get(key, self.backend.zero())

    def constant_term(self) -> Number:
        return self.coefficient((0,) * self.n_vars)

    def is_zero(self) -> bool:
        return not self.coeffs

    def sorted_items(self) -> List[Tuple[Exponent, Number]]:
        """Coefficients in graded-lexicographic order."""
        return sorted(self.coeffs.items(), key=lambda kv: (sum(kv[0]), kv[0]))

    def dense(self) -> List[Number]:
        """Dense coefficient list; one-variable series only."""
        if self.n_vars != 1:
            raise VarCountMismatch("dense() needs a one-variable series")
        zero = self.backend.zero()
        out = [zero] * (self.order + 1)
        for (m,), c in self.coeffs.items():
            out[m] = c
        return out

    def degree_magnitudes(self) -> List[Number]:
        """Max coefficient magnitude per total degree, length ``order + 1``."""
        zero = self.backend.zero()
        out = [zero] * (self.order + 1)
        for expo, c in self.coeffs.items():
            d = sum(expo)
            mag = abs(c)
            if mag > out[d]:
                out[d] = mag
        return out


def _as_exponent(expo, n_vars: int) -> Exponent:
    if isinstance(expo, int):
        if n_vars != 1:
            raise VarCountMismatch(
                f"integer exponent only valid for 1 variable, series has {n_vars}"
            )
        if expo < 0:
            raise DegreeOverflow("negative exponent")
        return (expo,)
    t = tuple(int(e) for e in expo)
    if len(t) != n_vars:
        raise VarCountMismatch(f"exponent {t} has {len(t)} entries, expected {n_vars}")
    if any(e < 0 for e in t):
        raise DegreeOverflow("negative exponent")
    return t


def _is_zero(value: Number) -> bool:
    return value == 0


def series_make(n_vars: int, order: int, coeffs, backend: Backend) -> TruncatedSeries:
    """Build a normalized series; drops zero coefficients.

    ``coeffs`` maps exponents (ints for one variable, tuples otherwise) to
    numbers or number strings parseable by the backend.
    """
    items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
    out: Dict[Exponent, Number] = {}
    for expo, raw in items:
        key = _as_exponent(expo, n_vars)
        if sum(key) > order:
            raise DegreeOverflow(
                f"exponent {key} has total degree {sum(key)} > order {order}"
            )
        val = backend.number(raw)
        if not _is_zero(val):
            out[key] = val
    return TruncatedSeries(n_vars, order, out, backend)


def _check_compatible(a: TruncatedSeries, b: TruncatedSeries):
    if a.n_vars != b.n_vars:
        raise VarCountMismatch(f"{a.n_vars} variables vs {b.n_vars}")
    if a.backend != b.backend:
        raise BackendMismatch(f"{a.backend} vs {b.backend}")


def series_add(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    _check_compatible(a, b)
    order = min(a.order, b.order)
    with a.backend.context():
        out = {k: v for k, v in a.coeffs.items() if sum(k) <= order}
        for k, v in b.coeffs.items():
            if sum(k) > order:
                continue
            s = out.get(k)
            s = v if s is None else s + v
            if _is_zero(s):
                out.pop(k, None)
            else:
                out[k] = s
    return TruncatedSeries(a.n_vars, order, out, a.backend)


def series_sub(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    return series_add(a, series_scale(b, -1))


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Cauchy product truncated to ``min(a.order, b.order)``."""
    _check_compatible(a, b)
    order = min(a.order, b.order)
    out: Dict[Exponent, Number] = {}
    with a.backend.context():
        for ka, va in a.sorted_items():
            da = sum(ka)
            if da > order:
                continue
            for kb, vb in b.sorted_items():
                if da + sum(kb) > order:
                    continue
                k = tuple(x + y for x, y in zip(ka, kb))
                s = out.get(k)
                term = va * vb
                s = term if s is None else s + term
                out[k] = s
    out = {k: v for k, v in out.items() if not _is_zero(v)}
    return TruncatedSeries(a.n_vars, order, out, a.backend)


def series_arith(op: str, a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    if op == "add":
        return series_add(a, b)
    if op == "sub":
        return series_sub(a, b)
    if op == "mul":
        return series_mul(a, b)
    raise ValueError(f"unknown op {op!r}")


def series_scale(f: TruncatedSeries, c) -> TruncatedSeries:
    with f.backend.context():
        cv = c if isinstance(c, (Fraction, gmpy2.mpfr)) else f.backend.number(c)
        out = {}
        for k, v in f.coeffs.items():
            s = cv * v
            if not _is_zero(s):
                out[k] = s
    return TruncatedSeries(f.n_vars, f.order, out, f.backend)


def _coerce_exponent_value(p, backend: Backend):
    """Validate the exponent for series_power under the given backend."""
    if isinstance(p, int):
        return p
    if isinstance(p, Fraction) and p.denominator == 1:
        return int(p)
    if isinstance(p, float) and float(p).is_integer():
        return int(p)
    if backend.exact:
        raise ExactBackendFractionalPower(
            f"fractional exponent {p!r} is irrational on the exact backend"
        )
    return backend.number(p)


def series_power(f: TruncatedSeries, p, order: int) -> TruncatedSeries:
    """``f**p`` truncated at ``order``, via ``g' f = p f' g``.

    Requires ``f(0) > 0``.  The exact backend only admits integer ``p``;
    the result is then exact.  ``order`` may exceed ``f.order``: the input
    is treated as the polynomial it stores.
    """
    pv = _coerce_exponent_value(p, f.backend)
    f0 = f.constant_term()
    if not f0 > 0:
        raise NonpositiveConstantTerm(f"f(0) = {f0} must be > 0")
    with f.backend.context():
        if f.n_vars == 1:
            return _power_univariate(f, pv, order, f0)
        return _power_multivariate(f, pv, order, f0)


def _power_univariate(f, pv, order, f0) -> TruncatedSeries:
    fc = f.dense()
    deg = len(fc) - 1
    zero = f.backend.zero()
    g = [zero] * (order + 1)
    g[0] = f0**pv
    for d in range(1, order + 1):
        acc = zero
        for k in range(1, min(d, deg) + 1):
            fk = fc[k]
            if _is_zero(fk):
                continue
            acc += ((pv + 1) * k - d) * fk * g[d - k]
        g[d] = acc / (d * f0)
    coeffs = {(m,): c for m, c in enumerate(g) if not _is_zero(c)}
    return TruncatedSeries(1, order, coeffs, f.backend)


def _power_multivariate(f, pv, order, f0) -> TruncatedSeries:
    # Homogeneous-part form of the same recurrence: scaling x -> t*x turns
    # f into a 1-variable series in t whose coefficients are the
    # homogeneous components.
    parts: Dict[int, Dict[Exponent, Number]] = {}
    for expo, c in f.coeffs.items():
        parts.setdefault(sum(expo), {})[expo] = c
    zero_expo = (0,) * f.n_vars
    g_parts: Dict[int, Dict[Exponent, Number]] = {0: {zero_expo: f0**pv}}
    for d in range(1, order + 1):
        acc: Dict[Exponent, Number] = {}
        for k, fk in parts.items():
            if k < 1 or k > d:
                continue
            scale = (pv + 1) * k - d
            if _is_zero(scale):
                continue
            gpart = g_parts[d - k]
            for eF, vF in fk.items():
                sv = scale * vF
                for eG, vG in gpart.items():
                    key = tuple(x + y for x, y in zip(eF, eG))
                    prev = acc.get(key)
                    term = sv * vG
                    acc[key] = term if prev is None else prev + term
        den = d * f0
        g_parts[d] = {k: v / den for k, v in acc.items() if not _is_zero(v)}
    coeffs = {}
    for part in g_parts.values():
        coeffs.update(part)
    return TruncatedSeries(f.n_vars, order, coeffs, f.backend)


def _coerce_point_value(v, backend: Backend) -> Number:
    native = Fraction if backend.exact else gmpy2.mpfr
    return v if isinstance(v, native) else backend.number(v)


def _point_magnitude(f: TruncatedSeries, x) -> Tuple[Tuple[Number, ...], Number]:
    seq = x if isinstance(x, (tuple, list)) else (x,)
    if len(seq) != f.n_vars:
        raise VarCountMismatch(f"point has {len(seq)} coords, expected {f.n_vars}")
    pt = tuple(_coerce_point_value(v, f.backend) for v in seq)
    mag = sum(abs(v) for v in pt)
    return pt, mag


def _tail_bound(f: TruncatedSeries, s: Number) -> TailBound:
    """Geometric tail estimate at point magnitude ``s``.

    Anchored at the truncation order: a series whose top degree is absent
    is treated as the polynomial it stores (zero tail).
    """
    mags = f.degree_magnitudes()
    anchor = f.order
    zero = f.backend.zero()
    if _is_zero(mags[anchor]):
        return TailBound(value=zero, valid=True, ratio_estimate=zero)
    lo = max(0, anchor - 10)
    nonzero = [d for d in range(lo, anchor + 1) if not _is_zero(mags[d])]
    ratio = zero
    for a, b in zip(nonzero, nonzero[1:]):
        if b - a == 1:
            r = mags[b] / mags[a]
        else:
            r = _root(mags[b] / mags[a], b - a, f.backend)
        if r > ratio:
            ratio = r
    rho = ratio * abs(s)
    if rho >= 1:
        return TailBound(value=f.backend.zero(), valid=False, ratio_estimate=ratio)
    term = mags[anchor] * abs(s) ** anchor
    value = term * rho / (1 - rho)
    return TailBound(value=value, valid=True, ratio_estimate=ratio)


def _root(value: Number, k: int, backend: Backend) -> Number:
    if k == 1:
        return value
    x = as_float(value, backend.precision_bits if not backend.exact else 256)
    with gmpy2.context(precision=x.precision):
        r = x ** (gmpy2.mpfr(1) / k)
    return Fraction(str(r)) if backend.exact else r


def series_eval(f: TruncatedSeries, x) -> Tuple[Number, TailBound]:
    """Evaluate at ``x`` in ascending-degree order; returns (value, tail).

    The summation order is fixed (degree-major, graded-lex inside each
    degree) so repeated evaluations are bit-identical.
    """
    pt, mag = _point_magnitude(f, x)
    with f.backend.context():
        if f.n_vars == 1:
            value = _eval_univariate(f, pt[0])
        else:
            value = _eval_multivariate(f, pt)
        tail = _tail_bound(f, mag)
    return value, tail


def _eval_univariate(f: TruncatedSeries, x: Number) -> Number:
    acc = f.backend.zero()
    power = None
    coeffs = f.coeffs
    prev_deg = 0
    for (m,), c in f.sorted_items():
        if power is None:
            power = x**m if m else 1
        else:
            power = power * x ** (m - prev_deg)
        prev_deg = m
        acc += c * power
    return acc


def _eval_multivariate(f: TruncatedSeries, pt: Tuple[Number, ...]) -> Number:
    acc = f.backend.zero()
    for expo, c in f.sorted_items():
        term = c
        for xv, e in zip(pt, expo):
            if e:
                term = term * xv**e
        acc += term
    return acc


def recenter_at_one(f: TruncatedSeries, K: int) -> List[Number]:
    """Derivatives ``f^(k)(1)`` for ``k = 0..K`` by exact recentering.

    Uses falling factorials of the stored polynomial; no numerical
    differentiation is involved, so the result is exact on the exact
    backend.
    """
    if f.n_vars != 1:
        raise VarCountMismatch("recenter_at_one needs a one-variable series")
    if K > f.order:
        raise KTooLarge(f"K = {K} exceeds series order {f.order}")
    out: List[Number] = []
    with f.backend.context():
        dense = f.dense()
        for k in range(K + 1):
            acc = f.backend.zero()
            for m in range(k, len(dense)):
                c = dense[m]
                if _is_zero(c):
                    continue
                ff = 1
                for i in range(k):
                    ff *= m - i
                acc += c * ff
            out.append(acc)
    return out


def differentiate(f: TruncatedSeries) -> TruncatedSeries:
    """d/dx of a one-variable series; order drops by one."""
    if f.n_vars != 1:
        raise VarCountMismatch("differentiate needs a one-variable series")
    order = max(f.order - 1, 0)
    with f.backend.context():
        out = {}
        for (m,), c in f.coeffs.items():
            if m == 0:
                continue
            v = m * c
            if not _is_zero(v):
                out[(m - 1,)] = v
    return TruncatedSeries(1, order, out, f.backend)


def log_series(f: TruncatedSeries, order: int) -> TruncatedSeries:
    """``log f`` truncated at ``order`` via ``L' f = f'``; float backend only."""
    if f.n_vars != 1:
        raise VarCountMismatch("log_series needs a one-variable series")
    if f.backend.exact:
        raise ExactBackendFractionalPower(
            "logarithms are irrational; use a float backend"
        )
    f0 = f.constant_term()
    if not f0 > 0:
        raise NonpositiveConstantTerm(f"f(0) = {f0} must be > 0")
    with f.backend.context():
        fc = f.dense()
        deg = len(fc) - 1
        zero = f.backend.zero()
        L = [zero] * (order + 1)
        L[0] = gmpy2.log(f0)
        for m in range(1, order + 1):
            acc = m * fc[m] if m <= deg else zero
            for k in range(1, m):
                step = m - k
                if step <= deg and not _is_zero(fc[step]):
                    acc -= k * L[k] * fc[step]
            L[m] = acc / (m * f0)
        coeffs = {(m,): c for m, c in enumerate(L) if not _is_zero(c)}
    return TruncatedSeries(1, order, coeffs, f.backend)


def series_to_json(f: TruncatedSeries) -> dict:
    return {
        "n_vars": f.n_vars,
        "order": f.order,
        "backend": backend_to_json(f.backend),
        "coeffs": [
            [list(expo), f.backend.to_str(c)] for expo, c in f.sorted_items()
        ],
    }


def series_from_json(obj: dict) -> TruncatedSeries:
    backend = backend_from_json(obj["backend"])
    coeffs = {tuple(expo): value for expo, value in obj["coeffs"]}
    return series_make(int(obj["n_vars"]), int(obj["order"]), coeffs, backend)
