"""Moment integrals of radial weights, in closed form from coefficients.

For a one-variable weight ``f(t) = sum_m c_m t^m`` the moments are

    I_j = integral_0^1 f(t) t^j dt = sum_m c_m / (m + j + 1),

exact on the exact backend.  In ``n`` variables the moments live on the
open simplex ``D_n = {x_i > 0, sum x_i < 1}`` and reduce, term by term, to

    integral_{D_n} x^K dx = (prod_i k_i!) / (|K| + n)!

after expanding ``f^(alpha - (n+1))``.  Quadrature never appears in this
path; it exists only as an independent oracle in the test suite.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Dict, Iterator, List, Tuple

from .backend import Backend, Number, backend_from_json, backend_to_json
from .errors import AlphaTooSmall, NonpositiveMoment, VarCountMismatch
from .series import (
    TruncatedSeries,
    differentiate,
    recenter_at_one,
    series_power,
)
from .weights import RadialWeight

IndexKey = Tuple[int, ...]


@dataclass(frozen=True)
class MultiIndex:
    """Exponent multi-index J = (j_1, ..., j_n)."""

    exponents: Tuple[int, ...]

    def __post_init__(self):
        if any(e < 0 for e in self.exponents):
            raise ValueError("multi-index entries must be >= 0")

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    def __iter__(self):
        return iter(self.exponents)


def graded_lex_indices(n: int, max_degree: int) -> Iterator[IndexKey]:
    """All multi-indices of degree <= max_degree: ascending degree, then
    ascending tuple comparison inside each degree (matches the sort used
    by every table/series serialization)."""

    def fixed_degree(nv: int, d: int) -> Iterator[IndexKey]:
        if nv == 1:
            yield (d,)
            return
        for first in range(d + 1):
            for rest in fixed_degree(nv - 1, d - first):
                yield (first,) + rest

    for d in range(max_degree + 1):
        yield from fixed_degree(n, d)


@dataclass(frozen=True)
class MomentTable:
    """Moments indexed by multi-index, with dimension and height metadata."""

    n: int
    alpha: int
    entries: Dict[IndexKey, Number]
    max_order: int
    backend: Backend

    def entry(self, j) -> Number:
        key = (j,) if isinstance(j, int) else tuple(j)
        return self.entries[key]

    def sorted_items(self) -> List[Tuple[IndexKey, Number]]:
        return sorted(self.entries.items(), key=lambda kv: (sum(kv[0]), kv[0]))


def _series_of(f) -> TruncatedSeries:
    return f.series if isinstance(f, RadialWeight) else f


def moment(f, j: int) -> Number:
    """I_j = integral_0^1 f(t) t^j dt for a one-variable weight."""
    s = _series_of(f)
    if s.n_vars != 1:
        raise VarCountMismatch("moment() needs a one-variable weight")
    if j < 0:
        raise ValueError("j must be >= 0")
    with s.backend.context():
        acc = s.backend.zero()
        for (m,), c in s.sorted_items():
            acc += c / (m + j + 1)
    if not acc > 0:
        raise NonpositiveMoment(f"I_{j} = {acc} <= 0")
    return acc


def moment_table(f, max_order: int) -> MomentTable:
    """Moments I_0 .. I_{max_order} of a one-variable weight (height 3)."""
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    s = _series_of(f)
    entries = {(j,): moment(s, j) for j in range(max_order + 1)}
    return MomentTable(n=1, alpha=3, entries=entries, max_order=max_order,
                       backend=s.backend)


def simplex_monomial_integral(K, n: int, backend: Backend) -> Number:
    """integral over D_n of x^K, as (prod k_i!)/(|K| + n)!."""
    kt = tuple(K)
    num = 1
    for k in kt:
        num *= factorial(k)
    val = Fraction(num, factorial(sum(kt) + n))
    return val if backend.exact else backend.number(val)


def simplex_moment(f, J, alpha: int, n: int) -> Number:
    """I_J(alpha) = integral over D_n of f^(alpha-(n+1)) x^J dx."""
    if not isinstance(alpha, int) or alpha <= n + 1:
        raise AlphaTooSmall(f"alpha must be an integer > n+1 = {n + 1}, got {alpha}")
    s = _series_of(f)
    if s.n_vars != n:
        raise VarCountMismatch(f"weight has {s.n_vars} variables, expected {n}")
    Jt = tuple(J)
    p = alpha - (n + 1)
    g = series_power(s, p, s.order * p)
    with s.backend.context():
        acc = s.backend.zero()
        for K, c in g.sorted_items():
            KJ = tuple(k + j for k, j in zip(K, Jt))
            acc += c * simplex_monomial_integral(KJ, n, s.backend)
    if not acc > 0:
        raise NonpositiveMoment(f"I_{Jt}({alpha}) = {acc} <= 0")
    return acc


def simplex_moment_table(f, max_degree: int, alpha: int, n: int) -> MomentTable:
    """All I_J(alpha) with |J| <= max_degree, in graded-lex order."""
    if not isinstance(alpha, int) or alpha <= n + 1:
        raise AlphaTooSmall(f"alpha must be an integer > n+1 = {n + 1}, got {alpha}")
    s = _series_of(f)
    if s.n_vars != n:
        raise VarCountMismatch(f"weight has {s.n_vars} variables, expected {n}")
    p = alpha - (n + 1)
    g = series_power(s, p, s.order * p)
    g_items = g.sorted_items()
    backend = s.backend
    entries: Dict[IndexKey, Number] = {}
    with backend.context():
        for J in graded_lex_indices(n, max_degree):
            acc = backend.zero()
            for K, c in g_items:
                KJ = tuple(k + j for k, j in zip(K, J))
                acc += c * simplex_monomial_integral(KJ, n, backend)
            if not acc > 0:
                raise NonpositiveMoment(f"I_{J}({alpha}) = {acc} <= 0")
            entries[J] = acc
    return MomentTable(n=n, alpha=alpha, entries=entries, max_order=max_degree,
                       backend=backend)


def _pochhammer(j: int, count: int) -> int:
    """(j+1)(j+2)...(j+count)."""
    out = 1
    for i in range(1, count + 1):
        out *= j + i
    return out


def ibp_expansion(f, j: int, k0: int) -> Number:
    """Moment I_j reassembled from boundary data plus a remainder integral.

    Returns

        sum_{k=0}^{k0} (-1)^k f^(k)(1) / ((j+1)...(j+k+1))
        + (-1)^(k0+1) / ((j+1)...(j+k0+1)) * integral_0^1 f^(k0+1)(t) t^(j+k0+1) dt

    with the remainder integral computed by the closed-form moment rule
    applied to the derivative series.  Agrees with :func:`moment` exactly
    on the exact backend, for every j and k0.
    """
    if k0 < 0:
        raise ValueError("k0 must be >= 0")
    s = _series_of(f)
    if s.n_vars != 1:
        raise VarCountMismatch("ibp_expansion needs a one-variable weight")
    with s.backend.context():
        derivs = recenter_at_one(s, min(k0, s.order))
        zero = s.backend.zero()
        acc = zero
        for k in range(k0 + 1):
            dk = derivs[k] if k < len(derivs) else zero
            term = dk / _pochhammer(j, k + 1)
            acc += term if k % 2 == 0 else -term
        # remainder: (k0+1)-th derivative, integrated against t^(j+k0+1)
        d = s
        for _ in range(k0 + 1):
            d = differentiate(d)
            if d.is_zero():
                break
        if not d.is_zero():
            rem = zero
            for (m,), c in d.sorted_items():
                rem += c / (m + j + k0 + 2)
            rem = rem / _pochhammer(j, k0 + 1)
            acc += rem if (k0 + 1) % 2 == 0 else -rem
    return acc


def table_to_json(table: MomentTable) -> dict:
    return {
        "n": table.n,
        "alpha": table.alpha,
        "max_order": table.max_order,
        "backend": backend_to_json(table.backend),
        "entries": [
            [list(J), table.backend.to_str(v)] for J, v in table.sorted_items()
        ],
    }


def table_from_json(obj: dict) -> MomentTable:
    backend = backend_from_json(obj["backend"])
    entries = {tuple(J): backend.number(v) for J, v in obj["entries"]}
    return MomentTable(n=int(obj["n"]), alpha=int(obj["alpha"]), entries=entries,
                       max_order=int(obj["max_order"]), backend=backend)


def table_to_csv(table: MomentTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["J", "I"])
    for J, v in table.sorted_items():
        key = J[0] if table.n == 1 else ";".join(str(j) for j in J)
        writer.writerow([key, table.backend.to_str(v)])
    return buf.getvalue()
