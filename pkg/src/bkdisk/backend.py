"""Numeric backends: exact rationals and arbitrary-precision binary floats.

Two backends are supported and never mixed silently:

* ``exact-rational`` -- :class:`fractions.Fraction`; every operation is exact.
* ``float`` -- ``gmpy2.mpfr`` with a configurable mantissa size
  (``precision_bits``, default 256); every operation is correctly rounded
  at that precision.

All public operations in this package open the backend's precision context
around their arithmetic, so results do not depend on the caller's (or a
worker thread's) ambient gmpy2 state.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Union

import gmpy2

DEFAULT_PRECISION_BITS = 256
MIN_PRECISION_BITS = 64

Number = Union[Fraction, "gmpy2.mpfr"]

EXACT_KIND = "exact-rational"
FLOAT_KIND = "float"


@dataclass(frozen=True)
class Backend:
    """Numeric backend descriptor shared by all series and tables."""

    kind: str
    precision_bits: int = DEFAULT_PRECISION_BITS

    def __post_init__(self):
        if self.kind not in (EXACT_KIND, FLOAT_KIND):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == FLOAT_KIND and self.precision_bits < MIN_PRECISION_BITS:
            raise ValueError(
                f"float backend needs precision_bits >= {MIN_PRECISION_BITS}, "
                f"got {self.precision_bits}"
            )

    @property
    def exact(self) -> bool:
        return self.kind == EXACT_KIND

    def context(self):
        """Precision context for arithmetic under this backend."""
        if self.exact:
            return contextlib.nullcontext()
        return gmpy2.context(precision=self.precision_bits)

    def number(self, value) -> Number:
        """Coerce ``value`` (number or string) into this backend.

        Strings accept integers, decimals ("0.25", "1e-3") and rational
        "p/q" forms.  Raises :class:`~bkdisk.errors.BackendParse` on
        malformed input and on values that are not finite.
        """
        from .errors import BackendParse

        if self.exact:
            try:
                if isinstance(value, Fraction):
                    return value
                if isinstance(value, int):
                    return Fraction(value)
                if isinstance(value, str):
                    return Fraction(value.strip())
                if isinstance(value, float):
                    return Fraction(value)  # exact binary value, no guessing
                if isinstance(value, gmpy2.mpfr):
                    m, e = value.as_mantissa_exp()
                    return Fraction(int(m)) * Fraction(2) ** int(e)
                if isinstance(value, (gmpy2.mpq, gmpy2.mpz)):
                    return Fraction(str(value))
            except (ValueError, ZeroDivisionError) as exc:
                raise BackendParse(f"cannot parse {value!r} as a rational") from exc
            raise BackendParse(f"cannot parse {value!r} as a rational")
        with self.context():
            try:
                if isinstance(value, str):
                    s = value.strip()
                    if "/" in s:
                        num, den = s.split("/", 1)
                        out = gmpy2.mpfr(gmpy2.mpz(num.strip())) / gmpy2.mpfr(
                            gmpy2.mpz(den.strip())
                        )
                    else:
                        out = gmpy2.mpfr(s)
                elif isinstance(value, Fraction):
                    out = gmpy2.mpfr(value.numerator) / gmpy2.mpfr(value.denominator)
                else:
                    out = gmpy2.mpfr(value)
            except (ValueError, TypeError) as exc:
                raise BackendParse(f"cannot parse {value!r} as a float") from exc
            if not gmpy2.is_finite(out):
                raise BackendParse(f"{value!r} is not finite")
            return out

    def zero(self) -> Number:
        return Fraction(0) if self.exact else gmpy2.mpfr(0)

    def to_str(self, value) -> str:
        """Deterministic string form that round-trips through :meth:`number`."""
        if isinstance(value, Fraction):
            if value.denominator == 1:
                return str(value.numerator)
            return f"{value.numerator}/{value.denominator}"
        return str(value)

    def is_finite(self, value) -> bool:
        if isinstance(value, Fraction):
            return True
        return bool(gmpy2.is_finite(value))


EXACT = Backend(EXACT_KIND)


def float_backend(precision_bits: int = DEFAULT_PRECISION_BITS) -> Backend:
    return Backend(FLOAT_KIND, precision_bits)


def sqrt_number(value: Number, backend: Backend) -> Number:
    """Square root; stays exact when the argument is a rational square."""
    if isinstance(value, Fraction):
        if value < 0:
            raise ValueError("sqrt of a negative rational")
        rn, rd = isqrt(value.numerator), isqrt(value.denominator)
        if rn * rn == value.numerator and rd * rd == value.denominator:
            return Fraction(rn, rd)
        bits = backend.precision_bits if not backend.exact else DEFAULT_PRECISION_BITS
        with gmpy2.context(precision=bits):
            return gmpy2.sqrt(
                gmpy2.mpfr(value.numerator) / gmpy2.mpfr(value.denominator)
            )
    with gmpy2.context(precision=value.precision):
        return gmpy2.sqrt(value)


def as_float(value: Number, precision_bits: int = DEFAULT_PRECISION_BITS):
    """Convert any backend number to an mpfr at the given precision."""
    with gmpy2.context(precision=precision_bits):
        if isinstance(value, Fraction):
            return gmpy2.mpfr(value.numerator) / gmpy2.mpfr(value.denominator)
        return gmpy2.mpfr(value)


def backend_to_json(backend: Backend) -> dict:
    if backend.exact:
        return {"kind": EXACT_KIND}
    return {"kind": FLOAT_KIND, "precision_bits": backend.precision_bits}


def backend_from_json(obj: dict) -> Backend:
    kind = obj.get("kind", EXACT_KIND)
    if kind == EXACT_KIND:
        return EXACT
    return Backend(FLOAT_KIND, int(obj.get("precision_bits", DEFAULT_PRECISION_BITS)))
