"""Vectorised closed-interval arithmetic with outward widening.

An :class:`Interval` holds numpy arrays ``lo`` and ``hi`` (any common shape),
so one object can stand for a whole batch of grid cells.  Every operation
computes endpoint candidates in round-to-nearest and then pushes each
endpoint outwards by ``WIDEN_ULPS`` units in the last place.  Basic
operations are correctly rounded (error <= 1/2 ulp) and numpy's log/exp
kernels are within a few ulp (see ``tests/test_interval.py``), so the
widened result encloses the exact image of the operands.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import IntervalDomainError

WIDEN_ULPS = 4


def _down(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore"):
        return np.where(np.isfinite(x), x - WIDEN_ULPS * np.spacing(np.abs(x)), x)


def _up(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore"):
        return np.where(np.isfinite(x), x + WIDEN_ULPS * np.spacing(np.abs(x)), x)


class Interval:
    """Closed interval ``[lo, hi]`` (elementwise for array endpoints)."""

    __slots__ = ("lo", "hi")
    __array_priority__ = 100

    def __init__(self, lo, hi=None):
        lo = np.asarray(lo, dtype=float)
        hi = lo if hi is None else np.asarray(hi, dtype=float)
        lo, hi = np.broadcast_arrays(lo, hi)
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise IntervalDomainError("NaN endpoint")
        if np.any(lo > hi):
            raise IntervalDomainError("interval with lo > hi")
        self.lo = lo
        self.hi = hi

    # -- construction / inspection
    @classmethod
    def point(cls, x) -> "Interval":
        return cls(x, x)

    @property
    def shape(self):
        return self.lo.shape

    @property
    def mid(self):
        return 0.5 * self.lo + 0.5 * self.hi

    @property
    def width(self):
        return self.hi - self.lo

    def contains(self, x) -> np.ndarray:
        return (self.lo <= x) & (x <= self.hi)

    def __getitem__(self, idx) -> "Interval":
        return Interval(self.lo[idx], self.hi[idx])

    def __repr__(self):
        if self.lo.ndim == 0:
            return f"Interval([{float(self.lo)!r}, {float(self.hi)!r}])"
        return f"Interval(shape={self.shape})"

    # -- operators
    def __add__(self, other):
        return iv_add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return iv_sub(self, other)

    def __rsub__(self, other):
        return iv_sub(other, self)

    def __mul__(self, other):
        return iv_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return iv_div(self, other)

    def __rtruediv__(self, other):
        return iv_div(other, self)

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __pow__(self, n: int):
        return iv_pow_int(self, n)


def as_interval(x) -> Interval:
    """Wrap floats (taken as exact) and Fractions (enclosed) as intervals."""
    if isinstance(x, Interval):
        return x
    if isinstance(x, Fraction):
        return from_fraction(x)
    return Interval.point(x)


def from_fraction(f: Fraction) -> Interval:
    """Tightest float interval containing the rational ``f``."""
    f = Fraction(f)
    x = float(f)
    fx = Fraction(x)
    if fx == f:
        return Interval.point(x)
    if fx < f:
        return Interval(x, np.nextafter(x, np.inf))
    return Interval(np.nextafter(x, -np.inf), x)


def hull(x: Interval) -> Interval:
    """Single interval covering every element of an array interval."""
    return Interval(np.min(x.lo), np.max(x.hi))


def iv_add(x, y) -> Interval:
    x, y = as_interval(x), as_interval(y)
    return Interval(_down(x.lo + y.lo), _up(x.hi + y.hi))


def iv_sub(x, y) -> Interval:
    x, y = as_interval(x), as_interval(y)
    return Interval(_down(x.lo - y.hi), _up(x.hi - y.lo))


def iv_mul(x, y) -> Interval:
    x, y = as_interval(x), as_interval(y)
    c = (x.lo * y.lo, x.lo * y.hi, x.hi * y.lo, x.hi * y.hi)
    lo = np.minimum(np.minimum(c[0], c[1]), np.minimum(c[2], c[3]))
    hi = np.maximum(np.maximum(c[0], c[1]), np.maximum(c[2], c[3]))
    return Interval(_down(lo), _up(hi))


def iv_div(x, y) -> Interval:
    x, y = as_interval(x), as_interval(y)
    if np.any((y.lo <= 0) & (y.hi >= 0)):
        raise IntervalDomainError("division by an interval containing 0")
    c = (x.lo / y.lo, x.lo / y.hi, x.hi / y.lo, x.hi / y.hi)
    lo = np.minimum(np.minimum(c[0], c[1]), np.minimum(c[2], c[3]))
    hi = np.maximum(np.maximum(c[0], c[1]), np.maximum(c[2], c[3]))
    return Interval(_down(lo), _up(hi))


def _mag_pow(a, n: int):
    """Lower and upper bounds of a**n for a >= 0."""
    d = u = a
    for _ in range(n - 1):
        d = np.maximum(_down(d * a), 0.0)
        u = _up(u * a)
    return d, u


def iv_pow_int(x, n: int) -> Interval:
    """x**n for integer n >= 0; even powers handle intervals containing 0."""
    x = as_interval(x)
    if n < 0 or int(n) != n:
        raise IntervalDomainError("iv_pow_int needs an integer n >= 0")
    if n == 0:
        return Interval.point(np.ones_like(x.lo))
    if n == 1:
        return x
    alo, ahi = np.abs(x.lo), np.abs(x.hi)
    if n % 2 == 0:
        straddle = (x.lo <= 0) & (x.hi >= 0)
        mag_lo = np.where(straddle, 0.0, np.minimum(alo, ahi))
        lo, _ = _mag_pow(mag_lo, n)
        _, hi = _mag_pow(np.maximum(alo, ahi), n)
        return Interval(lo, hi)
    lo_d, lo_u = _mag_pow(alo, n)
    hi_d, hi_u = _mag_pow(ahi, n)
    lo = np.where(x.lo >= 0, lo_d, -lo_u)
    hi = np.where(x.hi >= 0, hi_u, -hi_d)
    return Interval(lo, hi)


def iv_sqrt(x) -> Interval:
    x = as_interval(x)
    if np.any(x.lo < 0):
        raise IntervalDomainError("sqrt of an interval with negative part")
    return Interval(np.maximum(_down(np.sqrt(x.lo)), 0.0), _up(np.sqrt(x.hi)))


def iv_ln(x) -> Interval:
    x = as_interval(x)
    if np.any(x.lo <= 0):
        raise IntervalDomainError("log of an interval not contained in (0, inf)")
    return Interval(_down(np.log(x.lo)), _up(np.log(x.hi)))


def iv_exp(x) -> Interval:
    x = as_interval(x)
    return Interval(np.maximum(_down(np.exp(x.lo)), 0.0), _up(np.exp(x.hi)))


def iv_poly(coeffs, x) -> Interval:
    """Horner evaluation of sum coeffs[k] x**k (coefficients may be Fractions)."""
    x = as_interval(x)
    acc = as_interval(coeffs[-1])
    for c in reversed(coeffs[:-1]):
        acc = iv_add(iv_mul(acc, x), as_interval(c))
    return acc
