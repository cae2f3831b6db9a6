"""Closed real intervals with natural interval arithmetic.

Endpoints are plain floats and results are rounded to nearest, not
outward; validity checks downstream carry an explicit round-off tolerance.
A degenerate interval behaves exactly like its float value, which lets one
formula implementation serve both point and interval inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval endpoint is NaN")
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: float) -> Interval:
        return cls(float(x), float(x))

    @classmethod
    def coerce(cls, x) -> Interval:
        return x if isinstance(x, Interval) else cls.point(x)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def hull(self, other) -> Interval:
        other = Interval.coerce(other)
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, other) -> Interval:
        other = Interval.coerce(other)
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            raise ValueError("intervals do not intersect")
        return Interval(lo, hi)

    def clamp(self, lo: float = 0.0, hi: float = 1.0) -> Interval:
        return Interval(min(max(self.lo, lo), hi), min(max(self.hi, lo), hi))

    def __add__(self, other):
        other = Interval.coerce(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        other = Interval.coerce(other)
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other):
        return Interval.coerce(other) - self

    def __mul__(self, other):
        other = Interval.coerce(other)
        if self.lo == self.hi and other.lo == other.hi:
            v = self.lo * other.lo
            return Interval(v, v)
        products = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return Interval(min(products), max(products))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = Interval.coerce(other)
        if other.lo <= 0.0 <= other.hi:
            raise ZeroDivisionError("divisor interval contains zero")
        if self.lo == self.hi and other.lo == other.hi:
            v = self.lo / other.lo
            return Interval(v, v)
        quotients = (
            self.lo / other.lo,
            self.lo / other.hi,
            self.hi / other.lo,
            self.hi / other.hi,
        )
        return Interval(min(quotients), max(quotients))

    def __rtruediv__(self, other):
        return Interval.coerce(other) / self

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        if k == 0:
            return Interval(1.0, 1.0)
        if k % 2 == 1 or self.lo >= 0.0:
            return Interval(self.lo**k, self.hi**k)
        if self.hi <= 0.0:
            return Interval(self.hi**k, self.lo**k)
        return Interval(0.0, max(self.lo**k, self.hi**k))

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


def lower(x) -> float:
    """Lower endpoint of an interval, or the value itself for a float."""
    return x.lo if isinstance(x, Interval) else float(x)


def upper(x) -> float:
    """Upper endpoint of an interval, or the value itself for a float."""
    return x.hi if isinstance(x, Interval) else float(x)
