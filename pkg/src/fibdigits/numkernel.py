"""Rigorous real arithmetic: dyadic balls, logarithms and continued fractions.

A ball ``RBall(mid, rad, exp)`` denotes the closed interval
``[(mid - rad) * 2**exp, (mid + rad) * 2**exp]``.  Every operation rounds
outward, so a ball always contains the exact image of its inputs.  Logs and
exps are delegated to MPFR (through gmpy2) with directed rounding on the
endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import isqrt
from typing import Callable, Union

import gmpy2

DEFAULT_PREC = 1024
MAX_PREC = 16384

Number = Union[int, Fraction, "RBall"]


class SignNotCertified(ArithmeticError):
    """A ball straddles zero where a strict sign is required."""


class PrecisionInsufficient(ArithmeticError):
    pass


class CertificationError(ArithmeticError):
    """Continued-fraction expansion could not be certified far enough."""

    def __init__(self, message: str, index: int, table: "ConvergentTable | None" = None):
        super().__init__(message)
        self.index = index
        self.table = table


def _ceil_shift(x: int, shift: int) -> int:
    return -((-x) >> shift)


def _normalize(mid: int, rad: int, exp: int, prec: int) -> "RBall":
    shift = max(0, mid.bit_length() - prec, rad.bit_length() - 64)
    if shift:
        low = mid & ((1 << shift) - 1)
        mid >>= shift
        rad = _ceil_shift(rad, shift) + (1 if low else 0)
        exp += shift
    return RBall(mid, rad, exp, prec)


def _dyadic_floor(value: Fraction, bits: int) -> tuple[int, int]:
    """Return (m, e) with m*2**e <= value and about ``bits`` significant bits."""
    num, den = value.numerator, value.denominator
    k = bits - (num.bit_length() - den.bit_length())
    if k >= 0:
        return (num << k) // den, -k
    return num // (den << -k), -k


def _from_endpoints(lo: Fraction, hi: Fraction, prec: int) -> "RBall":
    if lo > hi:
        raise ValueError("empty interval")
    width = max(abs(lo), abs(hi), Fraction(1, 1 << prec))
    bits = prec + 2
    # common exponent chosen so that the endpoints carry ~prec bits
    scale = bits - (width.numerator.bit_length() - width.denominator.bit_length())
    lo_s = lo * Fraction(2) ** scale
    hi_s = hi * Fraction(2) ** scale
    lo_i = lo_s.numerator // lo_s.denominator
    hi_i = -((-hi_s.numerator) // hi_s.denominator)
    mid = (lo_i + hi_i) >> 1
    rad = max(hi_i - mid, mid - lo_i)
    return _normalize(mid, rad, -scale, prec)


@dataclass(frozen=True)
class RBall:
    mid: int
    rad: int = 0
    exp: int = 0
    prec: int = field(default=DEFAULT_PREC, compare=False)

    def __post_init__(self):
        if self.rad < 0:
            raise ValueError("ball radius must be non-negative")

    # construction -------------------------------------------------------
    @classmethod
    def exact(cls, value: int | Fraction, prec: int = DEFAULT_PREC) -> "RBall":
        """Ball around ``value``; exact for dyadic rationals, else 1 ulp wide."""
        if isinstance(value, RBall):
            return value
        if isinstance(value, int):
            return cls(value, 0, 0, prec)
        value = Fraction(value)
        den = value.denominator
        if den & (den - 1) == 0:
            return _normalize(value.numerator, 0, -(den.bit_length() - 1), max(prec, value.numerator.bit_length()))
        m, e = _dyadic_floor(value, prec + 2)
        return _normalize(m, 1, e, prec)

    @classmethod
    def from_interval(cls, lo: Fraction, hi: Fraction, prec: int = DEFAULT_PREC) -> "RBall":
        return _from_endpoints(Fraction(lo), Fraction(hi), prec)

    # views --------------------------------------------------------------
    def lower(self) -> Fraction:
        return Fraction(self.mid - self.rad) * Fraction(2) ** self.exp

    def upper(self) -> Fraction:
        return Fraction(self.mid + self.rad) * Fraction(2) ** self.exp

    def center(self) -> Fraction:
        return Fraction(self.mid) * Fraction(2) ** self.exp

    def radius(self) -> Fraction:
        return Fraction(self.rad) * Fraction(2) ** self.exp

    def __float__(self) -> float:
        return float(self.center())

    def __repr__(self) -> str:
        return f"RBall({float(self):.17g} +/- {float(self.radius()):.3g})"

    def contains(self, value: int | Fraction) -> bool:
        return self.lower() <= value <= self.upper()

    def is_exact(self) -> bool:
        return self.rad == 0

    def is_positive(self) -> bool:
        return self.mid > self.rad

    def is_negative(self) -> bool:
        return self.mid < -self.rad

    def excludes_zero(self) -> bool:
        return abs(self.mid) > self.rad

    def gt(self, other: Number) -> bool:
        """Certified strict comparison ``self > other``."""
        return (self - other).is_positive()

    def lt(self, other: Number) -> bool:
        return (self - other).is_negative()

    def overlaps(self, other: "RBall") -> bool:
        return not (self.upper() < other.lower() or other.upper() < self.lower())

    def subset_of(self, other: "RBall") -> bool:
        return other.lower() <= self.lower() and self.upper() <= other.upper()

    # arithmetic ---------------------------------------------------------
    def _coerce(self, other: Number) -> "RBall":
        if isinstance(other, RBall):
            return other
        if isinstance(other, (int, Fraction)):
            return RBall.exact(other, self.prec)
        return NotImplemented

    def __neg__(self) -> "RBall":
        return RBall(-self.mid, self.rad, self.exp, self.prec)

    def __abs__(self) -> "RBall":
        if self.mid >= self.rad:
            return self
        if -self.mid >= self.rad:
            return -self
        hi = max(self.mid + self.rad, self.rad - self.mid)
        return _normalize(hi, hi, self.exp - 1, self.prec)

    def __add__(self, other: Number) -> "RBall":
        y = self._coerce(other)
        if y is NotImplemented:
            return NotImplemented
        prec = max(self.prec, y.prec)
        e = min(self.exp, y.exp)
        mid = (self.mid << (self.exp - e)) + (y.mid << (y.exp - e))
        rad = (self.rad << (self.exp - e)) + (y.rad << (y.exp - e))
        return _normalize(mid, rad, e, prec)

    __radd__ = __add__

    def __sub__(self, other: Number) -> "RBall":
        y = self._coerce(other)
        if y is NotImplemented:
            return NotImplemented
        return self + (-y)

    def __rsub__(self, other: Number) -> "RBall":
        return self._coerce(other) - self

    def __mul__(self, other: Number) -> "RBall":
        y = self._coerce(other)
        if y is NotImplemented:
            return NotImplemented
        mid = self.mid * y.mid
        rad = abs(self.mid) * y.rad + abs(y.mid) * self.rad + self.rad * y.rad
        return _normalize(mid, rad, self.exp + y.exp, max(self.prec, y.prec))

    __rmul__ = __mul__

    def __truediv__(self, other: Number) -> "RBall":
        y = self._coerce(other)
        if y is NotImplemented:
            return NotImplemented
        if not y.excludes_zero():
            raise SignNotCertified("sign not certified: divisor ball contains 0")
        prec = max(self.prec, y.prec)
        mx, my = self.mid, y.mid
        k = max(0, prec + 2 + my.bit_length() - mx.bit_length())
        qmid, rem = divmod(mx << k, my)
        amy = abs(my)
        rnum = (self.rad * amy + abs(mx) * y.rad) << k
        rden = amy * (amy - y.rad)
        qrad = -((-rnum) // rden) + (1 if rem else 0)
        return _normalize(qmid, qrad, self.exp - y.exp - k, prec)

    def __rtruediv__(self, other: Number) -> "RBall":
        return self._coerce(other) / self

    def __pow__(self, n: int) -> "RBall":
        return ball_pow_int(self, n)

    # rounding helpers ---------------------------------------------------
    def floor(self) -> int:
        """Certified floor; raises when the ball straddles an integer."""
        lo, hi = self.lower(), self.upper()
        f = lo.numerator // lo.denominator
        if hi.numerator // hi.denominator != f:
            raise PrecisionInsufficient(f"floor not certified for {self!r}")
        return f

    def upper_floor(self) -> int:
        """Floor of the upper endpoint (a valid integer upper bound)."""
        hi = self.upper()
        return hi.numerator // hi.denominator

    def upper_ceil(self) -> int:
        hi = self.upper()
        return -((-hi.numerator) // hi.denominator)

    def with_prec(self, prec: int) -> "RBall":
        return _normalize(self.mid, self.rad, self.exp, prec)

    # elementary functions ---------------------------------------------
    def sqrt(self) -> "RBall":
        return ball_sqrt(self)

    def log(self, prec: int | None = None) -> "RBall":
        return ball_log(self, prec or self.prec)

    def exp_(self, prec: int | None = None) -> "RBall":
        return ball_exp(self, prec or self.prec)


def ball_add(x: RBall, y: Number) -> RBall:
    return x + y


def ball_mul(x: RBall, y: Number) -> RBall:
    return x * y


def ball_div(x: RBall, y: Number) -> RBall:
    return x / y


def ball_pow_int(x: RBall, n: int) -> RBall:
    if n < 0:
        return RBall.exact(1, x.prec) / ball_pow_int(x, -n)
    result = RBall.exact(1, x.prec)
    base = x
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def _sqrt_floor(value: Fraction, bits: int) -> Fraction:
    k = bits // 2 + 2 - (value.numerator.bit_length() - value.denominator.bit_length()) // 2
    k = max(k, 0)
    scaled = value * (1 << (2 * k))
    return Fraction(isqrt(scaled.numerator // scaled.denominator), 1 << k)


def _sqrt_ceil(value: Fraction, bits: int) -> Fraction:
    k = bits // 2 + 2 - (value.numerator.bit_length() - value.denominator.bit_length()) // 2
    k = max(k, 0)
    scaled = value * (1 << (2 * k))
    c = -((-scaled.numerator) // scaled.denominator)
    r = isqrt(c)
    if r * r < c:
        r += 1
    return Fraction(r, 1 << k)


def ball_sqrt(x: RBall) -> RBall:
    lo, hi = x.lower(), x.upper()
    if lo < 0:
        raise SignNotCertified("sqrt of a ball reaching below 0")
    bits = 2 * x.prec + 8
    return _from_endpoints(_sqrt_floor(lo, bits) if lo else Fraction(0), _sqrt_ceil(hi, bits), x.prec)


def _mpfr_exact(value: Fraction):
    # value is a dyadic endpoint m * 2**e
    num, den = value.numerator, value.denominator
    e = -(den.bit_length() - 1)
    bits = max(num.bit_length(), 2)
    with gmpy2.context(precision=bits + 2):
        return gmpy2.mul_2exp(gmpy2.mpfr(num, bits + 2), e)


def _mpfr_to_fraction(x) -> Fraction:
    m, e = x.as_mantissa_exp()
    m, e = int(m), int(e)
    return Fraction(m << e) if e >= 0 else Fraction(m, 1 << -e)


def _directed(fn, x, prec: int, mode) -> Fraction:
    with gmpy2.context(precision=prec, round=mode):
        return _mpfr_to_fraction(fn(x))


def ball_log(x: RBall, prec: int | None = None) -> RBall:
    """Natural log of a positive ball, endpoints rounded outward."""
    prec = prec or x.prec
    if not x.is_positive():
        raise SignNotCertified("log of a ball not certified positive")
    work = prec + 16
    lo = _directed(gmpy2.log, _mpfr_exact(x.lower()), work, gmpy2.RoundDown)
    hi = _directed(gmpy2.log, _mpfr_exact(x.upper()), work, gmpy2.RoundUp)
    return _from_endpoints(lo, hi, prec)


def ball_exp(x: RBall, prec: int | None = None) -> RBall:
    prec = prec or x.prec
    work = prec + 16
    lo = _directed(gmpy2.exp, _mpfr_exact(x.lower()), work, gmpy2.RoundDown)
    hi = _directed(gmpy2.exp, _mpfr_exact(x.upper()), work, gmpy2.RoundUp)
    return _from_endpoints(lo, hi, prec)


# constants ---------------------------------------------------------------


@lru_cache(maxsize=None)
def log2_ball(prec: int = DEFAULT_PREC) -> RBall:
    return ball_log(RBall.exact(2, prec), prec)


@lru_cache(maxsize=None)
def sqrt5_ball(prec: int = DEFAULT_PREC) -> RBall:
    return ball_sqrt(RBall.exact(5, prec))


@lru_cache(maxsize=None)
def alpha_ball(prec: int = DEFAULT_PREC) -> RBall:
    return (1 + sqrt5_ball(prec)) / 2


@lru_cache(maxsize=None)
def log_alpha_ball(prec: int = DEFAULT_PREC) -> RBall:
    return ball_log(alpha_ball(prec), prec)


@lru_cache(maxsize=None)
def gamma_ball(prec: int = DEFAULT_PREC) -> RBall:
    """log(alpha) / log(2), the modulus of every Baker-Davenport step."""
    return log_alpha_ball(prec) / log2_ball(prec)


def nearest_int_dist(x: RBall) -> RBall:
    """Ball containing the distance to the nearest integer of every point of x."""
    if x.radius() >= Fraction(1, 4):
        raise PrecisionInsufficient("precision insufficient for nearest-integer distance")
    c = x.center()
    n = (2 * c.numerator + c.denominator) // (2 * c.denominator)
    d = abs(c - n)
    r = x.radius()
    return _from_endpoints(max(Fraction(0), d - r), min(Fraction(1, 2), d + r), x.prec)


# continued fractions -----------------------------------------------------


@dataclass(frozen=True)
class ConvergentTable:
    partial_quotients: tuple[int, ...]
    p: tuple[int, ...]
    q: tuple[int, ...]
    precision: int = DEFAULT_PREC

    @property
    def certified_count(self) -> int:
        return len(self.partial_quotients)

    def first_index_above(self, bound: int) -> int:
        for j, qj in enumerate(self.q):
            if qj > bound:
                return j
        raise CertificationError(f"no certified convergent with q > {bound}", self.certified_count, self)

    def verify(self, gamma: Callable[[int], RBall]) -> None:
        """Recheck recurrence, determinant and Legendre bounds in ball arithmetic."""
        x = gamma(self.precision)
        for j in range(self.certified_count):
            if j >= 1 and self.q[j] <= self.q[j - 1] and j > 1:
                raise AssertionError(f"q not increasing at {j}")
            if j >= 1:
                det = self.p[j] * self.q[j - 1] - self.p[j - 1] * self.q[j]
                if det not in (1, -1):
                    raise AssertionError(f"determinant {det} at {j}")
            if j + 1 < self.certified_count:
                err = abs(x - Fraction(self.p[j], self.q[j]))
                upper = Fraction(1, self.q[j] * self.q[j + 1])
                lower = Fraction(1, self.q[j] * (self.q[j] + self.q[j + 1]))
                if not (err.lt(upper) and err.gt(lower)):
                    raise AssertionError(f"Legendre bounds not certified at {j}")


def _expand_at(x: RBall, count: int) -> tuple[list[int], str | None]:
    quotients: list[int] = []
    while len(quotients) < count:
        lo, hi = x.lower(), x.upper()
        k = lo.numerator // lo.denominator
        if x.is_exact() and lo == k:
            quotients.append(k)
            return quotients, "rational expansion terminated"
        if hi.numerator // hi.denominator != k or lo == k:
            return quotients, "floor not certified"
        quotients.append(k)
        frac = x - k
        if not frac.excludes_zero():
            return quotients, "remainder sign not certified"
        x = 1 / frac
    return quotients, None


def _table(quotients: list[int], prec: int) -> ConvergentTable:
    p_list, q_list = [], []
    pm2, pm1, qm2, qm1 = 0, 1, 1, 0
    for a in quotients:
        pn, qn = a * pm1 + pm2, a * qm1 + qm2
        p_list.append(pn)
        q_list.append(qn)
        pm2, pm1, qm2, qm1 = pm1, pn, qm1, qn
    return ConvergentTable(tuple(quotients), tuple(p_list), tuple(q_list), prec)


def cf_expand(
    gamma: Callable[[int], RBall],
    min_certified: int,
    prec: int = DEFAULT_PREC,
    max_prec: int = MAX_PREC,
) -> ConvergentTable:
    """Certified continued fraction of ``gamma`` with at least ``min_certified`` terms.

    Each partial quotient is taken only when the remainder ball lies strictly
    inside (k, k+1); otherwise the precision is doubled and the expansion
    restarts.
    """
    while True:
        quotients, reason = _expand_at(gamma(prec), min_certified)
        if reason is None:
            return _table(quotients, prec)
        if reason.startswith("rational") or prec * 2 > max_prec:
            idx = len(quotients)
            raise CertificationError(
                f"certification failed at partial quotient {idx} ({reason}, prec={prec})",
                idx,
                _table(quotients, prec),
            )
        prec *= 2


@lru_cache(maxsize=8)
def gamma_convergents(count: int = 200, prec: int = DEFAULT_PREC) -> ConvergentTable:
    return cf_expand(gamma_ball, count, prec)
