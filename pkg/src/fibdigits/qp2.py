"""Finite-precision arithmetic in Q_2(sqrt 5), the 2-adic logarithm and zeta digits.

Elements are stored as ``2**v * (a + b*alpha)`` with ``a + b*alpha`` a unit of
Z_2[alpha] known modulo ``2**prec``.  The basis {1, alpha} is integral, so no
halving is needed when embedding Z[alpha]; sqrt 5 = 2*alpha - 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil, log2

from .zphi import ALPHA, BETA, ZPhi, zphi_pow

DEFAULT_DIGITS = 320


def guard_margin(n: int) -> int:
    return 10 + ceil(log2(n))


class PadicPrecisionError(ArithmeticError):
    pass


class DegenerateLog(ArithmeticError):
    pass


class ConjugacyViolation(ArithmeticError):
    pass


def _v2_int(n: int) -> int:
    return (n & -n).bit_length() - 1


def _pair_mul(x: tuple[int, int], y: tuple[int, int], mask: int) -> tuple[int, int]:
    a, b = x
    c, d = y
    bd = b * d
    return (a * c + bd) & mask, (a * d + b * c + bd) & mask


def _pair_pow(x: tuple[int, int], e: int, mask: int) -> tuple[int, int]:
    result = (1, 0)
    while e:
        if e & 1:
            result = _pair_mul(result, x, mask)
        e >>= 1
        if e:
            x = _pair_mul(x, x, mask)
    return result


def _pair_unit_inverse(x: tuple[int, int], k: int) -> tuple[int, int]:
    a, b = x
    norm = a * a + a * b - b * b
    if norm % 2 == 0:
        raise ValueError("not a unit")
    mod = 1 << k
    inv = pow(norm, -1, mod)
    return ((a + b) * inv) % mod, (-b * inv) % mod


@dataclass(frozen=True)
class Padic2:
    """2**v * (a + b*alpha); (a, b) is a unit mod 2**prec, or (0, 0) for 'zero to precision'."""

    v: int
    a: int
    b: int
    prec: int

    @property
    def absolute_prec(self) -> int:
        return self.v + self.prec

    def is_zero(self) -> bool:
        return self.prec <= 0 or (self.a == 0 and self.b == 0)

    def __mul__(self, other: "Padic2") -> "Padic2":
        k = min(self.prec, other.prec)
        mask = (1 << k) - 1
        a, b = _pair_mul((self.a, self.b), (other.a, other.b), mask)
        return Padic2(self.v + other.v, a, b, k)

    def inverse(self) -> "Padic2":
        if self.is_zero():
            raise ZeroDivisionError("inverse of a 2-adic zero")
        a, b = _pair_unit_inverse((self.a, self.b), self.prec)
        return Padic2(-self.v, a, b, self.prec)

    def __truediv__(self, other: "Padic2") -> "Padic2":
        return self * other.inverse()

    def __neg__(self) -> "Padic2":
        mod = 1 << self.prec
        return Padic2(self.v, (-self.a) % mod, (-self.b) % mod, self.prec)

    def __add__(self, other: "Padic2") -> "Padic2":
        v = min(self.v, other.v)
        absprec = min(self.absolute_prec, other.absolute_prec)
        k = absprec - v
        mod = 1 << k
        s1, s2 = self.v - v, other.v - v
        a = ((self.a << s1) + (other.a << s2)) % mod
        b = ((self.b << s1) + (other.b << s2)) % mod
        return _normalize(v, a, b, absprec)

    def __sub__(self, other: "Padic2") -> "Padic2":
        return self + (-other)

    def scale(self, k: int) -> "Padic2":
        """Multiply by the integer k."""
        return self * embed(k, self.prec)

    def congruent(self, other: "Padic2", absprec: int) -> bool:
        """Agreement modulo 2**absprec (both must be known that far)."""
        if min(self.absolute_prec, other.absolute_prec) < absprec:
            raise PadicPrecisionError("operands not known to the requested precision")
        d = self - other
        return d.is_zero() or d.v >= absprec

    def to_pair(self, absprec: int) -> tuple[int, int]:
        """Coordinates (A, B) of the value mod 2**absprec; requires v >= 0."""
        if self.v < 0:
            raise PadicPrecisionError("element is not integral")
        mod = 1 << absprec
        return (self.a << self.v) % mod, (self.b << self.v) % mod


def _normalize(v: int, a: int, b: int, absprec: int) -> Padic2:
    if a == 0 and b == 0:
        return Padic2(absprec, 0, 0, 0)
    s = min(_v2_int(a) if a else 1 << 30, _v2_int(b) if b else 1 << 30)
    v += s
    k = absprec - v
    mod = 1 << k
    return Padic2(v, (a >> s) % mod, (b >> s) % mod, k)


def embed(x: ZPhi | int | Fraction, prec: int = DEFAULT_DIGITS) -> Padic2:
    """Image of an element of Q(sqrt 5) given either in Z[alpha] or as a rational."""
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return embed(x.numerator, prec)
        return embed(x.numerator, prec) / embed(x.denominator, prec)
    if isinstance(x, int):
        x = ZPhi(x, 0)
    if not x:
        raise ValueError("cannot embed zero with finite relative precision")
    s = min(_v2_int(x.a) if x.a else 1 << 30, _v2_int(x.b) if x.b else 1 << 30)
    mod = 1 << prec
    return Padic2(s, (x.a >> s) % mod, (x.b >> s) % mod, prec)


def padic_log(u: Padic2) -> Padic2:
    """2-adic logarithm of a unit, via log(u) = log(u**6)/6.

    u**6 lies in 1 + 4 Z_2[alpha], where the series converges with a bounded
    loss of precision; the result is known to absolute precision prec - 1.
    """
    if u.v != 0 or u.is_zero():
        raise ValueError("padic_log needs a unit")
    n = u.prec
    g = n.bit_length() + 2
    k = n + g
    mask = (1 << k) - 1
    w = _pair_pow((u.a, u.b), 6, (1 << n) - 1)
    y = ((w[0] - 1) % (1 << n), w[1])
    if y == (0, 0):
        return Padic2(n - 1, 0, 0, 0)
    assert y[0] % 4 == 0 and y[1] % 4 == 0
    total = (0, 0)
    power = (1, 0)
    j = 0
    while True:
        j += 1
        # v(y^j / j) >= 2j - v2(j); stop once every remaining term vanishes mod 2^n
        if 2 * j - j.bit_length() > n + 1:
            break
        power = _pair_mul(power, y, mask)
        e = _v2_int(j)
        odd = j >> e
        inv = pow(odd, -1, 1 << k)
        term = ((power[0] >> e) * inv & mask, (power[1] >> e) * inv & mask)
        if j % 2 == 0:
            term = ((-term[0]) & mask, (-term[1]) & mask)
        total = ((total[0] + term[0]) & mask, (total[1] + term[1]) & mask)
    # y carries absolute precision n; the series keeps it, the division by 2 costs 1
    inv3 = pow(3, -1, 1 << n)
    a = (total[0] * inv3) % (1 << n)
    b = (total[1] * inv3) % (1 << n)
    if a % 2 or b % 2:
        raise AssertionError("log(u^6) must be divisible by 2")
    return _normalize(0, a >> 1, b >> 1, n - 1)


def tau(t: int, prec: int = DEFAULT_DIGITS) -> Padic2:
    """(alpha**t + 1)/(beta**t + 1), embedded."""
    if t < 2:
        raise ValueError("t must be >= 2")
    num = embed(zphi_pow(ALPHA, t) + 1, prec)
    den = embed(zphi_pow(BETA, t) + 1, prec)
    return num / den


@lru_cache(maxsize=None)
def log_beta_over_alpha(prec: int = DEFAULT_DIGITS) -> Padic2:
    # beta/alpha = -beta**2 = alpha - 2
    return padic_log(embed(ZPhi(-2, 1), prec))


@dataclass(frozen=True)
class ZetaDigits:
    t: int
    digits: tuple[int, ...]
    valuation_shift: int
    prec: int  # working 2-adic precision N
    certified: int  # number of digits backed by tracked precision

    def value_mod(self, k: int) -> int:
        return sum(d << i for i, d in enumerate(self.digits[:k]))


def zeta(t: int, prec: int = DEFAULT_DIGITS) -> Padic2:
    lt = padic_log(tau(t, prec))
    if lt.is_zero():
        raise DegenerateLog(f"t={t}: log tau vanishes at precision {prec}; degenerate t, manual treatment required")
    return lt / log_beta_over_alpha(prec)


def zeta_digits(t: int, prec: int = DEFAULT_DIGITS) -> ZetaDigits:
    z = zeta(t, prec)
    if z.v < 0:
        raise PadicPrecisionError(f"t={t}: zeta has negative valuation {z.v}")
    absprec = z.absolute_prec
    margin = guard_margin(prec)
    a, b = z.to_pair(absprec)
    check = max(0, min(absprec, prec - margin))
    if b % (1 << check):
        raise ConjugacyViolation(f"t={t}: alpha-coordinate of zeta does not vanish")
    digits = tuple((a >> i) & 1 for i in range(absprec))
    return ZetaDigits(t, digits, max(0, -z.v), prec, absprec)


def first_r(M: int) -> int:
    """Smallest r with 2**r > M."""
    return M.bit_length()


@dataclass(frozen=True)
class PdwResult:
    t: int
    r: int
    R: int
    a5_bound: int


def pdw_reduce(t: int, M: int, prec: int = DEFAULT_DIGITS) -> PdwResult:
    """First nonzero zeta digit at index >= r, where 2**r > M; gives a5 <= R + 3."""
    r = first_r(M)
    margin = guard_margin(prec)
    usable = prec - margin
    if usable <= r:
        raise PadicPrecisionError(f"R not found: precision {prec} leaves {usable} usable digits <= r = {r}")
    zd = zeta_digits(t, prec)
    limit = min(usable, zd.certified)
    for idx in range(r, limit):
        if zd.digits[idx]:
            return PdwResult(t, r, idx, idx + 3)
    raise PadicPrecisionError(f"t={t}: R not found below {limit}; raise precision or treat separately")


def even_t_R(t: int, r: int) -> int:
    """Closed form for even t, where zeta(t) = -t/2 exactly."""
    if t % 2:
        raise ValueError("t must be even")
    # -t/2 mod 2^(r+64), then first set bit at index >= r
    k = r + 64
    val = (-(t // 2)) % (1 << k)
    hi = val >> r
    return r + _v2_int(hi)
