"""Exact arithmetic in Z[alpha], alpha = (1 + sqrt 5)/2, and 2-adic valuations there."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


@dataclass(frozen=True)
class ZPhi:
    """The algebraic integer ``a + b*alpha`` with alpha**2 = alpha + 1."""

    a: int
    b: int = 0

    @staticmethod
    def of(value: "ZPhi | int") -> "ZPhi":
        return value if isinstance(value, ZPhi) else ZPhi(int(value), 0)

    def __add__(self, other: "ZPhi | int") -> "ZPhi":
        o = ZPhi.of(other)
        return ZPhi(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self) -> "ZPhi":
        return ZPhi(-self.a, -self.b)

    def __sub__(self, other: "ZPhi | int") -> "ZPhi":
        o = ZPhi.of(other)
        return ZPhi(self.a - o.a, self.b - o.b)

    def __rsub__(self, other: "ZPhi | int") -> "ZPhi":
        return ZPhi.of(other) - self

    def __mul__(self, other: "ZPhi | int") -> "ZPhi":
        return zphi_mul(self, ZPhi.of(other))

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "ZPhi":
        return zphi_pow(self, n)

    def __bool__(self) -> bool:
        return bool(self.a or self.b)

    def conj(self) -> "ZPhi":
        return zphi_conj(self)

    def norm(self) -> int:
        return zphi_norm(self)

    def is_unit(self) -> bool:
        return self.norm() in (1, -1)

    def divides(self, other: "ZPhi") -> bool:
        return exact_div(other, self) is not None

    def to_float(self) -> float:
        return self.a + self.b * (1 + 5**0.5) / 2

    def __repr__(self) -> str:
        return f"ZPhi({self.a}, {self.b})"


ALPHA = ZPhi(0, 1)
BETA = ZPhi(1, -1)
ONE = ZPhi(1, 0)
SQRT5 = ZPhi(-1, 2)  # 2*alpha - 1


def zphi_mul(x: ZPhi, y: ZPhi) -> ZPhi:
    a, b, c, d = x.a, x.b, y.a, y.b
    bd = b * d
    return ZPhi(a * c + bd, a * d + b * c + bd)


def zphi_conj(x: ZPhi) -> ZPhi:
    return ZPhi(x.a + x.b, -x.b)


def zphi_norm(x: ZPhi) -> int:
    return x.a * x.a + x.a * x.b - x.b * x.b


def unit_inverse(x: ZPhi) -> ZPhi:
    n = zphi_norm(x)
    if n not in (1, -1):
        raise ValueError(f"{x!r} is not a unit")
    c = zphi_conj(x)
    return ZPhi(c.a * n, c.b * n)


def zphi_pow(x: ZPhi, n: int) -> ZPhi:
    if n < 0:
        return zphi_pow(unit_inverse(x), -n)
    result, base = ONE, x
    while n:
        if n & 1:
            result = zphi_mul(result, base)
        n >>= 1
        if n:
            base = zphi_mul(base, base)
    return result


def alpha_pow(n: int) -> ZPhi:
    """alpha**n = F_{n-1} + F_n * alpha, for any integer n."""
    return zphi_pow(ALPHA, n)


def exact_div(x: ZPhi, y: ZPhi) -> ZPhi | None:
    """x / y if it lies in Z[alpha], else None."""
    n = zphi_norm(y)
    if n == 0:
        raise ZeroDivisionError("division by zero in Z[alpha]")
    p = zphi_mul(x, zphi_conj(y))
    if p.a % n or p.b % n:
        return None
    return ZPhi(p.a // n, p.b // n)


def _v2_int(n: int) -> int:
    return (n & -n).bit_length() - 1


def v2(x: ZPhi) -> int:
    """2-adic valuation; 2 is inert in Q(sqrt 5), so v2(x) = v2(N(x)) / 2."""
    n = zphi_norm(x)
    if n == 0:
        raise ValueError("v2 of zero")
    v = _v2_int(abs(n))
    assert v % 2 == 0, "2 must be inert"
    return v // 2


def residue_mod2(q: ZPhi) -> str:
    """Class of q in Z[alpha]/(2), one of '0', '1', 'alpha', 'beta'."""
    return {(0, 0): "0", (1, 0): "1", (0, 1): "alpha", (1, 1): "beta"}[(q.a % 2, q.b % 2)]


def v2_pow_plus_one(q: ZPhi, x: int) -> int:
    """v2(q**x + 1) by case analysis on q mod 2, reducing to v2(q+1) or v2(q**3+1)."""
    if x < 1:
        raise ValueError("x must be positive")
    q = ZPhi.of(q)
    cls = residue_mod2(q)
    if cls == "0":
        return 0
    if cls == "1":
        if x % 2 == 0:
            return 1
        return v2(q + 1)
    # alpha and beta have order 3 in (Z[alpha]/2)^*
    if x % 3:
        return 0
    k = x // 3
    if k % 2 == 0:
        return 1
    return v2(zphi_pow(q, 3) + 1)


def v2_pow_minus_one(q: ZPhi, x: int) -> int:
    """v2(q**x - 1) = v2(q - 1) + v2(x), valid when v2(q - 1) > 1."""
    if x < 1:
        raise ValueError("x must be positive")
    q = ZPhi.of(q)
    d = q - 1
    if not d or v2(d) <= 1:
        raise ValueError("lifting-the-exponent precondition v2(q-1) > 1 violated")
    return v2(d) + _v2_int(x)


class DependenceKind(Enum):
    DEPENDENT_X_EQ_1 = "x=1"
    DEPENDENT_X_EQ_3 = "x=3"
    DEPENDENT_EVEN = "even"
    INDEPENDENT = "independent"


@dataclass(frozen=True)
class DependenceClass:
    x: int
    kind: DependenceKind
    witness: tuple[int, int] | None = None  # (k, l): (-alpha^2)^k == tau(x)^l
    alpha_exponent: int | None = None  # tau(x) = alpha**alpha_exponent when dependent

    def verify(self) -> bool:
        """Check the witness exactly: (-alpha^2)^k * (beta^x+1)^l == (alpha^x+1)^l."""
        if self.witness is None:
            return self.kind is DependenceKind.INDEPENDENT
        k, l = self.witness
        if (k, l) == (0, 0):
            return False
        lhs = zphi_mul(zphi_pow(-zphi_pow(ALPHA, 2), k), zphi_pow(zphi_pow(BETA, self.x) + 1, l))
        return lhs == zphi_pow(zphi_pow(ALPHA, self.x) + 1, l)


def tau_quotient(x: int) -> ZPhi | None:
    """(alpha^x + 1)/(beta^x + 1) when it is integral (then a unit), else None."""
    num = zphi_pow(ALPHA, x) + 1
    den = zphi_pow(BETA, x) + 1
    return exact_div(num, den)


def unit_log_alpha(u: ZPhi) -> tuple[int, int]:
    """Write a unit as sign * alpha**y and return (sign, y)."""
    if not u.is_unit():
        raise ValueError(f"{u!r} is not a unit")
    sign = 1 if u.to_float() > 0 else -1
    v = ZPhi(sign * u.a, sign * u.b)
    y = 0
    # walk towards 1; |y| is at most a few times the bit length of the coefficients
    while v != ONE:
        if v.to_float() > 1:
            v = zphi_mul(v, unit_inverse(ALPHA))
            y += 1
        else:
            v = zphi_mul(v, ALPHA)
            y -= 1
    return sign, y


def classify_dependence(x: int) -> DependenceClass:
    """Are alpha/beta = -alpha^2 and (beta^x+1)/(alpha^x+1) multiplicatively dependent?"""
    if x < 1:
        raise ValueError("x must be >= 1")
    quotient = tau_quotient(x)
    if quotient is None:
        return DependenceClass(x, DependenceKind.INDEPENDENT)
    sign, y = unit_log_alpha(quotient)
    if sign != 1:
        raise AssertionError("tau quotient is positive for real x")
    # (-alpha^2)^k = alpha^(y*l) needs 2k = y*l with k even
    if y % 4 == 0:
        witness = (y // 2, 1)
    elif y % 2 == 0:
        witness = (y, 2)
    else:
        witness = (2 * y, 4)
    if x % 2 == 0:
        kind = DependenceKind.DEPENDENT_EVEN
    elif x == 1:
        kind = DependenceKind.DEPENDENT_X_EQ_1
    elif x == 3:
        kind = DependenceKind.DEPENDENT_X_EQ_3
    else:
        raise AssertionError(f"unexpected dependent odd x = {x}")
    return DependenceClass(x, kind, witness, y)


def solve_unit_equation(search_bound: int) -> set[tuple[int, int]]:
    """All (x, y) in [1, search_bound]^2 with alpha^(x+y) == alpha^x + alpha^y + 1.

    Also checks the descent step: any solution with x >= y has y <= 2.
    """
    if search_bound < 3:
        raise ValueError("search_bound must be >= 3")
    powers = [zphi_pow(ALPHA, k) for k in range(2 * search_bound + 1)]
    found = set()
    for x in range(1, search_bound + 1):
        for y in range(1, search_bound + 1):
            if powers[x + y] == powers[x] + powers[y] + 1:
                found.add((x, y))
                if x >= y and y > 2:
                    raise AssertionError(f"descent inequality violated at {(x, y)}")
    return found
