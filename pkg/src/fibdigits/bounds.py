"""Certified evaluation of the linear-forms-in-logarithms bounds and the bound ledger.

Every constant is computed as an RBall.  Published decimal constants are used
as targets: the computed ball must lie below them and within 1% of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from .numkernel import (
    DEFAULT_PREC,
    PrecisionInsufficient,
    RBall,
    ball_log,
    ball_sqrt,
    log2_ball,
    log_alpha_ball,
    sqrt5_ball,
)

PREC = DEFAULT_PREC


def ball(x: int | Fraction | str | RBall) -> RBall:
    if isinstance(x, RBall):
        return x
    if isinstance(x, str):
        x = Fraction(x)
    return RBall.exact(x, PREC)


def log_(x: int | Fraction | str | RBall) -> RBall:
    return ball_log(ball(x), PREC)


# heights -----------------------------------------------------------------


class HeightKind(Enum):
    ALPHA = "alpha"
    TWO = "two"
    SQRT5_TIMES_SUM = "sqrt5_times_sum"
    RATIO_FORM = "ratio_form"


@dataclass(frozen=True)
class HeightExpr:
    kind: HeightKind
    deltas: tuple[int, ...] = ()  # a1 - a2, ..., a1 - ak, increasing
    nm_gap: int = 0  # n - m for RATIO_FORM

    def __post_init__(self):
        if any(d < 1 for d in self.deltas) or list(self.deltas) != sorted(set(self.deltas)):
            raise ValueError("gaps must be positive and strictly increasing")
        if self.kind is HeightKind.RATIO_FORM and self.nm_gap < 1:
            raise ValueError("n - m must be positive")


def height_upper(e: HeightExpr) -> RBall:
    """Upper bound for the logarithmic height, following the triangle/product/power rules."""
    if e.kind is HeightKind.ALPHA:
        return log_alpha_ball(PREC) / 2
    if e.kind is HeightKind.TWO:
        return log2_ball(PREC)
    k = len(e.deltas) + 1
    # h(1 + 2^-d2 + ... + 2^-dk) <= sum_i d_i log 2 + log k
    sum_part = log2_ball(PREC) * sum(e.deltas) + log_(k)
    log_sqrt5 = log_(5) / 2
    if e.kind is HeightKind.SQRT5_TIMES_SUM:
        return log_sqrt5 + sum_part
    # h(1 + alpha^-t) <= t h(alpha) + log 2
    return log_alpha_ball(PREC) * Fraction(e.nm_gap, 2) + log2_ball(PREC) + log_sqrt5 + sum_part


def height_envelope_coefficient(kind: HeightKind, k: int) -> RBall:
    """Linear coefficient c with h <= c * max(gap) for at most k summands."""
    l2, la = log2_ball(PREC), log_alpha_ball(PREC)
    log_sqrt5 = log_(5) / 2
    if kind is HeightKind.SQRT5_TIMES_SUM:
        return l2 * (k - 1) + log_sqrt5 + log_(5)
    if kind is HeightKind.RATIO_FORM:
        return la / 2 + l2 * (k - 1) + log_(8) + log_sqrt5
    raise ValueError(kind)


def exact_height(p: Fraction, q: Fraction) -> RBall:
    """Absolute logarithmic height of p + q*sqrt(5) from its minimal polynomial."""
    p, q = Fraction(p), Fraction(q)
    if q == 0:
        if p == 0:
            return ball(0)
        return log_(max(abs(p.numerator), abs(p.denominator)))
    trace = 2 * p
    norm = p * p - 5 * q * q
    # primitive minimal polynomial c X^2 - c*trace X + c*norm
    c = trace.denominator * norm.denominator
    from math import gcd

    g = gcd(gcd(c, (c * trace).numerator), (c * norm).numerator)
    c //= g
    s5 = sqrt5_ball(PREC)
    total = log_(c)
    for sign in (1, -1):
        x = abs(ball(p) + s5 * q * sign)
        if x.gt(1):
            total = total + ball_log(x, PREC)
        elif not x.lt(1):
            raise PrecisionInsufficient("conjugate too close to 1")
    return total / 2


# Matveev -----------------------------------------------------------------


def matveev_exponent(t: int, D: int, B: RBall | int | Fraction, A: Sequence[RBall | int | Fraction]) -> RBall:
    """E with |Lambda| > exp(-E): 1.4 * 30^(t+3) * t^4.5 * D^(t+2) (1+log D)(1+log B) A1...At."""
    if t < 1 or D < 1 or len(A) != t:
        raise ValueError("bad Matveev parameters")
    c = ball(Fraction(14, 10)) * 30 ** (t + 3) * t**4 * ball_sqrt(ball(t)) * D ** (t + 2)
    c = c * (1 + log_(D)) * (1 + log_(B))
    for a in A:
        c = c * ball(a)
    return c


def matveev_coefficient(A3_factor: Fraction, log_factor: Fraction = Fraction(115, 100)) -> RBall:
    """Coefficient of log n * (gap) for the three-term forms with D = 2, A = (0.25, 0.7, A3_factor).

    The factor (1 + log n) is replaced by ``log_factor * log n`` (valid for n > 786).
    """
    t, D = 3, 2
    c = ball(Fraction(14, 10)) * 30 ** (t + 3) * t**4 * ball_sqrt(ball(t)) * D ** (t + 2)
    c = c * (1 + log_(D)) * ball(log_factor)
    return c * ball(Fraction(1, 4)) * ball(Fraction(7, 10)) * ball(A3_factor)


def iterate_five_steps(C: RBall | int | Fraction) -> RBall:
    """K with every gap < K (log n)^5: four steps divide by log 2, one by log alpha."""
    C = ball(C)
    return C**5 / (log_alpha_ball(PREC) * log2_ball(PREC) ** 4)


# guarded lemmas ----------------------------------------------------------


@dataclass(frozen=True)
class GuardedLemma:
    name: str
    threshold: int  # the statement holds for all n > threshold

    def check(self, n_min: int) -> None:
        if n_min <= self.threshold:
            raise ValueError(f"lemma {self.name} needs n > {self.threshold}, got n > {n_min}")


def _first_valid(pred, start: int = 2) -> int:
    """Smallest N such that pred(n) holds for n = N (pred is monotone in n)."""
    n = start
    while not pred(n):
        n += 1
    return n


def one_plus_log_lemma() -> GuardedLemma:
    """1 + log n < 1.15 log n, i.e. log n > 1/0.15."""
    n0 = _first_valid(lambda n: log_(n).gt(Fraction(20, 3)))
    return GuardedLemma("1+log n < 1.15 log n", n0 - 1)


def log_plus_nine_lemma() -> GuardedLemma:
    """log n + 9 < 2.4 log n, i.e. log n > 9/1.4."""
    n0 = _first_valid(lambda n: log_(n).gt(Fraction(90, 14)))
    return GuardedLemma("log n + 9 < 2.4 log n", n0 - 1)


def n_vs_a1_ok(a1: int) -> bool:
    """n < (a1 log 2 + log 6)/log alpha implies n - 4 < 1.45 a1."""
    bound = (log2_ball(PREC) * a1 + log_(6)) / log_alpha_ball(PREC)
    return (bound - 4).lt(ball(Fraction(145, 100)) * a1) or a1 == 0 and bound.lt(4)


def check_constant_headroom() -> dict[str, bool]:
    """The numeric facts behind the Baker-Davenport setup constants."""
    l2 = log2_ball(PREC)
    return {
        "A_S1=23.09 >= 16/log2": (ball("23.09") - ball(16) / l2).is_positive(),
        "A_S2=7.22 >= 5/log2": (ball("7.22") - ball(5) / l2).is_positive(),
        "log8 - log0.63 < 2.55": (log_(8) - log_(Fraction(63, 100))).lt(Fraction(255, 100)),
        "|x| <= 2|e^x-1| on [-1,0]": _x_vs_expm1_grid(),
    }


def _x_vs_expm1_grid(points: int = 400) -> bool:
    from .numkernel import ball_exp

    for i in range(-points, points + 1):
        x = ball(Fraction(i, points))  # grid on [-1, 1]
        if i == 0:
            continue
        lhs = abs(x)
        rhs = abs(ball_exp(x, PREC) - 1) * 2
        if not lhs.lt(rhs):
            return False
    return True


# Bugeaud-Laurent ---------------------------------------------------------


def bugeaud_laurent_bound(p: int, f: int, D: int, A1: RBall, A2: RBall, Bq: RBall) -> RBall:
    """24 p (p^f - 1) / ((p - 1)(log p)^4) * D^4 * B^2 * A1 * A2."""
    lead = ball(24 * p * (p**f - 1)) / (ball(p - 1) * log_(p) ** 4)
    return lead * D**4 * ball(Bq) ** 2 * ball(A1) * ball(A2)


def bugeaud_leading_constant() -> RBall:
    return bugeaud_laurent_bound(2, 2, 1, ball(1), ball(1), ball(1))


def bugeaud_instantiated_coefficient() -> RBall:
    """Coefficient c with v2(...) < c (log(m+1) + 9)^2 (n - m).

    A1 = log 2 and A2 = (n-m) log alpha + 2 log 2 <= (n-m)(log alpha + log 2)
    since n - m >= 2; the B-term max{log b' + log log 2 + 0.4, 10 log 2, 10} is
    at most log(m+1) + 9 since m >= 2.
    """
    l2, la = log2_ball(PREC), log_alpha_ball(PREC)
    return bugeaud_laurent_bound(2, 2, 1, l2, la + l2, ball(1))


def bugeaud_B_envelope_ok(m: int) -> bool:
    """max{log(m+1) + log log 2 + 0.4, 10 log 2, 10} <= log(m+1) + 9 for this m."""
    lm = log_(m + 1)
    first = lm + ball_log(log2_ball(PREC), PREC) + ball(Fraction(2, 5))
    env = lm + 9
    return first.lt(env) and (log2_ball(PREC) * 10).lt(env) and ball(10).lt(env)


def bugeaud_a5_coefficient(c508: int = 508) -> tuple[RBall, int]:
    """508 * 2.4^2, and the integer coefficient after absorbing the trailing +1."""
    raw = ball(c508) * ball(Fraction(24, 10)) ** 2
    return raw, raw.upper_floor() + 1


def degenerate_padic_bounds(case: str, value: int) -> int:
    """Valuation bound in the dependent cases: v2(m+2)+2 for t=3, v2(n+m)+1 for t even."""
    if value < 1:
        raise ValueError("value must be positive")
    if case == "t3":
        x = value + 2
        return (x & -x).bit_length() - 1 + 2
    if case == "even":
        return (value & -value).bit_length() - 1 + 1
    raise ValueError(case)


def degenerate_log_envelope(case: str, value: int) -> RBall:
    if case == "t3":
        return log_(value + 2) / log2_ball(PREC) + 2
    return log_(value) / log2_ball(PREC) + 1


def bugeaud_dominates(n: int, coefficient: int = 508) -> bool:
    """508 (log n + 9)^2 * 2 exceeds both dependent-case envelopes, for every m < n."""
    main = ball(coefficient) * (log_(n) + 9) ** 2 * 2
    return main.gt(degenerate_log_envelope("t3", n)) and main.gt(degenerate_log_envelope("even", 2 * n))


# large bound -------------------------------------------------------------


def solve_log_power(C: RBall | int | Fraction, e: int, start: int = 10**200, max_iter: int = 10_000) -> int:
    """Integer N such that every n >= N violates n < C (log n)^e (for n beyond the turning point).

    Iterates n <- ceil(upper(C (log n)^e)) downward from ``start`` until the
    integer ceilings repeat, then certifies N >= C (log N)^e.
    """
    C = ball(C)
    n = start
    if not ball(n).gt(C * log_(n) ** e):
        raise ArithmeticError("start value does not satisfy n > C (log n)^e")
    for _ in range(max_iter):
        nxt = (C * log_(n) ** e).upper_ceil()
        if nxt >= n:
            break
        n = nxt
    else:
        raise ArithmeticError("fixed-point iteration did not converge")
    if (C * log_(n) ** e).gt(n):
        raise ArithmeticError("fixed point not certified")
    return n


def combine_coefficient(K5: RBall, K_a5: RBall, n_min: int = 1000) -> RBall:
    """C7 with n < C7 (log n)^7 for n > n_min, from n - 4 < 1.45 (a5 + (a1 - a5))."""
    L = log_(n_min)
    c = ball(Fraction(145, 100)) * (ball(K_a5) * ball(K5) + ball(K_a5) / L**5 + ball(K5) / L**2)
    return c + ball(4) / L**7


def combine_large_bound(K5: RBall | int | Fraction, K_a5: RBall | int | Fraction) -> tuple[RBall, int]:
    """Return (C7, N) with n < N for every solution with n > 1000."""
    C7 = combine_coefficient(ball(K5), ball(K_a5))
    return C7, solve_log_power(C7, 7)


def round_up_sig(x: int | RBall, digits: int = 3) -> int:
    """Smallest integer >= x with the given number of significant decimal digits."""
    v = x.upper_ceil() if isinstance(x, RBall) else int(x)
    k = max(len(str(v)) - digits, 0)
    unit = 10**k
    return -(-v // unit) * unit


def final_contradiction(a5_bound: int, a1_minus_a5_bound: int) -> tuple[int, int]:
    """(a1 bound, n bound): a1 <= a5 + (a1 - a5) and n < (a1 log 2 + log 6)/log alpha.

    The n bound is the largest integer strictly below the real bound.
    """
    a1 = a5_bound + a1_minus_a5_bound
    x = (log2_ball(PREC) * a1 + log_(6)) / log_alpha_ball(PREC)
    hi = x.upper()
    f = hi.numerator // hi.denominator
    lo = x.lower()
    if lo.numerator // lo.denominator != f:
        raise PrecisionInsufficient("n bound straddles an integer")
    n_bound = f - 1 if hi == f else f
    return a1, n_bound


# reference constants as acceptance targets -----------------------------------


@dataclass(frozen=True)
class ConstantCheck:
    name: str
    computed: RBall
    target: Fraction

    @property
    def below_target(self) -> bool:
        return self.computed.upper() <= self.target

    @property
    def within_one_percent(self) -> bool:
        return self.computed.lower() >= self.target * Fraction(99, 100)

    @property
    def ok(self) -> bool:
        return self.below_target and self.within_one_percent

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "computed": float(self.computed),
            "target": float(self.target),
            "below_target": self.below_target,
            "within_one_percent": self.within_one_percent,
        }


@dataclass
class LargeBoundReport:
    C1: RBall
    C2p: RBall
    C: Fraction
    K5: RBall
    bugeaud_lead: RBall
    bugeaud_coeff: RBall
    a5_raw: RBall
    a5_coeff: int
    C7: RBall
    n_fixed_point: int
    M: int
    checks: list[ConstantCheck] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


def large_bound_report() -> LargeBoundReport:
    """Recompute the whole chain from scratch, with the reference roundings as targets."""
    one_plus_log_lemma().check(1000)
    log_plus_nine_lemma().check(1000)
    C1 = matveev_coefficient(Fraction(519, 100))
    C2p = matveev_coefficient(Fraction(521, 100))
    C1_pub, C2p_pub, C_pub = Fraction(811, 100) * 10**12, Fraction(8134, 1000) * 10**12, Fraction(814, 100) * 10**12
    if not (C1.upper() <= C_pub and C2p.upper() <= C_pub):
        raise ArithmeticError("C does not dominate C1 and C2'")
    # dropped additive terms log 8 and log 2.5/log 2 are covered by the slack in C at n > 1000
    slack1 = (ball(C1_pub) - C1) * log_(1000)
    slack2 = (ball(C_pub) - C2p) / log2_ball(PREC) * log_(1000)
    if not (slack1.gt(log_(8)) and slack2.gt(log_(Fraction(5, 2)) / log2_ball(PREC))):
        raise ArithmeticError("additive constants not absorbed")
    K5 = iterate_five_steps(C_pub)
    K5_pub = Fraction(322, 100) * 10**65
    lead = bugeaud_leading_constant()
    coeff = bugeaud_instantiated_coefficient()
    a5_raw, a5_coeff = bugeaud_a5_coefficient(508)
    C7 = combine_coefficient(ball(K5_pub), ball(a5_coeff))
    C7_pub = Fraction(137, 100) * 10**69
    n_fp = solve_log_power(ball(C7_pub), 7)
    M = round_up_sig(n_fp, 3)
    checks = [
        ConstantCheck("C1", C1, C1_pub),
        ConstantCheck("C2'", C2p, C2p_pub),
        ConstantCheck("K5", K5, K5_pub),
        ConstantCheck("bugeaud_coefficient", coeff, Fraction(508)),
        # the trailing +1 is absorbed since (log n)^2 (n - m) >= 2 (log 1000)^2
        ConstantCheck("a5_coefficient", a5_raw + 1 / (log_(1000) ** 2 * 2), Fraction(2927)),
        ConstantCheck("C7", C7, C7_pub),
        ConstantCheck("n_bound", ball(n_fp), Fraction(154, 100) * 10**85),
    ]
    return LargeBoundReport(C1, C2p, C_pub, K5, lead, coeff, a5_raw, a5_coeff, C7, n_fp, M, checks)


# ledger ------------------------------------------------------------------

QUANTITIES = ("n-m", "a1-a2", "a1-a3", "a1-a4", "a1-a5", "a5", "a1", "n")


class LedgerError(ValueError):
    pass


@dataclass
class LedgerEntry:
    bound: int
    stage: str
    target: int | None = None

    def as_dict(self) -> dict:
        return {"bound": str(self.bound), "stage": self.stage, "target": None if self.target is None else str(self.target)}


@dataclass
class BoundLedger:
    """Monotone record of integer upper bounds, each tagged with the producing stage."""

    entries: dict[str, LedgerEntry] = field(default_factory=dict)
    history: list[tuple[str, int, str]] = field(default_factory=list)

    def tighten(self, quantity: str, bound: int, stage: str, target: int | None = None) -> None:
        if quantity not in QUANTITIES:
            raise LedgerError(f"unknown quantity {quantity}")
        bound = int(bound)
        old = self.entries.get(quantity)
        if old is not None and bound > old.bound:
            raise LedgerError(f"{stage} would loosen {quantity}: {old.bound} -> {bound}")
        self.entries[quantity] = LedgerEntry(bound, stage, target)
        self.history.append((quantity, bound, stage))

    def get(self, quantity: str) -> int:
        return self.entries[quantity].bound

    def __contains__(self, quantity: str) -> bool:
        return quantity in self.entries

    def to_json(self) -> dict:
        return {
            "entries": {k: v.as_dict() for k, v in self.entries.items()},
            "history": [[q, str(b), s] for q, b, s in self.history],
        }

    @classmethod
    def from_json(cls, data: dict) -> "BoundLedger":
        ledger = cls()
        for q, b, s in data["history"]:
            ledger.tighten(q, int(b), s)
        for q, entry in data["entries"].items():
            if q not in ledger.entries or ledger.entries[q].bound != int(entry["bound"]):
                raise LedgerError(f"ledger entry {q} inconsistent with its history")
            t = entry.get("target")
            ledger.entries[q].target = None if t is None else int(t)
        return ledger


def check_history_monotone(history: Iterable[tuple[str, int, str]]) -> list[str]:
    """Violations of the tighten-only rule in a replayed history."""
    seen: dict[str, int] = {}
    bad = []
    for q, b, s in history:
        b = int(b)
        if q in seen and b > seen[q]:
            bad.append(f"{s}: {q} loosened {seen[q]} -> {b}")
        seen[q] = min(b, seen.get(q, b))
    return bad
