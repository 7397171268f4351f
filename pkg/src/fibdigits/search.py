"""Exhaustive search for F_n + F_m with exactly five binary digits."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass


def fib(n: int) -> int:
    """F_n by fast doubling."""
    if n < 0:
        raise ValueError("n must be >= 0")

    def _pair(k: int) -> tuple[int, int]:
        if k == 0:
            return 0, 1
        a, b = _pair(k >> 1)
        c = a * (2 * b - a)
        d = a * a + b * b
        return (d, c + d) if k & 1 else (c, d)

    return _pair(n)[0]


def fib_table(n_max: int) -> list[int]:
    table = [0, 1]
    while len(table) <= n_max:
        table.append(table[-1] + table[-2])
    return table[: n_max + 1]


def popcount_exponents(N: int) -> list[int]:
    """Exponents of the binary digits of N, descending."""
    if N < 0:
        raise ValueError("N must be >= 0")
    out = []
    while N:
        e = N.bit_length() - 1
        out.append(e)
        N ^= 1 << e
    return out


@dataclass(frozen=True, order=True)
class SolutionTuple:
    n: int
    m: int
    a1: int
    a2: int
    a3: int
    a4: int
    a5: int

    @property
    def exponents(self) -> tuple[int, int, int, int, int]:
        return (self.a1, self.a2, self.a3, self.a4, self.a5)

    @property
    def value(self) -> int:
        return sum(1 << a for a in self.exponents)

    def as_tuple(self) -> tuple[int, ...]:
        return astuple(self)


def is_solution(s: SolutionTuple) -> bool:
    a = s.exponents
    if not (s.n - 1 > s.m >= 2):
        return False
    if not all(a[i] > a[i + 1] for i in range(4)) or a[4] < 0:
        return False
    return fib(s.n) + fib(s.m) == s.value


def enumerate_solutions(n_max: int, n_min: int = 3) -> list[SolutionTuple]:
    """All solutions with n_min <= n <= n_max, sorted by (n, m)."""
    if n_max < 4:
        raise ValueError("n_max must be >= 4")
    F = fib_table(n_max)
    found = []
    for n in range(max(n_min, 3), n_max + 1):
        fn = F[n]
        for m in range(2, n - 1):
            s = fn + F[m]
            if s.bit_count() == 5:
                found.append(SolutionTuple(n, m, *popcount_exponents(s)))
    return found


def solutions_csv(solutions: list[SolutionTuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "m", "a1", "a2", "a3", "a4", "a5", "value"])
    for s in solutions:
        w.writerow([*s.as_tuple(), s.value])
    return buf.getvalue()


def format_table(solutions: list[SolutionTuple]) -> str:
    """One line per solution: F_n + F_m = 2^a1 + ... + 2^a5 = value."""
    lines = []
    for s in solutions:
        powers = " + ".join(f"2^{a}" for a in s.exponents)
        lines.append(f"F_{s.n} + F_{s.m} = {powers} = {s.value}")
    return "\n".join(lines)
