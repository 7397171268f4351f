from __future__ import annotations

import csv
import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibdigits.search import (
    SolutionTuple,
    enumerate_solutions,
    fib,
    fib_table,
    format_table,
    is_solution,
    popcount_exponents,
    solutions_csv,
)
from golden import SOLUTION_ROWS
from oracles import fib_binet_float


@pytest.fixture(scope="module")
def sols():
    return enumerate_solutions(1000)


def test_fib_small():
    assert [fib(n) for n in range(12)] == [0, 1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
    assert fib(100) == 354224848179261915075
    assert fib_table(30) == [fib(n) for n in range(31)]
    with pytest.raises(ValueError):
        fib(-1)


@given(st.integers(min_value=1, max_value=400), st.integers(min_value=1, max_value=400))
def test_fib_addition_formula(m, n):
    assert fib(m + n) == fib(m) * fib(n + 1) + fib(m - 1) * fib(n)


def test_binet_inequality():
    phi = (1 + 5**0.5) / 2
    for n in range(1, 501):
        assert phi ** (n - 2) <= fib(n) <= phi ** (n - 1)
    for n in range(1, 60):
        assert fib(n) == round(fib_binet_float(n))


def test_popcount_exponents():
    assert popcount_exponents(47) == [5, 3, 2, 1, 0]
    assert popcount_exponents(0) == []
    assert popcount_exponents(1 << 300) == [300]
    with pytest.raises(ValueError):
        popcount_exponents(-1)


@given(st.integers(min_value=0, max_value=2**200))
def test_popcount_exponents_roundtrip(N):
    e = popcount_exponents(N)
    assert sum(1 << a for a in e) == N
    assert e == sorted(e, reverse=True)
    assert len(e) == bin(N).count("1")


def test_matches_golden_table(sols):
    assert len(sols) == 38
    assert [(*s.as_tuple(), s.value) for s in sols] == SOLUTION_ROWS
    assert max(s.n for s in sols) == 23
    assert max(s.a1 for s in sols) == 14


def test_every_row_is_a_solution(sols):
    for s in sols:
        assert is_solution(s)
        assert fib(s.n) + fib(s.m) == s.value


def test_brute_force_small_range():
    found = []
    for n in range(4, 60):
        for m in range(2, n - 1):
            if bin(fib(n) + fib(m)).count("1") == 5:
                found.append((n, m))
    assert found == [(s.n, s.m) for s in enumerate_solutions(59)]


def test_small_cutoffs():
    assert [s.as_tuple() for s in enumerate_solutions(10)] == [(9, 7, 5, 3, 2, 1, 0)]
    assert enumerate_solutions(8) == []
    with pytest.raises(ValueError):
        enumerate_solutions(3)


def test_is_solution_rejects_bad_tuples():
    assert not is_solution(SolutionTuple(9, 8, 5, 3, 2, 1, 0))  # needs n - 1 > m
    assert not is_solution(SolutionTuple(9, 7, 5, 3, 3, 1, 0))
    assert not is_solution(SolutionTuple(9, 7, 5, 3, 2, 1, 1))


def test_csv_and_table(sols):
    rows = list(csv.reader(io.StringIO(solutions_csv(sols))))
    assert rows[0] == ["n", "m", "a1", "a2", "a3", "a4", "a5", "value"]
    assert [tuple(map(int, r)) for r in rows[1:]] == SOLUTION_ROWS
    text = format_table(sols[:1])
    assert text == "F_9 + F_7 = 2^5 + 2^3 + 2^2 + 2^1 + 2^0 = 47"
