from __future__ import annotations

from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibdigits.numkernel import (
    CertificationError,
    PrecisionInsufficient,
    RBall,
    alpha_ball,
    ball_exp,
    ball_log,
    ball_sqrt,
    cf_expand,
    gamma_ball,
    log2_ball,
    log_alpha_ball,
    nearest_int_dist,
    sqrt5_ball,
)
from oracles import convergent_denominators, mp_cf_terms, mp_gamma


def to_fraction(x) -> Fraction:
    sign, man, exp, _ = x._mpf_
    return (-1) ** sign * Fraction(int(man)) * Fraction(2) ** exp


def contains_mp(ball: RBall, x, dps: int = 400) -> bool:
    v = to_fraction(mpmath.mpf(x))
    # mpmath itself carries dps digits, so allow its own rounding
    slack = abs(v) * Fraction(1, 10 ** (dps - 5))
    return ball.lower() - slack <= v <= ball.upper() + slack


@pytest.mark.parametrize("prec", [64, 256, 1024])
def test_constants_contain_mpmath_values(prec):
    with mpmath.workdps(400):
        phi = (1 + mpmath.sqrt(5)) / 2
        assert contains_mp(log2_ball(prec), mpmath.log(2))
        assert contains_mp(sqrt5_ball(prec), mpmath.sqrt(5))
        assert contains_mp(alpha_ball(prec), phi)
        assert contains_mp(log_alpha_ball(prec), mpmath.log(phi))
        assert contains_mp(gamma_ball(prec), mp_gamma())


def test_constant_widths_shrink_with_precision():
    assert log2_ball(1024).radius() < Fraction(1, 2**1000)
    assert gamma_ball(1024).radius() < Fraction(1, 2**1000)
    assert log2_ball(64).radius() > log2_ball(1024).radius()


def test_exact_dyadic_and_non_dyadic():
    assert RBall.exact(Fraction(3, 8)).is_exact()
    third = RBall.exact(Fraction(1, 3), 128)
    assert not third.is_exact()
    assert third.contains(Fraction(1, 3))
    assert third.radius() < Fraction(1, 2**120)


small_fracs = st.fractions(min_value=Fraction(1, 1000), max_value=1000, max_denominator=10**6)


@given(small_fracs, small_fracs)
def test_arithmetic_contains_exact_result(x, y):
    bx, by = RBall.exact(x, 128), RBall.exact(y, 128)
    assert (bx + by).contains(x + y)
    assert (bx - by).contains(x - y)
    assert (bx * by).contains(x * y)
    assert (bx / by).contains(x / y)
    assert (bx**3).contains(x**3)


@given(small_fracs)
def test_log_exp_sqrt_contain_mpmath(x):
    b = RBall.exact(x, 200)
    with mpmath.workdps(120):
        xm = mpmath.mpf(x.numerator) / x.denominator
        assert contains_mp(ball_log(b, 200), mpmath.log(xm), 120)
        assert contains_mp(ball_exp(RBall.exact(x / 100, 200), 200), mpmath.exp(xm / 100), 120)
        assert contains_mp(ball_sqrt(b), mpmath.sqrt(xm), 120)


@given(small_fracs)
def test_log_exp_roundtrip_encloses_input(x):
    b = RBall.exact(x, 256)
    assert ball_exp(ball_log(b, 256), 256).contains(x)


def test_sign_predicates():
    b = RBall.from_interval(Fraction(-1, 10), Fraction(1, 10), 64)
    assert not b.is_positive() and not b.is_negative() and not b.excludes_zero()
    assert RBall.exact(Fraction(1, 3)).is_positive()


def test_nearest_int_dist():
    d = nearest_int_dist(RBall.exact(Fraction(27, 10), 128))
    assert d.contains(Fraction(3, 10))
    with pytest.raises(PrecisionInsufficient):
        nearest_int_dist(RBall.from_interval(Fraction(0), Fraction(1), 64))


def test_cf_leading_terms(cf):
    assert list(cf.partial_quotients[:12]) == [0, 1, 2, 3, 1, 2, 3, 2, 4, 2, 1, 2]
    assert list(cf.q[:8]) == [1, 1, 3, 10, 13, 36, 121, 278]


def test_cf_matches_mpmath(cf):
    terms = mp_cf_terms(190, dps=600)
    assert list(cf.partial_quotients[:190]) == terms
    assert list(cf.q[:190]) == convergent_denominators(terms)


def test_first_convergent_above_6M(cf, M):
    j = cf.first_index_above(6 * M)
    assert j == 168
    assert cf.q[j] > Fraction(27, 10) * 10**86
    assert cf.q[j - 1] <= 6 * M


def test_cf_certified_and_verified(cf):
    assert cf.certified_count >= 200
    cf.verify(gamma_ball)


def test_cf_rational_input_raises():
    with pytest.raises(CertificationError) as info:
        cf_expand(lambda prec: RBall.exact(Fraction(1, 2), prec), 10, 64, 256)
    assert info.value.index == 2


def test_cf_precision_doubling_reaches_target():
    table = cf_expand(gamma_ball, 60, prec=64)
    assert table.certified_count == 60
    assert table.precision > 64


def test_cf_gives_up_at_max_precision():
    with pytest.raises(CertificationError):
        cf_expand(gamma_ball, 400, prec=64, max_prec=512)
