from __future__ import annotations

from math import factorial

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibdigits.qp2 import (
    Padic2,
    PadicPrecisionError,
    embed,
    even_t_R,
    first_r,
    guard_margin,
    log_beta_over_alpha,
    padic_log,
    pdw_reduce,
    tau,
    zeta,
    zeta_digits,
)
from fibdigits.zphi import ALPHA, BETA, ZPhi, zphi_pow

N = 96


def pair_mul(x, y, mod):
    a, b = x
    c, d = y
    return (a * c + b * d) % mod, (a * d + b * c + b * d) % mod


def naive_exp_pair(L: tuple[int, int], K: int) -> tuple[int, int]:
    """exp(L) mod 2^K for L in 4 Z_2[alpha], summing L^k / k! term by term."""
    work = K + 2 * K  # enough headroom for the powers of 2 in k!
    mod = 1 << work
    total, power = (1, 0), (1, 0)
    for k in range(1, 2 * K + 4):
        power = pair_mul(power, L, mod)
        f = factorial(k)
        e = (f & -f).bit_length() - 1
        inv = pow(f >> e, -1, mod)
        term = ((power[0] >> e) * inv % mod, (power[1] >> e) * inv % mod)
        total = ((total[0] + term[0]) % mod, (total[1] + term[1]) % mod)
    return total[0] % (1 << K), total[1] % (1 << K)


def odd_unit(a: int, b: int) -> ZPhi:
    """Force a + b alpha to be a 2-adic unit (norm odd)."""
    if (a * a + a * b - b * b) % 2 == 0:
        a += 1
        if (a * a + a * b - b * b) % 2 == 0:
            b += 1
    return ZPhi(a, b)


units = st.tuples(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6)).map(lambda p: odd_unit(*p))


@given(units)
def test_log_against_naive_exp(u):
    L = padic_log(embed(u, N))
    six_L = L.scale(6)
    K = N - 8
    got = naive_exp_pair(six_L.to_pair(K + 8), K)
    u6 = zphi_pow(u, 6)
    assert got == (u6.a % (1 << K), u6.b % (1 << K))


@given(units, units)
def test_log_is_a_homomorphism(x, y):
    lx, ly = padic_log(embed(x, N)), padic_log(embed(y, N))
    lxy = padic_log(embed(x * y, N))
    assert lxy.congruent(lx + ly, N - 2)


def test_log_of_torsion_vanishes():
    assert padic_log(embed(ZPhi(-1), N)).is_zero()
    assert padic_log(embed(ZPhi(1), N)).is_zero()


def test_log_requires_unit():
    with pytest.raises(ValueError):
        padic_log(embed(ZPhi(2, 0), N))


def test_valuation_of_log_beta_over_alpha():
    assert log_beta_over_alpha(320).v == 2
    assert log_beta_over_alpha(100).v == 2


def test_arithmetic_roundtrip():
    x = embed(ZPhi(7, 3), 64)
    y = embed(ZPhi(5, 2), 64)
    assert ((x * y) / y).congruent(x, 60)
    assert ((x + y) - y).congruent(x, 60)
    assert embed(ZPhi(12, 8), 64).v == 2


def test_tau_even_is_alpha_power():
    for t in (2, 4, 10, 40):
        assert tau(t, 128).congruent(embed(zphi_pow(ALPHA, t), 128), 120)


def test_tau_odd_definition():
    t = 7
    num = embed(zphi_pow(ALPHA, t) + 1, 128)
    den = embed(zphi_pow(BETA, t) + 1, 128)
    assert (tau(t, 128) * den).congruent(num, 120)


@pytest.mark.parametrize("t", list(range(2, 41, 2)) + [100, 250, 470])
def test_even_t_zeta_is_minus_half_t(t):
    prec = 320
    z = zeta(t, prec)
    k = prec - guard_margin(prec)
    assert z.congruent(embed(-t, prec) / embed(2, prec), k)
    zd = zeta_digits(t, prec)
    assert zd.value_mod(k) == (-(t // 2)) % (1 << k)


@pytest.mark.parametrize("t", [3, 5, 7, 9, 11, 169, 301, 469])
def test_digit_stability_across_precision(t):
    a = zeta_digits(t, 320)
    b = zeta_digits(t, 400)
    k = 320 - guard_margin(320)
    assert a.digits[:k] == b.digits[:k]


def test_r_and_R_max(M):
    assert first_r(M) == 283
    assert 2**283 > M > 2**282
    Rs = {t: pdw_reduce(t, M).R for t in range(2, 471)}
    R_max = max(Rs.values())
    assert R_max == 292
    assert [t for t, R in Rs.items() if R == R_max] == [169]
    assert pdw_reduce(169, M).a5_bound == 295


def test_even_t_closed_form_matches_digits(M):
    r = first_r(M)
    for t in range(2, 471, 2):
        assert pdw_reduce(t, M).R == even_t_R(t, r)
    with pytest.raises(ValueError):
        even_t_R(3, r)


def test_low_precision_cannot_locate_R(M):
    with pytest.raises(PadicPrecisionError, match="R not found"):
        pdw_reduce(5, M, 100)


def test_padic2_zero_handling():
    z = embed(ZPhi(3), 32) - embed(ZPhi(3), 32)
    assert isinstance(z, Padic2) and z.is_zero()
    with pytest.raises(ZeroDivisionError):
        z.inverse()
