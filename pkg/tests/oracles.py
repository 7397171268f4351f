"""Independent reference computations (mpmath and decimal), kept free of fibdigits internals."""

from __future__ import annotations

import decimal
import math

import mpmath

DPS = 400


def mp_gamma(dps: int = DPS):
    with mpmath.workdps(dps):
        phi = (1 + mpmath.sqrt(5)) / 2
        return mpmath.log(phi) / mpmath.log(2)


def mp_cf_terms(count: int, dps: int = DPS) -> list[int]:
    """Partial quotients of log(alpha)/log(2) computed at a high working precision."""
    with mpmath.workdps(dps):
        x = mp_gamma(dps)
        out = []
        for _ in range(count):
            a = int(mpmath.floor(x))
            out.append(a)
            x = 1 / (x - a)
        return out


def convergent_denominators(terms: list[int]) -> list[int]:
    q = []
    qm2, qm1 = 1, 0
    for a in terms:
        qn = a * qm1 + qm2
        q.append(qn)
        qm2, qm1 = qm1, qn
    return q


def mp_mu(gaps: tuple[int, ...], t: int | None, dps: int = DPS):
    """-log2(sqrt5 S) plus log2(1 + alpha^-t) in Situation 2."""
    with mpmath.workdps(dps):
        S = 1 + sum(mpmath.mpf(2) ** (-d) for d in gaps)
        val = -mpmath.log(mpmath.sqrt(5) * S)
        if t is not None:
            phi = (1 + mpmath.sqrt(5)) / 2
            val += mpmath.log(1 + phi ** (-t))
        return val / mpmath.log(2)


def mp_dist(x):
    return abs(x - mpmath.nint(x))


def mp_epsilon(gaps: tuple[int, ...], t: int | None, q: int, M: int, dps: int = DPS):
    with mpmath.workdps(dps):
        return mp_dist(q * mp_mu(gaps, t, dps)) - M * mp_dist(q * mp_gamma(dps))


def mp_w(A_num: int, A_den: int, q: int, eps, base: str, dps: int = DPS) -> int:
    with mpmath.workdps(dps):
        B = mpmath.log(2) if base == "2" else mpmath.log((1 + mpmath.sqrt(5)) / 2)
        return int(mpmath.floor(mpmath.log(mpmath.mpf(A_num) / A_den * q / eps) / B))


def decimal_frac_log2_sum(gaps: tuple[int, ...], q: int, digits: int = 200) -> decimal.Decimal:
    """frac(q log2(1 + sum 2^-d)) with the decimal module."""
    ctx = decimal.Context(prec=digits)
    S = decimal.Decimal(1)
    for d in gaps:
        S = ctx.add(S, ctx.power(decimal.Decimal(2), -d))
    v = ctx.multiply(decimal.Decimal(q), ctx.divide(S.ln(ctx), decimal.Decimal(2).ln(ctx)))
    return ctx.subtract(v, v.to_integral_value(rounding=decimal.ROUND_FLOOR))


def fib_binet_float(n: int) -> float:
    phi = (1 + math.sqrt(5)) / 2
    return phi**n / math.sqrt(5)


def brute_v2(n: int) -> int:
    n = abs(n)
    k = 0
    while n % 2 == 0:
        n //= 2
        k += 1
    return k
