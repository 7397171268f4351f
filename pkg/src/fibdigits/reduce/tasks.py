"""Single-task Baker-Davenport reduction, degeneracy detection and the Legendre fallback.

This is the slow, per-task path used for small nodes, spot checks and for
tuples the vectorized sweep could not certify.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache

from ..numkernel import (
    ConvergentTable,
    RBall,
    ball_log,
    gamma_ball,
    log2_ball,
    log_alpha_ball,
    nearest_int_dist,
    sqrt5_ball,
    alpha_ball,
)
from ..search import fib
from ..zphi import ALPHA, SQRT5, ZPhi, zphi_pow

A_S1 = Fraction(2309, 100)
A_S2 = Fraction(722, 100)
ATTEMPT_BUDGET = 20
ENVELOPE = 293  # a1 - a_{k+1} <= 293 is the bound claimed for degenerate tuples
WORK_PREC = 1024


class Situation(Enum):
    S1 = 1
    S2 = 2


class ReductionFailed(ArithmeticError):
    def __init__(self, message: str, task: "ReductionTask | None" = None):
        super().__init__(message)
        self.task = task


@dataclass(frozen=True)
class ReductionTask:
    situation: Situation
    gaps: tuple[int, ...]  # a1-a2 < a1-a3 < ...
    t: int | None = None  # n - m, Situation 2 only
    M: int = 154 * 10**83

    def __post_init__(self):
        if list(self.gaps) != sorted(set(self.gaps)) or any(g < 1 for g in self.gaps):
            raise ValueError("gaps must be positive and strictly increasing")
        if self.situation is Situation.S2 and (self.t is None or self.t < 2):
            raise ValueError("Situation 2 needs n - m >= 2")

    @property
    def k(self) -> int:
        return len(self.gaps) + 1

    @property
    def A(self) -> Fraction:
        return A_S1 if self.situation is Situation.S1 else A_S2

    def log_bases(self) -> dict[str, RBall]:
        """Quantity bounded -> log B.  S1 gives one bound per branch of the dichotomy."""
        if self.situation is Situation.S1:
            out = {"n-m": log_alpha_ball(WORK_PREC)}
            if self.k <= 4:
                out[f"a1-a{self.k + 1}"] = log2_ball(WORK_PREC)
            return out
        return {f"a1-a{self.k + 1}": log2_ball(WORK_PREC)}


def gap_sum(gaps: tuple[int, ...]) -> tuple[int, int]:
    """S = 1 + sum 2^-d as (Sn, e) with S = Sn / 2^e, Sn odd when gaps exist."""
    if not gaps:
        return 1, 0
    e = gaps[-1]
    return (1 << e) + sum(1 << (e - d) for d in gaps), e


def mu_ball(task: ReductionTask, prec: int = WORK_PREC) -> RBall:
    Sn, e = gap_sum(task.gaps)
    S = RBall.exact(Fraction(Sn, 1 << e), prec)
    l2 = log2_ball(prec)
    val = -ball_log(sqrt5_ball(prec) * S, prec)
    if task.situation is Situation.S2:
        val = val + ball_log(1 + alpha_ball(prec) ** (-task.t), prec)
    return val / l2


@dataclass(frozen=True)
class BDResult:
    bounds: dict[str, int]  # quantity -> w
    q_index: int
    epsilon: RBall

    @property
    def degenerate(self) -> bool:
        return False


@dataclass(frozen=True)
class Degenerate:
    r: int
    s: int
    bound: int  # envelope contributed to the node

    @property
    def degenerate(self) -> bool:
        return True


def first_q_index(cf: ConvergentTable, M: int) -> int:
    return cf.first_index_above(6 * M)


def w_bound(A: Fraction, q: int, eps_lower: RBall | Fraction, logB: RBall, prec: int = WORK_PREC) -> int:
    """floor(log(A q / eps)/log B), rounded outward."""
    eps = eps_lower if isinstance(eps_lower, RBall) else RBall.exact(Fraction(eps_lower), prec)
    x = ball_log(RBall.exact(A * q, prec) / eps, prec) / logB
    return x.upper_floor()


def epsilon_ball(mu: RBall, q: int, M: int, prec: int = WORK_PREC) -> RBall:
    return nearest_int_dist(mu * q) - nearest_int_dist(gamma_ball(prec) * q) * M


def bd_reduce(task: ReductionTask, cf: ConvergentTable, budget: int = ATTEMPT_BUDGET, prec: int = WORK_PREC):
    """Baker-Davenport step for one mu: first convergent q > 6M with certified eps > 0."""
    mu = mu_ball(task, prec)
    j0 = first_q_index(cf, task.M)
    for j in range(j0, min(j0 + budget, cf.certified_count)):
        q = cf.q[j]
        eps = epsilon_ball(mu, q, task.M, prec)
        if eps.is_positive():
            bounds = {name: w_bound(task.A, q, RBall.exact(eps.lower(), prec), logB, prec) for name, logB in task.log_bases().items()}
            return BDResult(bounds, j, eps)
    if task.situation is Situation.S2:
        wit = classify_degenerate(task)
        if wit is not None:
            return Degenerate(wit[0], wit[1], max(ENVELOPE, degenerate_bound(wit[0], wit[1], task.M, cf, A_S2)))
    raise ReductionFailed(f"reduction failed for {task}; raise precision or budget", task)


# degeneracy ---------------------------------------------------------------


def classify_degenerate(task: ReductionTask, r_max: int = 9, s_max: int = 15) -> tuple[int, int] | None:
    """Exact scan: (1 + alpha^-t) / (sqrt5 S) == 2^r alpha^-s with 0<=r<=r_max, 1<=s<=s_max."""
    if task.situation is not Situation.S2:
        raise ValueError("degeneracy is only defined for Situation 2")
    Sn, e = gap_sum(task.gaps)
    t = task.t
    # 2^e (alpha^t + 1) alpha^s == 2^r alpha^t sqrt5 Sn
    lhs0 = (zphi_pow(ALPHA, t) + 1) * (1 << e)
    rhs0 = zphi_pow(ALPHA, t) * SQRT5 * Sn
    for s in range(1, s_max + 1):
        lhs = lhs0 * zphi_pow(ALPHA, s)
        for r in range(0, r_max + 1):
            if lhs == rhs0 * (1 << r):
                return r, s
    return None


def degenerate_witness(t: int, gaps: tuple[int, ...]) -> tuple[int, int] | None:
    """Closed-form test, valid for all t and gaps.

    Only t = 2u with u odd can work: then (alpha^t + 1)/sqrt5 = alpha^u F_u, so the
    condition is that the odd part of F_u equals Sn, giving r = v2(F_u) + e, s = u.
    """
    if t % 4 != 2:
        return None
    u = t // 2
    F = fib(u)
    v = (F & -F).bit_length() - 1
    Sn, e = gap_sum(gaps)
    if F >> v != Sn:
        return None
    return v + e, u


def degenerate_catalog(t_max: int, gap_bounds: tuple[int, ...]) -> list[tuple[int, tuple[int, ...]]]:
    """Every (t, gaps) with 2 <= t <= t_max, len(gaps) == len(gap_bounds), gaps within bounds, that is degenerate."""
    k = len(gap_bounds)
    out = []
    for t in range(2, t_max + 1):
        if t % 4 != 2:
            continue
        F = fib(t // 2)
        odd = F >> ((F & -F).bit_length() - 1)
        if odd.bit_count() != k + 1:
            continue
        e = odd.bit_length() - 1
        gaps = tuple(sorted(e - i for i in range(e) if odd >> i & 1))
        if k and (gaps[-1] != e or any(g > b for g, b in zip(gaps, gap_bounds))):
            continue
        if list(gaps) != sorted(set(gaps)):
            continue
        out.append((t, gaps))
    return out


def degenerate_bound(r: int, s: int, M: int, cf: ConvergentTable, A: Fraction = A_S2, envelope: int = ENVELOPE) -> int:
    """Legendre fallback: an oversized gap forces (a1-r)/(n-s) to be a convergent of index < j*.

    j* is the first index with q_j > M; returns floor(log2(A (q_{j*-1} + q_{j*}))), which
    must not exceed the envelope.
    """
    prec = WORK_PREC
    # a gap above the envelope gives |gamma - p/q| < 1/(2 q^2) once 2^(envelope+1) > 2 A (n - s)
    if not (Fraction(1 << (envelope + 1)) > 2 * A * M):
        raise ReductionFailed("envelope too small for the Legendre criterion")
    j = cf.first_index_above(M)
    if j + 1 > cf.certified_count:
        raise ReductionFailed("continued fraction not certified far enough")
    qsum = cf.q[j - 1] + cf.q[j]
    bound = (ball_log(RBall.exact(A * qsum, prec), prec) / log2_ball(prec)).upper_floor()
    if bound > envelope:
        raise ReductionFailed(f"Legendre bound {bound} exceeds envelope {envelope}")
    return bound


def legendre_bound_from(total: int, A: Fraction = A_S2) -> int:
    """floor(log(A * total)/log 2); total = q_j + q_{j+1} in the real use."""
    prec = WORK_PREC
    return (ball_log(RBall.exact(A * total, prec), prec) / log2_ball(prec)).upper_floor()


def early_exit_bounds() -> dict[str, int]:
    """Lambda < -1 gives min{(n-m) log alpha, gap log 2} < 2.55."""
    prec = WORK_PREC
    c = RBall.exact(Fraction(255, 100), prec)
    return {"n-m": (c / log_alpha_ball(prec)).upper_floor(), "gap": (c / log2_ball(prec)).upper_floor()}
