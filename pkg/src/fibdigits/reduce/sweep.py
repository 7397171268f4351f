"""Vectorized certified evaluation of ||q mu|| over large families of gap tuples.

For a convergent q and a gap tuple D = (d2 < ... < dk) we need frac(q log2 S_D),
S_D = 1 + 2^-d2 + ... + 2^-dk, to 64 fractional bits with a proven error.  The
value is built column by column: appending a gap d to a prefix with partial sum
P = Pn / 2^e adds

    q log2(1 + x) = (q / ln 2) * sum_j (-1)^(j+1) x^j / j,   x = 2^(e-d) / Pn.

For each prefix the integers C_j = floor(Qfix 2^(je) / (j Pn^j)) with
Qfix = floor(q 2^FB / ln 2) are computed once; the contribution of term j to a
child with gap d is then the 64-bit window of C_j starting at bit FB - 64 + j d,
gathered for all children at once with numpy.

Error budget per column: each window is off by at most 1 + 2^-15 units, the
truncated tail by less than 1 unit, so ceil(1.02 J) + 2 units with J terms.
Units are 2^-64.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from ..numkernel import RBall, alpha_ball, ball_log, gamma_ball, log2_ball, nearest_int_dist, sqrt5_ball

FB = 80  # fractional bits carried by Qfix
UNIT_BITS = 64
PREC = 1536
MASK64 = (1 << 64) - 1


def frac_units(x: RBall) -> int:
    """floor(frac(x) * 2^64) for the ball center; off by < 2 units from any point of x."""
    if x.radius() * (1 << UNIT_BITS) >= Fraction(1, 2):
        raise ArithmeticError("ball too wide for 64-bit fraction")
    c = x.center()
    f = c - (c.numerator // c.denominator)
    return (f.numerator << UNIT_BITS) // f.denominator


@dataclass
class QContext:
    """Per-convergent constants shared by all tuples."""

    j: int
    q: int
    M: int

    @cached_property
    def qbits(self) -> int:
        return self.q.bit_length()

    @cached_property
    def Qfix(self) -> int:
        v = RBall.exact(self.q << FB, PREC) / log2_ball(PREC)
        if v.radius() >= Fraction(1, 4):
            raise ArithmeticError("Qfix not determined")
        c = v.center()
        return c.numerator // c.denominator

    @cached_property
    def words(self) -> int:
        # C_j <= Qfix; one extra zero word lets out-of-range windows read 0
        return (self.Qfix.bit_length() + 63) // 64 + 1

    @cached_property
    def threshold(self) -> int:
        """ceil(M ||q gamma|| 2^64), an upper bound in units."""
        d = nearest_int_dist(gamma_ball(PREC) * self.q) * self.M
        hi = d.upper() * (1 << UNIT_BITS)
        return -((-hi.numerator) // hi.denominator)

    @cached_property
    def c_sqrt5(self) -> int:
        """frac(-q log2 sqrt5) in units."""
        return frac_units(-(ball_log(sqrt5_ball(PREC), PREC) / log2_ball(PREC)) * self.q)

    def x_t(self, t: int) -> int:
        """frac(q log2(1 + alpha^-t)) in units."""
        v = ball_log(1 + alpha_ball(PREC) ** (-t), PREC) / log2_ball(PREC) * self.q
        return frac_units(v)

    def terms_needed(self, d_min: int) -> int:
        """Smallest J with (J + 1) d_min >= qbits + 66, making the tail < 1 unit."""
        need = self.qbits + 66
        return max(1, -(-need // d_min) - 1)


def _prefix_boundaries(G: np.ndarray, c: int) -> np.ndarray:
    """Start indices of runs of equal G[:, :c] (rows sorted lexicographically)."""
    n = G.shape[0]
    if c == 0 or n == 0:
        return np.zeros(1 if n else 0, dtype=np.int64)
    change = np.zeros(n, dtype=bool)
    change[0] = True
    change[1:] = np.any(G[1:, :c] != G[:-1, :c], axis=1)
    return np.flatnonzero(change)


def _coefficient_words(ctx: QContext, prefixes: np.ndarray, d_mins: np.ndarray):
    """Pack C_j for every prefix into one uint64 word array.

    Returns (words, offsets, J) with offsets[p] the word index of C_1 of prefix p.
    """
    nw = ctx.words
    nbytes = nw * 8
    Q = ctx.Qfix
    chunks: list[bytes] = []
    J = np.empty(len(prefixes), dtype=np.int64)
    for p in range(len(prefixes)):
        row = prefixes[p]
        if len(row):
            e = int(row[-1])
            Pn = (1 << e) + sum(1 << (e - int(d)) for d in row)
        else:
            e, Pn = 0, 1
        jn = ctx.terms_needed(int(d_mins[p]))
        J[p] = jn
        num = Q << e
        den = Pn
        for j in range(1, jn + 1):
            chunks.append((num // (j * den)).to_bytes(nbytes, "little"))
            num <<= e
            den *= Pn
    words = np.frombuffer(b"".join(chunks), dtype="<u8").astype(np.uint64)
    offsets = np.zeros(len(prefixes), dtype=np.int64)
    if len(prefixes) > 1:
        offsets[1:] = np.cumsum(J[:-1]) * nw
    return words, offsets, J


def _gather_window(words: np.ndarray, base: np.ndarray, bitoff: np.ndarray, nw: int) -> np.ndarray:
    w = bitoff >> 6
    b = (bitoff & 63).astype(np.uint64)
    top = nw - 1
    w0 = np.minimum(w, top)
    w1 = np.minimum(w + 1, top)
    lo = words[base + w0] >> b
    hi = (words[base + w1] << np.uint64(1)) << (np.uint64(63) - b)
    return lo | hi


def frac_log2_sum(ctx: QContext, G: np.ndarray) -> tuple[np.ndarray, int]:
    """Y[i] ~ frac(q log2 S_{G[i]}) * 2^64 for lexicographically sorted gap rows.

    Returns (Y, err) with |Y - exact| <= err units (mod 2^64) for every row.
    Shared prefixes are evaluated once, so only the last column touches every row.
    """
    n, cols = G.shape
    if cols == 0:
        return np.zeros(n, dtype=np.uint64), 0
    starts = _prefix_boundaries(G, cols - 1)
    counts = np.diff(np.append(starts, n))
    prefixes = G[starts, : cols - 1]
    Yp, err = frac_log2_sum(ctx, prefixes)
    row_prefix = np.repeat(np.arange(len(starts)), counts)
    Y = Yp[row_prefix]
    nw = ctx.words
    words, offsets, J = _coefficient_words(ctx, prefixes, G[starts, cols - 1])
    row_J = J[row_prefix]
    row_base = offsets[row_prefix]
    d = G[:, cols - 1].astype(np.int64)
    jmax = int(J.max())
    for j in range(1, jmax + 1):
        if j == 1:
            Y += _gather_window(words, row_base, FB - UNIT_BITS + d, nw)
            continue
        idx = np.flatnonzero(row_J >= j)
        if idx.size == 0:
            break
        win = _gather_window(words, row_base[idx] + (j - 1) * nw, FB - UNIT_BITS + j * d[idx], nw)
        if j % 2:
            Y[idx] += win
        else:
            Y[idx] -= win
    err += int(np.ceil(1.02 * jmax)) + 2
    return Y, err


def circle_dist(Z: np.ndarray) -> np.ndarray:
    return np.minimum(Z, np.uint64(0) - Z)


@dataclass
class LevelStats:
    """Outcome of one convergent on a batch of tuples."""

    j: int
    certified: int = 0
    eps_min_units: int | None = None

    def absorb(self, certified: int, eps_min: int | None) -> None:
        self.certified += certified
        if eps_min is not None and (self.eps_min_units is None or eps_min < self.eps_min_units):
            self.eps_min_units = eps_min


def certify(dist: np.ndarray, err: int, thr: int) -> tuple[np.ndarray, int | None]:
    """Mask of certified entries and their minimal epsilon lower bound (units)."""
    cut = err + thr
    if cut >= 1 << 63:
        return np.zeros(dist.shape, dtype=bool), None
    ok = dist > np.uint64(cut)
    if not ok.any():
        return ok, None
    return ok, int(dist[ok].min()) - cut


# enumeration --------------------------------------------------------------


def _first_range(bounds: tuple[int, ...], first: int | tuple[int, int] | None) -> tuple[int, int]:
    if first is None:
        return 1, bounds[0]
    if isinstance(first, tuple):
        return first[0], min(first[1], bounds[0])
    return first, min(first, bounds[0])


def enumerate_gaps(bounds: tuple[int, ...], first: int | tuple[int, int] | None = None) -> np.ndarray:
    """All strictly increasing tuples (d_1 < ... < d_L) with 1 <= d_i <= bounds[i], lexicographic.

    ``first`` pins d_1 to a value or an inclusive range (used to chunk large families).
    """
    L = len(bounds)
    if L == 0:
        return np.zeros((1, 0), dtype=np.int32)
    lo0, hi0 = _first_range(bounds, first)
    rows = np.arange(lo0, hi0 + 1, dtype=np.int32).reshape(-1, 1)
    for c in range(1, L):
        last = rows[:, -1]
        reps = np.maximum(bounds[c] - last, 0)
        parent = np.repeat(np.arange(len(rows)), reps)
        # child value = last + 1 + position within its parent block
        starts = np.cumsum(reps) - reps
        pos = np.arange(len(parent)) - np.repeat(starts, reps)
        child = (np.repeat(last, reps) + 1 + pos).astype(np.int32)
        rows = np.hstack([rows[parent], child.reshape(-1, 1)])
    return rows


def count_gaps(bounds: tuple[int, ...], first: int | tuple[int, int] | None = None) -> int:
    """Number of rows enumerate_gaps would produce, without building them."""
    L = len(bounds)
    if L == 0:
        return 1
    lo0, hi0 = _first_range(bounds, first)
    # ways[v] = number of completions for columns c.. given previous value v
    ways = {v: 1 for v in range(0, max(bounds) + 2)}
    for c in range(L - 1, 0, -1):
        new = {}
        acc = 0
        for v in range(max(bounds) + 1, -1, -1):
            new[v] = acc
            if v <= bounds[c] and v >= 1:
                acc += ways[v]
        # new[v] = sum_{w > v, w <= bounds[c]} ways[w]
        ways = new
    return sum(ways[v] for v in range(lo0, hi0 + 1))
