"""Case-tree driver: the nine reduction nodes, swept with the vectorized engine.

Node 1.j (Situation 1) has j fixed gaps and bounds both a1 - a_{j+2} (base 2) and
n - m (base alpha) from the same epsilon.  Node 2.j (Situation 2) fixes n - m = t
and j - 1 gaps and bounds a1 - a_{j+1}.  Input bounds of a node are the maxima of
the outputs of every node that can feed it.

Work is split into chunks (a range of first gaps for Situation 1, a block of t
values for Situation 2).  Each chunk yields, per convergent level, the number of
certified tuples and the smallest epsilon lower bound.  Chunk records are pure
data, so merging is order independent and checkpoints can be replayed.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np

from ..numkernel import ConvergentTable, RBall
from .sweep import QContext, UNIT_BITS, certify, circle_dist, count_gaps, enumerate_gaps, frac_log2_sum
from .tasks import (
    A_S1,
    A_S2,
    ATTEMPT_BUDGET,
    ENVELOPE,
    ReductionFailed,
    ReductionTask,
    Situation,
    bd_reduce,
    classify_degenerate,
    degenerate_catalog,
    degenerate_bound,
    degenerate_witness,
    first_q_index,
    w_bound,
)

NODE_ORDER = ("1.0", "1.1", "2.1", "1.2", "2.2", "1.3", "2.3", "1.4", "2.4")

# Published node bounds; sampled mode feeds these forward so that a sample is a
# subset of the full run's tuples.
EXPECTED_BOUNDS: dict[str, dict[str, int]] = {
    "1.0": {"a1-a2": 293, "n-m": 423},
    "1.1": {"a1-a3": 302, "n-m": 435},
    "1.2": {"a1-a4": 308, "n-m": 444},
    "1.3": {"a1-a5": 317, "n-m": 457},
    "1.4": {"n-m": 470},
    "2.1": {"a1-a2": 300},
    "2.2": {"a1-a3": 308},
    "2.3": {"a1-a4": 315},
    "2.4": {"a1-a5": 321},
}

EXPECTED_SPECIAL: dict[str, list[tuple[int, tuple[int, ...]]]] = {
    "2.1": [(2, ()), (6, ())],
    "2.2": [(10, (2,)), (18, (4,))],
    "2.3": [(14, (1, 3))],
    "2.4": [(22, (2, 3, 6)), (30, (3, 4, 8))],
}

CHUNK_ROWS = 1 << 22  # target rows per Situation 1 chunk
T_BLOCK = 32  # t values per Situation 2 chunk
# c_sqrt5 and x_t are each within 2 units of their true value
CONST_ERR = 4
DEFAULT_STRIDE = 97


def merge_maxima(*maps: dict[str, int]) -> dict[str, int]:
    out: dict[str, int] = {}
    for m in maps:
        for k, v in m.items():
            out[k] = max(out.get(k, v), v)
    return out


@dataclass(frozen=True)
class NodeSpec:
    node: str
    gap_bounds: tuple[int, ...]
    t_max: int | None = None

    @property
    def situation(self) -> Situation:
        return Situation.S1 if self.node.startswith("1.") else Situation.S2

    @property
    def depth(self) -> int:
        return int(self.node.split(".")[1])

    def task(self, gaps: tuple[int, ...], t: int | None, M: int) -> ReductionTask:
        return ReductionTask(self.situation, tuple(gaps), t, M)

    def log_bases(self, M: int) -> dict[str, RBall]:
        if self.situation is Situation.S1:
            return self.task(tuple(range(1, self.depth + 1)), None, M).log_bases()
        return self.task(tuple(range(1, self.depth)), 2, M).log_bases()

    def as_dict(self) -> dict:
        return {"node": self.node, "gap_bounds": list(self.gap_bounds), "t_max": self.t_max}


def node_spec(node: str, results: dict[str, dict[str, int]]) -> NodeSpec:
    """Input bounds of a node from the bounds produced so far."""
    side, j = node.split(".")
    j = int(j)
    if side == "1":
        return NodeSpec(node, tuple(results[f"1.{i}"][f"a1-a{i + 2}"] for i in range(j)))
    t_max = max(results[f"1.{i}"]["n-m"] for i in range(j))
    gaps = tuple(max(results[f"1.{i}"][f"a1-a{i + 2}"], results[f"2.{i + 1}"][f"a1-a{i + 2}"]) for i in range(j - 1))
    return NodeSpec(node, gaps, t_max)


@dataclass(frozen=True)
class Chunk:
    index: int
    lo: int  # first gap range (S1) or t range (S2), inclusive
    hi: int
    offset: int  # global flattened index of the chunk's first tuple

    def key(self) -> str:
        return f"{self.lo}-{self.hi}"


def plan_chunks(spec: NodeSpec) -> list[Chunk]:
    if spec.situation is Situation.S2:
        nD = count_gaps(spec.gap_bounds)
        out = []
        for i, lo in enumerate(range(2, spec.t_max + 1, T_BLOCK)):
            hi = min(lo + T_BLOCK - 1, spec.t_max)
            out.append(Chunk(i, lo, hi, (lo - 2) * nD))
        return out
    if not spec.gap_bounds:
        return [Chunk(0, 0, 0, 0)]
    out = []
    lo, rows, offset = 1, 0, 0
    for d in range(1, spec.gap_bounds[0] + 1):
        rows += count_gaps(spec.gap_bounds, first=d)
        if rows >= CHUNK_ROWS or d == spec.gap_bounds[0]:
            out.append(Chunk(len(out), lo, d, offset))
            offset += rows
            lo, rows = d + 1, 0
    return out


@dataclass
class SweepEnv:
    """Immutable inputs shared by every chunk."""

    M: int
    cf: ConvergentTable
    stride: int | None = None
    budget: int = ATTEMPT_BUDGET

    @property
    def levels(self) -> range:
        j0 = first_q_index(self.cf, self.M)
        return range(j0, min(j0 + self.budget, self.cf.certified_count))


_CTX: dict[tuple[int, int], QContext] = {}
_YCACHE: dict[tuple, tuple[np.ndarray, int]] = {}
_GCACHE: dict[tuple, np.ndarray] = {}


def qcontext(env: SweepEnv, j: int) -> QContext:
    key = (j, env.M)
    if key not in _CTX:
        _CTX[key] = QContext(j, env.cf.q[j], env.M)
    return _CTX[key]


def clear_caches() -> None:
    _CTX.clear()
    _YCACHE.clear()
    _GCACHE.clear()


@dataclass
class ChunkResult:
    node: str
    chunk: str
    rows: int
    levels: dict[int, list[int | None]]  # j -> [certified, eps_min_units]
    special: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "kind": "chunk",
            "node": self.node,
            "chunk": self.chunk,
            "rows": self.rows,
            "levels": {str(j): v for j, v in sorted(self.levels.items())},
            "special": self.special,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChunkResult":
        return cls(d["node"], d["chunk"], d["rows"], {int(j): list(v) for j, v in d["levels"].items()}, list(d["special"]))


def _absorb(levels: dict[int, list[int | None]], j: int, certified: int, eps: int | None) -> None:
    cur = levels.setdefault(j, [0, None])
    cur[0] += certified
    if eps is not None and (cur[1] is None or eps < cur[1]):
        cur[1] = eps


def reduce_loop(
    n: int,
    z_of: Callable[[int, np.ndarray | None], tuple[np.ndarray, int]],
    env: SweepEnv,
    levels: dict[int, list[int | None]],
    row_level: np.ndarray | None = None,
    row_eps: np.ndarray | None = None,
) -> np.ndarray:
    """Try convergent levels in order on the rows still uncertified; returns the leftovers.

    z_of(j, idx) gives Z = q mu mod 1 in units for rows idx (None: all rows) and its error.
    """
    pending: np.ndarray | None = None
    for j in env.levels:
        ctx = qcontext(env, j)
        Z, err = z_of(j, pending)
        dist = circle_dist(Z)
        ok, eps = certify(dist, err, ctx.threshold)
        _absorb(levels, j, int(ok.sum()), eps)
        if row_level is not None:
            rows = np.flatnonzero(ok) if pending is None else pending[ok]
            row_level[rows] = j
            row_eps[rows] = dist[ok] - np.uint64(err + ctx.threshold)
        pending = np.flatnonzero(~ok) if pending is None else pending[~ok]
        if pending.size == 0:
            break
    if pending is None:
        pending = np.arange(n)
    return pending


def _s1_rows(spec: NodeSpec, chunk: Chunk) -> np.ndarray:
    if not spec.gap_bounds:
        return np.zeros((1, 0), dtype=np.int32)
    return enumerate_gaps(spec.gap_bounds, first=(chunk.lo, chunk.hi))


def _s1_z(env: SweepEnv, G: np.ndarray):
    def z_of(j: int, idx: np.ndarray | None):
        ctx = qcontext(env, j)
        Y, err = frac_log2_sum(ctx, G if idx is None else G[idx])
        return np.uint64(ctx.c_sqrt5) - Y, err + CONST_ERR

    return z_of


def _gap_table(spec: NodeSpec) -> np.ndarray:
    key = spec.gap_bounds
    if key not in _GCACHE:
        _GCACHE[key] = enumerate_gaps(spec.gap_bounds)
    return _GCACHE[key]


def _gap_logs(spec: NodeSpec, env: SweepEnv, j: int) -> tuple[np.ndarray, int]:
    key = (spec.gap_bounds, j, env.M)
    if key not in _YCACHE:
        _YCACHE[key] = frac_log2_sum(qcontext(env, j), _gap_table(spec))
    return _YCACHE[key]


def _s2_z(spec: NodeSpec, env: SweepEnv, t: int, sel: np.ndarray | None):
    def z_of(j: int, idx: np.ndarray | None):
        ctx = qcontext(env, j)
        Y, err = _gap_logs(spec, env, j)
        rows = sel if idx is None else (idx if sel is None else sel[idx])
        Yr = Y if rows is None else Y[rows]
        base = np.uint64((ctx.c_sqrt5 + ctx.x_t(t)) & ((1 << UNIT_BITS) - 1))
        return base - Yr, err + CONST_ERR

    return z_of


def _sample(offset: int, n: int, stride: int | None) -> np.ndarray | None:
    if stride is None:
        return None
    start = (-offset) % stride
    return np.arange(start, n, stride)


def _degenerate_record(spec: NodeSpec, env: SweepEnv, t: int, gaps: tuple[int, ...], source: str = "sweep") -> dict:
    task = spec.task(gaps, t, env.M)
    wit = degenerate_witness(t, gaps)
    if wit is None:
        raise ReductionFailed(f"node {spec.node}: no certified epsilon and not degenerate: t={t} gaps={gaps}", task)
    if classify_degenerate(task) != wit:
        raise ReductionFailed(f"node {spec.node}: degeneracy witnesses disagree at t={t} gaps={gaps}", task)
    bound = max(ENVELOPE, degenerate_bound(wit[0], wit[1], env.M, env.cf))
    return {"t": t, "gaps": list(gaps), "r": wit[0], "s": wit[1], "bound": bound, "source": source}


def run_chunk(spec: NodeSpec, chunk: Chunk, env: SweepEnv) -> ChunkResult:
    levels: dict[int, list[int | None]] = {}
    special: list[dict] = []
    rows = 0
    if spec.situation is Situation.S1:
        G = _s1_rows(spec, chunk)
        sel = _sample(chunk.offset, len(G), env.stride)
        if sel is not None:
            G = G[sel]
        rows = len(G)
        if rows:
            left = reduce_loop(rows, _s1_z(env, G), env, levels)
            if left.size:
                gaps = tuple(int(x) for x in G[left[0]])
                raise ReductionFailed(f"node {spec.node}: no certified epsilon for gaps={gaps}", spec.task(gaps, None, env.M))
    else:
        D = _gap_table(spec)
        nD = len(D)
        for t in range(chunk.lo, chunk.hi + 1):
            sel = _sample((t - 2) * nD, nD, env.stride)
            n = nD if sel is None else len(sel)
            rows += n
            if n == 0:
                continue
            left = reduce_loop(n, _s2_z(spec, env, t, sel), env, levels)
            for i in left:
                d = int(i) if sel is None else int(sel[i])
                special.append(_degenerate_record(spec, env, t, tuple(int(x) for x in D[d])))
    return ChunkResult(spec.node, chunk.key(), rows, levels, special)


def _run_chunk_star(args):
    return run_chunk(*args)


@dataclass
class CaseTreeResult:
    node: str
    spec: NodeSpec
    bounds: dict[str, int]
    special_cases: list[dict]
    levels: dict[int, list[int | None]]
    rows: int
    mode: str

    @property
    def q_indices(self) -> list[int]:
        return sorted(j for j, v in self.levels.items() if v[0])

    def as_dict(self) -> dict:
        return {
            "kind": "node",
            "node": self.node,
            "mode": self.mode,
            "inputs": self.spec.as_dict(),
            "rows": self.rows,
            "bounds": dict(sorted(self.bounds.items())),
            "levels": {str(j): v for j, v in sorted(self.levels.items())},
            "special_cases": self.special_cases,
        }


def node_bounds(spec: NodeSpec, env: SweepEnv, levels: dict[int, list[int | None]], special: list[dict]) -> dict[str, int]:
    """Max over levels of floor(log(A q / eps_min) / log B), plus degenerate envelopes."""
    A = A_S1 if spec.situation is Situation.S1 else A_S2
    out: dict[str, int] = {}
    for name, logB in spec.log_bases(env.M).items():
        best = 0
        for j, (count, eps) in levels.items():
            if count and eps is not None:
                if eps <= 0:
                    raise ReductionFailed(f"node {spec.node}: non-positive epsilon at level {j}")
                best = max(best, w_bound(A, env.cf.q[j], Fraction(eps, 1 << UNIT_BITS), logB))
        for rec in special:
            best = max(best, rec["bound"])
        out[name] = best
    return out


def merge_chunks(spec: NodeSpec, env: SweepEnv, chunks: Iterable[ChunkResult], mode: str) -> CaseTreeResult:
    levels: dict[int, list[int | None]] = {}
    special: list[dict] = []
    rows = 0
    for c in chunks:
        rows += c.rows
        for j, (cnt, eps) in c.levels.items():
            _absorb(levels, j, cnt, eps)
        special.extend(c.special)
    special.sort(key=lambda r: (r["t"], r["gaps"]))
    return CaseTreeResult(spec.node, spec, node_bounds(spec, env, levels, special), special, levels, rows, mode)


class Checkpoint:
    """Append-only JSONL of chunk records, keyed by node, inputs, mode and chunk range."""

    def __init__(self, path: str | os.PathLike | None):
        self.path = path
        self.done: dict[tuple, ChunkResult] = {}
        if path and os.path.exists(path):
            with open(path) as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    if rec.get("kind") == "chunk":
                        self.done[self._key(rec["ctx"], rec["node"], rec["chunk"])] = ChunkResult.from_dict(rec)

    @staticmethod
    def _key(ctx: str, node: str, chunk: str) -> tuple:
        return (ctx, node, chunk)

    def get(self, ctx: str, node: str, chunk: str) -> ChunkResult | None:
        return self.done.get(self._key(ctx, node, chunk))

    def put(self, ctx: str, res: ChunkResult) -> None:
        self.done[self._key(ctx, res.node, res.chunk)] = res
        if self.path:
            rec = res.as_dict()
            rec["ctx"] = ctx
            with open(self.path, "a") as fh:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _ctx_tag(spec: NodeSpec, env: SweepEnv) -> str:
    return json.dumps([spec.as_dict(), str(env.M), env.stride, env.budget], sort_keys=True)


def run_node(
    spec: NodeSpec,
    env: SweepEnv,
    workers: int = 1,
    checkpoint: Checkpoint | None = None,
    progress: Callable[[str], None] | None = None,
    max_chunks: int | None = None,
) -> CaseTreeResult:
    """Sweep one node.  max_chunks stops early (for interruption tests) by raising KeyboardInterrupt."""
    mode = "full" if env.stride is None else f"sampled({env.stride})"
    tag = _ctx_tag(spec, env)
    chunks = plan_chunks(spec)
    results: dict[int, ChunkResult] = {}
    todo = []
    for c in chunks:
        got = checkpoint.get(tag, spec.node, c.key()) if checkpoint else None
        if got is not None:
            results[c.index] = got
        else:
            todo.append(c)
    if max_chunks is not None and len(todo) > max_chunks:
        todo = todo[:max_chunks]
        interrupted = True
    else:
        interrupted = False

    def _done(c: Chunk, r: ChunkResult) -> None:
        results[c.index] = r
        if checkpoint:
            checkpoint.put(tag, r)
        if progress:
            progress(f"node {spec.node} chunk {c.key()} rows={r.rows}")

    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for c, r in zip(todo, pool.map(_run_chunk_star, [(spec, c, env) for c in todo])):
                _done(c, r)
    else:
        for c in todo:
            _done(c, run_chunk(spec, c, env))
    if interrupted:
        raise KeyboardInterrupt(f"stopped after {max_chunks} chunks of node {spec.node}")
    merged = list(results[c.index] for c in chunks)
    if spec.situation is Situation.S2:
        merged.append(_catalog_chunk(spec, env, merged))
    return merge_chunks(spec, env, merged, mode)


def _catalog_chunk(spec: NodeSpec, env: SweepEnv, chunks: list[ChunkResult]) -> ChunkResult:
    """Reconcile sweep degeneracies with the closed-form catalog.

    Full mode: the two sets must coincide.  Sampled mode: catalog tuples the sample
    skipped are pushed through the slow path, which must report them degenerate.
    """
    found = {(r["t"], tuple(r["gaps"])) for c in chunks for r in c.special}
    catalog = degenerate_catalog(spec.t_max, spec.gap_bounds)
    extra: list[dict] = []
    if env.stride is None:
        if found != set(catalog):
            raise ReductionFailed(f"node {spec.node}: degenerate tuples {sorted(found)} differ from catalog {catalog}")
    else:
        for t, gaps in catalog:
            if (t, gaps) in found:
                continue
            res = bd_reduce(spec.task(gaps, t, env.M), env.cf, env.budget)
            if not res.degenerate:
                raise ReductionFailed(f"node {spec.node}: catalog tuple t={t} gaps={gaps} reduced normally")
            extra.append(_degenerate_record(spec, env, t, gaps, "catalog"))
    return ChunkResult(spec.node, "catalog", 0, {}, extra)


def run_case_tree(
    M: int,
    cf: ConvergentTable,
    workers: int = 1,
    stride: int | None = None,
    nodes: Iterable[str] | None = None,
    checkpoint: str | os.PathLike | None = None,
    progress: Callable[[str], None] | None = None,
    budget: int = ATTEMPT_BUDGET,
) -> list[CaseTreeResult]:
    """Run the nodes in dependency order.

    Full mode feeds each node's computed bounds forward.  Sampled mode (stride set)
    feeds the expected bounds forward so every node sees the full-run parameter set.
    Selecting a subset of nodes also uses expected bounds for the skipped feeders.
    """
    env = SweepEnv(M, cf, stride, budget)
    wanted = set(NODE_ORDER if nodes is None else nodes)
    unknown = wanted - set(NODE_ORDER)
    if unknown:
        raise ValueError(f"unknown node ids: {sorted(unknown)}")
    ck = Checkpoint(checkpoint)
    known: dict[str, dict[str, int]] = {} if stride is None else dict(EXPECTED_BOUNDS)
    out = []
    for node in NODE_ORDER:
        if node not in wanted:
            known.setdefault(node, EXPECTED_BOUNDS[node])
            continue
        spec = node_spec(node, known)
        res = run_node(spec, env, workers, ck, progress)
        out.append(res)
        if stride is None:
            known[node] = res.bounds
        if progress:
            progress(f"node {node} done: {res.bounds} special={len(res.special_cases)}")
    return out


def overall_maxima(results: Iterable[CaseTreeResult]) -> dict[str, int]:
    return merge_maxima(*(r.bounds for r in results))


def reduce_rows(spec: NodeSpec, env: SweepEnv, G: np.ndarray, t: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-row convergent index and epsilon lower bound (units) for explicit tuples.

    Rows must be lexicographically sorted.  Uncertified rows get level -1.
    """
    n = len(G)
    row_level = np.full(n, -1, dtype=np.int64)
    row_eps = np.zeros(n, dtype=np.uint64)
    levels: dict[int, list[int | None]] = {}
    if spec.situation is Situation.S1:
        z_of = _s1_z(env, G)
    else:

        def z_of(j: int, idx: np.ndarray | None):
            ctx = qcontext(env, j)
            Y, err = frac_log2_sum(ctx, G if idx is None else G[idx])
            base = np.uint64((ctx.c_sqrt5 + ctx.x_t(t)) & ((1 << UNIT_BITS) - 1))
            return base - Y, err + CONST_ERR

    reduce_loop(n, z_of, env, levels, row_level, row_eps)
    return row_level, row_eps
