"""Proof certificate: line-delimited records plus a summary document, and its verifier.

Reals are stored as dyadic balls with hex midpoint and radius so a replay is bit
exact.  The verifier re-derives every cheap implication (solution table, large
bound chain, node bounds from recorded epsilons, degenerate witnesses, 2-adic
digit indices, ledger monotonicity, final contradiction) without rerunning sweeps.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Iterable

from .numkernel import RBall

FORMAT_VERSION = 1
VOLATILE_KEYS = ("created", "timings")

PROVED = "PROVED"
INCOMPLETE = "INCOMPLETE"
FAIL = "FAIL"


def ball_to_json(x: RBall) -> dict:
    return {"mid": hex(x.mid), "rad": hex(x.rad), "exp": x.exp}


def ball_from_json(d: dict, prec: int = 1024) -> RBall:
    return RBall(int(d["mid"], 16), int(d["rad"], 16), int(d["exp"]), prec)


def dumps(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


@dataclass
class Certificate:
    records: list[dict] = field(default_factory=list)

    def add(self, kind: str, **payload: Any) -> dict:
        rec = {"kind": kind, **payload}
        self.records.append(rec)
        return rec

    def first(self, kind: str) -> dict | None:
        return next((r for r in self.records if r["kind"] == kind), None)

    def all(self, kind: str) -> list[dict]:
        return [r for r in self.records if r["kind"] == kind]

    @property
    def verdict(self) -> str | None:
        v = self.first("verdict")
        return None if v is None else v["verdict"]

    def lines(self) -> list[str]:
        return [dumps(r) for r in self.records]

    def write(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            for line in self.lines():
                fh.write(line + "\n")

    @classmethod
    def read(cls, path: str | os.PathLike) -> "Certificate":
        recs = []
        with open(path) as fh:
            for i, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"malformed certificate line {i}: {exc}") from None
                if not isinstance(rec, dict) or "kind" not in rec:
                    raise ValueError(f"malformed certificate line {i}: record without kind")
                recs.append(rec)
        return cls(recs)

    def summary(self) -> dict:
        """Compact document with the verdict and headline bounds."""
        header = self.first("header") or {}
        final = self.first("final_contradiction") or {}
        padic = self.first("padic") or {}
        lb = self.first("large_bound") or {}
        sol = self.first("solutions") or {}
        verdict = self.first("verdict") or {}
        return {
            "format_version": FORMAT_VERSION,
            "created": header.get("created"),
            "timings": header.get("timings"),
            "config": header.get("config"),
            "verdict": verdict.get("verdict"),
            "reason": verdict.get("reason"),
            "solutions": sol.get("count"),
            "large_bound": lb.get("M"),
            "nodes": {r["node"]: r["bounds"] for r in self.all("node")},
            "maxima": final.get("maxima"),
            "r": padic.get("r"),
            "R_max": padic.get("R_max"),
            "a5": padic.get("a5_bound"),
            "a1": final.get("a1"),
            "n_bound": final.get("n_bound"),
            "comparison": final.get("comparison"),
        }


def strip_volatile(lines: Iterable[str]) -> list[str]:
    """Certificate lines with timestamps and timings removed (for determinism checks)."""
    out = []
    for line in lines:
        rec = json.loads(line)
        for k in VOLATILE_KEYS:
            rec.pop(k, None)
        out.append(dumps(rec))
    return out


# verification -------------------------------------------------------------


@dataclass
class VerifyResult:
    verdict: str
    failures: list[tuple[str, str]] = field(default_factory=list)
    reason: str | None = None

    @property
    def failed_at(self) -> str | None:
        return self.failures[0][0] if self.failures else None

    def describe(self) -> str:
        if self.verdict == FAIL:
            lines = [f"FAIL at {self.failed_at}"]
            lines += [f"  {rec}: {msg}" for rec, msg in self.failures]
            return "\n".join(lines)
        if self.verdict == INCOMPLETE:
            return f"INCOMPLETE ({self.reason})"
        return PROVED


def _check_solutions(cert: Certificate, cutoff: int) -> list[str]:
    from .search import SolutionTuple, enumerate_solutions, is_solution

    rec = cert.first("solutions")
    if rec is None:
        return ["missing solutions record"]
    errs = []
    rows = [tuple(r) for r in rec["rows"]]
    for r in rows:
        s = SolutionTuple(*r[:7])
        if not is_solution(s) or s.value != r[7]:
            errs.append(f"row {r} is not a solution")
    expected = [(*s.as_tuple(), s.value) for s in enumerate_solutions(cutoff)]
    if rows != expected:
        errs.append(f"table differs from exhaustive search up to n = {cutoff}")
    if rec.get("count") != len(rows):
        errs.append("count field disagrees with rows")
    return errs


def _check_large_bound(cert: Certificate) -> tuple[list[str], int | None]:
    from .bounds import large_bound_report

    rec = cert.first("large_bound")
    if rec is None:
        return ["missing large_bound record"], None
    rep = large_bound_report()
    errs = []
    M = int(rec["M"])
    if M != rep.M:
        errs.append(f"recorded M {M} differs from recomputed {rep.M}")
    if int(rec["n_fixed_point"]) > M:
        errs.append("fixed point exceeds M")
    C7 = ball_from_json(rec["C7"])
    if C7 != rep.C7:
        errs.append("C7 ball differs from recomputation")
    return errs, M


def _check_nodes(cert: Certificate, M: int | None) -> tuple[list[str], dict[str, dict[str, int]], str | None]:
    from .numkernel import gamma_convergents
    from .reduce.tasks import Situation, classify_degenerate, degenerate_catalog
    from .reduce.tree import EXPECTED_BOUNDS, NODE_ORDER, NodeSpec, SweepEnv, node_bounds, node_spec

    recs = {r["node"]: r for r in cert.all("node")}
    errs = []
    missing = [n for n in NODE_ORDER if n not in recs]
    if missing:
        errs.append(f"missing node(s) {', '.join(missing)}")
    if M is None:
        return errs + ["no large bound to check nodes against"], {}, None
    modes = {r["mode"] for r in recs.values()}
    if len(modes) > 1:
        errs.append(f"nodes mix modes {sorted(modes)}")
    mode = next(iter(modes)) if modes else None
    sampled = mode is not None and mode != "full"
    cf = gamma_convergents()
    bounds: dict[str, dict[str, int]] = {}
    known: dict[str, dict[str, int]] = dict(EXPECTED_BOUNDS) if sampled else {}
    for node in NODE_ORDER:
        r = recs.get(node)
        if r is None:
            continue
        try:
            expect = node_spec(node, known)
        except KeyError:
            expect = None
        spec = NodeSpec(node, tuple(r["inputs"]["gap_bounds"]), r["inputs"]["t_max"])
        if expect is not None and expect != spec:
            errs.append(f"node {node}: inputs {spec.as_dict()} do not follow from feeding nodes ({expect.as_dict()})")
        levels = {int(j): v for j, v in r["levels"].items()}
        env = SweepEnv(M, cf)
        allowed = set(env.levels)
        if not set(levels) <= allowed:
            errs.append(f"node {node}: convergent levels outside the attempt budget")
        swept_special = sum(1 for s in r["special_cases"] if s["source"] == "sweep")
        if sum(v[0] for v in levels.values()) + swept_special != r["rows"]:
            errs.append(f"node {node}: certified tuples do not cover the swept rows")
        for s in r["special_cases"]:
            if spec.situation is not Situation.S2:
                errs.append(f"node {node}: special case in Situation 1")
                continue
            task = spec.task(tuple(s["gaps"]), s["t"], M)
            if classify_degenerate(task) != (s["r"], s["s"]):
                errs.append(f"node {node}: degenerate witness for t={s['t']} gaps={s['gaps']} does not verify")
        if spec.situation is Situation.S2:
            cat = {(t, tuple(g)) for t, g in degenerate_catalog(spec.t_max, spec.gap_bounds)}
            got = {(s["t"], tuple(s["gaps"])) for s in r["special_cases"]}
            if cat != got:
                errs.append(f"node {node}: special cases {sorted(got)} differ from closed-form catalog {sorted(cat)}")
        try:
            recomputed = node_bounds(spec, env, levels, r["special_cases"])
        except ArithmeticError as exc:
            errs.append(f"node {node}: {exc}")
            continue
        if recomputed != r["bounds"]:
            errs.append(f"node {node}: recorded bounds {r['bounds']} differ from recomputed {recomputed}")
        bounds[node] = r["bounds"]
        if not sampled:
            known[node] = r["bounds"]
    return errs, bounds, mode


def _check_padic(cert: Certificate, M: int | None, nm_max: int | None) -> tuple[list[str], int | None]:
    from .qp2 import first_r, pdw_reduce

    rec = cert.first("padic")
    if rec is None:
        return ["missing padic record"], None
    errs = []
    if M is not None and rec["r"] != first_r(M):
        errs.append(f"r = {rec['r']} but 2^r > M first holds at {first_r(M)}")
    Rs = {int(t): R for t, R in rec["R"].items()}
    if nm_max is not None and set(Rs) != set(range(2, nm_max + 1)):
        errs.append(f"R table does not cover t in [2, {nm_max}]")
    if Rs and max(Rs.values()) != rec["R_max"]:
        errs.append("R_max is not the maximum of the table")
    if rec["a5_bound"] != rec["R_max"] + 3:
        errs.append("a5 bound is not R_max + 3")
    if M is not None:
        for t, R in sorted(Rs.items()):
            got = pdw_reduce(t, M, rec["prec"]).R
            if got != R:
                errs.append(f"t={t}: recorded R={R}, recomputed {got}")
                break
    return errs, rec["a5_bound"]


def _check_ledger(cert: Certificate) -> list[str]:
    from .bounds import BoundLedger, LedgerError, check_history_monotone

    rec = cert.first("ledger")
    if rec is None:
        return ["missing ledger record"]
    errs = check_history_monotone((q, int(b), s) for q, b, s in rec["ledger"]["history"])
    try:
        BoundLedger.from_json(rec["ledger"])
    except LedgerError as exc:
        errs.append(str(exc))
    return errs


def _check_final(cert: Certificate, cutoff: int, a5: int | None, maxima: dict[str, int]) -> list[str]:
    from .bounds import final_contradiction

    rec = cert.first("final_contradiction")
    if rec is None:
        return ["missing final_contradiction record"]
    errs = []
    if a5 is not None and rec["a5"] != a5:
        errs.append(f"a5 = {rec['a5']} does not match the 2-adic bound {a5}")
    if maxima and rec["a1_minus_a5"] != maxima.get("a1-a5"):
        errs.append(f"a1 - a5 = {rec['a1_minus_a5']} does not match the case tree maximum {maxima.get('a1-a5')}")
    a1, n_bound = final_contradiction(rec["a5"], rec["a1_minus_a5"])
    if (a1, n_bound) != (rec["a1"], rec["n_bound"]):
        errs.append(f"recorded (a1, n) = ({rec['a1']}, {rec['n_bound']}), recomputed ({a1}, {n_bound})")
    if n_bound >= cutoff:
        errs.append(f"a1 <= {a1} gives n <= {n_bound}, not below the cutoff {cutoff}")
    return errs


def verify_certificate(path: str | os.PathLike) -> VerifyResult:
    cert = Certificate.read(path)
    return verify(cert)


def verify(cert: Certificate) -> VerifyResult:
    from .reduce.tree import merge_maxima

    failures: list[tuple[str, str]] = []
    header = cert.first("header")
    if header is None or header.get("format_version") != FORMAT_VERSION:
        return VerifyResult(FAIL, [("header", "missing header or unknown format version")])
    cutoff = int(header["config"]["n_cutoff"])
    if cutoff < 1000:
        failures.append(("header", f"cutoff {cutoff} below 1000 does not close the proof"))
    failures += [("solutions", e) for e in _check_solutions(cert, cutoff)]
    errs, M = _check_large_bound(cert)
    failures += [("large_bound", e) for e in errs]
    errs, node_bounds, mode = _check_nodes(cert, M)
    failures += [("node", e) for e in errs]
    maxima = merge_maxima(*node_bounds.values())
    nm_max = maxima.get("n-m")
    errs, a5 = _check_padic(cert, M, nm_max)
    failures += [("padic", e) for e in errs]
    failures += [("ledger", e) for e in _check_ledger(cert)]
    failures += [("final_contradiction", e) for e in _check_final(cert, cutoff, a5, maxima)]
    if failures:
        return VerifyResult(FAIL, failures)
    rec = cert.first("verdict")
    if mode != "full":
        return VerifyResult(INCOMPLETE, reason="sampled")
    if rec is not None and rec["verdict"] == INCOMPLETE:
        return VerifyResult(INCOMPLETE, reason=rec.get("reason"))
    return VerifyResult(PROVED)
