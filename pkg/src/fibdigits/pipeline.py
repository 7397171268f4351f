"""End-to-end prover: search, large bound, case-tree reduction, 2-adic reduction, final contradiction."""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone
from typing import Callable

from .bounds import BoundLedger, LedgerError, final_contradiction, large_bound_report
from .certificate import INCOMPLETE, PROVED, Certificate, ball_to_json
from .numkernel import gamma_convergents
from .qp2 import PadicPrecisionError, first_r, guard_margin, log_beta_over_alpha, pdw_reduce
from .reduce.tasks import ATTEMPT_BUDGET
from .reduce.tree import DEFAULT_STRIDE, EXPECTED_BOUNDS, merge_maxima, overall_maxima, run_case_tree
from .search import enumerate_solutions, format_table, solutions_csv

EXPECTED_SOLUTIONS = 38
MODES = ("full", "sampled")


@dataclass
class PipelineConfig:
    n_cutoff: int = 1000
    real_prec: int = 1024
    padic_digits: int = 320
    workers: int = 1
    mode: str = "full"
    stride: int = DEFAULT_STRIDE
    budget: int = ATTEMPT_BUDGET
    out_dir: str = "fibdigits-out"
    checkpoint: str | None = None
    figures: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.stride < 1 or self.workers < 1 or self.budget < 1:
            raise ValueError("stride, workers and budget must be positive")

    @property
    def sweep_stride(self) -> int | None:
        return None if self.mode == "full" else self.stride

    def echo(self) -> dict:
        """Config fields that affect the mathematics (output locations are left out)."""
        d = asdict(self)
        for k in ("out_dir", "checkpoint", "figures", "workers"):
            d.pop(k)
        return d

    @classmethod
    def load(cls, path: str | os.PathLike | None = None, **overrides) -> "PipelineConfig":
        """JSON config file, then non-None overrides on top."""
        data: dict = {}
        if path:
            with open(path) as fh:
                data = json.load(fh)
            known = {f.name for f in fields(cls)}
            unknown = set(data) - known
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


class StageError(Exception):
    def __init__(self, stage: str, reason: str, detail: str):
        super().__init__(f"{stage}: {reason} ({detail})")
        self.stage = stage
        self.reason = reason
        self.detail = detail


@dataclass
class PipelineResult:
    certificate: Certificate
    verdict: str
    reason: str | None
    solutions: list

    @property
    def exit_code(self) -> int:
        return 0 if self.verdict == PROVED else 2


def _stage_search(cfg: PipelineConfig, cert: Certificate):
    sols = enumerate_solutions(cfg.n_cutoff)
    cert.add("solutions", count=len(sols), n_max=cfg.n_cutoff, rows=[[*s.as_tuple(), s.value] for s in sols])
    if len(sols) != EXPECTED_SOLUTIONS:
        raise StageError("search", "solution count", f"found {len(sols)} solutions, expected {EXPECTED_SOLUTIONS}")
    return sols


def _stage_large_bound(cert: Certificate, ledger: BoundLedger) -> int:
    rep = large_bound_report()
    cert.add(
        "large_bound",
        C1=ball_to_json(rep.C1),
        C2p=ball_to_json(rep.C2p),
        C=f"{rep.C.numerator}/{rep.C.denominator}",
        K5=ball_to_json(rep.K5),
        bugeaud_lead=ball_to_json(rep.bugeaud_lead),
        bugeaud_coeff=ball_to_json(rep.bugeaud_coeff),
        a5_raw=ball_to_json(rep.a5_raw),
        a5_coeff=rep.a5_coeff,
        C7=ball_to_json(rep.C7),
        n_fixed_point=str(rep.n_fixed_point),
        M=str(rep.M),
        checks=[c.as_dict() for c in rep.checks],
    )
    ledger.tighten("n", rep.M, "large_bound")
    return rep.M


def _stage_case_tree(cfg: PipelineConfig, cert: Certificate, ledger: BoundLedger, M: int, progress) -> dict[str, int]:
    cf = gamma_convergents(200, cfg.real_prec)
    results = run_case_tree(M, cf, cfg.workers, cfg.sweep_stride, checkpoint=cfg.checkpoint, progress=progress, budget=cfg.budget)
    for res in results:
        rec = res.as_dict()
        rec["q"] = {str(j): str(cf.q[j]) for j in sorted(res.levels)}
        rec["expected"] = EXPECTED_BOUNDS[res.node]
        rec["matches_expected"] = res.bounds == EXPECTED_BOUNDS[res.node]
        cert.add(**rec)
    maxima = overall_maxima(results)
    for q in ("n-m", "a1-a2", "a1-a3", "a1-a4", "a1-a5"):
        ledger.tighten(q, maxima[q], "case_tree")
    return maxima


def _stage_padic(cfg: PipelineConfig, cert: Certificate, ledger: BoundLedger, M: int, t_max: int, t_min: int = 2) -> int:
    prec = cfg.padic_digits
    Rs = {}
    for t in range(t_min, t_max + 1):
        Rs[t] = pdw_reduce(t, M, prec).R
    R_max = max(Rs.values())
    t_at = min(t for t, R in Rs.items() if R == R_max)
    cert.add(
        "padic",
        prec=prec,
        margin=guard_margin(prec),
        r=first_r(M),
        t_range=[t_min, t_max],
        R={str(t): R for t, R in Rs.items()},
        R_max=R_max,
        t_at_max=t_at,
        a5_bound=R_max + 3,
        v2_log_ratio=log_beta_over_alpha(prec).v,
    )
    ledger.tighten("a5", R_max + 3, "padic")
    return R_max + 3


def _stage_final(cfg: PipelineConfig, cert: Certificate, ledger: BoundLedger, a5: int, maxima: dict[str, int]) -> tuple[int, int]:
    a1, n_bound = final_contradiction(a5, maxima["a1-a5"])
    ledger.tighten("a1", a1, "final_contradiction")
    ledger.tighten("n", n_bound, "final_contradiction")
    expected_max = merge_maxima(*EXPECTED_BOUNDS.values())
    cert.add(
        "final_contradiction",
        a5=a5,
        a1_minus_a5=maxima["a1-a5"],
        a1=a1,
        n_bound=n_bound,
        cutoff=cfg.n_cutoff,
        maxima=dict(sorted(maxima.items())),
        comparison={"maxima_expected": dict(sorted(expected_max.items())), "a1_expected": 616, "n_bound_expected": 891},
    )
    if n_bound >= cfg.n_cutoff:
        raise StageError("final_contradiction", "bound not below cutoff", f"n <= {n_bound} but cutoff is {cfg.n_cutoff}")
    return a1, n_bound


def run_pipeline(cfg: PipelineConfig, progress: Callable[[str], None] | None = None) -> PipelineResult:
    """Run all stages; stage failures become INCOMPLETE with the stage and cause recorded."""
    cert = Certificate()
    ledger = BoundLedger()
    timings: dict[str, float] = {}
    verdict, reason, failed_stage, detail = PROVED, None, None, None
    sols: list = []

    def timed(name, fn, *args):
        t0 = time.perf_counter()
        try:
            return fn(*args)
        finally:
            timings[name] = round(time.perf_counter() - t0, 3)
            if progress:
                progress(f"stage {name} finished in {timings[name]:.2f}s")

    try:
        sols = timed("search", _stage_search, cfg, cert)
        M = timed("large_bound", _stage_large_bound, cert, ledger)
        maxima = timed("case_tree", _stage_case_tree, cfg, cert, ledger, M, progress)
        try:
            a5 = timed("padic", _stage_padic, cfg, cert, ledger, M, maxima["n-m"])
        except PadicPrecisionError as exc:
            raise StageError("padic", "R not found / precision", str(exc)) from None
        timed("final_contradiction", _stage_final, cfg, cert, ledger, a5, maxima)
    except StageError as exc:
        verdict, reason, failed_stage, detail = INCOMPLETE, exc.reason, exc.stage, exc.detail
    except (ArithmeticError, LedgerError) as exc:
        stage = list(timings)[-1] if timings else "search"
        verdict, reason, failed_stage, detail = INCOMPLETE, type(exc).__name__, stage, str(exc)
    cert.add("ledger", ledger=ledger.to_json())
    if verdict == PROVED and cfg.mode != "full":
        verdict, reason = INCOMPLETE, "sampled"
    cert.add("verdict", verdict=verdict, reason=reason, stage=failed_stage, detail=detail, proof=verdict == PROVED)
    header = {
        "kind": "header",
        "format_version": 1,
        "config": cfg.echo(),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "timings": timings,
    }
    cert.records.insert(0, header)
    return PipelineResult(cert, verdict, reason, sols)


def render_summary(cert: Certificate) -> str:
    s = cert.summary()
    lines = [f"verdict: {s['verdict']}" + (f" ({s['reason']})" if s["reason"] else "")]
    if s["solutions"] is not None:
        lines.append(f"solutions with n <= {s['config']['n_cutoff']}: {s['solutions']}")
    if s["large_bound"]:
        lines.append(f"large bound: n < {int(s['large_bound']):.3e}")
    if s["nodes"]:
        lines.append("case tree (computed | expected):")
        for node, b in s["nodes"].items():
            pub = EXPECTED_BOUNDS[node]
            cells = ", ".join(f"{k} <= {v} | {pub.get(k)}" for k, v in sorted(b.items()))
            lines.append(f"  {node}: {cells}")
    if s["R_max"] is not None:
        lines.append(f"2-adic: r = {s['r']}, R_max = {s['R_max']}, a5 <= {s['a5']}")
    if s["n_bound"] is not None:
        lines.append(f"final: a1 <= {s['a1']}, n <= {s['n_bound']}")
    return "\n".join(lines) + "\n"


def write_outputs(result: PipelineResult, out_dir: str | os.PathLike, figures: bool = True) -> dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "certificate": os.path.join(out_dir, "certificate.jsonl"),
        "summary_json": os.path.join(out_dir, "summary.json"),
        "summary_txt": os.path.join(out_dir, "summary.txt"),
        "solutions_csv": os.path.join(out_dir, "solutions.csv"),
    }
    result.certificate.write(paths["certificate"])
    with open(paths["summary_json"], "w") as fh:
        json.dump(result.certificate.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(paths["summary_txt"], "w") as fh:
        fh.write(render_summary(result.certificate))
        if result.solutions:
            fh.write("\n" + format_table(result.solutions) + "\n")
    with open(paths["solutions_csv"], "w") as fh:
        fh.write(solutions_csv(result.solutions))
    if figures:
        from .plotting import render_figures

        paths.update(render_figures(result.certificate, out_dir))
    return paths
