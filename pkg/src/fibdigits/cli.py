"""Command-line interface.

Exit codes: 0 proved or success, 1 certificate verification failed,
2 incomplete (sampled run, precision, reduction failure), 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INCOMPLETE = 2
EXIT_INTERNAL = 3


def _progress(quiet: bool):
    if quiet:
        return None
    return lambda msg: print(msg, file=sys.stderr, flush=True)


def cmd_search(args) -> int:
    from .search import enumerate_solutions, format_table, solutions_csv

    sols = enumerate_solutions(args.n_max)
    print(format_table(sols))
    print(f"# {len(sols)} solutions with n <= {args.n_max}", end="")
    if sols:
        print(f"; max n = {max(s.n for s in sols)}, max a1 = {max(s.a1 for s in sols)}")
    else:
        print()
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(solutions_csv(sols))
    return EXIT_OK


def cmd_bounds(args) -> int:
    from .bounds import large_bound_report

    rep = large_bound_report()
    if args.json:
        print(json.dumps({"checks": [c.as_dict() for c in rep.checks], "M": str(rep.M), "n_fixed_point": str(rep.n_fixed_point)}, indent=2))
        return EXIT_OK
    for c in rep.checks:
        status = "ok" if c.ok else ("above target" if not c.below_target else "below 99% of target")
        print(f"{c.name:22s} {float(c.computed):.6e}  target {float(c.target):.4e}  {status}")
    print(f"{'n fixed point':22s} {rep.n_fixed_point:.6e}")
    print(f"{'M':22s} {rep.M:.3e}")
    return EXIT_OK


def cmd_reduce(args) -> int:
    from .bounds import large_bound_report
    from .numkernel import gamma_convergents
    from .reduce.tasks import ReductionFailed
    from .reduce.tree import EXPECTED_BOUNDS, run_case_tree

    cfg = _config(args)
    M = large_bound_report().M
    cf = gamma_convergents(200, cfg.real_prec)
    stride = args.stride
    try:
        results = run_case_tree(M, cf, cfg.workers, stride, nodes=args.node, checkpoint=args.checkpoint, progress=_progress(args.quiet), budget=cfg.budget)
    except ReductionFailed as exc:
        print(f"reduction failed: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    out = open(args.out, "w") if args.out else None
    for res in results:
        pub = EXPECTED_BOUNDS[res.node]
        cells = ", ".join(f"{k} <= {v} (expected {pub.get(k)})" for k, v in sorted(res.bounds.items()))
        special = "; ".join(f"t={s['t']} gaps={tuple(s['gaps'])} r={s['r']} s={s['s']}" for s in res.special_cases)
        print(f"{res.node} [{res.mode}, {res.rows} tuples, q index {res.q_indices[0] if res.q_indices else '-'}..]: {cells}")
        if special:
            print(f"    special cases: {special}")
        if out:
            out.write(json.dumps(res.as_dict(), sort_keys=True) + "\n")
    if out:
        out.close()
    return EXIT_OK


def cmd_padic(args) -> int:
    from .bounds import large_bound_report
    from .qp2 import PadicPrecisionError, first_r, log_beta_over_alpha, pdw_reduce

    cfg = _config(args)
    M = large_bound_report().M
    t_max = args.t_max
    try:
        rs = [pdw_reduce(t, M, cfg.padic_digits) for t in range(args.t_min, t_max + 1)]
    except PadicPrecisionError as exc:
        print(f"INCOMPLETE: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    worst = max(rs, key=lambda p: (p.R, -p.t))
    print(f"v2(log(beta/alpha)) = {log_beta_over_alpha(cfg.padic_digits).v}")
    print(f"r = {first_r(M)} (2^r > M = {M:.3e})")
    if args.verbose:
        for p in rs:
            print(f"t={p.t} R={p.R}")
    print(f"R_max = {worst.R} at n - m = {worst.t}; a5 <= {worst.a5_bound}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    from .pipeline import run_pipeline, write_outputs

    cfg = _config(args)
    result = run_pipeline(cfg, progress=_progress(args.quiet))
    paths = write_outputs(result, cfg.out_dir, cfg.figures)
    with open(paths["summary_txt"]) as fh:
        print(fh.read(), end="")
    for name, path in sorted(paths.items()):
        print(f"wrote {name}: {path}")
    return result.exit_code


def cmd_verify(args) -> int:
    from .certificate import FAIL, INCOMPLETE, verify_certificate

    try:
        res = verify_certificate(args.certificate)
    except (OSError, ValueError, KeyError) as exc:
        print(f"FAIL: malformed certificate: {exc}")
        return EXIT_FAIL
    print(res.describe())
    if res.verdict == FAIL:
        return EXIT_FAIL
    if res.verdict == INCOMPLETE:
        return EXIT_INCOMPLETE
    return EXIT_OK


def _config(args):
    from .pipeline import PipelineConfig

    overrides = {}
    for key in ("n_cutoff", "real_prec", "padic_digits", "workers", "mode", "stride", "budget", "out_dir", "checkpoint"):
        overrides[key] = getattr(args, key, None)
    if getattr(args, "no_figures", False):
        overrides["figures"] = False
    return PipelineConfig.load(args.config, **overrides)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fibdigits", description="Prover for F_n + F_m with five binary digits.")
    p.add_argument("--config", help="JSON config file; command-line flags override it")
    p.add_argument("--quiet", action="store_true", help="suppress progress on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("search", help="exhaustive search for solutions with n <= N")
    s.add_argument("--n-max", type=int, default=1000)
    s.add_argument("--csv", help="also write the table as CSV")
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("bounds", help="large-bound constant chain")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("reduce", help="run case-tree nodes")
    s.add_argument("--node", action="append", help="node id (repeatable); default all nine")
    s.add_argument("--stride", type=int, help="sample every k-th tuple; default is the full sweep")
    s.add_argument("--workers", type=int)
    s.add_argument("--budget", type=int)
    s.add_argument("--real-prec", type=int)
    s.add_argument("--checkpoint", help="JSONL checkpoint to resume from and append to")
    s.add_argument("--out", help="write node records as JSONL")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("padic", help="2-adic reduction of a5")
    s.add_argument("--t-min", type=int, default=2)
    s.add_argument("--t-max", type=int, default=470)
    s.add_argument("--padic-digits", type=int)
    s.add_argument("--verbose", action="store_true", help="print R for every n - m")
    s.set_defaults(func=cmd_padic)

    s = sub.add_parser("pipeline", help="full proof run with certificate")
    s.add_argument("--mode", choices=("full", "sampled"))
    s.add_argument("--stride", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--budget", type=int)
    s.add_argument("--n-cutoff", type=int)
    s.add_argument("--real-prec", type=int)
    s.add_argument("--padic-digits", type=int)
    s.add_argument("--out-dir")
    s.add_argument("--checkpoint")
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("verify", help="re-check a certificate")
    s.add_argument("certificate")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception:  # surfaced as exit code 3
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
