from __future__ import annotations

import json

import pytest

from fibdigits.cli import EXIT_FAIL, EXIT_INCOMPLETE, EXIT_INTERNAL, EXIT_OK, build_parser, main
from golden import SOLUTION_ROWS


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_search(capsys, tmp_path):
    csv_path = tmp_path / "s.csv"
    code, out, _ = run(capsys, "search", "--n-max", "1000", "--csv", str(csv_path))
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert len(lines) == 39
    assert lines[-1] == "# 38 solutions with n <= 1000; max n = 23, max a1 = 14"
    assert len(csv_path.read_text().splitlines()) == len(SOLUTION_ROWS) + 1


def test_bounds(capsys):
    code, out, _ = run(capsys, "bounds")
    assert code == EXIT_OK
    assert "C2'" in out and "above target" in out
    assert "1.540e+85" in out
    code, out, _ = run(capsys, "bounds", "--json")
    data = json.loads(out)
    assert data["M"] == str(154 * 10**83)
    assert {c["name"] for c in data["checks"]} >= {"C1", "K5", "C7"}


def test_reduce_selected_nodes(capsys, tmp_path):
    path = tmp_path / "nodes.jsonl"
    code, out, _ = run(capsys, "--quiet", "reduce", "--node", "1.0", "--node", "2.1", "--out", str(path))
    assert code == EXIT_OK
    assert "1.0 [full, 1 tuples" in out
    assert "special cases: t=2 gaps=() r=0 s=1; t=6 gaps=() r=1 s=3" in out
    recs = [json.loads(x) for x in path.read_text().splitlines()]
    assert [r["node"] for r in recs] == ["1.0", "2.1"]
    assert recs[1]["bounds"] == {"a1-a2": 300}


def test_reduce_sampled_with_checkpoint(capsys, tmp_path):
    ck = tmp_path / "ck.jsonl"
    argv = ["--quiet", "reduce", "--node", "2.2", "--stride", "97", "--checkpoint", str(ck)]
    code, first, _ = run(capsys, *argv)
    assert code == EXIT_OK and "sampled(97)" in first
    n = len(ck.read_text().splitlines())
    code, second, _ = run(capsys, *argv)
    assert code == EXIT_OK and second == first
    assert len(ck.read_text().splitlines()) == n


def test_padic(capsys):
    code, out, _ = run(capsys, "padic", "--t-min", "2", "--t-max", "200")
    assert code == EXIT_OK
    assert "v2(log(beta/alpha)) = 2" in out
    assert "r = 283" in out
    assert "R_max = 292 at n - m = 169; a5 <= 295" in out


def test_padic_low_precision_incomplete(capsys):
    code, _, err = run(capsys, "padic", "--t-max", "10", "--padic-digits", "100")
    assert code == EXIT_INCOMPLETE
    assert "R not found" in err


def test_config_file_with_flag_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"padic_digits": 100}))
    assert run(capsys, "--config", str(cfg), "padic", "--t-max", "10")[0] == EXIT_INCOMPLETE
    assert run(capsys, "--config", str(cfg), "padic", "--t-max", "10", "--padic-digits", "320")[0] == EXIT_OK


def test_bad_config_is_internal_error(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"colour": "blue"}))
    code, _, err = run(capsys, "--config", str(cfg), "padic", "--t-max", "4")
    assert code == EXIT_INTERNAL
    assert "unknown config keys" in err


def test_unknown_node_is_internal_error(capsys):
    code, _, err = run(capsys, "--quiet", "reduce", "--node", "9.9")
    assert code == EXIT_INTERNAL and "unknown node ids" in err


def test_verify_malformed(capsys, tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text("garbage\n")
    code, out, _ = run(capsys, "verify", str(p))
    assert code == EXIT_FAIL and out.startswith("FAIL: malformed certificate")
    code, out, _ = run(capsys, "verify", str(tmp_path / "missing.jsonl"))
    assert code == EXIT_FAIL


def test_verify_sampled_and_tampered(capsys, sampled_run, tmp_path):
    _, _, out_dir = sampled_run
    cert = out_dir / "certificate.jsonl"
    code, out, _ = run(capsys, "verify", str(cert))
    assert code == EXIT_INCOMPLETE and out.strip() == "INCOMPLETE (sampled)"
    lines = []
    for line in cert.read_text().splitlines():
        rec = json.loads(line)
        if rec["kind"] == "final_contradiction":
            rec["a5"] = 400
        lines.append(json.dumps(rec))
    bad = tmp_path / "bad.jsonl"
    bad.write_text("\n".join(lines) + "\n")
    code, out, _ = run(capsys, "verify", str(bad))
    assert code == EXIT_FAIL
    assert out.splitlines()[0] == "FAIL at final_contradiction"


def test_parser_requires_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
    args = build_parser().parse_args(["pipeline", "--mode", "sampled", "--workers", "2"])
    assert args.mode == "sampled" and args.workers == 2
