from __future__ import annotations

import os
import re
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=60)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

M_LARGE = 154 * 10**83


def pytest_collection_modifyitems(config, items):
    if os.environ.get("FIBDIGITS_SKIP_FULL"):
        skip = pytest.mark.skip(reason="FIBDIGITS_SKIP_FULL is set")
        for item in items:
            if "full" in item.keywords:
                item.add_marker(skip)


@pytest.fixture(scope="session")
def M() -> int:
    return M_LARGE


@pytest.fixture(scope="session")
def cf():
    from fibdigits.numkernel import gamma_convergents

    return gamma_convergents(200, 1024)


@pytest.fixture(scope="session")
def env(M, cf):
    from fibdigits.reduce.tree import SweepEnv

    return SweepEnv(M, cf)


def _timed_pipeline(cfg):
    import time

    from fibdigits.pipeline import run_pipeline

    t0 = time.perf_counter()
    res = run_pipeline(cfg)
    return res, time.perf_counter() - t0


@pytest.fixture(scope="session")
def sampled_run(tmp_path_factory):
    """Sampled pipeline (stride 97) with outputs and a chunk checkpoint on disk: (result, seconds, out_dir)."""
    from fibdigits.pipeline import PipelineConfig, write_outputs

    out = tmp_path_factory.mktemp("sampled")
    cfg = PipelineConfig(mode="sampled", stride=97, out_dir=str(out), checkpoint=str(out / "checkpoint.jsonl"))
    res, secs = _timed_pipeline(cfg)
    write_outputs(res, out, figures=True)
    return res, secs, out


@pytest.fixture(scope="session")
def full_run(tmp_path_factory):
    """Full-mode pipeline; several minutes on one core."""
    from fibdigits.pipeline import PipelineConfig, write_outputs

    out = tmp_path_factory.mktemp("full")
    cfg = PipelineConfig(mode="full", out_dir=str(out))
    res, secs = _timed_pipeline(cfg)
    write_outputs(res, out, figures=False)
    return res, secs, out


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None:
        return
    skipped = set()
    for rep in terminalreporter.stats.get("skipped", []):
        m = re.search(r"test_acceptance\.py::test_criterion_(\d)_", rep.nodeid)
        if m:
            skipped.add(int(m.group(1)))
    terminalreporter.section("acceptance criteria")
    for line in mod.report_lines(skipped):
        terminalreporter.write_line(line)
