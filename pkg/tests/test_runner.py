import hashlib
import json
import textwrap

import numpy as np
import pytest

from adaptmh.config import config_hash, parse_config
from adaptmh.errors import ConfigError
from adaptmh.runner import (
    build_experiment_report,
    chain_rng,
    load_traces,
    run_experiment,
    run_single,
)

BASE = """
[target]
kind = gaussian
mean = 0
cov = 1

[run]
adapter = fixed
n_steps = 40
n_seeds = 2
base_seed = 3
burn_in = 4

[fixed]
sigma = 2.38
"""


def base_cfg(extra=""):
    return parse_config(textwrap.dedent(BASE) + extra)


EXPECTED_FILES = (
    "trace_3.csv", "trace_4.csv", "monitors_3.csv", "monitors_4.csv",
    "config.ini", "report.json", "envelopes.csv", "manifest.json",
)


class TestChainRng:
    def test_seed_determinism(self):
        a = chain_rng(5).standard_normal(4)
        b = chain_rng(5).standard_normal(4)
        assert np.array_equal(a, b)

    def test_seeds_give_distinct_streams(self):
        a = chain_rng(5).standard_normal(4)
        b = chain_rng(6).standard_normal(4)
        assert not np.array_equal(a, b)


class TestRunSingle:
    def test_trace_metadata(self):
        cfg = base_cfg()
        trace = run_single(cfg, seed=3)
        assert trace.seed == 3
        assert trace.adapter == "fixed"
        assert trace.config_hash == config_hash(cfg)
        assert trace.n_steps == 40
        assert trace.dim == 1
        assert np.array_equal(trace.t, np.arange(1, 41))

    def test_single_step_run(self):
        cfg = parse_config(
            textwrap.dedent(BASE)
            .replace("n_steps = 40", "n_steps = 1")
            .replace("burn_in = 4", "burn_in = 0")
        )
        trace = run_single(cfg, seed=3)
        assert trace.n_steps == 1

    def test_backends_agree(self):
        cfg = base_cfg()
        a = run_single(cfg, 3, backend="compiled")
        b = run_single(cfg, 3, backend="python")
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.alpha, b.alpha)


class TestRunExperiment:
    def test_in_memory_run(self):
        result = run_experiment(base_cfg())
        assert result.out_dir is None
        assert result.manifest is None
        assert len(result.traces) == 2
        assert result.report.n_traces == 2
        assert result.report.adapter == "fixed"

    def test_artifacts_and_manifest(self, tmp_path):
        out = tmp_path / "exp"
        result = run_experiment(base_cfg(), out_dir=str(out))
        for name in EXPECTED_FILES:
            assert (out / name).exists(), name
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest == result.manifest
        assert manifest["config_hash"] == config_hash(base_cfg())
        assert manifest["seeds"] == [3, 4]
        assert manifest["adapter"] == "fixed"
        for name, digest in manifest["files"].items():
            actual = hashlib.sha256((out / name).read_bytes()).hexdigest()
            assert actual == digest, name
        assert sorted(manifest["files"]) == sorted(
            n for n in EXPECTED_FILES if n != "manifest.json"
        )

    def test_rerun_is_byte_identical(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        run_experiment(base_cfg(), out_dir=str(a))
        run_experiment(base_cfg(), out_dir=str(b))
        for name in EXPECTED_FILES:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def cfg_with_out_dir(self, path):
        text = textwrap.dedent(BASE).replace(
            "burn_in = 4", f"burn_in = 4\nout_dir = {path}"
        )
        return parse_config(text)

    def test_cfg_out_dir_is_used(self, tmp_path):
        target = tmp_path / "auto"
        cfg = self.cfg_with_out_dir(target)
        result = run_experiment(cfg)
        assert result.out_dir == str(target)
        assert (target / "trace_3.csv").exists()

    def test_argument_overrides_cfg_out_dir(self, tmp_path):
        ignored = tmp_path / "ignored"
        used = tmp_path / "used"
        cfg = self.cfg_with_out_dir(ignored)
        run_experiment(cfg, out_dir=str(used))
        assert used.exists()
        assert not ignored.exists()

    def test_envelopes_csv_has_header_only_for_few_seeds(self, tmp_path):
        out = tmp_path / "exp"
        run_experiment(base_cfg(), out_dir=str(out))
        lines = (out / "envelopes.csv").read_text().splitlines()
        assert lines == ["statistic,window_start,window_end,q50,q95,q99"]


class TestReportClamping:
    def test_windows_clamped_to_short_span(self):
        cfg = parse_config(
            textwrap.dedent(BASE)
            .replace("n_steps = 40", "n_steps = 5")
            .replace("burn_in = 4", "burn_in = 0")
        )
        result = run_experiment(cfg)
        # default n_windows = 10 exceeds the 5-step span; clamped to 5
        assert len(result.report.windows) == 5

    def test_full_span_keeps_configured_windows(self):
        cfg = base_cfg("[diagnostics]\nn_windows = 3\n")
        report = build_experiment_report(
            cfg, [run_single(cfg, s) for s in cfg.seeds]
        )
        assert len(report.windows) == 3


class TestLoadTraces:
    def test_round_trip(self, tmp_path):
        out = tmp_path / "exp"
        cfg = base_cfg()
        result = run_experiment(cfg, out_dir=str(out))
        loaded = load_traces(str(out), cfg)
        assert len(loaded) == 2
        for orig, back in zip(result.traces, loaded):
            assert back.seed == orig.seed
            assert back.config_hash == orig.config_hash
            assert back.adapter == "fixed"
            assert np.array_equal(back.x, orig.x)
            assert np.array_equal(back.alpha, orig.alpha)
            assert np.array_equal(back.accepted, orig.accepted)
            assert np.array_equal(back.cov_sup_norm, orig.cov_sup_norm)

    def test_missing_trace_file(self, tmp_path):
        with pytest.raises(ConfigError, match="missing trace file"):
            load_traces(str(tmp_path), base_cfg())
