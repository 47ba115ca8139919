"""Multi-seed experiment driver with reproducible on-disk artifacts.

Chain ``k`` of an experiment uses the seed ``base_seed + k`` fed through
``SeedSequence``; given the same config (hence the same seeds) a rerun
produces byte-identical trace files.  An output directory receives:

* ``trace_<seed>.csv`` — the pinned per-iteration schema;
* ``monitors_<seed>.csv`` — sidecar monitor columns per iteration;
* ``config.ini`` — the canonical resolved config;
* ``report.json`` — the assembled diagnostics report;
* ``envelopes.csv`` — quantile envelope table (when >= 20 seeds);
* ``manifest.json`` — config hash plus a sha256 per artifact.
"""

import hashlib
import json
import os
from dataclasses import dataclass, replace

import numpy as np

from .backend import active_backend, run_chain
from .config import config_hash, serialize_config
from .diagnostics import ChainTrace, build_report
from .errors import ConfigError

TRACE_FILE = "trace_{seed}.csv"
MONITORS_FILE = "monitors_{seed}.csv"
CONFIG_FILE = "config.ini"
REPORT_FILE = "report.json"
ENVELOPES_FILE = "envelopes.csv"
MANIFEST_FILE = "manifest.json"


def chain_rng(seed):
    """The random stream for one chain.

    Every consumer must build generators exactly this way; the trace format
    pins the draw sequence, not just the distribution of results.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def run_single(cfg, seed, backend=None):
    """Run one chain of the experiment and assemble its trace."""
    out = run_chain(
        chain_rng(seed), cfg.n_steps, cfg.x0, cfg.target, cfg.adapter_cfg,
        backend=backend,
    )
    return ChainTrace(
        seed=seed,
        config_hash=config_hash(cfg),
        adapter=cfg.adapter,
        t=np.arange(1, cfg.n_steps + 1, dtype=np.int64),
        x=out["x"],
        alpha=out["alpha"],
        accepted=out["accepted"] != 0,
        sigma=out["sigma"],
        log_det_c=out["log_det_c"],
        adaptation_gap=out["adaptation_gap"],
        tau=out["tau"],
        cov_sup_norm=out["cov_sup_norm"],
        path_mahal_sq=out["path_mahal_sq"],
    )


def _effective_params(cfg):
    """Clamp the window count to the post-burn-in span so short runs still
    produce a (coarse) report instead of failing."""
    params = cfg.diagnostics
    span = cfg.n_steps - cfg.burn_in
    if params.n_windows > span:
        params = replace(params, n_windows=span)
    return params


def build_experiment_report(cfg, traces):
    """Diagnostics report for traces produced under ``cfg``."""
    return build_report(
        traces, cfg.target, cfg.adapter, cfg.burn_in, _effective_params(cfg),
        p_target=cfg.p_target, config_hash=config_hash(cfg),
    )


@dataclass(frozen=True)
class RunResult:
    """Everything a finished experiment produced."""

    traces: tuple
    report: object
    out_dir: str
    manifest: dict


def _sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_artifacts(cfg, traces, report, out_dir, backend_name):
    """Write all experiment artifacts; returns the manifest dict."""
    os.makedirs(out_dir, exist_ok=True)
    names = []
    for trace in traces:
        tname = TRACE_FILE.format(seed=trace.seed)
        mname = MONITORS_FILE.format(seed=trace.seed)
        trace.to_csv(os.path.join(out_dir, tname))
        trace.monitors_to_csv(os.path.join(out_dir, mname))
        names += [tname, mname]
    with open(os.path.join(out_dir, CONFIG_FILE), "w", newline="\n") as fh:
        fh.write(serialize_config(cfg))
    names.append(CONFIG_FILE)
    report.write_json(os.path.join(out_dir, REPORT_FILE))
    names.append(REPORT_FILE)
    report.write_envelopes_csv(os.path.join(out_dir, ENVELOPES_FILE))
    names.append(ENVELOPES_FILE)
    manifest = {
        "config_hash": config_hash(cfg),
        "backend": backend_name,
        "adapter": cfg.adapter,
        "seeds": list(cfg.seeds),
        "files": {
            name: _sha256_file(os.path.join(out_dir, name))
            for name in sorted(names)
        },
    }
    with open(os.path.join(out_dir, MANIFEST_FILE), "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def run_experiment(cfg, out_dir=None, backend=None):
    """Run all seeds, build the report, and (optionally) write artifacts.

    Parameters
    ----------
    cfg : ExperimentConfig
    out_dir : str, optional
        Overrides ``cfg.out_dir``.  With neither set, nothing is written
        and the result's ``out_dir``/``manifest`` are None.
    backend : str, optional
        'compiled' | 'python'; default per the backend module.

    Returns
    -------
    RunResult
    """
    resolved_out = out_dir if out_dir is not None else cfg.out_dir
    traces = tuple(
        run_single(cfg, seed, backend=backend) for seed in cfg.seeds
    )
    report = build_experiment_report(cfg, traces)
    manifest = None
    if resolved_out is not None:
        manifest = write_artifacts(
            cfg, traces, report, resolved_out, active_backend(backend)
        )
    return RunResult(
        traces=traces, report=report, out_dir=resolved_out, manifest=manifest
    )


def load_traces(trace_dir, cfg):
    """Load the traces an experiment wrote to ``trace_dir``.

    Raises
    ------
    ConfigError
        When an expected ``trace_<seed>.csv`` is missing: the likely cause
        is a config that does not match the directory.
    """
    h = config_hash(cfg)
    traces = []
    for seed in cfg.seeds:
        tpath = os.path.join(trace_dir, TRACE_FILE.format(seed=seed))
        mpath = os.path.join(trace_dir, MONITORS_FILE.format(seed=seed))
        if not os.path.exists(tpath):
            raise ConfigError(
                f"missing trace file {tpath}; does the config match the "
                f"trace directory?"
            )
        traces.append(
            ChainTrace.from_csv(
                tpath,
                monitors_path=mpath if os.path.exists(mpath) else None,
                seed=seed,
                config_hash=h,
                adapter=cfg.adapter,
            )
        )
    return tuple(traces)
