"""Benchmark the compiled chain loop against the pure-Python fallback.

Runs the same seeded workload through both backends, checks the outputs are
bit-identical, and reports steps per second plus the speedup factor.

Usage:
    python3 benchmarks/bench_backends.py [--steps N] [--dim D]
        [--adapter fixed|am|mhcma] [--seed S] [--repeat R]
"""

import argparse
import time

import numpy as np

from adaptmh.am import AmConfig
from adaptmh.backend import available_backends, run_chain
from adaptmh.mh import ProposalParams
from adaptmh.mhcma import MhCmaConfig
from adaptmh.runner import chain_rng
from adaptmh.spd import factorize
from adaptmh.targets import Gaussian


def make_adapter(name, dim):
    if name == "fixed":
        return ProposalParams(sigma=2.38 / dim ** 0.5, C=factorize(np.eye(dim)))
    if name == "am":
        return AmConfig.with_defaults(dim)
    return MhCmaConfig.with_defaults(dim)


def make_target(dim):
    cov = np.eye(dim)
    for i in range(dim - 1):
        cov[i, i + 1] = cov[i + 1, i] = 0.3
    cov += np.diag(np.linspace(0.0, 1.0, dim))
    return Gaussian(np.zeros(dim), cov)


def run_once(backend, args, target, adapter_cfg):
    rng = chain_rng(args.seed)
    start = time.perf_counter()
    out = run_chain(
        rng, args.steps, np.zeros(args.dim), target, adapter_cfg,
        backend=backend,
    )
    return time.perf_counter() - start, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=200000)
    parser.add_argument("--dim", type=int, default=4)
    parser.add_argument(
        "--adapter", default="mhcma", choices=("fixed", "am", "mhcma")
    )
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument(
        "--repeat", type=int, default=3, help="timed repetitions per backend"
    )
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled backend not available; benchmarking python only")

    target = make_target(args.dim)
    adapter_cfg = make_adapter(args.adapter, args.dim)
    print(
        f"workload: {args.adapter} adapter, dim {args.dim}, "
        f"{args.steps} steps, seed {args.seed}"
    )

    times = {}
    outputs = {}
    for backend in backends:
        best = float("inf")
        for _ in range(args.repeat):
            elapsed, out = run_once(backend, args, target, adapter_cfg)
            best = min(best, elapsed)
        times[backend] = best
        outputs[backend] = out
        print(
            f"{backend:>9}: {best:8.3f} s  "
            f"({args.steps / best:12,.0f} steps/s)"
        )

    if len(backends) == 2:
        a, b = outputs["compiled"], outputs["python"]
        for key in a:
            assert np.array_equal(a[key], b[key]), (
                f"backends disagree on column {key!r}"
            )
        print("outputs bit-identical across backends: yes")
        print(f"speedup: {times['python'] / times['compiled']:.1f}x")


if __name__ == "__main__":
    main()
