"""Command line interface.

Three subcommands:

* ``run --config <path> [--out <dir>]`` — run the configured multi-seed
  experiment, write artifacts, print the diagnostics verdicts;
* ``verify --suite <name> --cases <n> --seed <n>`` — run randomized
  property suites;
* ``report --trace-dir <dir> --config <path>`` — rebuild the diagnostics
  report from previously written traces.

The output directory for ``run`` resolves as ``--out``, then the
``ADAPTMH_OUT`` environment variable, then ``run.out_dir`` in the config.

Exit codes: 0 when every requested check passed, 1 when any check failed,
2 for configuration or usage errors.
"""

import argparse
import os
import sys

from .backend import active_backend
from .config import load_config
from .errors import AdaptmhError, ConfigError
from .runner import build_experiment_report, load_traces, run_experiment
from .verify import SUITES, run_suite

OUT_ENV_VAR = "ADAPTMH_OUT"

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="adaptmh",
        description="Adaptive Metropolis-Hastings experiment harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a configured experiment")
    run_p.add_argument("--config", required=True, help="INI config path")
    run_p.add_argument(
        "--out", default=None,
        help=f"output directory (overrides ${OUT_ENV_VAR} and the config)",
    )
    run_p.add_argument(
        "--backend", default=None, choices=("python", "compiled"),
        help="chain-loop implementation (default: fastest available)",
    )

    verify_p = sub.add_parser("verify", help="run property suites")
    verify_p.add_argument(
        "--suite", required=True, choices=SUITES + ("all",),
    )
    verify_p.add_argument("--cases", type=int, default=200)
    verify_p.add_argument("--seed", type=int, default=1)

    report_p = sub.add_parser(
        "report", help="rebuild diagnostics from stored traces"
    )
    report_p.add_argument("--trace-dir", required=True)
    report_p.add_argument("--config", required=True, help="INI config path")
    return parser


def _print_report(report, out=None):
    # resolve the stream lazily so redirected stdout is honored
    if out is None:
        out = sys.stdout
    for name in sorted(report.flags):
        verdict = "PASS" if report.flags[name] else "FAIL"
        print(f"check {name}: {verdict}", file=out)
    if report.moment_errors is not None:
        mean_err, cov_err = report.moment_errors
        print(
            f"moment errors: mean {mean_err:.4f}, covariance {cov_err:.4f}",
            file=out,
        )
    print(
        f"acceptance rate (last window): {report.acceptance_curve[-1]:.4f}",
        file=out,
    )
    for note in report.notes:
        print(f"note: {note}", file=out)


def _cmd_run(args):
    cfg = load_config(args.config)
    out_dir = args.out or os.environ.get(OUT_ENV_VAR) or cfg.out_dir
    if out_dir is None:
        raise ConfigError(
            f"no output directory: pass --out, set ${OUT_ENV_VAR}, or set "
            f"out_dir under [run]"
        )
    result = run_experiment(cfg, out_dir=out_dir, backend=args.backend)
    print(
        f"ran {cfg.n_seeds} chains x {cfg.n_steps} steps "
        f"({cfg.adapter} adapter, {active_backend(args.backend)} backend)"
    )
    print(f"artifacts written to {result.out_dir}")
    _print_report(result.report)
    return EXIT_PASS if result.report.all_passed() else EXIT_FAIL


def _cmd_verify(args):
    results = run_suite(args.suite, args.cases, args.seed)
    ok = True
    for result in results:
        print(result.summary())
        for failure in result.failures[:10]:
            print(f"  {failure}")
        if len(result.failures) > 10:
            print(f"  ... and {len(result.failures) - 10} more")
        ok = ok and result.passed
    return EXIT_PASS if ok else EXIT_FAIL


def _cmd_report(args):
    cfg = load_config(args.config)
    traces = load_traces(args.trace_dir, cfg)
    report = build_experiment_report(cfg, traces)
    _print_report(report)
    return EXIT_PASS if report.all_passed() else EXIT_FAIL


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handler = {
        "run": _cmd_run,
        "verify": _cmd_verify,
        "report": _cmd_report,
    }[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AdaptmhError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
