"""Empirical monitors for the conditions adaptive samplers must satisfy.

Two conditions are monitored, both as falsifiable finite-sample proxies:

* boundedness: across many independently seeded chains, windowed quantile
  envelopes of the chain and adapter statistics (squared state norm, shape
  sup-norm, sigma + 1/sigma, squared path norm) must not drift upward —
  a proxy for the family staying in a compact set with high probability;
* diminishing adaptation: the per-step adaptation gap recorded in traces
  (shape-matrix step distance plus the log-scale increment) must decay
  between early and late windows.

These monitors can refute the conditions, never prove them: they are
finite-seed, finite-horizon checks with configurable thresholds.

Traces are strictly read-only inputs here; every consumer treats them as
frozen values (the arrays are marked non-writable at construction).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainError,
    EmptyWindow,
    InsufficientSamples,
    InsufficientTraces,
    Unavailable,
)

TRACE_FLOAT_FMT = "%.17g"

STAT_X_NORM_SQ = "x_norm_sq"
STAT_COV_SUP = "cov_sup_norm"
STAT_SIGMA_BOTH = "sigma_reciprocal_sum"
STAT_PATH_MAHAL = "path_mahal_sq"

STATISTICS = (STAT_X_NORM_SQ, STAT_COV_SUP, STAT_SIGMA_BOTH, STAT_PATH_MAHAL)


class ChainTrace:
    """Complete per-iteration record of one chain run.

    Row ``k`` describes transition ``t = k + 1``: the state after the move,
    the acceptance probability and coin result, and the adapter readouts
    after consuming the move (proposal scale, log-determinant of the shape
    matrix, adaptation gap, acceptance counter).  Two extra monitor columns
    (sup-norm of the shape matrix, squared path norm) feed the boundedness
    envelopes; they are carried next to the core columns because they are
    not reconstructible from them.

    All arrays are frozen at construction; a trace is an immutable value.
    """

    def __init__(self, seed, config_hash, adapter, t, x, alpha, accepted,
                 sigma, log_det_c, adaptation_gap, tau,
                 cov_sup_norm=None, path_mahal_sq=None):
        t = np.ascontiguousarray(t, dtype=np.int64)
        x = np.ascontiguousarray(x, dtype=float)
        n = t.shape[0]
        if x.ndim != 2 or x.shape[0] != n:
            raise DimensionMismatch("x must be (n_steps, dim)")
        if n == 0:
            raise DomainError("empty trace")
        if not np.all(np.diff(t) == 1):
            raise DomainError("t must increase by exactly 1 per record")
        gap = np.ascontiguousarray(adaptation_gap, dtype=float)
        if np.any(gap < 0.0):
            raise DomainError("adaptation_gap must be nonnegative")
        self.seed = int(seed)
        self.config_hash = str(config_hash)
        self.adapter = str(adapter)
        self.t = t
        self.x = x
        self.alpha = np.ascontiguousarray(alpha, dtype=float)
        self.accepted = np.ascontiguousarray(accepted, dtype=bool)
        self.sigma = np.ascontiguousarray(sigma, dtype=float)
        self.log_det_c = np.ascontiguousarray(log_det_c, dtype=float)
        self.adaptation_gap = gap
        self.tau = np.ascontiguousarray(tau, dtype=np.int64)
        if cov_sup_norm is None:
            cov_sup_norm = np.zeros(n)
        if path_mahal_sq is None:
            path_mahal_sq = np.zeros(n)
        self.cov_sup_norm = np.ascontiguousarray(cov_sup_norm, dtype=float)
        self.path_mahal_sq = np.ascontiguousarray(path_mahal_sq, dtype=float)
        for arr in (self.t, self.x, self.alpha, self.accepted, self.sigma,
                    self.log_det_c, self.adaptation_gap, self.tau,
                    self.cov_sup_norm, self.path_mahal_sq):
            if arr.shape[0] != n:
                raise DimensionMismatch("trace columns disagree on length")
            arr.setflags(write=False)

    @property
    def n_steps(self):
        return self.t.shape[0]

    @property
    def dim(self):
        return self.x.shape[1]

    def window_mask(self, window):
        """Boolean row mask for the closed iteration interval [start, end]."""
        start, end = window
        return (self.t >= start) & (self.t <= end)

    def csv_header(self):
        xcols = ",".join(f"x_{i}" for i in range(self.dim))
        return f"t,{xcols},alpha,accepted,sigma,log_det_C,adaptation_gap,tau"

    def to_csv(self, path):
        """Write the pinned trace schema: one row per iteration.

        Floats carry 17 significant digits so a read-back is value-exact.
        """
        fmt = TRACE_FLOAT_FMT
        with open(path, "w", newline="\n") as fh:
            fh.write(self.csv_header() + "\n")
            for k in range(self.n_steps):
                xs = ",".join(fmt % v for v in self.x[k])
                fh.write(
                    f"{self.t[k]},{xs},{fmt % self.alpha[k]},"
                    f"{int(self.accepted[k])},{fmt % self.sigma[k]},"
                    f"{fmt % self.log_det_c[k]},"
                    f"{fmt % self.adaptation_gap[k]},{self.tau[k]}\n"
                )

    def monitors_to_csv(self, path):
        """Write the sidecar monitor columns (not part of the core schema)."""
        fmt = TRACE_FLOAT_FMT
        with open(path, "w", newline="\n") as fh:
            fh.write("t,cov_sup_norm,path_mahal_sq\n")
            for k in range(self.n_steps):
                fh.write(
                    f"{self.t[k]},{fmt % self.cov_sup_norm[k]},"
                    f"{fmt % self.path_mahal_sq[k]}\n"
                )

    @classmethod
    def from_csv(cls, path, monitors_path=None, seed=-1, config_hash="",
                 adapter=""):
        """Load a trace written by :meth:`to_csv`.

        Metadata does not live in the CSV; pass it in from the manifest.
        Monitor columns default to zero when no sidecar file is given.
        """
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        xcols = [i for i, name in enumerate(header) if name.startswith("x_")]
        if not xcols or header[0] != "t":
            raise DomainError(f"unrecognized trace header in {path}")
        col = {name: i for i, name in enumerate(header)}
        kwargs = {}
        if monitors_path is not None:
            with open(monitors_path) as fh:
                fh.readline()
                mon = np.loadtxt(fh, delimiter=",", ndmin=2)
            kwargs["cov_sup_norm"] = mon[:, 1]
            kwargs["path_mahal_sq"] = mon[:, 2]
        return cls(
            seed, config_hash, adapter,
            data[:, col["t"]].astype(np.int64),
            data[:, xcols],
            data[:, col["alpha"]],
            data[:, col["accepted"]] != 0.0,
            data[:, col["sigma"]],
            data[:, col["log_det_C"]],
            data[:, col["adaptation_gap"]],
            data[:, col["tau"]].astype(np.int64),
            **kwargs,
        )


def trace_statistic(trace, statistic):
    """Per-iteration values of a monitored statistic.

    ``x_norm_sq`` is the squared euclidean norm of the state,
    ``cov_sup_norm`` the largest absolute entry of the shape matrix,
    ``sigma_reciprocal_sum`` is sigma + 1/sigma (large when the scale either
    explodes or collapses), ``path_mahal_sq`` the squared norm of the
    evolution path in the shape metric.
    """
    if statistic == STAT_X_NORM_SQ:
        return np.sum(trace.x * trace.x, axis=1)
    if statistic == STAT_COV_SUP:
        return trace.cov_sup_norm
    if statistic == STAT_SIGMA_BOTH:
        return trace.sigma + 1.0 / trace.sigma
    if statistic == STAT_PATH_MAHAL:
        return trace.path_mahal_sq
    raise DomainError(f"unknown statistic {statistic!r}")


def nearest_rank_quantile(values, p):
    """Nearest-rank quantile: the ceil(p*n)-th smallest value.

    No interpolation, so the result is always an observed value and matches
    a direct sort-based oracle exactly.
    """
    values = np.asarray(values)
    n = values.shape[0]
    if n == 0:
        raise EmptyWindow("no values to take a quantile of")
    if not 0.0 < p <= 1.0:
        raise DomainError(f"p must be in (0,1], got {p!r}")
    rank = math.ceil(p * n)
    return float(np.sort(values, kind="stable")[rank - 1])


def make_windows(n_steps, burn_in, n_windows):
    """Partition the post-burn-in iterations into closed windows.

    Returns ``n_windows`` closed intervals [start, end] that tile
    (burn_in, n_steps].
    """
    if not 0 <= burn_in < n_steps:
        raise DomainError(f"burn_in {burn_in} not in [0, {n_steps})")
    if n_windows < 1 or n_steps - burn_in < n_windows:
        raise DomainError("too many windows for the post-burn-in span")
    bounds = [
        burn_in + (k * (n_steps - burn_in)) // n_windows
        for k in range(n_windows + 1)
    ]
    return [(bounds[k] + 1, bounds[k + 1]) for k in range(n_windows)]


@dataclass(frozen=True)
class EnvelopeTable:
    """Cross-seed quantile envelope of one statistic over time windows."""

    statistic: str
    windows: tuple
    q50: tuple
    q95: tuple
    q99: tuple
    drift_factor: float
    passed: bool

    def rows(self):
        for k, (start, end) in enumerate(self.windows):
            yield (self.statistic, start, end,
                   self.q50[k], self.q95[k], self.q99[k])


def boundedness_envelope(traces, statistic, windows, drift_factor=2.0):
    """Windowed cross-seed quantile envelope with a no-drift verdict.

    Pools the statistic over at least 20 independently seeded traces per
    window and reports nearest-rank q50/q95/q99.  The verdict passes when
    the q99 of the last window is at most ``drift_factor`` times the q99 of
    the first window: a chain family drifting off to infinity fails, a
    stationary one passes with slack.

    Raises
    ------
    InsufficientTraces
        With fewer than 20 traces the tail quantiles are too noisy to mean
        anything; refuse rather than mislead.
    """
    if len(traces) < 20:
        raise InsufficientTraces(
            f"need >= 20 traces for envelopes, got {len(traces)}"
        )
    q50s, q95s, q99s = [], [], []
    for window in windows:
        pooled = []
        for trace in traces:
            mask = trace.window_mask(window)
            vals = trace_statistic(trace, statistic)[mask]
            if vals.size:
                pooled.append(vals)
        if not pooled:
            raise EmptyWindow(f"window {window} selects no iterations")
        pool = np.concatenate(pooled)
        q50s.append(nearest_rank_quantile(pool, 0.50))
        q95s.append(nearest_rank_quantile(pool, 0.95))
        q99s.append(nearest_rank_quantile(pool, 0.99))
    passed = bool(q99s[-1] <= drift_factor * q99s[0])
    return EnvelopeTable(
        statistic=statistic,
        windows=tuple(tuple(w) for w in windows),
        q50=tuple(q50s), q95=tuple(q95s), q99=tuple(q99s),
        drift_factor=float(drift_factor), passed=passed,
    )


@dataclass(frozen=True)
class DecayTable:
    """Windowed q95 of the adaptation gap with a first/last decay ratio."""

    windows: tuple
    q95: tuple
    ratio: float
    threshold: float
    passed: bool


def _decay_verdict(first, last, threshold):
    if first == 0.0 and last == 0.0:
        # nothing adapted at all: trivially diminished
        return math.inf, True
    ratio = math.inf if last == 0.0 else first / last
    return ratio, bool(ratio >= threshold)


def adaptation_decay(trace, windows, threshold=10.0, scale_by_t=False):
    """Quantify how fast per-step adaptation is dying out.

    Per window, the q95 of the recorded adaptation gap (optionally scaled
    by the iteration index, which turns an O(1/t) decay into a bounded
    sequence).  The verdict passes when the first-window q95 is at least
    ``threshold`` times the last-window q95.
    """
    gaps = trace.adaptation_gap
    if scale_by_t:
        gaps = gaps * trace.t
    q95s = []
    for window in windows:
        vals = gaps[trace.window_mask(window)]
        if vals.size == 0:
            raise EmptyWindow(f"window {window} selects no iterations")
        q95s.append(nearest_rank_quantile(vals, 0.95))
    ratio, passed = _decay_verdict(q95s[0], q95s[-1], threshold)
    return DecayTable(
        windows=tuple(tuple(w) for w in windows),
        q95=tuple(q95s), ratio=float(ratio),
        threshold=float(threshold), passed=passed,
    )


def pooled_adaptation_decay(traces, windows, threshold=10.0):
    """Decay ratio with the per-window q95 pooled across chains.

    Same statistic as adaptation_decay, computed on the gap values of all
    traces at once.  This is the ensemble verdict: a rare excursion in one
    chain shifts a pooled quantile far less than it shifts that chain's
    own, so the check reflects the ensemble-wide decay rather than the
    single worst realization.
    """
    if not traces:
        raise InsufficientTraces("no traces")
    q95s = []
    for window in windows:
        pool = np.concatenate(
            [t.adaptation_gap[t.window_mask(window)] for t in traces]
        )
        if pool.size == 0:
            raise EmptyWindow(f"window {window} selects no iterations")
        q95s.append(nearest_rank_quantile(pool, 0.95))
    ratio, passed = _decay_verdict(q95s[0], q95s[-1], threshold)
    return DecayTable(
        windows=tuple(tuple(w) for w in windows),
        q95=tuple(q95s), ratio=float(ratio),
        threshold=float(threshold), passed=passed,
    )


@dataclass(frozen=True)
class GrowthTable:
    """Running-max growth check for iteration-scaled adaptation gaps."""

    t_ref: int
    baseline: float
    window_max: float
    factor: float
    passed: bool


def _growth_verdict(baseline, window_max, factor):
    if baseline == 0.0:
        return window_max == 0.0
    return bool(window_max <= factor * baseline)


def scaled_gap_growth(trace, t_ref=100, factor=10.0):
    """Check that t * adaptation_gap has a bounded running maximum.

    ``baseline`` is the running maximum of ``t * gap_t`` accumulated by
    iteration ``t_ref``; the verdict passes when the maximum over the whole
    remaining run stays within ``factor`` times that baseline.  For an
    adapter whose gap decays like 1/t the scaled sequence is tight, so the
    late maximum sits at the baseline's scale; an adapter that keeps
    adapting fails by growing past it.
    """
    scaled = trace.adaptation_gap * trace.t
    head = scaled[trace.t <= t_ref]
    tail = scaled[trace.t >= t_ref]
    if head.size == 0 or tail.size == 0:
        raise EmptyWindow(f"t_ref {t_ref} outside the trace span")
    baseline = float(np.max(head))
    window_max = float(np.max(tail))
    return GrowthTable(
        t_ref=int(t_ref), baseline=baseline, window_max=window_max,
        factor=float(factor),
        passed=_growth_verdict(baseline, window_max, factor),
    )


def pooled_gap_growth(traces, t_ref=100, factor=10.0):
    """Running-max growth of t * adaptation_gap pooled across chains.

    Baseline and window maximum are each taken over every chain at once,
    so the verdict compares ensemble extremes.  The late maximum over many
    chains and many iterations is held against the ensemble's own early
    scale instead of each chain's early scale, which a single quiet start
    would make arbitrarily strict.
    """
    if not traces:
        raise InsufficientTraces("no traces")
    tables = [scaled_gap_growth(t, t_ref=t_ref, factor=factor) for t in traces]
    baseline = max(t.baseline for t in tables)
    window_max = max(t.window_max for t in tables)
    return GrowthTable(
        t_ref=int(t_ref), baseline=baseline, window_max=window_max,
        factor=float(factor),
        passed=_growth_verdict(baseline, window_max, factor),
    )


def _post_burn_in_x(trace, burn_in):
    mask = trace.t > burn_in
    if not np.any(mask):
        raise InsufficientSamples(
            f"no iterations after burn_in={burn_in} in a {trace.n_steps}-step trace"
        )
    return trace.x[mask]


def _moment_errors(samples, target):
    moments = target.analytic_moments()
    if moments is None:
        raise Unavailable(
            f"target kind {target.kind!r} has no analytic moments"
        )
    mean, cov = moments
    n = samples.shape[0]
    if n < 2:
        raise InsufficientSamples("need >= 2 samples for a covariance")
    smean = samples.sum(axis=0) / n
    dev = samples - smean
    scov = dev.T @ dev / (n - 1)
    mean_err = float(np.max(np.abs(smean - mean)))
    cov_err = float(
        np.linalg.norm(scov - cov) / np.linalg.norm(cov)
    )
    return mean_err, cov_err


def moment_check(trace, target, burn_in):
    """Post-burn-in sample moments vs the target's analytic moments.

    Returns
    -------
    (mean_err, cov_err)
        Largest absolute coordinate error of the sample mean, and relative
        Frobenius error of the sample covariance.

    Raises
    ------
    Unavailable
        If the target has no analytic moments.
    InsufficientSamples
        If nothing remains after burn-in.
    """
    return _moment_errors(_post_burn_in_x(trace, burn_in), target)


def moment_check_pooled(traces, target, burn_in):
    """Like :func:`moment_check` on samples pooled across traces."""
    parts = [_post_burn_in_x(trace, burn_in) for trace in traces]
    return _moment_errors(np.concatenate(parts, axis=0), target)


def tv_from_masses(p_masses, p_lo, p_hi, q_masses, q_lo, q_hi):
    """Half the l1 distance between two binned distributions.

    The two tail masses participate as two extra bins, so the result lives
    in [0, 1] and is symmetric in the two arguments.
    """
    p = np.asarray(p_masses, dtype=float)
    q = np.asarray(q_masses, dtype=float)
    if p.shape != q.shape:
        raise DimensionMismatch("binned distributions differ in length")
    acc = float(np.sum(np.abs(p - q)))
    acc += abs(p_lo - q_lo) + abs(p_hi - q_hi)
    return 0.5 * acc


def tv_histogram_estimate(trace, target, axis, bins, bin_range, burn_in):
    """Histogram estimate of the distance to the target's 1-D marginal.

    Bins the post-burn-in samples of one coordinate and compares against
    the target's analytic marginal masses.  The number is meaningful only
    comparatively (same binning, different windows or runs): for few bins
    it underestimates, for many it inflates with sampling noise.

    Raises
    ------
    InsufficientSamples
        If fewer than ``10 * bins`` post-burn-in samples are available.
    """
    bins = int(bins)
    if bins < 10:
        raise DomainError(f"bins must be >= 10, got {bins}")
    if not 0 <= axis < trace.dim:
        raise DomainError(f"axis {axis} out of range for dim {trace.dim}")
    samples = _post_burn_in_x(trace, burn_in)[:, axis]
    if samples.shape[0] < 10 * bins:
        raise InsufficientSamples(
            f"{samples.shape[0]} samples < 10 * {bins} bins"
        )
    lo, hi = float(bin_range[0]), float(bin_range[1])
    if not lo < hi:
        raise DomainError("empty bin range")
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    n = samples.shape[0]
    emp_masses = counts / n
    emp_lo = float(np.sum(samples < lo) / n)
    emp_hi = float(np.sum(samples >= hi) / n)
    tgt_masses, tgt_lo, tgt_hi = target.marginal_bin_masses(axis, edges)
    return tv_from_masses(emp_masses, emp_lo, emp_hi,
                          tgt_masses, tgt_lo, tgt_hi)


def acceptance_rate(trace, window):
    """Fraction of accepted transitions in the closed window [start, end]."""
    mask = trace.window_mask(window)
    total = int(np.sum(mask))
    if total == 0:
        raise EmptyWindow(f"window {window} selects no iterations")
    return float(np.sum(trace.accepted[mask]) / total)


def pooled_acceptance_rate(traces, window):
    """Acceptance fraction over a window, pooled across traces."""
    hits = 0
    total = 0
    for trace in traces:
        mask = trace.window_mask(window)
        hits += int(np.sum(trace.accepted[mask]))
        total += int(np.sum(mask))
    if total == 0:
        raise EmptyWindow(f"window {window} selects no iterations")
    return hits / total


@dataclass(frozen=True)
class DiagnosticsParams:
    """Thresholds and knobs for report assembly (config section values)."""

    n_windows: int = 10
    b1_drift_factor: float = 2.0
    b2_decay_threshold: float = 10.0
    am_growth_t_ref: int = 100
    am_growth_factor: float = 10.0
    moment_mean_tol: float = 0.05
    moment_cov_tol: float = 0.10
    acceptance_tol: float = 0.05
    tv_axis: int = 0
    tv_bins: int = 50
    tv_range: tuple = (-5.0, 5.0)

    def validate(self):
        if self.n_windows < 1:
            raise DomainError("n_windows must be >= 1")
        if self.b1_drift_factor <= 0 or self.b2_decay_threshold <= 0:
            raise DomainError("diagnostics factors must be positive")
        if self.tv_bins < 10:
            raise DomainError("tv_bins must be >= 10")
        if not self.tv_range[0] < self.tv_range[1]:
            raise DomainError("tv_range must be a nonempty interval")
        return self


ENVELOPE_STATS = {
    "fixed": (STAT_X_NORM_SQ,),
    "am": (STAT_X_NORM_SQ, STAT_COV_SUP),
    "mhcma": (STAT_X_NORM_SQ, STAT_COV_SUP, STAT_SIGMA_BOTH, STAT_PATH_MAHAL),
}


@dataclass(frozen=True)
class DiagnosticsReport:
    """Aggregated post-run verdicts across all seeded chains.

    ``flags`` maps check names to booleans; a missing check (too few seeds
    for envelopes, no analytic moments) is absent rather than failed, with
    an explanation under ``notes``.
    """

    adapter: str
    n_traces: int
    n_steps: int
    burn_in: int
    config_hash: str
    windows: tuple
    envelopes: dict
    acceptance_curve: tuple
    decay_windows: tuple
    decay_ratios: tuple
    growth_tables: tuple
    moment_errors: tuple
    tv_values: tuple
    flags: dict
    notes: tuple

    def to_json_dict(self):
        env = {
            stat: {
                "windows": [list(w) for w in table.windows],
                "q50": list(table.q50),
                "q95": list(table.q95),
                "q99": list(table.q99),
                "drift_factor": table.drift_factor,
                "passed": table.passed,
            }
            for stat, table in self.envelopes.items()
        }
        return {
            "adapter": self.adapter,
            "n_traces": self.n_traces,
            "n_steps": self.n_steps,
            "burn_in": self.burn_in,
            "config_hash": self.config_hash,
            "windows": [list(w) for w in self.windows],
            "envelopes": env,
            "acceptance_curve": list(self.acceptance_curve),
            "decay_windows": [list(w) for w in self.decay_windows],
            "decay_ratios": list(self.decay_ratios),
            "growth": [
                {
                    "t_ref": g.t_ref,
                    "baseline": g.baseline,
                    "window_max": g.window_max,
                    "factor": g.factor,
                    "passed": g.passed,
                }
                for g in self.growth_tables
            ],
            "moment_errors": (
                None if self.moment_errors is None else list(self.moment_errors)
            ),
            "tv_per_window": [
                None if v is None else v for v in self.tv_values
            ],
            "flags": dict(self.flags),
            "notes": list(self.notes),
        }

    def write_json(self, path):
        import json

        with open(path, "w", newline="\n") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_envelopes_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write("statistic,window_start,window_end,q50,q95,q99\n")
            for table in self.envelopes.values():
                for stat, start, end, q50, q95, q99 in table.rows():
                    fh.write(
                        f"{stat},{start},{end},{TRACE_FLOAT_FMT % q50},"
                        f"{TRACE_FLOAT_FMT % q95},{TRACE_FLOAT_FMT % q99}\n"
                    )

    def all_passed(self):
        return all(self.flags.values())


def _decay_check_windows(n_steps, windows):
    """Early/late windows for the decay ratio: [1e3, 2e3] vs the last 1e3
    iterations when the run is long enough, else the partition's ends."""
    if n_steps >= 3000:
        return ((1000, 2000), (n_steps - 1000, n_steps))
    return (windows[0], windows[-1])


def build_report(traces, target, adapter, burn_in, params, p_target=None,
                 config_hash=""):
    """Assemble every applicable monitor into one report.

    Which checks run depends on the adapter (decay ratio for the rank-one
    adapter, scaled-gap growth for covariance learning, acceptance
    targeting only where a target rate exists) and on the data (envelopes
    need >= 20 seeds, moment checks need analytic moments).
    """
    params.validate()
    if not traces:
        raise InsufficientTraces("no traces")
    n_steps = traces[0].n_steps
    for trace in traces:
        if trace.n_steps != n_steps:
            raise DimensionMismatch("traces differ in length")
    windows = make_windows(n_steps, burn_in, params.n_windows)
    flags = {}
    notes = []

    envelopes = {}
    if len(traces) >= 20:
        for stat in ENVELOPE_STATS[adapter]:
            table = boundedness_envelope(
                traces, stat, windows, drift_factor=params.b1_drift_factor
            )
            envelopes[stat] = table
            flags[f"b1_{stat}"] = table.passed
    else:
        notes.append(
            f"envelopes skipped: {len(traces)} seeds < 20 required"
        )

    acceptance_curve = tuple(
        pooled_acceptance_rate(traces, w) for w in windows
    )

    decay_windows = _decay_check_windows(n_steps, windows)
    decay_ratios = ()
    growth_tables = ()
    per_chain_verdicts = None
    if adapter == "mhcma":
        tables = [
            adaptation_decay(
                trace, decay_windows, threshold=params.b2_decay_threshold
            )
            for trace in traces
        ]
        decay_ratios = tuple(t.ratio for t in tables)
        pooled = pooled_adaptation_decay(
            traces, decay_windows, threshold=params.b2_decay_threshold
        )
        flags["b2_decay"] = pooled.passed
        per_chain_verdicts = [t.passed for t in tables]
    elif adapter == "am":
        growth_tables = tuple(
            scaled_gap_growth(
                trace, t_ref=params.am_growth_t_ref,
                factor=params.am_growth_factor,
            )
            for trace in traces
        )
        pooled = pooled_gap_growth(
            traces, t_ref=params.am_growth_t_ref,
            factor=params.am_growth_factor,
        )
        flags["b2_decay"] = pooled.passed
        per_chain_verdicts = [g.passed for g in growth_tables]
    if per_chain_verdicts is not None:
        n_fail = sum(1 for p in per_chain_verdicts if not p)
        if flags["b2_decay"] and n_fail > 0:
            notes.append(
                f"b2_decay verdict is pooled across chains; {n_fail} of "
                f"{len(traces)} chains fail the single-chain check"
            )
        elif not flags["b2_decay"] and n_fail < len(traces):
            notes.append(
                f"b2_decay pooled check fails although "
                f"{len(traces) - n_fail} of {len(traces)} chains pass "
                f"individually"
            )

    moment_errors = None
    if target.analytic_moments() is None:
        notes.append("moment check skipped: target moments unavailable")
    else:
        try:
            moment_errors = moment_check_pooled(traces, target, burn_in)
        except InsufficientSamples as exc:
            notes.append(f"moment check skipped: {exc}")
        else:
            flags["moments"] = bool(
                moment_errors[0] <= params.moment_mean_tol
                and moment_errors[1] <= params.moment_cov_tol
            )

    if adapter == "mhcma" and p_target is not None:
        late = acceptance_curve[-1]
        flags["acceptance_targeting"] = bool(
            abs(late - p_target) <= params.acceptance_tol
        )

    tv_values = []
    for window in windows:
        tv_values.append(
            _pooled_window_tv(traces, target, window, params)
        )
    if all(v is None for v in tv_values):
        notes.append("tv estimates skipped: too few samples per window")

    return DiagnosticsReport(
        adapter=adapter,
        n_traces=len(traces),
        n_steps=int(n_steps),
        burn_in=int(burn_in),
        config_hash=config_hash,
        windows=tuple(tuple(int(v) for v in w) for w in windows),
        envelopes=envelopes,
        acceptance_curve=acceptance_curve,
        decay_windows=tuple(tuple(int(v) for v in w) for w in decay_windows),
        decay_ratios=decay_ratios,
        growth_tables=growth_tables,
        moment_errors=moment_errors,
        tv_values=tuple(tv_values),
        flags=flags,
        notes=tuple(notes),
    )


def _pooled_window_tv(traces, target, window, params):
    """TV estimate for one window, samples pooled across traces.

    Returns None (rather than raising) when the pooled count is too small;
    report assembly treats that as "not informative here".
    """
    axis = params.tv_axis
    if not 0 <= axis < traces[0].dim:
        raise DomainError(f"tv_axis {axis} out of range")
    parts = []
    for trace in traces:
        mask = trace.window_mask(window)
        parts.append(trace.x[mask, axis])
    samples = np.concatenate(parts)
    bins = params.tv_bins
    if samples.shape[0] < 10 * bins:
        return None
    lo, hi = float(params.tv_range[0]), float(params.tv_range[1])
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    n = samples.shape[0]
    emp_lo = float(np.sum(samples < lo) / n)
    emp_hi = float(np.sum(samples >= hi) / n)
    tgt_masses, tgt_lo, tgt_hi = target.marginal_bin_masses(axis, edges)
    return tv_from_masses(counts / n, emp_lo, emp_hi,
                          tgt_masses, tgt_lo, tgt_hi)
