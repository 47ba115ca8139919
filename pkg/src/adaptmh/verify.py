"""Randomized self-check suites, runnable from the command line.

Each suite draws ``cases`` random instances from a seeded generator and
checks an exact property at a pinned tolerance:

* ``spd`` — metric axioms of the shape-matrix distance (identity,
  symmetry, triangle inequality, congruence invariance, scaling law),
  plus a designed rejection of an asymmetric input;
* ``step_distance`` — the closed form for the distance moved by one
  determinant-conserving rank-one shape update against the metric
  evaluated on the actually updated matrix;
* ``am_equivalence`` — the recursive covariance accumulator against a
  direct batch covariance of the same history;
* ``stationarity`` — fixed-kernel chains on the 1-D standard normal
  recover its mean and variance.
"""

import math
from dataclasses import dataclass

import numpy as np

from .am import AmConfig, am_batch_covariance, am_init, am_update
from .backend import run_chain
from .errors import DomainError, NotSymmetric
from .linalg import max_abs, max_abs_diff
from .mh import ProposalParams
from .mhcma import cov_update
from .runner import chain_rng
from .spd import (
    factorize,
    mahalanobis_sq,
    rank_one_step_distance,
    spd_distance,
)
from .targets import Gaussian

SUITES = ("spd", "step_distance", "am_equivalence", "stationarity")

SPD_TOL = 1e-8
STEP_DISTANCE_TOL = 1e-9
AM_EQUIVALENCE_TOL = 1e-10
STATIONARITY_MEAN_TOL = 0.05
STATIONARITY_VAR_RANGE = (0.9, 1.1)


@dataclass(frozen=True)
class SuiteResult:
    """Outcome of one verification suite."""

    name: str
    cases: int
    checks: int
    failures: tuple
    max_error: float

    @property
    def passed(self):
        return not self.failures

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        return (
            f"suite {self.name}: {self.cases} cases, {self.checks} checks, "
            f"max_error {self.max_error:.3e} [{status}]"
        )


def _random_orthogonal(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def _random_spd(rng, d, log_spread=3.0):
    q = _random_orthogonal(rng, d)
    lam = np.exp(rng.uniform(-log_spread, log_spread, size=d))
    mat = (q * lam) @ q.T
    return factorize(0.5 * (mat + mat.T))


def _suite_spd(cases, seed):
    rng = np.random.default_rng(seed)
    failures = []
    max_err = 0.0
    checks = 0

    def check(label, err, tol=SPD_TOL):
        nonlocal max_err, checks
        checks += 1
        max_err = max(max_err, err)
        if not err <= tol:
            failures.append(f"{label}: error {err:.3e} > {tol:.0e}")

    for case in range(cases):
        d = int(rng.integers(1, 9))
        a = _random_spd(rng, d)
        b = _random_spd(rng, d)
        c = _random_spd(rng, d)
        d_ab = spd_distance(a, b)
        norm = max(1.0, d_ab)
        check(f"case {case} identity", spd_distance(a, a))
        check(
            f"case {case} symmetry",
            abs(d_ab - spd_distance(b, a)) / norm,
        )
        excess = d_ab - (spd_distance(a, c) + spd_distance(c, b))
        check(f"case {case} triangle", max(0.0, excess) / norm)
        m = _random_orthogonal(rng, d) * np.exp(
            rng.uniform(-1.0, 1.0, size=d)
        )
        a_m = factorize(_symmetrize(m.T @ a.mat @ m))
        b_m = factorize(_symmetrize(m.T @ b.mat @ m))
        check(
            f"case {case} congruence",
            abs(spd_distance(a_m, b_m) - d_ab) / norm,
        )
        s = math.exp(rng.uniform(-2.0, 2.0))
        expected = math.sqrt(d) * abs(math.log(s))
        check(
            f"case {case} scaling",
            abs(spd_distance(a, factorize(s * a.mat)) - expected)
            / max(1.0, expected),
        )

    checks += 1
    try:
        factorize(np.array([[1.0, 0.2], [0.0, 1.0]]))
    except NotSymmetric:
        pass  # the designed rejection
    else:
        failures.append("asymmetric matrix was accepted by factorize")
    return SuiteResult("spd", cases, checks, tuple(failures), max_err)


def _symmetrize(mat):
    return 0.5 * (mat + mat.T)


def _suite_step_distance(cases, seed):
    rng = np.random.default_rng(seed)
    failures = []
    max_err = 0.0
    for case in range(cases):
        d = int(rng.integers(2, 9))
        c = _random_spd(rng, d)
        c1 = 0.0 if rng.random() < 0.05 else float(rng.uniform(0.0, 0.9))
        if rng.random() < 0.05:
            p = np.zeros(d)
        else:
            p = rng.standard_normal(d) * math.exp(rng.uniform(-1.0, 1.0))
        predicted = rank_one_step_distance(c1, mahalanobis_sq(c, p), d)
        moved = spd_distance(c, cov_update(c, c1, p, True, c.det))
        if predicted > 0.0:
            err = abs(moved - predicted) / predicted
        else:
            err = abs(moved - predicted)
        max_err = max(max_err, err)
        if not err <= STEP_DISTANCE_TOL:
            failures.append(
                f"case {case} (dim {d}, c1 {c1:.3f}): relative error "
                f"{err:.3e} > {STEP_DISTANCE_TOL:.0e}"
            )
    return SuiteResult(
        "step_distance", cases, cases, tuple(failures), max_err
    )


def _suite_am_equivalence(cases, seed):
    rng = np.random.default_rng(seed)
    failures = []
    max_err = 0.0
    for case in range(cases):
        d = int(rng.integers(1, 6))
        cfg = AmConfig.with_defaults(d)
        n = int(rng.integers(cfg.t0 + 1, 1001))
        scale = np.exp(rng.uniform(-1.0, 1.0, size=d))
        shift = rng.uniform(-3.0, 3.0, size=d)
        history = rng.standard_normal((n + 1, d)) * scale + shift
        state = am_init(history[0], cfg)
        for k in range(1, n + 1):
            state = am_update(state, history[k], cfg)
        batch = am_batch_covariance(history, cfg)
        err = max_abs_diff(state.C.mat, batch.mat) / max_abs(batch.mat)
        max_err = max(max_err, err)
        if not err <= AM_EQUIVALENCE_TOL:
            failures.append(
                f"case {case} (dim {d}, {n} updates): relative error "
                f"{err:.3e} > {AM_EQUIVALENCE_TOL:.0e}"
            )
    return SuiteResult(
        "am_equivalence", cases, cases, tuple(failures), max_err
    )


def _suite_stationarity(cases, seed):
    # more chains than this adds nothing to a pooled moment check
    cases = min(cases, 64)
    n_steps = 20000
    burn_in = 2000
    target = Gaussian([0.0], [[1.0]])
    params = ProposalParams(sigma=2.38, C=factorize(np.eye(1)))
    pooled = []
    for k in range(cases):
        out = run_chain(
            chain_rng(seed + k), n_steps, np.zeros(1), target, params
        )
        pooled.append(out["x"][burn_in:, 0])
    samples = np.concatenate(pooled)
    mean = float(np.mean(samples))
    var = float(np.var(samples, ddof=1))
    lo, hi = STATIONARITY_VAR_RANGE
    failures = []
    if not abs(mean) <= STATIONARITY_MEAN_TOL:
        failures.append(
            f"pooled mean {mean:.4f} outside +-{STATIONARITY_MEAN_TOL}"
        )
    if not lo <= var <= hi:
        failures.append(f"pooled variance {var:.4f} outside [{lo}, {hi}]")
    max_err = max(abs(mean) / STATIONARITY_MEAN_TOL, abs(var - 1.0) / (hi - 1.0))
    return SuiteResult(
        "stationarity", cases, 2, tuple(failures), max_err
    )


_RUNNERS = {
    "spd": _suite_spd,
    "step_distance": _suite_step_distance,
    "am_equivalence": _suite_am_equivalence,
    "stationarity": _suite_stationarity,
}


def run_suite(name, cases, seed):
    """Run one suite (or all of them) and return a list of results.

    ``cases`` is the number of random instances; the stationarity suite
    reads it as the number of chains.
    """
    if cases < 1:
        raise DomainError("cases must be >= 1")
    if name == "all":
        return [_RUNNERS[s](cases, seed) for s in SUITES]
    if name not in _RUNNERS:
        raise DomainError(
            f"unknown suite {name!r}; pick from {', '.join(SUITES)} or all"
        )
    return [_RUNNERS[name](cases, seed)]
