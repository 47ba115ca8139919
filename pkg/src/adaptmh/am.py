"""Adaptive Metropolis: proposal covariance learned from the whole history.

After a freeze period of ``t0`` steps the proposal shape is

    C_t = s_d * cov(X_0, ..., X_t) + s_d * eps * I

where ``cov`` is the sample covariance with divisor ``t`` (for ``t + 1``
samples) and the ``eps`` ridge keeps the proposal nondegenerate.  The state
carries the running mean and the centered sum of squared deviations
(Welford's accumulator), so each update costs O(d^2) yet reproduces the
two-pass batch value to near machine precision; ``am_batch_covariance`` is
that two-pass evaluation and serves as the oracle the recursion is tested
against.

The update loops here are the bit-level reference for the compiled chain
loop; keep evaluation order in sync with ``_loop.pyx``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DomainError, InsufficientHistory
from .linalg import max_abs_diff
from .spd import SpdMatrix, factorize

DEFAULT_EPS = 1e-6


def default_s_d(dim):
    """Standard scale 2.38^2 / dim from the optimal-scaling literature."""
    return 2.38 * 2.38 / dim


def default_t0(dim):
    """Default freeze horizon: two steps per coordinate."""
    return 2 * dim


@dataclass(frozen=True)
class AmConfig:
    """Parameters of the covariance-learning adapter.

    Attributes
    ----------
    t0 : int
        Freeze horizon; the proposal stays at ``C0`` while fewer than
        ``t0 + 1`` states have been seen.
    s_d : float
        Overall scaling of the learned covariance.
    eps : float
        Ridge weight; the proposal is bounded below by ``s_d * eps * I``.
    C0 : SpdMatrix
        Shape used during the freeze period.
    """

    t0: int
    s_d: float
    eps: float
    C0: SpdMatrix

    def __post_init__(self):
        if int(self.t0) != self.t0 or self.t0 < 1:
            raise DomainError(f"t0 must be an integer >= 1, got {self.t0!r}")
        if not self.s_d > 0.0:
            raise DomainError(f"s_d must be > 0, got {self.s_d!r}")
        if not self.eps > 0.0:
            raise DomainError(f"eps must be > 0, got {self.eps!r}")
        if not isinstance(self.C0, SpdMatrix):
            object.__setattr__(self, "C0", factorize(self.C0))

    @classmethod
    def with_defaults(cls, dim, t0=None, s_d=None, eps=None, C0=None):
        """Config with the standard defaults for dimension ``dim``."""
        if C0 is None:
            C0 = factorize(np.eye(dim))
        return cls(
            t0=default_t0(dim) if t0 is None else t0,
            s_d=default_s_d(dim) if s_d is None else s_d,
            eps=DEFAULT_EPS if eps is None else eps,
            C0=C0 if isinstance(C0, SpdMatrix) else factorize(C0),
        )


@dataclass(frozen=True)
class AmState:
    """Running history summary after consuming states X_0 .. X_t.

    ``mean`` is the arithmetic mean of all states seen and ``m2`` the
    centered sum of squared deviations (so ``m2 / t`` is the sample
    covariance with divisor ``t``).  States are immutable values: an update
    returns a fresh state, which makes checkpointing a plain reference copy.
    """

    t: int
    mean: np.ndarray
    m2: np.ndarray
    C: SpdMatrix


def am_init(x0, cfg):
    """State after seeing the initial point: t = 0, mean = x0, C = C0."""
    x0 = np.array(x0, dtype=float)
    if x0.shape != (cfg.C0.dim,):
        raise DimensionMismatch(
            f"x0 shape {x0.shape} does not match C0 dim {cfg.C0.dim}"
        )
    d = x0.shape[0]
    x0.setflags(write=False)
    m2 = np.zeros((d, d))
    m2.setflags(write=False)
    return AmState(t=0, mean=x0, m2=m2, C=cfg.C0)


def am_update(state, x_new, cfg):
    """Consume the next chain state and refresh the proposal shape.

    While the new count is below ``t0`` the shape stays frozen at ``C0``
    (and the history summary still accumulates); from then on the shape is
    the scaled-and-ridged sample covariance of everything seen, newest
    sample included.
    """
    x_new = np.asarray(x_new, dtype=float)
    d = state.mean.shape[0]
    if x_new.shape != (d,):
        raise DimensionMismatch(
            f"x_new shape {x_new.shape} does not match state dim {d}"
        )
    new_t = state.t + 1
    n = new_t + 1  # states seen, X_0 .. X_{new_t}
    mean = np.array(state.mean)
    m2 = np.array(state.m2)
    delta = np.empty(d)
    delta2 = np.empty(d)
    for i in range(d):
        delta[i] = x_new[i] - mean[i]
        mean[i] = mean[i] + delta[i] / n
        delta2[i] = x_new[i] - mean[i]
    for i in range(d):
        for j in range(i, d):
            v = m2[i, j] + delta[i] * delta2[j]
            m2[i, j] = v
            m2[j, i] = v
    if new_t < cfg.t0:
        c_new = state.C
    else:
        sd_t = cfg.s_d / new_t
        reg = cfg.s_d * cfg.eps
        mat = np.empty((d, d))
        for i in range(d):
            for j in range(i, d):
                v = sd_t * m2[i, j]
                if i == j:
                    v = v + reg
                mat[i, j] = v
                mat[j, i] = v
        c_new = factorize(mat)
    mean.setflags(write=False)
    m2.setflags(write=False)
    return AmState(t=new_t, mean=mean, m2=m2, C=c_new)


def am_batch_covariance(history, cfg):
    """Two-pass evaluation of the adapted shape from a full history.

    This is the oracle ``am_update`` must agree with: for ``n`` states it
    returns ``s_d * cov + s_d * eps * I`` where ``cov`` is the sample
    covariance with divisor ``n - 1``.

    Raises
    ------
    InsufficientHistory
        If fewer than two states are given.
    """
    hist = np.asarray(history, dtype=float)
    if hist.ndim != 2:
        raise DimensionMismatch("history must be a (n, dim) array")
    n = hist.shape[0]
    if n < 2:
        raise InsufficientHistory(f"need >= 2 states, got {n}")
    xbar = hist.sum(axis=0) / n
    dev = hist - xbar
    cov = dev.T @ dev / (n - 1)
    d = hist.shape[1]
    return factorize(cfg.s_d * cov + (cfg.s_d * cfg.eps) * np.eye(d))


def am_adaptation_gap(prev, next_state):
    """Entrywise max-norm of the one-step shape change."""
    if prev.C.dim != next_state.C.dim:
        raise DimensionMismatch("states have different dimensions")
    return max_abs_diff(next_state.C.mat, prev.C.mat)
