"""Rank-one covariance adaptation for random-walk Metropolis.

The proposal N(x, sigma^2 C) is tuned online along three coupled tracks:

* ``sigma`` multiplies by ``exp(beta (alpha - p_target) / (1 - p_target))``
  every step, pushing the long-run acceptance rate toward ``p_target``;
* an evolution path ``p_c`` accumulates accepted moves, exponentially
  discounted, in sigma-normalized coordinates;
* on acceptance the shape matrix gains a rank-one term along the path,
  ``(1 - c1) C + c1 p_c p_c^T``, then is rescaled to keep ``det C`` at its
  initial value, so the scale of the proposal lives in sigma alone.

Each acceptance also divides the learning rates ``beta`` and ``c1`` by
``gamma > 1``; because the rates are recomputed from the acceptance counter
``tau`` as ``beta0 / gamma^tau`` (never decayed multiplicatively in place)
the schedule is exact and the whole adapter state is reconstructible from
``tau``.  This geometric decay is what makes the adaptation diminishing.

The determinant of the rank-one update is evaluated with the rank-one
determinant identity rather than a refactorization:

    det((1 - c1) C + c1 p p^T)
        = (1 - c1)^d det(C) (1 + c1 / (1 - c1) * p^T C^{-1} p)

which is exact, O(d^2) given the factor of C, and shares its quadratic form
with the closed-form step distance of :func:`adaptmh.spd.rank_one_step_distance`.

Update loops here are the bit-level reference mirrored by ``_loop.pyx``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DomainError
from .linalg import quad_form_inv
from .spd import SpdMatrix, factorize

DEFAULT_P_TARGET = 0.234
DEFAULT_BETA0 = 1.0
DEFAULT_GAMMA = 1.01


def default_c_c(dim):
    """Default path discount sqrt((4 + 1/d) / (d + 4 + 2/d))."""
    return math.sqrt((4.0 + 1.0 / dim) / (dim + 4.0 + 2.0 / dim))


def default_c1_0(dim):
    """Default initial rank-one weight (5/3) / ((d + 1.3)^2 + 1)."""
    return (5.0 / 3.0) / ((dim + 1.3) ** 2 + 1.0)


@dataclass(frozen=True)
class MhCmaConfig:
    """Parameters of the rank-one adapter.

    ``det_c0`` (the determinant the shape matrix is pinned to) is computed
    once at construction and carried as the normalization constant.
    """

    p_target: float
    c_c: float
    c1_0: float
    beta0: float
    gamma: float
    sigma0: float
    C0: SpdMatrix

    def __post_init__(self):
        if not 0.0 < self.p_target < 1.0:
            raise DomainError(f"p_target must be in (0,1), got {self.p_target!r}")
        if not 0.0 < self.c_c <= 1.0:
            raise DomainError(f"c_c must be in (0,1], got {self.c_c!r}")
        if not 0.0 < self.c1_0 < 1.0:
            raise DomainError(f"c1_0 must be in (0,1), got {self.c1_0!r}")
        if not self.beta0 > 0.0:
            raise DomainError(f"beta0 must be > 0, got {self.beta0!r}")
        if not self.gamma > 1.0:
            raise DomainError(f"gamma must be > 1, got {self.gamma!r}")
        if not self.sigma0 > 0.0:
            raise DomainError(f"sigma0 must be > 0, got {self.sigma0!r}")
        if not isinstance(self.C0, SpdMatrix):
            object.__setattr__(self, "C0", factorize(self.C0))

    @classmethod
    def with_defaults(cls, dim, p_target=None, c_c=None, c1_0=None,
                      beta0=None, gamma=None, sigma0=None, C0=None):
        """Config with the standard defaults for dimension ``dim``."""
        if C0 is None:
            C0 = factorize(np.eye(dim))
        elif not isinstance(C0, SpdMatrix):
            C0 = factorize(C0)
        return cls(
            p_target=DEFAULT_P_TARGET if p_target is None else p_target,
            c_c=default_c_c(dim) if c_c is None else c_c,
            c1_0=default_c1_0(dim) if c1_0 is None else c1_0,
            beta0=DEFAULT_BETA0 if beta0 is None else beta0,
            gamma=DEFAULT_GAMMA if gamma is None else gamma,
            sigma0=1.0 if sigma0 is None else sigma0,
            C0=C0,
        )

    @property
    def det_c0(self):
        """Determinant every adapted shape matrix is normalized to."""
        return self.C0.det


@dataclass(frozen=True)
class MhCmaState:
    """Adapter state: scale, shape, evolution path, and decay counter.

    ``beta`` and ``c1`` always equal ``beta0 / gamma^tau`` and
    ``c1_0 / gamma^tau``; they are stored only to save the two ``pow``
    calls on reads.
    """

    sigma: float
    C: SpdMatrix
    p_c: np.ndarray
    tau: int
    beta: float
    c1: float


def mhcma_init(cfg):
    """Fresh state: sigma0, C0, zero path, zero acceptances."""
    d = cfg.C0.dim
    p_c = np.zeros(d)
    p_c.setflags(write=False)
    return MhCmaState(
        sigma=cfg.sigma0, C=cfg.C0, p_c=p_c, tau=0,
        beta=cfg.beta0, c1=cfg.c1_0,
    )


def sigma_log_step(beta, alpha, p_target):
    """Log-scale increment beta * (alpha - p_target) / (1 - p_target).

    Exposed separately because its magnitude is also the sigma part of the
    per-step adaptation gap recorded in traces.
    """
    den = 1.0 - p_target
    return beta * ((alpha - p_target) / den)


def sigma_update(sigma, beta, alpha, p_target):
    """Multiplicative scale update, applied whether or not the step accepted."""
    return sigma * math.exp(sigma_log_step(beta, alpha, p_target))


def path_update(p_c, c_c, x_new, x_old, sigma, accepted):
    """Discount the evolution path and, on acceptance, add the new move.

    The move is read in sigma-normalized coordinates ``(x_new - x_old) /
    sigma`` with ``sigma`` the pre-update scale; the discount pair
    ``(1 - c_c, sqrt(c_c (2 - c_c)))`` keeps the path's stationary scale
    independent of ``c_c``.  Rejected steps leave the path untouched.
    """
    if not accepted:
        return p_c
    p_c = np.asarray(p_c, dtype=float)
    x_new = np.asarray(x_new, dtype=float)
    x_old = np.asarray(x_old, dtype=float)
    d = p_c.shape[0]
    if x_new.shape != (d,) or x_old.shape != (d,):
        raise DimensionMismatch("path/state dimension mismatch")
    coef = math.sqrt(c_c * (2.0 - c_c))
    out = np.empty(d)
    for i in range(d):
        out[i] = (1.0 - c_c) * p_c[i] + coef * ((x_new[i] - x_old[i]) / sigma)
    out.setflags(write=False)
    return out


def cov_update(C, c1_t, p_c, accepted, det_C0):
    """Rank-one shape update with the determinant pinned to ``det_C0``.

    Returns ``C`` itself (no copy, bit-identical) whenever the update is an
    exact no-op: rejected step, dimension one (the determinant constraint
    leaves no freedom), zero path, or a learning rate that has decayed to
    zero.  Otherwise forms ``kappa ((1 - c1) C + c1 p p^T)`` with ``kappa``
    from the rank-one determinant identity.

    Raises
    ------
    NotPositiveDefinite
        Only as a numerical fault; the update is positive definite in exact
        arithmetic for c1 in (0, 1).
    """
    if not accepted:
        return C
    d = C.dim
    p_c = np.asarray(p_c, dtype=float)
    if p_c.shape != (d,):
        raise DimensionMismatch(
            f"path shape {p_c.shape} does not match shape-matrix dim {d}"
        )
    if not 0.0 <= c1_t < 1.0:
        raise DomainError(f"c1_t must be in [0,1), got {c1_t!r}")
    if d == 1:
        return C
    mahal = quad_form_inv(C.chol, p_c)
    if mahal == 0.0 or c1_t == 0.0:
        return C
    det_c = C.det
    ratio = c1_t / (1.0 - c1_t)
    bfac = 1.0 + ratio * mahal
    det_tilde = math.pow(1.0 - c1_t, d) * det_c * bfac
    kappa = math.pow(det_C0 / det_tilde, 1.0 / d)
    mat = np.empty((d, d))
    for i in range(d):
        for j in range(i, d):
            v = kappa * ((1.0 - c1_t) * C.mat[i, j] + c1_t * (p_c[i] * p_c[j]))
            mat[i, j] = v
            mat[j, i] = v
    return factorize(mat)


def mhcma_adapt(state, outcome, cfg):
    """One full adapter transition from a step outcome.

    Order is fixed: scale, then path, then shape, then counters; every
    update reads pre-update values (sigma in the path normalization is the
    old scale, the shape update uses the old c1 and the new path).  The
    learning-rate decay triggered by an acceptance only takes effect from
    the next iteration.
    """
    new_sigma = sigma_update(state.sigma, state.beta, outcome.alpha, cfg.p_target)
    new_p = path_update(
        state.p_c, cfg.c_c, outcome.next_x, outcome.x_from,
        state.sigma, outcome.accepted,
    )
    new_c = cov_update(state.C, state.c1, new_p, outcome.accepted, cfg.det_c0)
    if outcome.accepted:
        new_tau = state.tau + 1
        gpow = math.pow(cfg.gamma, float(new_tau))
        new_beta = cfg.beta0 / gpow
        new_c1 = cfg.c1_0 / gpow
    else:
        new_tau = state.tau
        new_beta = state.beta
        new_c1 = state.c1
    return MhCmaState(
        sigma=new_sigma, C=new_c, p_c=new_p, tau=new_tau,
        beta=new_beta, c1=new_c1,
    )
