"""One Metropolis-Hastings transition with a gaussian random-walk proposal.

The proposal is N(x, sigma^2 C): a candidate is ``x + sigma * L z`` with
``L`` the cached Cholesky factor of the shape matrix ``C`` and ``z`` a vector
of standard normals.  Because the proposal density is symmetric in (x, y),
the acceptance probability reduces to ``min(1, g(y) / g(x))``, evaluated in
log space.

The random-stream discipline is part of the contract: every step draws
exactly ``dim`` standard normals (the candidate) followed by exactly one
uniform (the accept/reject coin), in that order, whether or not the step
could be decided cheaper.  That fixes the draw count per step, which is what
makes traces reproducible and lets the compiled and pure-Python chain loops
consume identical streams.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DomainError, InvalidState
from .linalg import matvec_lower
from .spd import SpdMatrix, factorize


@dataclass(frozen=True)
class ProposalParams:
    """Scale and shape of the random-walk proposal N(x, sigma^2 C)."""

    sigma: float
    C: SpdMatrix

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise DomainError(f"sigma must be > 0, got {self.sigma!r}")
        if not isinstance(self.C, SpdMatrix):
            object.__setattr__(self, "C", factorize(self.C))


@dataclass(frozen=True)
class StepOutcome:
    """Result of one transition attempt.

    ``accepted`` implies ``next_x is candidate``; otherwise ``next_x`` is
    the unchanged current state (bit-identical, no copy).  ``x_from`` is the
    state the step started at; adapters that accumulate accepted moves need
    the pair (x_from, next_x).
    """

    candidate: np.ndarray
    alpha: float
    accepted: bool
    next_x: np.ndarray
    x_from: np.ndarray
    log_density_next: float


def propose(rng, x, params):
    """Draw a candidate from N(x, sigma^2 C).

    Consumes exactly ``dim`` standard normals from ``rng``.
    """
    x = np.asarray(x, dtype=float)
    d = params.C.dim
    if x.shape != (d,):
        raise DimensionMismatch(f"state shape {x.shape} vs proposal dim {d}")
    z = rng.standard_normal(d)
    step = matvec_lower(params.C.chol, z)
    y = np.empty(d)
    sigma = params.sigma
    for i in range(d):
        y[i] = x[i] + sigma * step[i]
    return y


def acceptance_prob(target, x, y):
    """Symmetric-proposal acceptance probability min(1, g(y)/g(x)).

    Raises
    ------
    InvalidState
        If the current state has zero density; the chain must never sit at
        such a point (enforced at initialization).
    """
    lp_x = target.log_density(x)
    if lp_x == -math.inf:
        raise InvalidState("current state has zero target density")
    lp_y = target.log_density(y)
    return _alpha_from_log_densities(lp_x, lp_y)


def _alpha_from_log_densities(lp_x, lp_y):
    # pinned form, mirrored by the chain loops: branch on the sign of the
    # log-ratio, exponentiate only when it is negative
    dlp = lp_y - lp_x
    if dlp >= 0.0:
        return 1.0
    return math.exp(dlp)


def mh_step(rng, x, params, target, log_density_x=None):
    """One accept/reject transition from ``x``.

    Parameters
    ----------
    rng : numpy.random.Generator
    x : ndarray
        Current state; must have positive target density.
    params : ProposalParams
    target : TargetDensity
    log_density_x : float, optional
        Cached ``target.log_density(x)``; recomputed when omitted.

    Returns
    -------
    StepOutcome

    Notes
    -----
    Acceptance is the strict comparison ``u < alpha`` with ``u`` uniform on
    [0, 1): an alpha of 0 never accepts, an alpha of 1 always does.  The
    uniform is drawn even when ``alpha == 1`` so the stream position never
    depends on the data.
    """
    x = np.asarray(x, dtype=float)
    if log_density_x is None:
        log_density_x = target.log_density(x)
    if log_density_x == -math.inf:
        raise InvalidState("current state has zero target density")
    y = propose(rng, x, params)
    lp_y = target.log_density(y)
    alpha = _alpha_from_log_densities(log_density_x, lp_y)
    u = rng.random()
    accepted = bool(u < alpha)
    if accepted:
        return StepOutcome(y, alpha, True, y, x, lp_y)
    return StepOutcome(y, alpha, False, x, x, log_density_x)
