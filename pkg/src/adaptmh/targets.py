"""Analytic target densities for the samplers and their diagnostics.

Three families, all with continuous densities on R^d and unbounded support:
multivariate gaussians, gaussian mixtures, and a "banana" target obtained by
bending a base gaussian with the volume-preserving twist

    y_1 = x_1,   y_2 = x_2 + b * (x_1^2 - v),   y_j = x_j (j >= 3)

where ``v`` is the base variance of the first coordinate.  Gaussian and
mixture targets expose exact moments for the moment-recovery checks; the
banana's moments have no convenient closed form and are reported as
unavailable (its 1-D marginals are still computable by quadrature, which is
what the histogram diagnostics use).

Log-densities are evaluated through a flat packed representation
(:class:`TargetPack`) shared verbatim with the chain-loop backends, so a
density value computed here is bit-identical to the one a running chain saw.
"""

import math

import numpy as np
from scipy.integrate import quad

from .errors import DimensionMismatch, DomainError
from .linalg import solve_lower
from .spd import SpdMatrix, factorize

KIND_GAUSSIAN = 0
KIND_BANANA = 1
KIND_MIXTURE = 2

WEIGHT_SUM_TOL = 1e-12

LOG_2PI = math.log(2.0 * math.pi)


class TargetPack:
    """Flat arrays describing a target, consumed by the chain loops.

    A mixture of ``n_comp`` gaussians covers all three families: plain
    gaussians are one-component mixtures, and the banana twist is applied to
    the evaluation point before the single base component is evaluated.
    """

    __slots__ = (
        "kind_id",
        "dim",
        "n_comp",
        "means",
        "chols",
        "log_norms",
        "log_weights",
        "banana_b",
        "banana_v",
    )

    def __init__(self, kind_id, dim, means, chols, log_norms, log_weights,
                 banana_b=0.0, banana_v=0.0):
        self.kind_id = int(kind_id)
        self.dim = int(dim)
        self.means = np.ascontiguousarray(means, dtype=float)
        self.chols = np.ascontiguousarray(chols, dtype=float)
        self.log_norms = np.ascontiguousarray(log_norms, dtype=float)
        self.log_weights = np.ascontiguousarray(log_weights, dtype=float)
        self.n_comp = self.means.shape[0]
        self.banana_b = float(banana_b)
        self.banana_v = float(banana_v)


def pack_log_density(pack, x):
    """Reference log-density evaluation on a :class:`TargetPack`.

    This is the pinned scalar algorithm: twist (banana only), then per
    component a forward substitution and squared-norm accumulation, then a
    streaming log-sum-exp.  ``_loop.pyx`` mirrors it operation for
    operation; keep the two in lockstep.
    """
    d = pack.dim
    if pack.kind_id == KIND_BANANA:
        x0 = x[0]
        twisted = np.array(x, dtype=float)
        twisted[1] = x[1] + pack.banana_b * (x0 * x0 - pack.banana_v)
        x = twisted
    n_comp = pack.n_comp
    lps = np.empty(n_comp)
    m = -math.inf
    for k in range(n_comp):
        r = np.empty(d)
        for i in range(d):
            r[i] = x[i] - pack.means[k, i]
        w = solve_lower(pack.chols[k], r)
        q = 0.0
        for i in range(d):
            q = q + w[i] * w[i]
        lp = pack.log_weights[k] + pack.log_norms[k] - 0.5 * q
        lps[k] = lp
        if lp > m:
            m = lp
    if m == -math.inf:
        return -math.inf
    s = 0.0
    for k in range(n_comp):
        s = s + math.exp(lps[k] - m)
    return m + math.log(s)


def _gaussian_log_norm(dim, log_det):
    return -0.5 * (dim * LOG_2PI + log_det)


def _normal_cdf(z):
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def _gaussian_bin_masses(mu, var, edges):
    """Bin masses and tail masses of a 1-D normal against ``edges``."""
    sd = math.sqrt(var)
    cdf = np.array([_normal_cdf((e - mu) / sd) for e in edges])
    masses = np.diff(cdf)
    return masses, cdf[0], 1.0 - cdf[-1]


class TargetDensity:
    """Base class: a target distribution the samplers can draw toward.

    Instances are immutable after construction and safe to share across
    concurrently running chains.

    Attributes
    ----------
    dim : int
    kind : str
        One of ``"gaussian"``, ``"banana"``, ``"gaussian_mixture"``.
    """

    kind = None

    def __init__(self, dim, pack):
        self.dim = int(dim)
        self._pack = pack

    @property
    def pack(self):
        """Flat representation consumed by the chain-loop backends."""
        return self._pack

    def log_density(self, x):
        """Log target density at ``x``, up to a fixed additive constant."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(
                f"point shape {x.shape} does not match target dim {self.dim}"
            )
        return pack_log_density(self._pack, x)

    def analytic_moments(self):
        """Exact ``(mean, cov)`` when known in closed form, else ``None``."""
        return None

    def marginal_bin_masses(self, axis, edges):
        """Masses of the 1-D marginal on ``axis`` over histogram bins.

        Parameters
        ----------
        axis : int
            Coordinate index in ``[0, dim)``.
        edges : array_like, increasing
            Bin edges.

        Returns
        -------
        (masses, lower_tail, upper_tail)
            ``masses[i]`` is the target mass of ``[edges[i], edges[i+1])``;
            the tails hold the mass below the first and above the last edge.
        """
        raise NotImplementedError

    def _check_axis(self, axis):
        if not 0 <= axis < self.dim:
            raise DomainError(f"axis {axis} out of range for dim {self.dim}")


class Gaussian(TargetDensity):
    """Multivariate normal N(mean, cov)."""

    kind = "gaussian"

    def __init__(self, mean, cov):
        mean = np.ascontiguousarray(mean, dtype=float)
        if mean.ndim != 1:
            raise DimensionMismatch("mean must be a vector")
        cov = cov if isinstance(cov, SpdMatrix) else factorize(cov)
        if cov.dim != mean.shape[0]:
            raise DimensionMismatch(
                f"mean dim {mean.shape[0]} vs cov dim {cov.dim}"
            )
        d = mean.shape[0]
        pack = TargetPack(
            KIND_GAUSSIAN,
            d,
            mean[None, :],
            cov.chol[None, :, :],
            [_gaussian_log_norm(d, cov.log_det)],
            [0.0],
        )
        super().__init__(d, pack)
        self.mean = mean
        self.cov = cov

    def analytic_moments(self):
        return self.mean.copy(), np.array(self.cov.mat)

    def marginal_bin_masses(self, axis, edges):
        self._check_axis(axis)
        return _gaussian_bin_masses(
            self.mean[axis], self.cov.mat[axis, axis], edges
        )


class Banana(TargetDensity):
    """Base gaussian bent along the first coordinate.

    The density at ``x`` is the base gaussian density at the twisted point
    ``(x_1, x_2 + b (x_1^2 - v), x_3, ...)`` with ``v = base_cov[0, 0]``.
    The twist has unit Jacobian, so this is a proper density; with
    ``b = 0`` it degenerates to the base gaussian.  No closed-form moments.
    """

    kind = "banana"

    def __init__(self, b, base_cov, base_mean=None):
        cov = base_cov if isinstance(base_cov, SpdMatrix) else factorize(base_cov)
        d = cov.dim
        if d < 2:
            raise DimensionMismatch("banana target needs dim >= 2")
        if base_mean is None:
            base_mean = np.zeros(d)
        base_mean = np.ascontiguousarray(base_mean, dtype=float)
        if base_mean.shape != (d,):
            raise DimensionMismatch("base_mean shape does not match base_cov")
        v = float(cov.mat[0, 0])
        pack = TargetPack(
            KIND_BANANA,
            d,
            base_mean[None, :],
            cov.chol[None, :, :],
            [_gaussian_log_norm(d, cov.log_det)],
            [0.0],
            banana_b=float(b),
            banana_v=v,
        )
        super().__init__(d, pack)
        self.b = float(b)
        self.base_mean = base_mean
        self.base_cov = cov

    def marginal_bin_masses(self, axis, edges):
        self._check_axis(axis)
        if axis != 1:
            # the twist only remaps coordinate 1; every other marginal is
            # the base gaussian's (unit-Jacobian change of variables)
            return _gaussian_bin_masses(
                self.base_mean[axis], self.base_cov.mat[axis, axis], edges
            )
        return self._twisted_marginal(edges)

    def _twisted_marginal(self, edges):
        # X_1 = Y_1 - b (Y_0^2 - v) with Y the base gaussian; condition on
        # Y_0 = u and integrate the conditional normal CDF over u
        m = self.base_mean
        s = self.base_cov.mat
        s00 = s[0, 0]
        slope = s[0, 1] / s00
        cvar = s[1, 1] - s[0, 1] * slope
        csd = math.sqrt(cvar)
        sd0 = math.sqrt(s00)
        b = self.b
        v = self._pack.banana_v

        def cdf_at(e):
            def integrand(u):
                pdf0 = math.exp(-0.5 * ((u - m[0]) / sd0) ** 2) / (
                    sd0 * math.sqrt(2.0 * math.pi)
                )
                cmean = m[1] + slope * (u - m[0])
                z = (e + b * (u * u - v) - cmean) / csd
                return pdf0 * _normal_cdf(z)

            val, _ = quad(integrand, -np.inf, np.inf, limit=200)
            return val

        cdf = np.array([cdf_at(e) for e in edges])
        masses = np.diff(cdf)
        return masses, cdf[0], 1.0 - cdf[-1]


class GaussianMixture(TargetDensity):
    """Finite mixture of gaussians with positive weights summing to one."""

    kind = "gaussian_mixture"

    def __init__(self, weights, means, covs):
        weights = np.ascontiguousarray(weights, dtype=float)
        if weights.ndim != 1 or weights.shape[0] < 1:
            raise DimensionMismatch("weights must be a nonempty vector")
        if np.any(weights <= 0.0):
            raise DomainError("mixture weights must be strictly positive")
        if abs(float(np.sum(weights)) - 1.0) > WEIGHT_SUM_TOL:
            raise DomainError(
                f"mixture weights sum to {np.sum(weights)!r}, not 1"
            )
        covs = [c if isinstance(c, SpdMatrix) else factorize(c) for c in covs]
        try:
            means = np.ascontiguousarray(means, dtype=float)
        except ValueError as exc:
            raise DimensionMismatch("component means disagree on dim") from exc
        if means.ndim != 2:
            raise DimensionMismatch("means must be a (n_comp, dim) array")
        n_comp, d = means.shape
        if len(covs) != n_comp or weights.shape[0] != n_comp:
            raise DimensionMismatch("weights, means and covs disagree on n_comp")
        for c in covs:
            if c.dim != d:
                raise DimensionMismatch("component cov dim mismatch")
        pack = TargetPack(
            KIND_MIXTURE,
            d,
            means,
            np.stack([c.chol for c in covs]),
            [_gaussian_log_norm(d, c.log_det) for c in covs],
            np.log(weights),
        )
        super().__init__(d, pack)
        self.weights = weights
        self.means = means
        self.covs = covs

    def analytic_moments(self):
        mean = np.zeros(self.dim)
        for w, m in zip(self.weights, self.means):
            mean += w * m
        cov = np.zeros((self.dim, self.dim))
        for w, m, c in zip(self.weights, self.means, self.covs):
            cov += w * (c.mat + np.outer(m, m))
        cov -= np.outer(mean, mean)
        return mean, cov

    def marginal_bin_masses(self, axis, edges):
        self._check_axis(axis)
        edges = np.asarray(edges, dtype=float)
        masses = np.zeros(len(edges) - 1)
        lo = 0.0
        hi = 0.0
        for w, m, c in zip(self.weights, self.means, self.covs):
            bm, bl, bh = _gaussian_bin_masses(m[axis], c.mat[axis, axis], edges)
            masses += w * bm
            lo += w * bl
            hi += w * bh
        return masses, lo, hi


def log_density(target, x):
    """Log density of ``target`` at ``x`` (module-level convenience)."""
    return target.log_density(x)


def analytic_moments(target):
    """Exact ``(mean, cov)`` of ``target``, or ``None`` if not known."""
    return target.analytic_moments()


def make_target(kind, **params):
    """Construct a target by kind name.

    Recognized kinds: ``gaussian`` (mean, cov), ``banana`` (b, base_cov,
    optional base_mean), ``gaussian_mixture``/``mixture`` (weights, means,
    covs).
    """
    kind = kind.strip().lower()
    if kind == "gaussian":
        return Gaussian(**params)
    if kind == "banana":
        return Banana(**params)
    if kind in ("gaussian_mixture", "mixture"):
        return GaussianMixture(**params)
    raise DomainError(f"unknown target kind {kind!r}")
