"""Symmetric positive definite matrices and the log-eigenvalue metric.

The proposal covariances handled by the samplers live on the SPD cone, and
the natural yardstick there is the affine-invariant metric

    d(A, B) = sqrt(sum_i log^2 lambda_i(inv(A) B)).

Distances between successive adapted covariances measured this way are what
the diminishing-adaptation diagnostics consume.  ``rank_one_step_distance``
evaluates the same metric in closed form for the one-step move made by the
rank-one covariance update, which costs O(d) given the quadratic form
instead of an O(d^3) eigensolve.
"""

import math
import warnings

import numpy as np

from .errors import DimensionMismatch, DomainError, NotSymmetric
from .linalg import (
    cholesky_lower,
    det_from_chol,
    log_det_from_chol,
    max_abs_diff,
    quad_form_inv,
    solve_lower,
)

SYMMETRY_TOL = 1e-12
EIGENVALUE_FLOOR = 1e-300


class SpdMatrix:
    """A symmetric positive definite matrix with its Cholesky factor attached.

    Factorization happens eagerly at construction, so holding an
    ``SpdMatrix`` is proof the matrix passed the symmetry and positivity
    checks; downstream code never refactors.  The stored arrays are
    read-only: instances are values, safe to share between chains.

    Attributes
    ----------
    dim : int
        Matrix order.
    mat : ndarray of shape (dim, dim)
        The matrix itself.
    chol : ndarray of shape (dim, dim)
        Lower triangular factor with ``chol @ chol.T == mat``.
    log_det : float
        ``log det(mat)``, taken from the factor's diagonal.
    """

    __slots__ = ("dim", "mat", "chol", "log_det")

    def __init__(self, mat):
        mat = np.array(mat, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {mat.shape}")
        if mat.shape[0] < 1:
            raise DimensionMismatch("matrix must have order >= 1")
        if not np.all(np.isfinite(mat)):
            raise DomainError("matrix entries must be finite")
        asym = max_abs_diff(mat, mat.T)
        if asym > SYMMETRY_TOL:
            raise NotSymmetric(
                f"largest asymmetry {asym:.3e} exceeds tolerance {SYMMETRY_TOL:.0e}"
            )
        chol = cholesky_lower(mat)
        mat.setflags(write=False)
        chol.setflags(write=False)
        self.dim = mat.shape[0]
        self.mat = mat
        self.chol = chol
        self.log_det = log_det_from_chol(chol)

    @property
    def det(self):
        """``det(mat)`` as the squared product of the factor's diagonal."""
        return det_from_chol(self.chol)

    def __repr__(self):
        return f"SpdMatrix(dim={self.dim}, log_det={self.log_det:.6g})"


def factorize(mat):
    """Validate ``mat`` and wrap it as an :class:`SpdMatrix`.

    Raises
    ------
    NotSymmetric
        If ``mat`` differs from its transpose by more than 1e-12 in any entry.
    NotPositiveDefinite
        If the Cholesky factorization hits a non-positive pivot.
    """
    return SpdMatrix(mat)


def spd_distance(a, b):
    """Log-eigenvalue distance between two SPD matrices.

    Evaluates ``sqrt(sum_i log^2 lambda_i)`` where ``lambda_i`` are the
    eigenvalues of ``inv(a) @ b``.  Rather than forming that nonsymmetric
    product, the eigenvalues are taken from the congruent symmetric matrix
    ``inv(L) @ b @ inv(L).T`` with ``L`` the factor of ``a``, which has the
    same spectrum and keeps the eigensolve in symmetric territory.

    Parameters
    ----------
    a, b : SpdMatrix

    Returns
    -------
    float
        Nonnegative; zero iff ``a`` and ``b`` are equal (up to rounding).
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"operand dims differ: {a.dim} vs {b.dim}")
    d = a.dim
    ell = a.chol
    m1 = np.empty((d, d))
    for j in range(d):
        m1[:, j] = solve_lower(ell, b.mat[:, j])
    m2 = np.empty((d, d))
    for j in range(d):
        m2[:, j] = solve_lower(ell, m1[j, :])
    w = m2.T
    lam = np.linalg.eigvalsh(w)
    if lam[0] < EIGENVALUE_FLOOR:
        warnings.warn(
            "whitened eigenvalue below floor; clamping before log "
            f"(smallest was {lam[0]:.3e})",
            RuntimeWarning,
            stacklevel=2,
        )
        lam = np.maximum(lam, EIGENVALUE_FLOOR)
    logs = np.log(lam)
    return float(math.sqrt(np.dot(logs, logs)))


def mahalanobis_sq(c, p):
    """Quadratic form ``p.T @ inv(c) @ p`` via two triangular passes.

    Parameters
    ----------
    c : SpdMatrix
    p : ndarray of shape (c.dim,)
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (c.dim,):
        raise DimensionMismatch(f"vector shape {p.shape} does not match dim {c.dim}")
    return quad_form_inv(c.chol, p)


def rank_one_step_distance(c1, mahal_sq, dim):
    """Distance moved by one determinant-preserving rank-one covariance update.

    For the update ``C -> kappa * ((1 - c1) * C + c1 * p p.T)`` with ``kappa``
    chosen to keep the determinant fixed, the log-eigenvalue distance between
    the old and new matrix depends only on ``c1``, the quadratic form
    ``mahal_sq = p.T inv(C) p`` and the dimension:

        sqrt((dim - 1) / dim) * log(1 + c1 * mahal_sq / (1 - c1))

    Zero when ``c1 == 0``, when ``mahal_sq == 0``, or when ``dim == 1``
    (in one dimension the determinant constraint pins the matrix entirely).

    Parameters
    ----------
    c1 : float
        Update weight, ``0 <= c1 < 1``.
    mahal_sq : float
        Quadratic form of the update direction, ``>= 0``.
    dim : int
        Matrix order, ``>= 1``.
    """
    if not 0.0 <= c1 < 1.0:
        raise DomainError(f"c1 must lie in [0, 1), got {c1!r}")
    if not mahal_sq >= 0.0:
        raise DomainError(f"mahal_sq must be >= 0, got {mahal_sq!r}")
    dim = int(dim)
    if dim < 1:
        raise DomainError(f"dim must be >= 1, got {dim}")
    pref = math.sqrt((dim - 1.0) / dim)
    arg = (c1 / (1.0 - c1)) * mahal_sq
    return pref * math.log1p(arg)
