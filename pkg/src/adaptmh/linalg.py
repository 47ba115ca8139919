"""Small dense kernels with a pinned floating-point evaluation order.

Every routine here is the reference for an identical C loop in
``_loop.pyx``.  The two backends must produce bit-identical chains, so the
summation order, the association of products, and the points where values
round to double are all part of the contract.  Keep the bodies boring:
plain loops, no fused operations, no reordering.  If you change anything
here, change ``_loop.pyx`` to match.

Dimensions in this package are desk-scale (a handful of coordinates), so
hand-rolled O(d^2)/O(d^3) loops cost nothing and buy exact control that a
BLAS call would not give.
"""

import math

import numpy as np

from .errors import NotPositiveDefinite


def cholesky_lower(a):
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Parameters
    ----------
    a : ndarray of shape (d, d)
        Symmetric matrix; only the lower triangle is read.

    Returns
    -------
    ndarray of shape (d, d)
        Lower triangular ``L`` with ``L @ L.T == a``.

    Raises
    ------
    NotPositiveDefinite
        If a pivot is not strictly positive.
    """
    d = a.shape[0]
    ell = np.zeros((d, d))
    for i in range(d):
        for j in range(i + 1):
            acc = a[i, j]
            for k in range(j):
                acc = acc - ell[i, k] * ell[j, k]
            if i == j:
                if not acc > 0.0:
                    raise NotPositiveDefinite(
                        f"pivot {i} is {acc!r}; matrix is not positive definite"
                    )
                ell[i, i] = math.sqrt(acc)
            else:
                ell[i, j] = acc / ell[j, j]
    return ell


def solve_lower(ell, b):
    """Solve ``ell @ w = b`` for lower triangular ``ell`` by forward substitution."""
    d = ell.shape[0]
    w = np.zeros(d)
    for i in range(d):
        acc = b[i]
        for j in range(i):
            acc = acc - ell[i, j] * w[j]
        w[i] = acc / ell[i, i]
    return w


def matvec_lower(ell, z):
    """Product ``ell @ z`` for lower triangular ``ell``, fixed accumulation order."""
    d = ell.shape[0]
    out = np.zeros(d)
    for i in range(d):
        acc = 0.0
        for j in range(i + 1):
            acc = acc + ell[i, j] * z[j]
        out[i] = acc
    return out


def quad_form_inv(ell, p):
    """Quadratic form ``p.T @ inv(ell @ ell.T) @ p`` given the Cholesky factor."""
    w = solve_lower(ell, p)
    d = ell.shape[0]
    acc = 0.0
    for i in range(d):
        acc = acc + w[i] * w[i]
    return float(acc)


def log_det_from_chol(ell):
    """``log det(ell @ ell.T)`` from the factor's diagonal."""
    d = ell.shape[0]
    acc = 0.0
    for i in range(d):
        acc = acc + math.log(ell[i, i])
    return 2.0 * acc


def det_from_chol(ell):
    """``det(ell @ ell.T)`` from the factor's diagonal."""
    d = ell.shape[0]
    acc = 1.0
    for i in range(d):
        acc = acc * ell[i, i]
    return float(acc * acc)


def max_abs(a):
    """Largest absolute entry (sup norm over entries)."""
    return float(np.max(np.abs(a)))


def max_abs_diff(a, b):
    """Largest absolute entrywise difference."""
    return float(np.max(np.abs(a - b)))
