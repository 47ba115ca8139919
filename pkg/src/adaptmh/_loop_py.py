"""Pure-Python chain loop: the bit-level reference for ``_loop.pyx``.

Both backends consume the same flat argument list and must return
bit-identical output for the same BitGenerator state.  Invariants that make
that hold:

* per step, exactly ``dim`` standard normals then one uniform are drawn;
  the numpy C API used by the compiled loop produces the same doubles as
  ``Generator.standard_normal`` / ``Generator.random`` on a shared PCG64;
* all dense kernels come from :mod:`adaptmh.linalg` (or are written here
  with the same loop order), and every transcendental goes through libm;
* the compiled twin is built with FP contraction disabled, so the rounding
  of every intermediate matches this file.

Change nothing here without changing ``_loop.pyx`` in lockstep.
"""

import math

import numpy as np

from .errors import InvalidState
from .linalg import (
    cholesky_lower,
    det_from_chol,
    log_det_from_chol,
    max_abs,
    quad_form_inv,
)
from .targets import TargetPack, pack_log_density

ADAPTER_FIXED = 0
ADAPTER_AM = 1
ADAPTER_MHCMA = 2


def run_chain(rng, n_steps, x0, target_kind, t_means, t_chols, t_log_norms,
              t_log_weights, banana_b, banana_v, adapter_kind, sigma0, c0,
              am_t0, am_s_d, am_eps, p_target, c_c, c1_0, beta0, gamma):
    """Run one chain; returns the trace columns as a dict of arrays."""
    d = x0.shape[0]
    n = int(n_steps)
    pack = TargetPack(target_kind, d, t_means, t_chols, t_log_norms,
                      t_log_weights, banana_b, banana_v)

    xs = np.empty((n, d))
    alphas = np.empty(n)
    accs = np.zeros(n, dtype=np.uint8)
    sigmas = np.empty(n)
    log_dets = np.empty(n)
    gaps = np.empty(n)
    taus = np.zeros(n, dtype=np.int64)
    cov_sups = np.empty(n)
    path_mahals = np.empty(n)

    x = np.array(x0, dtype=float)
    c_mat = np.array(c0, dtype=float)
    ell = cholesky_lower(c_mat)
    log_det_c = log_det_from_chol(ell)
    det_c = det_from_chol(ell)
    det_c0 = det_c
    cov_sup = max_abs(c_mat)
    sigma = float(sigma0)

    lp_x = pack_log_density(pack, x)
    if lp_x == -math.inf:
        raise InvalidState("x0 has zero target density")

    # covariance-learning state
    am_count = 1  # states seen, X_0 included
    mean = np.array(x0, dtype=float)
    m2 = np.zeros((d, d))
    reg = am_s_d * am_eps

    # rank-one adapter state
    p_c = np.zeros(d)
    tau = 0
    beta = float(beta0)
    c1 = float(c1_0)
    pref = math.sqrt((d - 1.0) / d)
    cc_coef = math.sqrt(c_c * (2.0 - c_c))
    den = 1.0 - p_target
    path_mahal = 0.0

    y = np.empty(d)
    delta = np.empty(d)
    delta2 = np.empty(d)
    c_new = np.empty((d, d))

    for k in range(n):
        z = rng.standard_normal(d)
        gap = 0.0

        # candidate y = x + sigma * L z, pinned accumulation order
        for i in range(d):
            acc = 0.0
            for j in range(i + 1):
                acc = acc + ell[i, j] * z[j]
            y[i] = x[i] + sigma * acc

        lp_y = pack_log_density(pack, y)
        dlp = lp_y - lp_x
        if dlp >= 0.0:
            alpha = 1.0
        else:
            alpha = math.exp(dlp)
        u = rng.random()
        accepted = u < alpha

        if adapter_kind == ADAPTER_FIXED:
            if accepted:
                for i in range(d):
                    x[i] = y[i]
                lp_x = lp_y

        elif adapter_kind == ADAPTER_AM:
            if accepted:
                for i in range(d):
                    x[i] = y[i]
                lp_x = lp_y
            am_count = am_count + 1
            t_new = am_count - 1
            for i in range(d):
                delta[i] = x[i] - mean[i]
                mean[i] = mean[i] + delta[i] / am_count
                delta2[i] = x[i] - mean[i]
            for i in range(d):
                for j in range(i, d):
                    v = m2[i, j] + delta[i] * delta2[j]
                    m2[i, j] = v
                    m2[j, i] = v
            if t_new >= am_t0:
                sd_t = am_s_d / t_new
                for i in range(d):
                    for j in range(i, d):
                        v = sd_t * m2[i, j]
                        if i == j:
                            v = v + reg
                        c_new[i, j] = v
                        c_new[j, i] = v
                # full-matrix scan: C0 may be asymmetric within tolerance
                gap = 0.0
                for i in range(d):
                    for j in range(d):
                        diff = abs(c_new[i, j] - c_mat[i, j])
                        if diff > gap:
                            gap = diff
                c_mat, c_new = c_new, c_mat
                ell = cholesky_lower(c_mat)
                log_det_c = log_det_from_chol(ell)
                cov_sup = max_abs(c_mat)

        else:  # ADAPTER_MHCMA
            expo = beta * ((alpha - p_target) / den)
            gap_sigma = abs(expo)
            new_sigma = sigma * math.exp(expo)
            gap_c = 0.0
            if accepted:
                for i in range(d):
                    p_c[i] = (1.0 - c_c) * p_c[i] + cc_coef * ((y[i] - x[i]) / sigma)
                for i in range(d):
                    x[i] = y[i]
                lp_x = lp_y
                mahal = quad_form_inv(ell, p_c)
                path_mahal = mahal
                gap_c = pref * math.log1p((c1 / (1.0 - c1)) * mahal)
                if d > 1 and mahal > 0.0 and c1 > 0.0:
                    ratio = c1 / (1.0 - c1)
                    bfac = 1.0 + ratio * mahal
                    det_tilde = math.pow(1.0 - c1, d) * det_c * bfac
                    kappa = math.pow(det_c0 / det_tilde, 1.0 / d)
                    for i in range(d):
                        for j in range(i, d):
                            v = kappa * ((1.0 - c1) * c_mat[i, j] + c1 * (p_c[i] * p_c[j]))
                            c_mat[i, j] = v
                            c_mat[j, i] = v
                    ell = cholesky_lower(c_mat)
                    log_det_c = log_det_from_chol(ell)
                    det_c = det_from_chol(ell)
                    cov_sup = max_abs(c_mat)
                tau = tau + 1
                gpow = math.pow(gamma, float(tau))
                beta = beta0 / gpow
                c1 = c1_0 / gpow
            else:
                path_mahal = quad_form_inv(ell, p_c)
            sigma = new_sigma
            gap = gap_c + gap_sigma

        for i in range(d):
            xs[k, i] = x[i]
        alphas[k] = alpha
        accs[k] = 1 if accepted else 0
        sigmas[k] = sigma
        log_dets[k] = log_det_c
        gaps[k] = gap
        taus[k] = tau
        cov_sups[k] = cov_sup
        path_mahals[k] = path_mahal

    return {
        "x": xs,
        "alpha": alphas,
        "accepted": accs,
        "sigma": sigmas,
        "log_det_c": log_dets,
        "adaptation_gap": gaps,
        "tau": taus,
        "cov_sup_norm": cov_sups,
        "path_mahal_sq": path_mahals,
    }
