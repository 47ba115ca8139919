# cython: language_level=3
"""Compiled chain loop: C mirror of ``_loop_py.run_chain``.

Bit-identical to the pure-Python reference by construction: same draw
sequence from the same BitGenerator (via numpy's C distribution API), same
floating-point operation order (the build disables FP contraction), same
libm transcendentals.  Any change to ``_loop_py.py`` or
``adaptmh/linalg.py`` must be transcribed here verbatim.

The hot loop runs without the GIL; the BitGenerator lock is held for the
whole run (each chain owns a private generator, so there is no contention).
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport INFINITY, exp, fabs, log, log1p, pow, sqrt
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    random_standard_normal,
    random_standard_uniform,
)

from .errors import InvalidState, NotPositiveDefinite

cnp.import_array()

ADAPTER_FIXED = 0
ADAPTER_AM = 1
ADAPTER_MHCMA = 2


cdef int _chol(double[:, ::1] a, double[:, ::1] ell, int d) noexcept nogil:
    # mirror of linalg.cholesky_lower; returns 1-based failing pivot, 0 on ok
    cdef int i, j, k
    cdef double acc
    for i in range(d):
        for j in range(i + 1):
            acc = a[i, j]
            for k in range(j):
                acc = acc - ell[i, k] * ell[j, k]
            if i == j:
                if not acc > 0.0:
                    return i + 1
                ell[i, i] = sqrt(acc)
            else:
                ell[i, j] = acc / ell[j, j]
    return 0


cdef double _log_det_from_chol(double[:, ::1] ell, int d) noexcept nogil:
    cdef int i
    cdef double acc = 0.0
    for i in range(d):
        acc = acc + log(ell[i, i])
    return 2.0 * acc


cdef double _det_from_chol(double[:, ::1] ell, int d) noexcept nogil:
    cdef int i
    cdef double acc = 1.0
    for i in range(d):
        acc = acc * ell[i, i]
    return acc * acc


cdef double _quad_form_inv(double[:, ::1] ell, double[::1] p,
                           double[::1] w, int d) noexcept nogil:
    # mirror of linalg.quad_form_inv (solve_lower then sum of squares)
    cdef int i, j
    cdef double acc
    for i in range(d):
        acc = p[i]
        for j in range(i):
            acc = acc - ell[i, j] * w[j]
        w[i] = acc / ell[i, i]
    acc = 0.0
    for i in range(d):
        acc = acc + w[i] * w[i]
    return acc


cdef double _max_abs(double[:, ::1] a, int d) noexcept nogil:
    cdef int i, j
    cdef double m = 0.0, v
    for i in range(d):
        for j in range(d):
            v = fabs(a[i, j])
            if v > m:
                m = v
    return m


cdef double _log_density(int kind, int n_comp, int d,
                         const double[:, ::1] means,
                         const double[:, :, ::1] chols,
                         const double[::1] log_norms,
                         const double[::1] log_weights,
                         double banana_b, double banana_v,
                         double[::1] x_in, double[::1] x_buf,
                         double[::1] r, double[::1] w,
                         double[::1] lps) noexcept nogil:
    # mirror of targets.pack_log_density
    cdef int i, j, k
    cdef double x0v, acc, q, lp, m, s
    cdef double[::1] x = x_in
    if kind == 1:  # banana twist
        x0v = x_in[0]
        for i in range(d):
            x_buf[i] = x_in[i]
        x_buf[1] = x_in[1] + banana_b * (x0v * x0v - banana_v)
        x = x_buf
    m = -INFINITY
    for k in range(n_comp):
        for i in range(d):
            r[i] = x[i] - means[k, i]
        for i in range(d):
            acc = r[i]
            for j in range(i):
                acc = acc - chols[k, i, j] * w[j]
            w[i] = acc / chols[k, i, i]
        q = 0.0
        for i in range(d):
            q = q + w[i] * w[i]
        lp = log_weights[k] + log_norms[k] - 0.5 * q
        lps[k] = lp
        if lp > m:
            m = lp
    if m == -INFINITY:
        return m
    s = 0.0
    for k in range(n_comp):
        s = s + exp(lps[k] - m)
    return m + log(s)


def run_chain(rng, n_steps, x0, target_kind, t_means, t_chols, t_log_norms,
              t_log_weights, banana_b, banana_v, adapter_kind, sigma0, c0,
              am_t0, am_s_d, am_eps, p_target, c_c, c1_0, beta0, gamma):
    """Run one chain; returns the trace columns as a dict of arrays."""
    cdef int d = <int> x0.shape[0]
    cdef int n = <int> n_steps
    cdef int kind = <int> target_kind
    cdef int adapter = <int> adapter_kind
    cdef long t0_am = <long> am_t0

    cdef const double[:, ::1] means = np.ascontiguousarray(t_means, dtype=np.float64)
    cdef const double[:, :, ::1] chols = np.ascontiguousarray(t_chols, dtype=np.float64)
    cdef const double[::1] log_norms = np.ascontiguousarray(t_log_norms, dtype=np.float64)
    cdef const double[::1] log_weights = np.ascontiguousarray(t_log_weights, dtype=np.float64)
    cdef int n_comp = <int> means.shape[0]
    cdef double bb = banana_b
    cdef double bv = banana_v
    cdef double sd_am = am_s_d
    cdef double eps_am = am_eps
    cdef double pt = p_target
    cdef double ccc = c_c
    cdef double c10 = c1_0
    cdef double b0 = beta0
    cdef double gam = gamma

    xs_arr = np.empty((n, d))
    alphas_arr = np.empty(n)
    accs_arr = np.zeros(n, dtype=np.uint8)
    sigmas_arr = np.empty(n)
    log_dets_arr = np.empty(n)
    gaps_arr = np.empty(n)
    taus_arr = np.zeros(n, dtype=np.int64)
    cov_sups_arr = np.empty(n)
    path_mahals_arr = np.empty(n)

    cdef double[:, ::1] xs = xs_arr
    cdef double[::1] alphas = alphas_arr
    cdef unsigned char[::1] accs = accs_arr
    cdef double[::1] sigmas = sigmas_arr
    cdef double[::1] log_dets = log_dets_arr
    cdef double[::1] gaps = gaps_arr
    cdef cnp.int64_t[::1] taus = taus_arr
    cdef double[::1] cov_sups = cov_sups_arr
    cdef double[::1] path_mahals = path_mahals_arr

    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef double[:, ::1] c_mat = np.array(c0, dtype=np.float64)
    cdef double[:, ::1] c_new = np.empty((d, d))
    cdef double[:, ::1] ell = np.zeros((d, d))
    cdef double[::1] y = np.empty(d)
    cdef double[::1] z = np.empty(d)
    cdef double[::1] mean = np.array(x0, dtype=np.float64)
    cdef double[:, ::1] m2 = np.zeros((d, d))
    cdef double[::1] delta = np.empty(d)
    cdef double[::1] delta2 = np.empty(d)
    cdef double[::1] p_c = np.zeros(d)
    cdef double[::1] r_buf = np.empty(d)
    cdef double[::1] w_buf = np.empty(d)
    cdef double[::1] x_buf = np.empty(d)
    cdef double[::1] lps = np.empty(n_comp)

    cdef bitgen_t *bitgen = <bitgen_t *> PyCapsule_GetPointer(
        rng.bit_generator.capsule, "BitGenerator"
    )

    cdef int status = _chol(c_mat, ell, d)
    if status:
        raise NotPositiveDefinite(f"initial shape matrix: pivot {status - 1}")
    cdef double log_det_c = _log_det_from_chol(ell, d)
    cdef double det_c = _det_from_chol(ell, d)
    cdef double det_c0 = det_c
    cdef double cov_sup = _max_abs(c_mat, d)
    cdef double sigma = sigma0

    cdef double lp_x = _log_density(kind, n_comp, d, means, chols, log_norms,
                                    log_weights, bb, bv, x, x_buf, r_buf,
                                    w_buf, lps)
    if lp_x == -INFINITY:
        raise InvalidState("x0 has zero target density")

    cdef long am_count = 1
    cdef double reg = sd_am * eps_am

    cdef long tau = 0
    cdef double beta = b0
    cdef double c1 = c10
    cdef double pref = sqrt((d - 1.0) / d)
    cdef double cc_coef = sqrt(ccc * (2.0 - ccc))
    cdef double den = 1.0 - pt
    cdef double path_mahal = 0.0

    cdef int k, i, j, accepted
    cdef long t_new
    cdef double acc, lp_y, dlp, alpha, u, gap, v, diff, sd_t
    cdef double expo, gap_sigma, new_sigma, gap_c, mahal, ratio, bfac
    cdef double det_tilde, kappa, gpow

    status = 0
    with rng.bit_generator.lock, nogil:
        for k in range(n):
            for i in range(d):
                z[i] = random_standard_normal(bitgen)
            gap = 0.0

            for i in range(d):
                acc = 0.0
                for j in range(i + 1):
                    acc = acc + ell[i, j] * z[j]
                y[i] = x[i] + sigma * acc

            lp_y = _log_density(kind, n_comp, d, means, chols, log_norms,
                                log_weights, bb, bv, y, x_buf, r_buf,
                                w_buf, lps)
            dlp = lp_y - lp_x
            if dlp >= 0.0:
                alpha = 1.0
            else:
                alpha = exp(dlp)
            u = random_standard_uniform(bitgen)
            accepted = u < alpha

            if adapter == 0:  # fixed
                if accepted:
                    for i in range(d):
                        x[i] = y[i]
                    lp_x = lp_y

            elif adapter == 1:  # covariance learning
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
                if t_new >= t0_am:
                    sd_t = sd_am / t_new
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
                            diff = fabs(c_new[i, j] - c_mat[i, j])
                            if diff > gap:
                                gap = diff
                    for i in range(d):
                        for j in range(d):
                            c_mat[i, j] = c_new[i, j]
                    status = _chol(c_mat, ell, d)
                    if status:
                        break
                    log_det_c = _log_det_from_chol(ell, d)
                    cov_sup = _max_abs(c_mat, d)

            else:  # rank-one adaptation
                expo = beta * ((alpha - pt) / den)
                gap_sigma = fabs(expo)
                new_sigma = sigma * exp(expo)
                gap_c = 0.0
                if accepted:
                    for i in range(d):
                        p_c[i] = (1.0 - ccc) * p_c[i] + cc_coef * ((y[i] - x[i]) / sigma)
                    for i in range(d):
                        x[i] = y[i]
                    lp_x = lp_y
                    mahal = _quad_form_inv(ell, p_c, w_buf, d)
                    path_mahal = mahal
                    gap_c = pref * log1p((c1 / (1.0 - c1)) * mahal)
                    if d > 1 and mahal > 0.0 and c1 > 0.0:
                        ratio = c1 / (1.0 - c1)
                        bfac = 1.0 + ratio * mahal
                        det_tilde = pow(1.0 - c1, d) * det_c * bfac
                        kappa = pow(det_c0 / det_tilde, 1.0 / d)
                        for i in range(d):
                            for j in range(i, d):
                                v = kappa * ((1.0 - c1) * c_mat[i, j] + c1 * (p_c[i] * p_c[j]))
                                c_mat[i, j] = v
                                c_mat[j, i] = v
                        status = _chol(c_mat, ell, d)
                        if status:
                            break
                        log_det_c = _log_det_from_chol(ell, d)
                        det_c = _det_from_chol(ell, d)
                        cov_sup = _max_abs(c_mat, d)
                    tau = tau + 1
                    gpow = pow(gam, <double> tau)
                    beta = b0 / gpow
                    c1 = c10 / gpow
                else:
                    path_mahal = _quad_form_inv(ell, p_c, w_buf, d)
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

    if status:
        raise NotPositiveDefinite(
            f"adapted shape matrix lost positive definiteness (pivot {status - 1})"
        )

    return {
        "x": xs_arr,
        "alpha": alphas_arr,
        "accepted": accs_arr,
        "sigma": sigmas_arr,
        "log_det_c": log_dets_arr,
        "adaptation_gap": gaps_arr,
        "tau": taus_arr,
        "cov_sup_norm": cov_sups_arr,
        "path_mahal_sq": path_mahals_arr,
    }
