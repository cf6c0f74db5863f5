# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; see ``_pykernels`` for the reference semantics."""
import numpy as np

from libc.math cimport M_PI, atan2, cos, exp, fabs, floor, log, log1p, sin, sqrt

cdef double TWO_PI = 2.0 * M_PI
cdef double RESCALE_AT = 1e100
cdef double TIE = 1.0 + 2e-12
cdef double DRIFT = 4 * 2.220446049250313e-16
cdef double P_HI = 1e200
cdef double P_LO = 1e-200


cdef inline void neumaier(double* s, double* c, double x) noexcept nogil:
    cdef double t = s[0] + x
    if fabs(s[0]) >= fabs(x):
        c[0] += (s[0] - t) + x
    else:
        c[0] += (x - t) + s[0]
    s[0] = t


cdef inline double half_log_abs2(double wr, double wi) noexcept nogil:
    # 0.5*log|1 - w|^2: log1p for small w, the factored form near w = 1
    cdef double x = wr * wr + wi * wi - 2.0 * wr
    cdef double xr
    if x > -0.5:
        return 0.5 * log1p(x)
    xr = 1.0 - wr
    return 0.5 * log(xr * xr + wi * wi)


cdef inline double wrap(double g) noexcept nogil:
    return g - TWO_PI * floor(g / TWO_PI)


def prufer_trajectory(const double complex[::1] alphas, double eta, double beta):
    cdef Py_ssize_t N = alphas.shape[0], n
    log_r_arr = np.zeros(N + 1)
    theta_arr = np.zeros(N + 1)
    gamma_arr = np.zeros(N + 1)
    a_arr = np.zeros(N + 1, dtype=np.complex128)
    cdef double[::1] log_r = log_r_arr
    cdef double[::1] theta = theta_arr
    cdef double[::1] gamma = gamma_arr
    cdef double complex[::1] a_sum = a_arr
    cdef double ls = 0, lc = 0, ts = 0, tc = 0, ars = 0, arc = 0, ais = 0, aic = 0
    cdef double g, cg, sg, ar, ai, wr, wi, dth
    with nogil:
        g = wrap(eta + beta)
        gamma[0] = g
        for n in range(N):
            cg = cos(g)
            sg = sin(g)
            ar = alphas[n].real
            ai = alphas[n].imag
            wr = ar * cg - ai * sg
            wi = ar * sg + ai * cg
            dth = -atan2(-wi, 1.0 - wr)
            neumaier(&ls, &lc, half_log_abs2(wr, wi))
            neumaier(&ts, &tc, dth)
            neumaier(&ars, &arc, wr)
            neumaier(&ais, &aic, wi)
            g = wrap(g + eta + 2.0 * dth)
            log_r[n + 1] = ls + lc
            theta[n + 1] = ts + tc
            gamma[n + 1] = g
            a_sum[n + 1].real = ars + arc
            a_sum[n + 1].imag = ais + aic
    return log_r_arr, theta_arr, a_arr, gamma_arr


def prufer_final(const double complex[::1] alphas, double eta, double beta):
    cdef Py_ssize_t N = alphas.shape[0], n
    cdef double ls = 0, lc = 0, ts = 0, tc = 0
    cdef double g, cg, sg, ar, ai, wr, wi, dth, v, lo = 0, hi = 0
    with nogil:
        g = wrap(eta + beta)
        for n in range(N):
            cg = cos(g)
            sg = sin(g)
            ar = alphas[n].real
            ai = alphas[n].imag
            wr = ar * cg - ai * sg
            wi = ar * sg + ai * cg
            dth = -atan2(-wi, 1.0 - wr)
            neumaier(&ls, &lc, half_log_abs2(wr, wi))
            neumaier(&ts, &tc, dth)
            g = wrap(g + eta + 2.0 * dth)
            v = ls + lc
            if v < lo:
                lo = v
            if v > hi:
                hi = v
    return ls + lc, ts + tc, lo, hi


cdef double sup_log_radius(const double* ar, const double* ai, Py_ssize_t N, double eta,
                           const double* betas, Py_ssize_t B, double* work) noexcept nogil:
    """max over betas and n <= N of log R_n, via the multiplicative phase update.

    All beta chains advance together so their independent dependency chains
    overlap in the pipeline.  ``work`` must hold ``6 * B`` doubles.
    """
    cdef double ce = cos(eta), se = sin(eta)
    cdef double* ur = work
    cdef double* ui = work + B
    cdef double* P = work + 2 * B
    cdef double* thr = work + 3 * B
    cdef double* best_log = work + 4 * B
    cdef double* log_scale = work + 5 * B
    cdef double wr, wi, xr, xi, r2, inv, qr, qi, tr, ti, m, a_r, a_i, out
    cdef Py_ssize_t n, b
    for b in range(B):
        ur[b] = cos(eta + betas[b])
        ui[b] = sin(eta + betas[b])
        P[b] = 1.0
        thr[b] = 1.0
        best_log[b] = 0.0
        log_scale[b] = 0.0
    for n in range(N):
        a_r = ar[n]
        a_i = ai[n]
        for b in range(B):
            wr = a_r * ur[b] - a_i * ui[b]
            wi = a_r * ui[b] + a_i * ur[b]
            xr = 1.0 - wr
            xi = -wi
            r2 = xr * xr + xi * xi
            P[b] *= r2
            inv = 1.0 / r2
            qr = (xr * xr - xi * xi) * inv
            qi = -2.0 * xr * xi * inv
            tr = ur[b] * ce - ui[b] * se
            ti = ur[b] * se + ui[b] * ce
            ur[b] = tr * qr - ti * qi
            ui[b] = tr * qi + ti * qr
        for b in range(B):
            if P[b] > thr[b]:
                thr[b] = P[b]
                best_log[b] = log(P[b]) + log_scale[b]
            if P[b] > P_HI or P[b] < P_LO:
                log_scale[b] += log(P[b])
                P[b] = 1.0
                if best_log[b] - log_scale[b] > 700.0:
                    thr[b] = 1e300
                else:
                    thr[b] = exp(best_log[b] - log_scale[b])
        if (n & 255) == 255:
            for b in range(B):
                m = sqrt(ur[b] * ur[b] + ui[b] * ui[b])
                ur[b] /= m
                ui[b] /= m
    out = 0.0
    for b in range(B):
        if best_log[b] > out:
            out = best_log[b]
    return 0.5 * out


cdef void sup_log_norm(const double* ar, const double* ai, const double* inv_rho, Py_ssize_t N,
                       double eta, double* out_log, long long* out_arg) noexcept nogil:
    cdef double zr = cos(eta), zi = sin(eta)
    cdef double m11r = 1, m11i = 0, m12r = 0, m12i = 0, m21r = 0, m21i = 0, m22r = 1, m22i = 0
    cdef double n11r, n11i, n12r, n12i, n21r, n21i, n22r, n22i
    cdef double a_r, a_i, azr, azi, ir, f2, f, hr, hi, r, s2, tie
    cdef double best_s2 = 1.0, best_log = 0.0, log_scale = 0.0
    cdef long long arg = 0
    cdef Py_ssize_t n
    for n in range(N):
        a_r = ar[n]
        a_i = ai[n]
        ir = inv_rho[n]
        azr = a_r * zr - a_i * zi
        azi = a_r * zi + a_i * zr
        # row 1: z*m1j - conj(a)*m2j
        n11r = (zr * m11r - zi * m11i - (a_r * m21r + a_i * m21i)) * ir
        n11i = (zr * m11i + zi * m11r - (a_r * m21i - a_i * m21r)) * ir
        n12r = (zr * m12r - zi * m12i - (a_r * m22r + a_i * m22i)) * ir
        n12i = (zr * m12i + zi * m12r - (a_r * m22i - a_i * m22r)) * ir
        # row 2: m2j - a*z*m1j
        n21r = (m21r - (azr * m11r - azi * m11i)) * ir
        n21i = (m21i - (azr * m11i + azi * m11r)) * ir
        n22r = (m22r - (azr * m12r - azi * m12i)) * ir
        n22i = (m22i - (azr * m12i + azi * m12r)) * ir
        m11r = n11r; m11i = n11i; m12r = n12r; m12i = n12i
        m21r = n21r; m21i = n21i; m22r = n22r; m22i = n22i
        f2 = (m11r * m11r + m11i * m11i + m12r * m12r + m12i * m12i
              + m21r * m21r + m21i * m21i + m22r * m22r + m22i * m22i)
        # sigma_max^2 <= f2, so the singular value is only needed for a possible record
        tie = TIE + DRIFT * (n + 1)
        if f2 > best_s2 * tie:
            # f2**2 - 4|det|**2 = r**2 + 4|h|**2 with h = row1 . conj(row2)
            hr = m11r * m21r + m11i * m21i + m12r * m22r + m12i * m22i
            hi = m11i * m21r - m11r * m21i + m12i * m22r - m12r * m22i
            r = (m11r * m11r + m11i * m11i + m12r * m12r + m12i * m12i
                 - m21r * m21r - m21i * m21i - m22r * m22r - m22i * m22i)
            s2 = 0.5 * (f2 + sqrt(r * r + 4.0 * (hr * hr + hi * hi)))
            if s2 > best_s2 * tie:
                best_s2 = s2
                best_log = 0.5 * log(s2) + log_scale
                arg = n + 1
        if f2 > RESCALE_AT:
            f = sqrt(f2)
            m11r /= f; m11i /= f; m12r /= f; m12i /= f
            m21r /= f; m21i /= f; m22r /= f; m22i /= f
            log_scale += log(f)
            best_s2 /= f2
    out_log[0] = best_log
    out_arg[0] = arg


def scan_block(const double complex[::1] alphas, const double[::1] inv_rho,
               const double[::1] etas, const double[::1] betas):
    cdef Py_ssize_t N = alphas.shape[0], E = etas.shape[0], B = betas.shape[0]
    cdef Py_ssize_t i
    re_arr = np.ascontiguousarray(np.asarray(alphas).real)
    im_arr = np.ascontiguousarray(np.asarray(alphas).imag)
    cdef const double[::1] ar = re_arr
    cdef const double[::1] ai = im_arr
    out_r_arr = np.zeros(E)
    out_n_arr = np.zeros(E)
    out_k_arr = np.zeros(E, dtype=np.int64)
    cdef double[::1] out_r = out_r_arr
    cdef double[::1] out_n = out_n_arr
    cdef long long[::1] out_k = out_k_arr
    cdef const double* par = &ar[0] if N > 0 else NULL
    cdef const double* pai = &ai[0] if N > 0 else NULL
    cdef const double* pir = &inv_rho[0] if N > 0 else NULL
    work_arr = np.zeros(6 * B + 1)
    cdef double[::1] work = work_arr
    with nogil:
        for i in range(E):
            out_r[i] = sup_log_radius(par, pai, N, etas[i], &betas[0] if B > 0 else NULL, B, &work[0])
            sup_log_norm(par, pai, pir, N, etas[i], &out_n[i], &out_k[i])
    return out_r_arr, out_n_arr, out_k_arr
