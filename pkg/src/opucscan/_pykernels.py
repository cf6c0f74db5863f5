"""Pure Python / numpy implementations of the hot loops.

Same signatures as the compiled ``_ckernels`` module; used when the extension
is not built or ``OPUCSCAN_PURE_PYTHON=1`` is set.
"""
import math

import numpy as np

_TWO_PI = 2.0 * math.pi
_RESCALE_AT = 1e100
# a new running maximum of ||T_n||**2 must beat the old one by this relative
# margin plus DRIFT per step (roundoff growth of unimodular products)
_TIE = 1.0 + 2e-12
_DRIFT = 4 * 2.220446049250313e-16


def _neumaier(s, c, x):
    t = s + x
    if abs(s) >= abs(x):
        c += (s - t) + x
    else:
        c += (x - t) + s
    return t, c


def _half_log_abs2(wr, wi):
    """``0.5*log|1 - w|**2``, accurate both for small ``w`` and for ``w`` near 1."""
    x = wr * wr + wi * wi - 2.0 * wr
    if x > -0.5:
        return 0.5 * math.log1p(x)
    xr = 1.0 - wr
    return 0.5 * math.log(xr * xr + wi * wi)


def _wrap(g):
    return g - _TWO_PI * math.floor(g / _TWO_PI)


def prufer_trajectory(alphas, eta, beta):
    """Exact Prüfer recursion.

    Returns ``(log_r, theta, a_sum, gamma)``, each of length ``len(alphas) + 1``;
    ``gamma[j]`` is ``(j+1)*eta + beta + 2*theta_j`` reduced to ``[0, 2*pi)``
    and ``a_sum[n] = sum_{j<n} alpha_j exp(i*gamma_j)``.  The phase is carried
    reduced (``gamma_{j+1} = gamma_j + eta + 2*dtheta_j``) so its trigonometric
    evaluation never sees large arguments.
    """
    N = len(alphas)
    log_r = np.zeros(N + 1)
    theta = np.zeros(N + 1)
    gamma = np.zeros(N + 1)
    a_sum = np.zeros(N + 1, dtype=np.complex128)
    ls = lc = ts = tc = ars = arc = ais = aic = 0.0
    g = _wrap(eta + beta)
    gamma[0] = g
    for n, a in enumerate(alphas.tolist()):
        cg, sg = math.cos(g), math.sin(g)
        wr = a.real * cg - a.imag * sg
        wi = a.real * sg + a.imag * cg
        dlog = _half_log_abs2(wr, wi)
        dth = -math.atan2(-wi, 1.0 - wr)
        ls, lc = _neumaier(ls, lc, dlog)
        ts, tc = _neumaier(ts, tc, dth)
        ars, arc = _neumaier(ars, arc, wr)
        ais, aic = _neumaier(ais, aic, wi)
        g = _wrap(g + eta + 2.0 * dth)
        log_r[n + 1] = ls + lc
        theta[n + 1] = ts + tc
        gamma[n + 1] = g
        a_sum[n + 1] = complex(ars + arc, ais + aic)
    return log_r, theta, a_sum, gamma


def prufer_final(alphas, eta, beta):
    """Streaming form: ``(log_r_N, theta_N, min_n log_r_n, max_n log_r_n)``."""
    ls = lc = ts = tc = 0.0
    lo = hi = 0.0
    g = _wrap(eta + beta)
    for a in alphas.tolist():
        cg, sg = math.cos(g), math.sin(g)
        wr = a.real * cg - a.imag * sg
        wi = a.real * sg + a.imag * cg
        dth = -math.atan2(-wi, 1.0 - wr)
        ls, lc = _neumaier(ls, lc, _half_log_abs2(wr, wi))
        ts, tc = _neumaier(ts, tc, dth)
        g = _wrap(g + eta + 2.0 * dth)
        v = ls + lc
        lo = min(lo, v)
        hi = max(hi, v)
    return ls + lc, ts + tc, lo, hi


def scan_block(alphas, inv_rho, etas, betas):
    """Scan statistics for a block of angles.

    Returns ``(sup_log_r, sup_log_norm, argmax_n)`` where ``sup_log_r[i]`` is
    ``max over betas and n <= N of log R_n(etas[i], beta)`` and
    ``sup_log_norm[i]`` is ``log max_{n<=N} ||T_n(exp(i*etas[i]))||`` attained
    first at ``argmax_n[i]``.

    The Prüfer phase is propagated multiplicatively,
    ``u_{n+1} = u_n * exp(i*eta) * conj(1 - w_n)**2 / |1 - w_n|**2`` with
    ``u_n = exp(i*gamma_n)``, so no trigonometric call is needed per step.
    """
    etas = np.ascontiguousarray(etas, dtype=np.float64)
    betas = np.ascontiguousarray(betas, dtype=np.float64)
    N = len(alphas)
    E, B = len(etas), len(betas)

    # --- Prüfer radius, vectorized over (eta, beta) ---
    eg = np.repeat(etas, B)
    bg = np.tile(betas, E)
    rot = np.exp(1j * eg)
    u = np.exp(1j * (eg + bg))
    log_r2 = np.zeros(E * B)
    best = np.zeros(E * B)
    for n in range(N):
        x = 1.0 - alphas[n] * u
        r2 = x.real * x.real + x.imag * x.imag
        log_r2 += np.log(r2)
        np.maximum(best, log_r2, out=best)
        xc = np.conj(x)
        u = u * rot * (xc * xc) / r2
        if (n & 255) == 255:
            u /= np.abs(u)
    sup_log_r = 0.5 * best.reshape(E, B).max(axis=1)

    # --- transfer matrix norm, vectorized over eta ---
    z = np.exp(1j * etas)
    m11 = np.ones(E, dtype=np.complex128)
    m12 = np.zeros(E, dtype=np.complex128)
    m21 = np.zeros(E, dtype=np.complex128)
    m22 = np.ones(E, dtype=np.complex128)
    log_scale = np.zeros(E)
    best_s2 = np.ones(E)  # in the current scale of each row
    sup_log_norm = np.zeros(E)
    argmax = np.zeros(E, dtype=np.int64)
    for n in range(N):
        a = alphas[n]
        ir = inv_rho[n]
        ca = a.conjugate()
        az = a * z
        m11, m12, m21, m22 = (
            (z * m11 - ca * m21) * ir,
            (z * m12 - ca * m22) * ir,
            (m21 - az * m11) * ir,
            (m22 - az * m12) * ir,
        )
        f2 = (
            m11.real**2 + m11.imag**2 + m12.real**2 + m12.imag**2
            + m21.real**2 + m21.imag**2 + m22.real**2 + m22.imag**2
        )
        # f2**2 - 4|det|**2 written as a sum of squares (no cancellation)
        h = m11 * m21.conjugate() + m12 * m22.conjugate()
        r = (m11.real**2 + m11.imag**2 + m12.real**2 + m12.imag**2
             - m21.real**2 - m21.imag**2 - m22.real**2 - m22.imag**2)
        s2 = 0.5 * (f2 + np.sqrt(r * r + 4.0 * (h.real**2 + h.imag**2)))
        better = s2 > best_s2 * (_TIE + _DRIFT * (n + 1))
        if better.any():
            best_s2 = np.where(better, s2, best_s2)
            sup_log_norm = np.where(better, 0.5 * np.log(s2) + log_scale, sup_log_norm)
            argmax = np.where(better, n + 1, argmax)
        big = f2 > _RESCALE_AT
        if big.any():
            f = np.where(big, np.sqrt(f2), 1.0)
            m11, m12, m21, m22 = m11 / f, m12 / f, m21 / f, m22 / f
            log_scale = log_scale + np.log(f)
            best_s2 = best_s2 / (f * f)
    return sup_log_r, sup_log_norm, argmax
