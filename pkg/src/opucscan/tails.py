"""Fourier tails of coefficient sequences, the Abel rearrangement of ``A(n)``,
s-energies of cell measures and the Salem-Zygmund type ratio.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .prufer import _params, evolve_prufer
from .szego import coefficients

# ---------------------------------------------------------------------------
# Fourier tails
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailRecord:
    eta: float
    n: int
    N_trunc: int
    value: complex


def _csum(values: np.ndarray) -> complex:
    """Correctly rounded sum of a complex array (componentwise ``math.fsum``)."""
    return complex(math.fsum(values.real), math.fsum(values.imag))


def _phased(alphas: np.ndarray, eta: float, start: int = 0) -> np.ndarray:
    j = np.arange(start, start + len(alphas), dtype=np.float64)
    return alphas * np.exp(1j * j * eta)


def fourier_tail(seq, eta: float, n: int, N_trunc: int) -> TailRecord:
    """``sum_{j=n}^{N_trunc} alpha_j exp(i*j*eta)``; zero when ``n > N_trunc``."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if N_trunc < n - 1:
        raise ValueError(f"need N_trunc >= n - 1, got N_trunc={N_trunc}, n={n}")
    if n > N_trunc:
        return TailRecord(eta, n, N_trunc, 0j)
    alphas = coefficients(seq, N_trunc + 1)[n:]
    return TailRecord(eta, n, N_trunc, _csum(_phased(alphas, eta, n)))


def tail_table(seq, eta: float, N_trunc: int) -> np.ndarray:
    """``hat_alpha(eta, j)`` truncated at ``N_trunc`` for ``j = 0..N_trunc+1``.

    Built right to left with Neumaier-compensated accumulation, so
    ``hat[j] - hat[j+1]`` reproduces ``alpha_j exp(i*j*eta)`` to a few ulps.
    """
    terms = _phased(coefficients(seq, N_trunc + 1), eta)
    out = np.zeros(N_trunc + 2, dtype=np.complex128)
    sr = cr = si = ci = 0.0
    for j in range(N_trunc, -1, -1):
        t = terms[j]
        x = t.real
        s = sr + x
        cr += (sr - s) + x if abs(sr) >= abs(x) else (x - s) + sr
        sr = s
        x = t.imag
        s = si + x
        ci += (si - s) + x if abs(si) >= abs(x) else (x - s) + si
        si = s
        out[j] = complex(sr + cr, si + ci)
    return out


def telescoping_defect(seq, eta: float, N_trunc: int) -> float:
    """``max_j |alpha_j exp(i*j*eta) - (hat[j] - hat[j+1])|`` over ``j <= N_trunc``."""
    terms = _phased(coefficients(seq, N_trunc + 1), eta)
    hat = tail_table(seq, eta, N_trunc)
    return float(np.max(np.abs(terms - (hat[:-1] - hat[1:]))))


def abel_identity_check(seq, params, n: int, N_trunc: int) -> float:
    """``|A(n) - sum_{j<n} (hat[j] - hat[j+1]) exp(i*gamma_j - i*j*eta)|``.

    Both sides agree exactly in exact arithmetic; the return value measures
    roundoff only.
    """
    if N_trunc < n:
        raise ValueError(f"need N_trunc >= n, got N_trunc={N_trunc}, n={n}")
    params = _params(params)
    if n == 0:
        return 0.0
    traj = evolve_prufer(seq, params, n)
    direct = complex(traj.a_sum[n])
    hat = tail_table(seq, params.eta, N_trunc)
    gam = traj.phases()[:n]
    j = np.arange(n, dtype=np.float64)
    diffs = hat[:n] - hat[1 : n + 1]
    rearranged = _csum(diffs * np.exp(1j * (gam - j * params.eta)))
    return abs(direct - rearranged)


def abel_residuals(seq, params, N_trunc: int) -> np.ndarray:
    """:func:`abel_identity_check` for every ``n = 0..N_trunc`` in one pass.

    The rearranged side is accumulated with Neumaier compensation so each
    prefix carries the same rounding as a correctly rounded sum, up to ulps.
    """
    params = _params(params)
    traj = evolve_prufer(seq, params, N_trunc)
    hat = tail_table(seq, params.eta, N_trunc)
    j = np.arange(N_trunc, dtype=np.float64)
    terms = (hat[:N_trunc] - hat[1 : N_trunc + 1]) * np.exp(1j * (traj.phases()[:N_trunc] - j * params.eta))
    out = np.zeros(N_trunc + 1)
    sr = cr = si = ci = 0.0
    for n, t in enumerate(terms.tolist(), 1):
        x = t.real
        u = sr + x
        cr += (sr - u) + x if abs(sr) >= abs(x) else (x - u) + sr
        sr = u
        x = t.imag
        u = si + x
        ci += (si - u) + x if abs(si) >= abs(x) else (x - u) + si
        si = u
        out[n] = abs(traj.a_sum[n] - complex(sr + cr, si + ci))
    return out


def phase_increment_ratios(seq, params, N: int) -> np.ndarray:
    """``|exp(i*gamma_j) - exp(i*(gamma_{j-1} + eta))| / |alpha_{j-1}|`` for ``j = 1..N``.

    ``gamma_j - gamma_{j-1} - eta = 2*(theta_j - theta_{j-1})``, so the numerator
    is evaluated as ``2*|sin(theta_j - theta_{j-1})|``, which avoids rounding
    the large angles ``gamma_j`` themselves.  ``0/0`` is reported as 0.
    """
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    alphas = coefficients(seq, N)
    if np.max(np.abs(alphas)) > 0.9:
        raise ValueError("phase increment bound requires sup |alpha_j| <= 0.9")
    traj = evolve_prufer(seq, _params(params), N)
    num = 2.0 * np.abs(np.sin(np.diff(traj.theta)))
    den = np.abs(alphas)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return ratio


def phase_increment_bound_check(seq, params, N: int) -> float:
    return float(np.max(phase_increment_ratios(seq, params, N)))


# ---------------------------------------------------------------------------
# cell measures and s-energy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite union of uniform cells ``[center - width/2, center + width/2]``."""

    centers: np.ndarray
    widths: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.centers, dtype=np.float64))
        w = np.atleast_1d(np.asarray(self.widths, dtype=np.float64))
        m = np.atleast_1d(np.asarray(self.masses, dtype=np.float64))
        if not (c.shape == w.shape == m.shape) or c.ndim != 1 or len(c) == 0:
            raise ValueError("centers, widths and masses must be equal-length 1-d arrays")
        if np.any(~np.isfinite(c)) or np.any(c < 0) or np.any(c >= 2 * math.pi):
            raise ValueError("cell centers must lie in [0, 2*pi)")
        if np.any(~(w > 0)):
            raise ValueError("cell widths must be positive (atoms have infinite energy)")
        if np.any(~(m >= 0)) or not m.sum() > 0:
            raise ValueError("masses must be non-negative with positive total")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", w)
        object.__setattr__(self, "masses", m)

    @classmethod
    def single(cls, center, width, mass=1.0) -> "DiscreteMeasure":
        return cls([center], [width], [mass])

    @property
    def total_mass(self) -> float:
        return math.fsum(self.masses)

    def __len__(self):
        return len(self.centers)

    @classmethod
    def from_csv(cls, path) -> "DiscreteMeasure":
        cs, ws, ms = [], [], []
        with open(path, newline="") as fh:
            rows = (line for line in fh if line.strip() and not line.lstrip().startswith("#"))
            for row in csv.DictReader(rows):
                cs.append(float(row["center"]))
                ws.append(float(row["width"]))
                ms.append(float(row["mass"]))
        return cls(cs, ws, ms)

    def to_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["center", "width", "mass"])
        for row in zip(self.centers, self.widths, self.masses):
            w.writerow([format(float(v), ".17g") for v in row])


# squared distance to width-product ratio beyond which the closed form loses
# more than ~1e-10 relative to cancellation and the midpoint rule is used
_FAR_RATIO = 1e6


def _cell_kernel_closed(a1, a2, b1, b2, s):
    """Mean of ``|x - y|**-s`` over ``[a1, a2] x [b1, b2]`` (closed form)."""
    c = 1.0 / ((1.0 - s) * (2.0 - s))

    def G(t):
        return c * np.abs(t) ** (2.0 - s)

    total = G(a2 - b1) - G(a2 - b2) - G(a1 - b1) + G(a1 - b2)
    return total / ((a2 - a1) * (b2 - b1))


def _cell_kernel_midpoint(ca, wa, cb, wb, s, rtol=1e-8, k_max=512):
    k = 2
    prev = None
    while True:
        t = (np.arange(k) + 0.5) / k - 0.5
        x = ca + wa * t
        y = cb + wb * t
        val = float(np.mean(np.abs(x[:, None] - y[None, :]) ** (-s)))
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return val
        if k >= k_max:
            return val
        prev = val
        k *= 2


def cell_kernel_matrix(nu: DiscreteMeasure, s: float) -> np.ndarray:
    """``K[i, j]`` = mean of ``|x - y|**-s`` with ``x`` uniform on cell ``i``, ``y`` on cell ``j``."""
    c, w = nu.centers, nu.widths
    if s == 0:
        return np.ones((len(c), len(c)))
    a1, a2 = c - w / 2, c + w / 2
    K = _cell_kernel_closed(a1[:, None], a2[:, None], a1[None, :], a2[None, :], s)
    d = np.abs(c[:, None] - c[None, :])
    gap = d - 0.5 * (w[:, None] + w[None, :])
    far = (gap > 0) & (d * d > _FAR_RATIO * w[:, None] * w[None, :])
    for i, j in zip(*np.nonzero(np.triu(far, 1))):
        K[i, j] = K[j, i] = _cell_kernel_midpoint(c[i], w[i], c[j], w[j], s)
    return K


def s_energy(nu: DiscreteMeasure, s: float) -> float:
    """``iint (1 + |x - y|**-s) dnu(x) dnu(y)`` for a cell measure, ``0 <= s < 1``."""
    if not (0.0 <= s < 1.0):
        raise ValueError(f"s must lie in [0, 1) for cell measures, got {s!r}")
    m = nu.masses
    K = cell_kernel_matrix(nu, s)
    terms = (m[:, None] * m[None, :]) * (1.0 + K)
    return math.fsum(terms.ravel())


# ---------------------------------------------------------------------------
# SZ inequality ratio
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _cell_abs_mean(c: np.ndarray, m: int, lo: float, hi: float) -> float:
    """Mean over ``[lo, hi]`` of ``|sum_{n<=m} c_n exp(-i*n*eta)|`` (composite Gauss-Legendre)."""
    coeffs = c[: m + 1]
    if not np.any(coeffs):
        return 0.0
    width = hi - lo
    pieces = max(1, math.ceil(width * (len(coeffs)) / 1.5))
    edges = lo + width * np.arange(pieces + 1) / pieces
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    eta = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wts = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    n = np.arange(len(coeffs), dtype=np.float64)
    vals = np.abs(np.exp(-1j * np.outer(eta, n)) @ coeffs)
    return math.fsum(vals * wts) / width


def sz_lhs(c, m, nu: DiscreteMeasure) -> float:
    """``int |sum_{n=0}^{m(eta)} c_n exp(-i*n*eta)| dnu(eta)`` with ``m`` constant per cell."""
    c = np.asarray(c, dtype=np.complex128)
    m = np.broadcast_to(np.asarray(m, dtype=np.int64), nu.centers.shape)
    if np.any(m < 0):
        raise ValueError("cutoffs m must be non-negative")
    parts = []
    for cen, wid, mass, cut in zip(nu.centers, nu.widths, nu.masses, m):
        if mass == 0:
            continue
        cut = min(int(cut), len(c) - 1)
        parts.append(mass * _cell_abs_mean(c, cut, cen - wid / 2, cen + wid / 2))
    return math.fsum(parts)


def sz_weighted_norm(c, s: float) -> float:
    """``sum_n (n+1)**(1-s) |c_n|**2``."""
    c = np.asarray(c, dtype=np.complex128)
    n = np.arange(len(c), dtype=np.float64)
    return math.fsum((n + 1.0) ** (1.0 - s) * (c.real**2 + c.imag**2))


def sz_inequality_ratio(c, m, nu: DiscreteMeasure, s: float, energy: float | None = None) -> float:
    """``LHS**2 / (E_s(nu) * sum (n+1)**(1-s) |c_n|**2)``; 0 when both sides vanish."""
    if not (0.0 < s < 1.0):
        raise ValueError(f"s must lie in (0, 1), got {s!r}")
    lhs = sz_lhs(c, m, nu)
    if energy is None:
        energy = s_energy(nu, s)
    rhs = energy * sz_weighted_norm(c, s)
    if rhs == 0.0:
        assert lhs == 0.0, "E_s(nu) >= mass**2 > 0, so a zero right side forces c = 0"
        return 0.0
    return lhs * lhs / rhs


@dataclass
class SZTrial:
    seed: int
    c: np.ndarray
    m: np.ndarray
    nu: DiscreteMeasure


def random_sz_trial(seed: int, max_cells: int = 50, max_coeffs: int = 64) -> SZTrial:
    """Random cell measure, coefficient vector and cutoff function.

    Cells: count uniform in ``1..max_cells``, centers uniform in ``[0, 2*pi)``,
    widths log-uniform in ``[1e-3, 0.3]``, masses uniform in ``(0, 1]``.
    Coefficients: length uniform in ``1..max_coeffs``, complex Gaussian entries
    scaled by ``(n+1)**-u`` with ``u`` uniform in ``[0, 1]``.
    """
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, max_cells + 1))
    centers = rng.uniform(0.0, 2 * math.pi, k)
    widths = np.exp(rng.uniform(math.log(1e-3), math.log(0.3), k))
    masses = 1.0 - rng.uniform(0.0, 1.0, k)
    L = int(rng.integers(1, max_coeffs + 1))
    n = np.arange(L, dtype=np.float64)
    c = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) * (n + 1.0) ** (-rng.uniform(0.0, 1.0))
    m = rng.integers(0, L, k)
    return SZTrial(seed, c, m, DiscreteMeasure(centers, widths, masses))


def energy_record(s: float, energy: float, ratio: float | None = None, trial_seed: int | None = None) -> str:
    return json.dumps({"s": s, "energy": energy, "ratio": ratio, "trial_seed": trial_seed}, sort_keys=True)


def write_tail_csv(fh, eta: float, hat: np.ndarray) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["n", "re_tail", "im_tail"])
    for n, v in enumerate(hat):
        w.writerow([n, format(v.real, ".17g"), format(v.imag, ".17g")])
