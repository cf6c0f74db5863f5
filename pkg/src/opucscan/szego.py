"""Orthonormal polynomials on the unit circle and their Szegő transfer matrices.

Everything here is evaluated pointwise at ``z = exp(i*eta)``; polynomial
coefficient vectors are never formed.
"""
from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .verblunsky import MODULUS_CAP, CoefficientSequence, SequenceError, materialize

TWO_PI = 2.0 * math.pi

#: Rescale a running matrix product once its Frobenius norm passes this.
_RESCALE_AT = 1e100
#: Margin (in log) a new running maximum of the norm must clear, plus
#: ``DRIFT_LOG`` per step for the roundoff drift of unimodular products.
TIE_LOG = 1e-12
DRIFT_LOG = 2 * 2.220446049250313e-16


@dataclass(frozen=True)
class UnitCirclePoint:
    """A point ``z = exp(i*eta)`` stored by its angle, reduced to ``[0, 2*pi)``."""

    eta: float

    def __post_init__(self):
        eta = math.fmod(float(self.eta), TWO_PI)
        if eta < 0:
            eta += TWO_PI
        if eta >= TWO_PI:
            eta = 0.0
        object.__setattr__(self, "eta", eta)

    @property
    def z(self) -> complex:
        return complex(math.cos(self.eta), math.sin(self.eta))


def as_point(z) -> UnitCirclePoint:
    """Accept a :class:`UnitCirclePoint` or a bare angle."""
    if isinstance(z, UnitCirclePoint):
        return z
    return UnitCirclePoint(float(z))


def coefficients(seq, count: int) -> np.ndarray:
    """First ``count`` coefficients of ``seq`` (sequence recipe or array)."""
    if count <= 0:
        return np.zeros(0, dtype=np.complex128)
    if isinstance(seq, CoefficientSequence):
        return materialize(seq, count - 1)
    vals = np.asarray(seq, dtype=np.complex128)
    if len(vals) < count:
        raise SequenceError(f"need {count} coefficients, got {len(vals)}")
    if np.any(np.abs(vals[:count]) >= MODULUS_CAP):
        raise SequenceError("coefficients must lie strictly inside the unit disk")
    return vals[:count]


@dataclass(frozen=True)
class SzegoMatrix:
    """Row-major 2x2 complex matrix ``[[a, b], [c, d]]``."""

    a: complex
    b: complex
    c: complex
    d: complex

    @classmethod
    def identity(cls) -> "SzegoMatrix":
        return cls(1.0 + 0j, 0j, 0j, 1.0 + 0j)

    @classmethod
    def from_array(cls, m) -> "SzegoMatrix":
        m = np.asarray(m, dtype=np.complex128)
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    def __matmul__(self, other: "SzegoMatrix") -> "SzegoMatrix":
        return SzegoMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def apply(self, x: complex, y: complex) -> tuple[complex, complex]:
        return self.a * x + self.b * y, self.c * x + self.d * y

    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    def frobenius2(self) -> float:
        return _abs2(self.a) + _abs2(self.b) + _abs2(self.c) + _abs2(self.d)

    def norm(self) -> float:
        """Operator 2-norm (largest singular value)."""
        return math.sqrt(largest_singular_value2(self.a, self.b, self.c, self.d))

    def to_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=np.complex128)


def _abs2(x: complex) -> float:
    return x.real * x.real + x.imag * x.imag


def largest_singular_value2(a: complex, b: complex, c: complex, d: complex) -> float:
    """Squared largest singular value of ``[[a, b], [c, d]]``.

    The squared singular values are the eigenvalues of ``M M^*``.  Their
    discriminant ``||M||_F**4 - 4|det M|**2`` is evaluated as
    ``(r1 - r2)**2 + 4|a*conj(c) + b*conj(d)|**2`` (row norms ``r1``, ``r2``),
    which stays accurate when the two singular values nearly coincide.
    """
    r1 = _abs2(a) + _abs2(b)
    r2 = _abs2(c) + _abs2(d)
    h = a * c.conjugate() + b * d.conjugate()
    return 0.5 * (r1 + r2 + math.sqrt((r1 - r2) ** 2 + 4.0 * _abs2(h)))


def one_step_matrix(alpha: complex, z) -> SzegoMatrix:
    """``(1/rho) [[z, -conj(alpha)], [-alpha*z, 1]]`` with ``rho = sqrt(1 - |alpha|^2)``."""
    alpha = complex(alpha)
    if not abs(alpha) < 1.0:
        raise SequenceError(f"|alpha| must be < 1, got {abs(alpha)!r}")
    zz = as_point(z).z
    inv_rho = 1.0 / math.sqrt(1.0 - _abs2(alpha))
    return SzegoMatrix(
        zz * inv_rho,
        -alpha.conjugate() * inv_rho,
        -alpha * zz * inv_rho,
        complex(inv_rho),
    )


@dataclass(frozen=True)
class PolynomialPairState:
    """``(phi_n(z), phi_n^*(z))`` or, for ``kind="second"``, ``(psi_n(z), psi_n^*(z))``."""

    kind: str
    value: complex
    star_value: complex
    n: int


def _check_kind(kind):
    if kind not in ("first", "second"):
        raise ValueError(f"kind must be 'first' or 'second', got {kind!r}")


def pair_trajectory(seq, z, n: int, kind: str = "first") -> tuple[np.ndarray, np.ndarray]:
    """Values and star values for steps ``0..n``.

    The second kind is evolved as the vector ``(psi_n, -psi_n^*)`` through the
    same one-step matrices; the returned star values have the sign undone.
    """
    _check_kind(kind)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    alphas = coefficients(seq, n)
    zz = as_point(z).z
    vals = np.empty(n + 1, dtype=np.complex128)
    stars = np.empty(n + 1, dtype=np.complex128)
    x, y = 1.0 + 0j, (1.0 + 0j) if kind == "first" else (-1.0 + 0j)
    vals[0], stars[0] = x, y
    for k, a in enumerate(alphas.tolist()):
        inv_rho = 1.0 / math.sqrt(1.0 - _abs2(a))
        x, y = (zz * x - a.conjugate() * y) * inv_rho, (y - a * zz * x) * inv_rho
        vals[k + 1], stars[k + 1] = x, y
    if kind == "second":
        stars = -stars
    return vals, stars


def evolve_pair(seq, z, n: int, kind: str = "first") -> PolynomialPairState:
    vals, stars = pair_trajectory(seq, z, n, kind)
    return PolynomialPairState(kind, complex(vals[-1]), complex(stars[-1]), n)


def transfer_matrix(seq, z, n: int) -> SzegoMatrix:
    """``T_n(z)`` as the ordered product ``A_{n-1} ... A_0`` of one-step matrices."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    point = as_point(z)
    T = SzegoMatrix.identity()
    for a in coefficients(seq, n).tolist():
        T = one_step_matrix(a, point) @ T
    return T


def transfer_matrix_from_pairs(seq, z, n: int) -> SzegoMatrix:
    """``T_n(z)`` assembled from evolved first and second kind pairs."""
    p1 = evolve_pair(seq, z, n, "first")
    p2 = evolve_pair(seq, z, n, "second")
    phi, phis = p1.value, p1.star_value
    psi, psis = p2.value, p2.star_value
    return SzegoMatrix(
        0.5 * (phi + psi), 0.5 * (phi - psi), 0.5 * (phis - psis), 0.5 * (phis + psis)
    )


class SupNorm(NamedTuple):
    sup_norm: float
    argmax_n: int


class NormTrace(NamedTuple):
    """``||T_n|| = norm * exp(log_scale)`` for ``n = 0..N``."""

    norm: np.ndarray
    log_scale: np.ndarray


def norm_trace(seq, z, N: int) -> NormTrace:
    """Operator norms of ``T_0 .. T_N`` with overflow-safe scaling.

    The running product is divided by its Frobenius norm whenever the squared
    norm exceeds ``1e100``; the logarithm of the removed factor is accumulated in
    ``log_scale``.
    """
    if N < 0:
        raise ValueError(f"N must be non-negative, got {N}")
    zz = as_point(z).z
    alphas = coefficients(seq, N)
    norms = np.empty(N + 1)
    scales = np.empty(N + 1)
    a11, a12, a21, a22 = 1.0 + 0j, 0j, 0j, 1.0 + 0j
    log_scale = 0.0
    norms[0], scales[0] = 1.0, 0.0
    for k, al in enumerate(alphas.tolist()):
        inv_rho = 1.0 / math.sqrt(1.0 - _abs2(al))
        ca = al.conjugate()
        az = al * zz
        a11, a12, a21, a22 = (
            (zz * a11 - ca * a21) * inv_rho,
            (zz * a12 - ca * a22) * inv_rho,
            (a21 - az * a11) * inv_rho,
            (a22 - az * a12) * inv_rho,
        )
        f2 = _abs2(a11) + _abs2(a12) + _abs2(a21) + _abs2(a22)
        if f2 > _RESCALE_AT:
            f = math.sqrt(f2)
            a11, a12, a21, a22 = a11 / f, a12 / f, a21 / f, a22 / f
            log_scale += math.log(f)
            f2 = 1.0
        norms[k + 1] = math.sqrt(largest_singular_value2(a11, a12, a21, a22))
        scales[k + 1] = log_scale
    return NormTrace(norms, scales)


def log_sup_norm_up_to(seq, z, N: int) -> tuple[float, int]:
    """``(log max_{n<=N} ||T_n(z)||, first maximizing n)``.

    A later step only counts as a new maximum when it beats the running one
    by a relative ``2e-12 + 4*eps*n`` in ``||T_n||**2``; unimodular products
    drift by a few ulps per step and would otherwise report spurious growth.
    """
    tr = norm_trace(seq, z, N)
    logs = np.log(tr.norm) + tr.log_scale
    best, k = 0.0, 0
    for n in range(1, N + 1):
        if logs[n] > best + TIE_LOG + DRIFT_LOG * n:
            best, k = float(logs[n]), n
    return best, k


def sup_norm_up_to(seq, z, N: int) -> SupNorm:
    """Largest operator norm of ``T_n(z)`` over ``0 <= n <= N``.

    Growth beyond double range is reported as ``inf`` rather than raising.
    """
    log_sup, k = log_sup_norm_up_to(seq, z, N)
    sup = math.exp(log_sup) if log_sup < 709.0 else math.inf
    return SupNorm(sup, k)


def monic_log_modulus(seq, z, N: int, beta: float = 0.0) -> np.ndarray:
    """``log |Phi_n(z)|`` for ``n = 0..N``, monic recurrence with coefficients ``exp(i*beta)*alpha_n``.

    On the unit circle ``|Phi_n| = |Phi_n^*|``, so both components are divided
    by ``|Phi_n|`` after every step and the logarithm is accumulated.
    """
    zz = as_point(z).z
    rot = cmath.exp(1j * beta)
    alphas = coefficients(seq, N)
    out = np.zeros(N + 1)
    x, y = 1.0 + 0j, 1.0 + 0j
    acc = 0.0
    for k, a in enumerate(alphas.tolist()):
        a = rot * a
        x, y = zz * x - a.conjugate() * y, y - a * zz * x
        r = abs(x)
        x, y = x / r, y / r
        acc += math.log(r)
        out[k + 1] = acc
    return out


def orthonormal_log_modulus(seq, z, N: int, kind: str = "first") -> np.ndarray:
    """``log |phi_n(z)|`` (or ``log |psi_n(z)|``) for ``n = 0..N`` without overflow.

    Same recurrence as :func:`pair_trajectory`, with the pair divided by
    ``|value|`` after each step (on the circle the star component has the same
    modulus, so nothing underflows).
    """
    _check_kind(kind)
    zz = as_point(z).z
    alphas = coefficients(seq, N)
    out = np.zeros(N + 1)
    x, y = 1.0 + 0j, (1.0 + 0j) if kind == "first" else (-1.0 + 0j)
    acc = 0.0
    for k, a in enumerate(alphas.tolist()):
        inv_rho = 1.0 / math.sqrt(1.0 - _abs2(a))
        x, y = (zz * x - a.conjugate() * y) * inv_rho, (y - a * zz * x) * inv_rho
        r = abs(x)
        x, y = x / r, y / r
        acc += math.log(r)
        out[k + 1] = acc
    return out


def transfer_matrix_path(seq, etas, N: int) -> np.ndarray:
    """``T_n(exp(i*eta))`` for ``n = 0..N`` and every angle, shape ``(N+1, len(etas), 2, 2)``.

    Vectorized over the angles; no rescaling, so only suitable while the
    entries stay in double range.
    """
    etas = np.atleast_1d(np.asarray(etas, dtype=np.float64))
    z = np.exp(1j * etas)
    alphas = coefficients(seq, N)
    out = np.empty((N + 1, len(etas), 2, 2), dtype=np.complex128)
    out[0] = np.eye(2)
    step = np.empty((len(etas), 2, 2), dtype=np.complex128)
    for k, a in enumerate(alphas.tolist()):
        inv_rho = 1.0 / math.sqrt(1.0 - _abs2(a))
        step[:, 0, 0] = z * inv_rho
        step[:, 0, 1] = -a.conjugate() * inv_rho
        step[:, 1, 0] = -a * z * inv_rho
        step[:, 1, 1] = inv_rho
        np.matmul(step, out[k], out=out[k + 1])
    return out


def log_rho_cumsum(seq, N: int) -> np.ndarray:
    """``sum_{j<n} log rho_j`` for ``n = 0..N``."""
    alphas = coefficients(seq, N)
    out = np.zeros(N + 1)
    out[1:] = np.cumsum(0.5 * np.log1p(-(alphas.real**2 + alphas.imag**2)))
    return out


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_pair_csv(fh, vals: np.ndarray, stars: np.ndarray) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["n", "re_phi", "im_phi", "re_phi_star", "im_phi_star"])
    for n, (v, s) in enumerate(zip(vals, stars)):
        w.writerow([n, _fmt(v.real), _fmt(v.imag), _fmt(s.real), _fmt(s.imag)])


def write_norm_csv(fh, trace: NormTrace) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["n", "norm_Tn", "log_scale"])
    for n, (v, s) in enumerate(zip(trace.norm, trace.log_scale)):
        w.writerow([n, _fmt(v), _fmt(s)])
