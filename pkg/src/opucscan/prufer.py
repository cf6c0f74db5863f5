"""Prüfer variables for the rotated coefficient family ``exp(i*beta) * alpha_n``.

With ``Phi_n(exp(i*eta), beta) = R_n * exp(i*(n*eta + theta_n))`` one step of
the monic Szegő recurrence becomes

    R_{n+1} / R_n = |1 - w_n|,   theta_{n+1} - theta_n = -arg(1 - w_n),

where ``w_n = alpha_n * exp(i*g_n)`` and ``g_n = (n+1)*eta + beta + 2*theta_n``.
Since ``|w_n| < 1`` the real part of ``1 - w_n`` is positive, so the principal
argument automatically picks the branch with ``|theta_{n+1} - theta_n| < pi/2``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .szego import TWO_PI, coefficients, log_rho_cumsum


def _reduce(x: float) -> float:
    x = math.fmod(float(x), TWO_PI)
    if x < 0:
        x += TWO_PI
    return 0.0 if x >= TWO_PI else x


@dataclass(frozen=True)
class RotationParams:
    eta: float
    beta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "eta", _reduce(self.eta))
        object.__setattr__(self, "beta", _reduce(self.beta))


@dataclass(frozen=True)
class PruferState:
    """``log R_n`` and the unwrapped phase ``theta_n`` after ``n`` steps."""

    log_radius: float = 0.0
    theta: float = 0.0
    n: int = 0


class BranchError(ArithmeticError):
    """A phase step left the ``|dtheta| < pi/2`` branch."""


def prufer_increment(alpha: complex, g: float) -> tuple[float, float]:
    """``(d log R, d theta)`` for one step with phase argument ``g``."""
    alpha = complex(alpha)
    w = alpha * complex(math.cos(g), math.sin(g))
    # |1 - w|**2, evaluated without cancellation near w = 1
    radicand = (1.0 - w.real) ** 2 + w.imag**2
    assert radicand > 0.0, "radicand equals |1 - w|^2 and must be positive"
    x = w.real * w.real + w.imag * w.imag - 2.0 * w.real
    dlog = 0.5 * math.log1p(x) if x > -0.5 else 0.5 * math.log(radicand)
    dtheta = -math.atan2(-w.imag, 1.0 - w.real)
    if not abs(dtheta) < math.pi / 2:
        raise BranchError(f"phase step {dtheta!r} outside (-pi/2, pi/2)")
    return dlog, dtheta


def prufer_step(state: PruferState, alpha_n: complex, params: RotationParams) -> PruferState:
    if not abs(alpha_n) < 1.0:
        raise ValueError(f"|alpha_n| must be < 1, got {abs(alpha_n)!r}")
    g = (state.n + 1) * params.eta + params.beta + 2.0 * state.theta
    dlog, dtheta = prufer_increment(alpha_n, g)
    return PruferState(state.log_radius + dlog, state.theta + dtheta, state.n + 1)


@dataclass
class PruferTrajectory:
    """States ``n = 0..N`` of one ``(eta, beta)`` evolution.

    ``a_sum[n]`` is ``A(n, eta, beta) = sum_{j<n} alpha_j exp(i*gamma_j)`` with
    ``gamma_j = (j+1)*eta + beta + 2*theta_j``, accumulated with compensation.
    ``gamma`` holds the phases reduced to ``[0, 2*pi)``.
    """

    params: RotationParams
    log_radius: np.ndarray
    theta: np.ndarray
    a_sum: np.ndarray
    gamma: np.ndarray

    def __len__(self):
        return len(self.log_radius)

    def state(self, n: int) -> PruferState:
        return PruferState(float(self.log_radius[n]), float(self.theta[n]), n)

    @property
    def residual(self) -> np.ndarray:
        return self.log_radius + self.a_sum.real

    def phases(self) -> np.ndarray:
        """``gamma_j`` for ``j = 0..N``, reduced to ``[0, 2*pi)``."""
        return self.gamma


def _params(params) -> RotationParams:
    if isinstance(params, RotationParams):
        return params
    eta, beta = params
    return RotationParams(eta, beta)


def evolve_prufer(seq, params, N: int) -> PruferTrajectory:
    if N < 0:
        raise ValueError(f"N must be non-negative, got {N}")
    params = _params(params)
    alphas = np.ascontiguousarray(coefficients(seq, N))
    log_r, theta, a_sum, gamma = kernels.prufer_trajectory(alphas, params.eta, params.beta)
    return PruferTrajectory(params, log_r, theta, a_sum, gamma)


class StreamingResult(NamedTuple):
    final: PruferState
    min_log_radius: float
    max_log_radius: float


def evolve_prufer_streaming(seq, params, N: int) -> StreamingResult:
    """Final state and running extrema of ``log R_n`` without storing the trajectory."""
    params = _params(params)
    alphas = np.ascontiguousarray(coefficients(seq, N))
    log_r, theta, lo, hi = kernels.prufer_final(alphas, params.eta, params.beta)
    return StreamingResult(PruferState(log_r, theta, N), lo, hi)


def check_branch(traj: PruferTrajectory) -> float:
    """Largest phase step; raises :class:`BranchError` if any reaches ``pi/2``."""
    steps = np.abs(np.diff(traj.theta))
    worst = float(steps.max()) if len(steps) else 0.0
    if worst >= math.pi / 2:
        raise BranchError(f"phase step of size {worst!r} at n={int(steps.argmax())}")
    return worst


def accumulate_A(seq, params, n: int) -> complex:
    """``A(n, eta, beta) = sum_{j=0}^{n-1} alpha_j exp(i*((j+1)*eta + beta + 2*theta_j))``."""
    return complex(evolve_prufer(seq, params, n).a_sum[n])


def asymptotic_residual(seq, params, N: int) -> np.ndarray:
    """``log R_n + Re A(n, eta, beta)`` for ``n = 0..N``.

    For square-summable coefficients this stays bounded; one step changes it
    by ``0.5*log|1 - w|**2 + Re w = O(|alpha_n|**2)``.
    """
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    return evolve_prufer(seq, params, N).residual


def orthonormal_log_radius(seq, params, N: int) -> np.ndarray:
    """``log r_n = log R_n - sum_{j<n} log rho_j``, the radius of the orthonormal polynomial."""
    traj = evolve_prufer(seq, params, N)
    return traj.log_radius - log_rho_cumsum(seq, N)


def write_prufer_csv(fh, traj: PruferTrajectory) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["n", "log_R", "theta", "re_A", "im_A", "residual"])
    res = traj.residual
    for n in range(len(traj)):
        a = traj.a_sum[n]
        w.writerow(
            [n] + [format(float(v), ".17g") for v in (traj.log_radius[n], traj.theta[n], a.real, a.imag, res[n])]
        )
