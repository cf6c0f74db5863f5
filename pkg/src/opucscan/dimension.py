"""Empirical exceptional-set scans and box-counting dimension.

The scan flags an angle ``eta`` when, for one of a finite set of rotations
``beta``, the Prüfer radius ``R_n(eta, beta)`` exceeds a threshold before a
finite horizon.  This under-approximates the set of angles where the radius is
unbounded; the box-counting dimension of the flagged grid points is a
computable stand-in for Hausdorff dimension (which box dimension bounds from
above).
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from . import kernels
from .szego import TWO_PI, coefficients

#: Angles per work item.  Fixed so that the decomposition, and therefore every
#: floating point operation, is the same for any number of workers.
CHUNK = 64


@dataclass(frozen=True)
class ScanConfig:
    grid_size: int = 4096
    n_max: int = 100_000
    norm_threshold: float = 1e3
    beta_samples: int = 8
    gamma: float = 0.9

    def __post_init__(self):
        g = int(self.grid_size)
        if g < 8 or g & (g - 1):
            raise ValueError(f"grid_size must be a power of two >= 8, got {self.grid_size!r}")
        if int(self.n_max) < 0:
            raise ValueError(f"n_max must be non-negative, got {self.n_max!r}")
        if not self.norm_threshold > 1:
            raise ValueError(f"norm_threshold must exceed 1, got {self.norm_threshold!r}")
        if int(self.beta_samples) < 1:
            raise ValueError(f"beta_samples must be at least 1, got {self.beta_samples!r}")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma!r}")

    @property
    def k_max(self) -> int:
        return int(self.grid_size).bit_length() - 1

    def etas(self) -> np.ndarray:
        return TWO_PI * np.arange(self.grid_size) / self.grid_size

    def betas(self) -> np.ndarray:
        return TWO_PI * np.arange(self.beta_samples) / self.beta_samples


@dataclass
class ScanReport:
    config: ScanConfig
    flagged: np.ndarray
    eta: np.ndarray
    sup_log_radius: np.ndarray
    sup_log_norm: np.ndarray
    argmax_n: np.ndarray
    boxcount: list[tuple[int, int]]
    dim_estimate: float
    dim_ci: tuple[float, float]
    sequence: dict = field(default_factory=dict)
    backend: str = ""

    @property
    def n_flagged(self) -> int:
        return int(self.flagged.sum())

    def to_dict(self, timestamp: str | None = None) -> dict:
        out = {
            "config": asdict(self.config),
            "sequence": dict(self.sequence),
            "backend": self.backend,
            "n_flagged": self.n_flagged,
            "flagged_rle": run_length_encode(self.flagged),
            "boxcount": [[int(k), int(n)] for k, n in self.boxcount],
            "dim_estimate": self.dim_estimate,
            "dim_ci": list(self.dim_ci),
            "per_eta": {
                "sup_log_radius": [float(v) for v in self.sup_log_radius],
                "sup_log_norm": [float(v) for v in self.sup_log_norm],
                "argmax_n": [int(v) for v in self.argmax_n],
            },
        }
        if timestamp is not None:
            out["timestamp"] = timestamp
        return out

    def to_json(self, timestamp: str | None = None) -> str:
        return json.dumps(self.to_dict(timestamp), sort_keys=True, indent=1) + "\n"

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eta", "sup_log_norm", "argmax_n", "flagged"])
        for e, v, k, f in zip(self.eta, self.sup_log_norm, self.argmax_n, self.flagged):
            w.writerow([format(float(e), ".17g"), format(float(v), ".17g"), int(k), int(bool(f))])


def utc_timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def run_length_encode(mask: np.ndarray) -> list[list[int]]:
    """``[[start, length], ...]`` for each run of set bits."""
    m = np.asarray(mask, dtype=bool).astype(np.int8)
    d = np.diff(np.concatenate([[0], m, [0]]))
    starts = np.nonzero(d == 1)[0]
    ends = np.nonzero(d == -1)[0]
    return [[int(s), int(e - s)] for s, e in zip(starts, ends)]


def run_length_decode(runs, size: int) -> np.ndarray:
    out = np.zeros(size, dtype=bool)
    for s, n in runs:
        out[s : s + n] = True
    return out


def _scan_chunk(args):
    alphas, inv_rho, etas, betas = args
    return kernels.scan_block(alphas, inv_rho, etas, betas)


def scan_statistics(seq, cfg: ScanConfig, workers: int = 1):
    """Per-angle ``(eta, sup_log_radius, sup_log_norm, argmax_n)`` on the config grid."""
    alphas = np.ascontiguousarray(coefficients(seq, cfg.n_max))
    inv_rho = 1.0 / np.sqrt(1.0 - (alphas.real**2 + alphas.imag**2))
    etas = cfg.etas()
    betas = cfg.betas()
    jobs = [(alphas, inv_rho, etas[i : i + CHUNK].copy(), betas) for i in range(0, len(etas), CHUNK)]
    workers = max(1, int(workers))
    if workers == 1:
        parts = [_scan_chunk(j) for j in jobs]
    else:
        # kernels release the GIL; map() returns results in submission order
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_scan_chunk, jobs))
    sup_r = np.concatenate([p[0] for p in parts])
    sup_n = np.concatenate([p[1] for p in parts])
    arg = np.concatenate([p[2] for p in parts]).astype(np.int64)
    return etas, sup_r, sup_n, arg


def default_scales(k_max: int) -> range:
    """Dyadic levels used for the regression: drop the two finest levels."""
    hi = max(k_max - 2, 3)
    lo = max(1, min(2, hi - 2))
    return range(lo, hi + 1)


def scan_exceptional_set(seq, cfg: ScanConfig, workers: int = 1, scales=None) -> ScanReport:
    etas, sup_r, sup_n, arg = scan_statistics(seq, cfg, workers)
    flagged = sup_r > math.log(cfg.norm_threshold)
    if scales is None:
        scales = default_scales(cfg.k_max)
    dim, counts, ci = box_counting_dimension(flagged, scales, with_ci=True)
    seq_cfg = seq.to_config() if hasattr(seq, "to_config") else {}
    return ScanReport(
        config=cfg,
        flagged=flagged,
        eta=etas,
        sup_log_radius=sup_r,
        sup_log_norm=sup_n,
        argmax_n=arg,
        boxcount=counts,
        dim_estimate=dim,
        dim_ci=ci,
        sequence=seq_cfg,
        backend=kernels.BACKEND,
    )


def box_counts(flagged: np.ndarray, scales) -> list[tuple[int, int]]:
    """Occupied dyadic boxes ``N_k`` at each level ``k`` (box length ``2*pi*2**-k``)."""
    flagged = np.asarray(flagged, dtype=bool)
    size = len(flagged)
    k_max = size.bit_length() - 1
    if size != 1 << k_max:
        raise ValueError(f"grid size must be a power of two, got {size}")
    out = []
    for k in scales:
        if not (0 <= k <= k_max):
            raise ValueError(f"scale {k} outside [0, {k_max}]")
        boxes = flagged.reshape(1 << k, -1).any(axis=1)
        out.append((int(k), int(boxes.sum())))
    return out


def box_counting_dimension(flagged, scales, with_ci: bool = False):
    """Least-squares slope of ``log2 N_k`` against ``k``.

    Returns ``(dim_estimate, counts)``, or ``(dim_estimate, counts, (low, high))``
    with a 95% interval from the regression residuals when ``with_ci``.  An
    empty set has dimension 0 by convention.
    """
    scales = list(scales)
    if len(scales) < 3:
        raise ValueError("need at least three scales")
    counts = box_counts(flagged, scales)
    if counts[-1][1] == 0:
        dim, ci = 0.0, (0.0, 0.0)
    else:
        k = np.array([c[0] for c in counts], dtype=np.float64)
        y = np.log2(np.array([c[1] for c in counts], dtype=np.float64))
        fit = stats.linregress(k, y)
        dim = float(fit.slope)
        t = stats.t.ppf(0.975, len(k) - 2)
        half = float(t * fit.stderr)
        ci = (dim - half, dim + half)
    if with_ci:
        return dim, counts, ci
    return dim, counts


class Verdict(NamedTuple):
    passed: bool
    margin: float
    bound: float


def bound_check(report, gamma: float, slack: float = 0.0) -> Verdict:
    """Compare the box-count estimate with ``2*(1 - gamma) + slack``.

    A heuristic diagnostic only: finite-horizon flagging approximates
    unboundedness and the box dimension is an upper proxy for Hausdorff
    dimension.
    """
    dim = report.dim_estimate if hasattr(report, "dim_estimate") else float(report)
    bound = 2.0 * (1.0 - gamma) + slack
    margin = bound - dim
    return Verdict(margin >= 0, margin, bound)


def cantor_mask(k_max: int, depth: int) -> np.ndarray:
    """Grid points ``i / 2**k_max`` lying in the depth-``depth`` middle-thirds Cantor set (scaled to [0, 1))."""
    x = np.arange(1 << k_max, dtype=np.float64) / (1 << k_max)
    keep = np.ones_like(x, dtype=bool)
    y = x.copy()
    for _ in range(depth):
        y = y * 3.0
        digit = np.floor(y)
        keep &= digit != 1
        y -= digit
    return keep


def default_workers() -> int:
    return os.cpu_count() or 1
