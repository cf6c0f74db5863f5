"""Verblunsky coefficient sequences and their summability diagnostics.

A :class:`CoefficientSequence` is a small immutable recipe; the actual values
alpha_0, alpha_1, ... are produced on demand by :func:`materialize`.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

KINDS = (
    "zero",
    "constant",
    "power-decay",
    "random-phase-power-decay",
    "sparse",
    "explicit-list",
)

#: Every coefficient must stay at least this far inside the unit disk so that
#: rho_n = sqrt(1 - |alpha_n|^2) is safely positive in double precision.
MODULUS_CAP = 1.0 - 1e-12


class SequenceError(ValueError):
    """Invalid coefficient recipe or out-of-range request."""


@dataclass(frozen=True)
class CoefficientSequence:
    """Recipe for a sequence of Verblunsky coefficients.

    Parameters
    ----------
    kind : str
        One of :data:`KINDS`.
    amplitude : float
        Overall modulus scale, in ``[0, 1 - 1e-12)``.
    exponent : float
        Decay power ``p`` (``|alpha_n| = amplitude * (n+1)**-p``).
    gamma_target : float
        The decay class the sequence is meant to represent; metadata only.
    seed : int
        Key of the counter-based generator used for random phases.
    explicit : tuple of complex, optional
        Values for ``kind="explicit-list"``.
    zero_tail : bool
        For explicit lists: treat the sequence as finitely supported and pad
        with zeros instead of rejecting requests past the end of the list.
    """

    kind: str = "zero"
    amplitude: float = 0.0
    exponent: float = 1.0
    gamma_target: float = 0.5
    seed: int = 0
    explicit: tuple[complex, ...] | None = None
    zero_tail: bool = False
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SequenceError(f"unknown sequence kind {self.kind!r}")
        if not (0.0 <= self.amplitude < MODULUS_CAP):
            raise SequenceError(f"amplitude must lie in [0, 1 - 1e-12), got {self.amplitude!r}")
        if not self.exponent > 0:
            raise SequenceError(f"exponent must be positive, got {self.exponent!r}")
        if not (0.0 < self.gamma_target < 1.0):
            raise SequenceError(f"gamma_target must lie in (0, 1), got {self.gamma_target!r}")
        if not (0 <= int(self.seed) < 2**64):
            raise SequenceError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.kind == "explicit-list":
            if not self.explicit:
                raise SequenceError("explicit-list sequences need at least one value")
            vals = tuple(complex(v) for v in self.explicit)
            bad = [v for v in vals if not abs(v) < MODULUS_CAP]
            if bad:
                raise SequenceError(f"explicit coefficients must satisfy |alpha| < 1 - 1e-12: {bad[0]!r}")
            object.__setattr__(self, "explicit", vals)
        elif self.explicit is not None:
            raise SequenceError("explicit values are only allowed for kind='explicit-list'")

    # -- convenience constructors -------------------------------------------------
    @classmethod
    def zero(cls) -> "CoefficientSequence":
        return cls("zero")

    @classmethod
    def from_values(cls, values: Iterable[complex], zero_tail: bool = True) -> "CoefficientSequence":
        return cls("explicit-list", explicit=tuple(complex(v) for v in values), zero_tail=zero_tail)

    # -- evaluation -------------------------------------------------------------
    def materialize(self, n_max: int) -> np.ndarray:
        return materialize(self, n_max)

    @property
    def length(self) -> int | None:
        """Number of available values, or ``None`` when unbounded."""
        if self.kind == "explicit-list" and not self.zero_tail:
            return len(self.explicit)
        return None

    # -- flat key/value serialization ---------------------------------------------
    def to_config(self) -> dict[str, str]:
        cfg = {
            "kind": self.kind,
            "amplitude": repr(float(self.amplitude)),
            "exponent": repr(float(self.exponent)),
            "gamma_target": repr(float(self.gamma_target)),
            "seed": str(int(self.seed)),
        }
        if self.explicit is not None:
            cfg["explicit"] = json.dumps([[v.real, v.imag] for v in self.explicit])
            cfg["zero_tail"] = "true" if self.zero_tail else "false"
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "CoefficientSequence":
        explicit = cfg.get("explicit")
        if isinstance(explicit, str):
            explicit = parse_explicit(explicit)
        zero_tail = cfg.get("zero_tail", False)
        if isinstance(zero_tail, str):
            zero_tail = zero_tail.strip().lower() in ("1", "true", "yes")
        try:
            return cls(
                kind=str(cfg.get("kind", "zero")),
                amplitude=float(cfg.get("amplitude", 0.0)),
                exponent=float(cfg.get("exponent", 1.0)),
                gamma_target=float(cfg.get("gamma_target", 0.5)),
                seed=int(cfg.get("seed", 0)),
                explicit=tuple(explicit) if explicit is not None else None,
                zero_tail=bool(zero_tail),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, SequenceError):
                raise
            raise SequenceError(str(exc)) from exc


def parse_explicit(text: str) -> tuple[complex, ...]:
    """Parse explicit coefficients.

    Accepts a JSON list of ``[re, im]`` pairs (the serialized form) or a
    comma-separated list of Python complex literals such as ``0.5,0.3+0.4j``.
    """
    text = text.strip()
    if text.startswith("["):
        try:
            data = json.loads(text)
            out = []
            for item in data:
                if isinstance(item, (list, tuple)):
                    re, im = item
                    out.append(complex(float(re), float(im)))
                else:
                    out.append(complex(float(item)))
            return tuple(out)
        except (ValueError, TypeError) as exc:
            raise SequenceError(f"malformed explicit coefficient list: {text!r}") from exc
    try:
        return tuple(complex(tok.strip().replace(" ", "")) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise SequenceError(f"malformed explicit coefficient list: {text!r}") from exc


def _random_phases(seed: int, count: int) -> np.ndarray:
    # Philox is counter based: the k-th double depends only on (seed, k), so
    # every prefix of a longer draw is identical to a shorter draw.
    gen = np.random.Generator(np.random.Philox(key=int(seed)))
    return 2.0 * np.pi * gen.random(count)


def materialize(seq: CoefficientSequence, n_max: int) -> np.ndarray:
    """Return ``alpha_0 .. alpha_{n_max}`` as a complex128 array.

    The result is read-only and cached on the sequence object, so repeated
    calls are cheap and bit-identical.
    """
    n_max = int(n_max)
    if n_max < 0:
        raise SequenceError(f"n_max must be non-negative, got {n_max}")
    length = seq.length
    if length is not None and n_max >= length:
        raise SequenceError(
            f"explicit list has {length} values; alpha_{n_max} requested (set zero_tail to pad)"
        )
    cached = seq._cache.get("values")
    if cached is not None and len(cached) > n_max:
        return cached[: n_max + 1]

    count = n_max + 1
    n = np.arange(count, dtype=np.float64)
    if seq.kind == "zero":
        out = np.zeros(count, dtype=np.complex128)
    elif seq.kind == "constant":
        out = np.full(count, seq.amplitude, dtype=np.complex128)
    elif seq.kind == "power-decay":
        out = (seq.amplitude * (n + 1.0) ** (-seq.exponent)).astype(np.complex128)
    elif seq.kind == "random-phase-power-decay":
        mod = seq.amplitude * (n + 1.0) ** (-seq.exponent)
        out = mod * np.exp(1j * _random_phases(seq.seed, count))
    elif seq.kind == "sparse":
        # spikes at n = 2^k - 1 only
        out = np.zeros(count, dtype=np.complex128)
        idx = (1 << np.arange(0, count.bit_length() + 1)) - 1
        idx = idx[idx < count]
        out[idx] = seq.amplitude * (idx + 1.0) ** (-seq.exponent)
    else:  # explicit-list
        out = np.zeros(count, dtype=np.complex128)
        vals = np.asarray(seq.explicit, dtype=np.complex128)[:count]
        out[: len(vals)] = vals

    out.setflags(write=False)
    seq._cache["values"] = out
    return out


# ---------------------------------------------------------------------------
# summability diagnostics
# ---------------------------------------------------------------------------

def _check_gamma(gamma):
    if not (0.0 < gamma < 1.0):
        raise ValueError(f"gamma must lie in (0, 1), got {gamma!r}")


def _as_values(seq, n_max) -> np.ndarray:
    if isinstance(seq, CoefficientSequence):
        return materialize(seq, n_max)
    vals = np.asarray(seq, dtype=np.complex128)
    if len(vals) <= n_max:
        raise SequenceError(f"need {n_max + 1} coefficients, got {len(vals)}")
    return vals[: n_max + 1]


def weighted_energy(seq, gamma: float, N: int) -> float:
    """``sum_{n=1}^{N} n**gamma * |alpha_n|**2``.

    The ``n = 0`` term carries weight ``0**gamma = 0`` and is omitted.
    """
    _check_gamma(gamma)
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    a = _as_values(seq, N)[1:]
    n = np.arange(1, N + 1, dtype=np.float64)
    return math.fsum(n**gamma * (a.real**2 + a.imag**2))


def weighted_energy_partial_sums(seq, gamma: float, Ns: Sequence[int]) -> list[tuple[int, float]]:
    """Partial sums of :func:`weighted_energy` at each requested ``N``."""
    _check_gamma(gamma)
    Ns = sorted(int(N) for N in Ns)
    if not Ns or Ns[0] < 1:
        raise ValueError("need at least one N >= 1")
    a = _as_values(seq, Ns[-1])
    n = np.arange(len(a), dtype=np.float64)
    terms = n**gamma * (a.real**2 + a.imag**2)
    terms[0] = 0.0
    out, acc, prev = [], 0.0, 0
    for N in Ns:
        acc = math.fsum([acc, math.fsum(terms[prev + 1 : N + 1])])
        prev = N
        out.append((N, acc))
    return out


@dataclass
class DecayDiagnostics:
    """Dyadic-block view of a coefficient sequence.

    Block ``k`` is the index range ``[2**k, 2**(k+1))``.  ``block_l1`` holds
    ``sum n**-(d/2 + eps/4) |alpha_n|`` over the block, with ``d = 1 - gamma``,
    and ``block_majorant`` the Cauchy-Schwarz bound
    ``(sum n**-(1 + eps/2))**0.5 * (sum n**gamma |alpha_n|**2)**0.5``.
    ``partial_sums`` and ``dyadic_l1`` are the running totals through the end
    of each block, keyed by the last index ``2**(k+1) - 1``.
    """

    gamma: float
    epsilon: float
    block_l1: list[float]
    block_majorant: list[float]
    partial_sums: list[tuple[int, float]]
    dyadic_l1: list[tuple[int, float]]

    @property
    def d(self) -> float:
        return 1.0 - self.gamma

    def rows(self):
        return [(k, l1, maj) for k, (l1, maj) in enumerate(zip(self.block_l1, self.block_majorant))]


def dyadic_l1_sum(seq, gamma: float, epsilon: float, K: int) -> DecayDiagnostics:
    _check_gamma(gamma)
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    last = 2**K - 1
    a = np.abs(_as_values(seq, last))
    d = 1.0 - gamma
    block_l1, block_maj, partial, dyadic = [], [], [], []
    acc_e, acc_l1 = 0.0, 0.0
    for k in range(K):
        n = np.arange(2**k, 2 ** (k + 1), dtype=np.float64)
        ak = a[2**k : 2 ** (k + 1)]
        l1 = math.fsum(n ** (-(d / 2 + epsilon / 4)) * ak)
        energy = math.fsum(n**gamma * ak**2)
        weight = math.fsum(n ** (-(1.0 + epsilon / 2)))
        block_l1.append(l1)
        block_maj.append(math.sqrt(weight) * math.sqrt(energy))
        acc_e += energy
        acc_l1 += l1
        partial.append((2 ** (k + 1) - 1, acc_e))
        dyadic.append((2 ** (k + 1) - 1, acc_l1))
    return DecayDiagnostics(gamma, epsilon, block_l1, block_maj, partial, dyadic)


class LogDivergenceCheck(NamedTuple):
    lhs: float
    majorants: list[float]


def check_log_divergence(seq, gamma: float, tau: float, N: int) -> LogDivergenceCheck:
    """Compare ``sum_{n<=N} n**tau |alpha_n|**2`` with its dyadic majorants.

    Majorant ``k`` is ``2**(-delta*k) * sum_{n in block k, n <= N} n**gamma |alpha_n|**2``
    with ``delta = gamma - tau``; the sum of majorants bounds ``lhs`` exactly.
    """
    _check_gamma(gamma)
    if not tau < gamma:
        raise ValueError(f"tau must be smaller than gamma ({tau!r} >= {gamma!r})")
    if N < 2:
        raise ValueError(f"N must be at least 2, got {N}")
    a = _as_values(seq, N)
    a2 = a.real**2 + a.imag**2
    delta = gamma - tau
    n_all = np.arange(1, N + 1, dtype=np.float64)
    lhs = math.fsum(n_all**tau * a2[1:])
    majorants = []
    k = 0
    while 2**k <= N:
        hi = min(2 ** (k + 1), N + 1)
        n = np.arange(2**k, hi, dtype=np.float64)
        majorants.append(2.0 ** (-delta * k) * math.fsum(n**gamma * a2[2**k : hi]))
        k += 1
    return LogDivergenceCheck(lhs, majorants)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_energy_csv(fh, rows: Iterable[tuple[int, float]]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["N", "weighted_energy"])
    for N, val in rows:
        w.writerow([int(N), _fmt(val)])


def write_blocks_csv(fh, diag: DecayDiagnostics) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["k", "block_l1", "block_majorant"])
    for k, l1, maj in diag.rows():
        w.writerow([k, _fmt(l1), _fmt(maj)])


def write_coefficients_csv(fh, alphas: np.ndarray) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["n", "re_alpha", "im_alpha"])
    for n, a in enumerate(alphas):
        w.writerow([n, _fmt(a.real), _fmt(a.imag)])
