"""Brute-force sweeps that fix the empirical constants used by the test suite.

Run once; the result is written to ``tests/fixtures/constants.json``.  The SZ
ratio is recomputed from scratch with quadrature that shares no code with the
package: pair energies integrate ``|t|**-s`` against the exact (trapezoidal)
density of ``x - y`` with adaptive QUADPACK, and the left side uses a dense
midpoint rule.  Seeds are disjoint from the ones used in the tests.

    python3 scripts/calibrate_constants.py [--trials 1000]
"""
import argparse
import json
import math
import pathlib
import time

import numpy as np
from scipy import integrate

from opucscan.prufer import RotationParams
from opucscan.tails import phase_increment_bound_check, random_sz_trial
from opucscan.verblunsky import CoefficientSequence

SZ_SEED0 = 1_000_000
PHASE_SEED0 = 2_000_000
S = 0.5
PAD = 1.25  # headroom on the observed maximum


def diff_density_breaks(a1, a2, b1, b2):
    # x uniform on [a1,a2], y on [b1,b2]; x - y has a trapezoid density
    return sorted([a1 - b2, a1 - b1, a2 - b2, a2 - b1])


def pair_mean_oracle(ca, wa, cb, wb, s):
    a1, a2 = ca - wa / 2, ca + wa / 2
    b1, b2 = cb - wb / 2, cb + wb / 2
    t0, t1, t2, t3 = diff_density_breaks(a1, a2, b1, b2)

    def dens(t):
        # trapezoid with plateau height 1/max(wa, wb)
        plateau = 1.0 / max(wa, wb)
        if t <= t0 or t >= t3:
            return 0.0
        if t < t1:
            return plateau * (t - t0) / (t1 - t0)
        if t <= t2:
            return plateau
        return plateau * (t3 - t) / (t3 - t2)

    pts = sorted({p for p in (t0, t1, t2, t3, 0.0) if t0 <= p <= t3})
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi <= lo:
            continue
        opts = dict(epsabs=0.0, epsrel=1e-11, limit=200)
        # the |t|**-s singularity only ever sits at a segment end
        if hi == 0.0:
            val, _ = integrate.quad(dens, lo, hi, weight="alg", wvar=(0.0, -s), **opts)
        elif lo == 0.0:
            val, _ = integrate.quad(dens, lo, hi, weight="alg", wvar=(-s, 0.0), **opts)
        else:
            val, _ = integrate.quad(lambda t: dens(t) * abs(t) ** -s, lo, hi, **opts)
        total += val
    return total


def energy_oracle(nu, s):
    c, w, m = nu.centers, nu.widths, nu.masses
    total = []
    for i in range(len(c)):
        for j in range(len(c)):
            total.append(m[i] * m[j] * (1.0 + pair_mean_oracle(c[i], w[i], c[j], w[j], s)))
    return math.fsum(total)


def lhs_oracle(c, m, nu, pts=4000):
    parts = []
    for cen, wid, mass, cut in zip(nu.centers, nu.widths, nu.masses, m):
        eta = cen - wid / 2 + wid * (np.arange(pts) + 0.5) / pts
        n = np.arange(int(cut) + 1)
        vals = np.abs(np.exp(-1j * np.outer(eta, n)) @ c[: int(cut) + 1])
        parts.append(mass * float(np.mean(vals)))
    return math.fsum(parts)


def sz_sweep(trials):
    worst, worst_seed, worst_energy_gap = 0.0, None, 0.0
    for t in range(trials):
        tr = random_sz_trial(SZ_SEED0 + t)
        e = energy_oracle(tr.nu, S)
        n = np.arange(len(tr.c))
        rhs = e * math.fsum((n + 1.0) ** (1 - S) * np.abs(tr.c) ** 2)
        r = lhs_oracle(tr.c, tr.m, tr.nu) ** 2 / rhs
        worst_energy_gap = max(worst_energy_gap, tr.nu.total_mass**2 / e)
        if r > worst:
            worst, worst_seed = r, tr.seed
    return worst, worst_seed, worst_energy_gap


def phase_sweep(trials, n=2000):
    worst = 0.0
    for t in range(trials):
        rng = np.random.default_rng(PHASE_SEED0 + t)
        alphas = 0.5 * rng.uniform(0, 1, n) * np.exp(2j * math.pi * rng.uniform(0, 1, n))
        seq = CoefficientSequence.from_values(alphas)
        p = RotationParams(rng.uniform(0, 2 * math.pi), rng.uniform(0, 2 * math.pi))
        worst = max(worst, phase_increment_bound_check(seq, p, n - 1))
    return worst


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).parents[1] / "tests" / "fixtures" / "constants.json"))
    args = ap.parse_args()
    t0 = time.perf_counter()
    sz_max, sz_seed, mass_ratio = sz_sweep(args.trials)
    t1 = time.perf_counter()
    ph_max = phase_sweep(args.trials)
    t2 = time.perf_counter()
    out = {
        "sz": {
            "s": S,
            "trials": args.trials,
            "seed0": SZ_SEED0,
            "observed_max_ratio": sz_max,
            "worst_seed": sz_seed,
            "max_mass2_over_energy": mass_ratio,
            "C_emp": math.ceil(PAD * sz_max * 100) / 100,
        },
        "phase_increment": {"trials": args.trials, "seed0": PHASE_SEED0, "observed_max_ratio": ph_max, "bound": 4.0},
    }
    with open(args.out, "w") as fh:
        json.dump(out, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(json.dumps(out, indent=1, sort_keys=True))
    print(f"sz sweep {t1 - t0:.1f}s, phase sweep {t2 - t1:.1f}s")


if __name__ == "__main__":
    main()
