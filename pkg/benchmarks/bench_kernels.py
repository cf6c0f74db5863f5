"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--n 20000] [--etas 64] [--betas 8]

Both backends are loaded side by side; the pure module is imported directly so
the comparison does not depend on the OPUCSCAN_PURE_PYTHON switch.
"""
import argparse
import time

import numpy as np

from opucscan import _pykernels
from opucscan.kernels import compiled_available
from opucscan.verblunsky import CoefficientSequence, materialize


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20_000, help="coefficients per angle")
    ap.add_argument("--etas", type=int, default=64)
    ap.add_argument("--betas", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    seq = CoefficientSequence("random-phase-power-decay", amplitude=0.6, exponent=0.55, seed=7)
    alphas = np.ascontiguousarray(materialize(seq, args.n - 1))
    inv_rho = 1.0 / np.sqrt(1.0 - np.abs(alphas) ** 2)
    etas = 2 * np.pi * np.arange(args.etas) / args.etas
    betas = 2 * np.pi * np.arange(args.betas) / args.betas

    backends = {"python": _pykernels}
    if compiled_available():
        from opucscan import _ckernels

        backends["cython"] = _ckernels
    else:
        print("compiled kernels not built; timing the fallback only")

    results = {}
    print(f"N={args.n}  etas={args.etas}  betas={args.betas}  best of {args.repeat}")
    print(f"{'kernel':<20}{'backend':<10}{'seconds':>10}{'steps/s':>14}")
    for name, mod in backends.items():
        t, out = best_of(lambda: mod.scan_block(alphas, inv_rho, etas, betas), args.repeat)
        steps = args.n * args.etas * (args.betas + 1)
        print(f"{'scan_block':<20}{name:<10}{t:>10.3f}{steps / t:>14.3e}")
        t2, tr = best_of(lambda: mod.prufer_trajectory(alphas, 1.0, 0.5), args.repeat)
        print(f"{'prufer_trajectory':<20}{name:<10}{t2:>10.3f}{args.n / t2:>14.3e}")
        results[name] = (t, out, t2, tr)

    if len(results) == 2:
        (tp, op, tp2, trp), (tc, oc, tc2, trc) = results["python"], results["cython"]
        print(f"speedup scan_block {tp / tc:.1f}x, prufer_trajectory {tp2 / tc2:.1f}x")
        print("max |diff| sup_log_radius", float(np.max(np.abs(op[0] - oc[0]))))
        print("max |diff| sup_log_norm  ", float(np.max(np.abs(op[1] - oc[1]))))
        print("argmax identical         ", bool(np.array_equal(op[2], oc[2])))
        print("max |diff| log_R         ", float(np.max(np.abs(trp[0] - trc[0]))))


if __name__ == "__main__":
    main()
