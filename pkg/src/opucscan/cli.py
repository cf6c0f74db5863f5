"""Command line driver.

Every output starts with the fully resolved run configuration, so any output
file can be fed back through ``--config`` to reproduce it.  Exit codes:
0 success, 1 failed identity check, 2 invalid arguments, 3 malformed config
file, 4 unwritable output path.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys

import numpy as np

from . import __version__, kernels
from .dimension import ScanConfig, scan_exceptional_set, utc_timestamp, default_workers
from .prufer import RotationParams, check_branch, evolve_prufer, BranchError
from .szego import (
    log_sup_norm_up_to,
    monic_log_modulus,
    norm_trace,
    pair_trajectory,
    transfer_matrix,
    write_norm_csv,
    write_pair_csv,
)
from .tails import (
    DiscreteMeasure,
    abel_identity_check,
    energy_record,
    phase_increment_bound_check,
    random_sz_trial,
    s_energy,
    sz_inequality_ratio,
    tail_table,
    telescoping_defect,
    write_tail_csv,
)
from .verblunsky import (
    CoefficientSequence,
    SequenceError,
    check_log_divergence,
    dyadic_l1_sum,
    materialize,
    parse_explicit,
    weighted_energy_partial_sums,
    write_blocks_csv,
    write_coefficients_csv,
    write_energy_csv,
)

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_CONFIG, EXIT_OUTPUT = 0, 1, 2, 3, 4

COMMANDS = ("gen", "evolve", "prufer", "tails", "energy", "scan", "check")

# (key, type, default); None defaults stay out of the resolved config
PARAMS = {
    "seq_kind": (str, "zero"),
    "amplitude": (float, 0.0),
    "exponent": (float, 1.0),
    "gamma": (float, 0.9),
    "seed": (int, None),
    "explicit": (str, None),
    "zero_tail": (bool, True),
    "eta": (float, 0.0),
    "beta": (float, 0.0),
    "n_max": (int, 1000),
    "grid": (int, 4096),
    "threshold": (float, 1e3),
    "beta_samples": (int, 8),
    "s": (float, 0.5),
    "epsilon": (float, 0.1),
    "tau": (float, None),
    "kind": (str, "first"),
    "what": (str, None),
    "measure": (str, None),
    "trials": (int, 200),
    "format": (str, None),
}

# results do not depend on these, so they stay out of the embedded config
EXECUTION_ONLY = ("workers", "out", "config")

COMMAND_PARAMS = {
    "gen": ("n_max",),
    "evolve": ("eta", "n_max", "kind", "what"),
    "prufer": ("eta", "beta", "n_max"),
    "tails": ("eta", "beta", "n_max"),
    "energy": ("n_max", "epsilon", "tau", "what", "s", "measure", "trials"),
    "scan": ("n_max", "grid", "threshold", "beta_samples"),
    "check": ("n_max",),
}
SEQUENCE_PARAMS = ("seq_kind", "amplitude", "exponent", "gamma", "seed", "explicit", "zero_tail")


class UsageError(Exception):
    pass


class ConfigError(Exception):
    pass


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opucscan", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="flat key=value file (or a previous output); flags override it")
    p.add_argument("--seq-kind", dest="seq_kind")
    p.add_argument("--amplitude", type=float)
    p.add_argument("--exponent", type=float)
    p.add_argument("--gamma", type=float, help="decay class gamma (also used by energy and scan)")
    p.add_argument("--seed", type=int)
    p.add_argument("--explicit", help="coefficients, e.g. '0.5,0.3+0.4j' or '[[0.5,0],[0.3,0.4]]'")
    p.add_argument("--zero-tail", dest="zero_tail", type=_bool, help="pad explicit lists with zeros")
    p.add_argument("--eta", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--beta-samples", dest="beta_samples", type=int)
    p.add_argument("--s", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--kind", choices=("first", "second"))
    p.add_argument("--what", help="output variant (evolve: pair|norms; energy: weighted|blocks|log-divergence|s-energy|sz)")
    p.add_argument("--measure", help="cell measure CSV with columns center,width,mass")
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    return p


def load_config(path: str) -> dict:
    """Read ``key=value`` lines, or the embedded config of a previous output."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON config {path!r}: {exc}") from exc
        cfg = data.get("config", data)
        if not isinstance(cfg, dict):
            raise ConfigError(f"config in {path!r} is not a mapping")
        return {str(k): v for k, v in cfg.items()}
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        embedded = line.startswith("#")
        if embedded:
            line = line[1:].strip()
        if not line:
            continue
        if "=" not in line:
            if embedded or "," in line:
                continue  # comment or data row of a previous CSV output
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        cfg[key] = value.strip()
    cfg.pop("timestamp", None)
    return cfg


def resolve(args: argparse.Namespace) -> dict:
    file_cfg = load_config(args.config) if args.config else {}
    file_cfg.pop("command", None)
    unknown = sorted(set(file_cfg) - set(PARAMS) - set(EXECUTION_ONLY))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cmd = args.command
    keys = SEQUENCE_PARAMS + COMMAND_PARAMS[cmd] + ("format",)
    out = {"command": cmd}
    for key in keys:
        typ, default = PARAMS[key]
        val = getattr(args, key, None)
        if val is None and key in file_cfg:
            raw = file_cfg[key]
            try:
                val = _bool(raw) if typ is bool else typ(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        if val is None:
            val = default
        if val is not None:
            out[key] = val
    if out.get("format") is None:
        out["format"] = "json" if cmd in ("scan", "check") else "csv"
    if "workers" in file_cfg and args.workers is None:
        args.workers = int(file_cfg["workers"])
    return out


def make_sequence(cfg: dict) -> CoefficientSequence:
    kind = cfg["seq_kind"]
    if kind == "random-phase-power-decay" and cfg.get("seed") is None:
        raise UsageError("random-phase sequences need an explicit --seed")
    explicit = cfg.get("explicit")
    if explicit is not None and kind == "zero":
        kind = cfg["seq_kind"] = "explicit-list"
    return CoefficientSequence(
        kind=kind,
        amplitude=cfg["amplitude"],
        exponent=cfg["exponent"],
        gamma_target=cfg["gamma"],
        seed=cfg.get("seed") or 0,
        explicit=parse_explicit(explicit) if explicit is not None else None,
        zero_tail=cfg["zero_tail"] if kind == "explicit-list" else False,
    )


def _header(cfg: dict, timestamp: str) -> str:
    lines = [f"# {k}={_cfg_value(v)}" for k, v in cfg.items()]
    lines.append(f"# timestamp={timestamp}")
    return "\n".join(lines) + "\n"


def _cfg_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json(cfg, timestamp, result) -> str:
    return json.dumps({"config": cfg, "timestamp": timestamp, "result": result}, sort_keys=True, indent=1) + "\n"


# ---------------------------------------------------------------------------
# subcommands; each returns (text_body, exit_code)
# ---------------------------------------------------------------------------

def _cmd_gen(cfg, seq, workers):
    alphas = materialize(seq, cfg["n_max"])
    if cfg["format"] == "json":
        return {"alphas": [[a.real, a.imag] for a in alphas.tolist()]}, 0
    buf = io.StringIO()
    write_coefficients_csv(buf, alphas)
    return buf.getvalue(), 0


def _cmd_evolve(cfg, seq, workers):
    n, eta = cfg["n_max"], cfg["eta"]
    what = cfg.get("what") or "pair"
    if what not in ("pair", "norms"):
        raise UsageError(f"evolve --what must be pair or norms, got {what!r}")
    if cfg["format"] == "json":
        vals, stars = pair_trajectory(seq, eta, n, cfg["kind"])
        T = transfer_matrix(seq, eta, n)
        log_sup, arg = log_sup_norm_up_to(seq, eta, n)
        return {
            "value": [vals[-1].real, vals[-1].imag],
            "star_value": [stars[-1].real, stars[-1].imag],
            "transfer_matrix": [[[x.real, x.imag] for x in row] for row in T.to_array().tolist()],
            "log_sup_norm": log_sup,
            "argmax_n": arg,
        }, 0
    buf = io.StringIO()
    if what == "pair":
        write_pair_csv(buf, *pair_trajectory(seq, eta, n, cfg["kind"]))
    else:
        write_norm_csv(buf, norm_trace(seq, eta, n))
    return buf.getvalue(), 0


def _cmd_prufer(cfg, seq, workers):
    from .prufer import write_prufer_csv

    traj = evolve_prufer(seq, RotationParams(cfg["eta"], cfg["beta"]), cfg["n_max"])
    if cfg["format"] == "json":
        res = traj.residual
        return {
            "log_R": float(traj.log_radius[-1]),
            "theta": float(traj.theta[-1]),
            "A": [traj.a_sum[-1].real, traj.a_sum[-1].imag],
            "residual_min": float(res.min()),
            "residual_max": float(res.max()),
            "max_phase_step": check_branch(traj),
        }, 0
    buf = io.StringIO()
    write_prufer_csv(buf, traj)
    return buf.getvalue(), 0


def _cmd_tails(cfg, seq, workers):
    n, eta = cfg["n_max"], cfg["eta"]
    params = RotationParams(eta, cfg["beta"])
    hat = tail_table(seq, eta, n)
    if cfg["format"] == "json":
        return {
            "tail_0": [hat[0].real, hat[0].imag],
            "abel_residual": abel_identity_check(seq, params, n, n),
            "telescoping_defect": telescoping_defect(seq, eta, n),
            "max_phase_ratio": phase_increment_bound_check(seq, params, n) if n >= 1 else 0.0,
        }, 0
    buf = io.StringIO()
    write_tail_csv(buf, eta, hat)
    return buf.getvalue(), 0


def _dyadic_Ns(n_max):
    Ns = [2**k - 1 for k in range(1, max(1, n_max).bit_length() + 1) if 2**k - 1 <= n_max]
    if not Ns or Ns[-1] != n_max:
        Ns.append(n_max)
    return Ns


def _cmd_energy(cfg, seq, workers):
    what = cfg.get("what") or ("s-energy" if cfg.get("measure") else "weighted")
    gamma, n = cfg["gamma"], cfg["n_max"]
    buf = io.StringIO()
    if what == "weighted":
        rows = weighted_energy_partial_sums(seq, gamma, _dyadic_Ns(max(1, n)))
        if cfg["format"] == "json":
            return {"weighted_energy": [[N, v] for N, v in rows]}, 0
        write_energy_csv(buf, rows)
        return buf.getvalue(), 0
    if what == "blocks":
        K = max(1, (n + 1).bit_length() - 1)
        diag = dyadic_l1_sum(seq, gamma, cfg["epsilon"], K)
        if cfg["format"] == "json":
            return {"blocks": diag.rows()}, 0
        write_blocks_csv(buf, diag)
        return buf.getvalue(), 0
    if what == "log-divergence":
        tau = cfg.get("tau")
        if tau is None:
            raise UsageError("--what log-divergence needs --tau")
        chk = check_log_divergence(seq, gamma, tau, max(2, n))
        return {"lhs": chk.lhs, "majorants": chk.majorants, "majorant_sum": math.fsum(chk.majorants)}, 0
    if what == "s-energy":
        if not cfg.get("measure"):
            raise UsageError("--what s-energy needs --measure FILE")
        nu = DiscreteMeasure.from_csv(cfg["measure"])
        return json.loads(energy_record(cfg["s"], s_energy(nu, cfg["s"]))), 0
    if what == "sz":
        base = cfg.get("seed") or 0
        records = []
        for t in range(cfg["trials"]):
            trial = random_sz_trial(base + t)
            e = s_energy(trial.nu, cfg["s"])
            r = sz_inequality_ratio(trial.c, trial.m, trial.nu, cfg["s"], energy=e)
            records.append(json.loads(energy_record(cfg["s"], e, r, trial.seed)))
        return {"records": records, "max_ratio": max(r["ratio"] for r in records)}, 0
    raise UsageError(f"unknown energy variant {what!r}")


def _cmd_scan(cfg, seq, workers):
    scfg = ScanConfig(
        grid_size=cfg["grid"],
        n_max=cfg["n_max"],
        norm_threshold=cfg["threshold"],
        beta_samples=cfg["beta_samples"],
        gamma=cfg["gamma"],
    )
    report = scan_exceptional_set(seq, scfg, workers=workers)
    if cfg["format"] == "json":
        return report.to_dict(), 0
    buf = io.StringIO()
    report.write_csv(buf)
    return buf.getvalue(), 0


def identity_suite(seq, n_max: int) -> dict:
    """Residuals of the core identities on a fixed set of angles."""
    rng = np.random.default_rng(12345)
    etas = rng.uniform(0, 2 * math.pi, 4).tolist()
    betas = rng.uniform(0, 2 * math.pi, 4).tolist()
    out = {"det": 0.0, "prufer_vs_recurrence": 0.0, "abel": 0.0, "branch_max_step": 0.0}
    ok = True
    for eta, beta in zip(etas, betas):
        z = complex(math.cos(eta), math.sin(eta))
        T = transfer_matrix(seq, eta, n_max)
        det_err = abs(T.det() - z**n_max)
        out["det"] = max(out["det"], det_err)
        ok &= det_err <= 1e-9 * max(n_max, 1)
        traj = evolve_prufer(seq, RotationParams(eta, beta), n_max)
        direct = monic_log_modulus(seq, eta, n_max, beta)
        perr = float(np.max(np.abs(traj.log_radius - direct)))
        out["prufer_vs_recurrence"] = max(out["prufer_vs_recurrence"], perr)
        ok &= perr <= 1e-8
        abel = abel_identity_check(seq, RotationParams(eta, beta), n_max, n_max)
        out["abel"] = max(out["abel"], abel)
        ok &= abel <= 1e-10 * max(n_max, 1)
        try:
            out["branch_max_step"] = max(out["branch_max_step"], check_branch(traj))
        except BranchError:
            ok = False
            out["branch_max_step"] = math.pi / 2
    out["ok"] = bool(ok)
    return out


def _cmd_check(cfg, seq, workers):
    res = identity_suite(seq, cfg["n_max"])
    return res, (EXIT_OK if res["ok"] else EXIT_CHECK)


HANDLERS = {
    "gen": _cmd_gen,
    "evolve": _cmd_evolve,
    "prufer": _cmd_prufer,
    "tails": _cmd_tails,
    "energy": _cmd_energy,
    "scan": _cmd_scan,
    "check": _cmd_check,
}


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        seq = make_sequence(cfg)
        workers = args.workers if args.workers is not None else default_workers()
        if workers < 1:
            raise UsageError("--workers must be at least 1")
        body, code = HANDLERS[cfg["command"]](cfg, seq, workers)
    except ConfigError as exc:
        print(f"opucscan: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UsageError, SequenceError, ValueError, KeyError, OSError) as exc:
        print(f"opucscan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    stamp = utc_timestamp()
    if not isinstance(body, str):
        cfg["format"] = "json"  # summary-only variants have no tabular form
    if cfg["format"] == "json":
        text = _json(cfg, stamp, body)
    else:
        text = _header(cfg, stamp) + body
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"opucscan: cannot write {args.out!r}: {exc.strerror}", file=sys.stderr)
            return EXIT_OUTPUT
    else:
        stdout.write(text)
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
