import io
import json
import math

import pytest

from opucscan.cli import load_config, run

SEQ = ["--seq-kind", "random-phase-power-decay", "--amplitude", "0.6", "--exponent", "0.55", "--seed", "5"]


def call(args):
    buf = io.StringIO()
    code = run(args, stdout=buf)
    return code, buf.getvalue()


def strip_timestamp(text):
    if text.lstrip().startswith("{"):
        d = json.loads(text)
        d.pop("timestamp", None)
        return json.dumps(d, sort_keys=True)
    return "\n".join(l for l in text.splitlines() if not l.startswith("# timestamp="))


def test_check_zero_sequence():
    code, out = call(["check", "--n-max", "1000"])
    assert code == 0
    res = json.loads(out)["result"]
    assert res["ok"] and res["abel"] == 0 and res["branch_max_step"] == 0
    # |exp(i*eta)| is 1 only to an ulp, so powers of z carry roundoff
    assert res["prufer_vs_recurrence"] < 1e-12 and res["det"] < 1e-12


def test_check_random_sequence():
    code, out = call(["check", "--n-max", "500"] + SEQ)
    assert code == 0 and json.loads(out)["result"]["ok"]


def test_scan_zero_sequence():
    code, out = call(["scan", "--grid", "4096", "--n-max", "10000", "--workers", "1"])
    assert code == 0
    res = json.loads(out)["result"]
    assert res["n_flagged"] == 0 and res["flagged_rle"] == []


def test_evolve_single_coefficient():
    code, out = call(["evolve", "--explicit", "0.5", "--eta", "0", "--n-max", "1"])
    assert code == 0
    rows = [l for l in out.splitlines() if not l.startswith("#")]
    assert rows[0] == "n,re_phi,im_phi,re_phi_star,im_phi_star"
    assert float(rows[2].split(",")[1]) == pytest.approx(0.5 / math.sqrt(0.75), rel=1e-15)


@pytest.mark.parametrize(
    "args",
    [
        ["gen", "--n-max", "20"] + SEQ,
        ["evolve", "--n-max", "30", "--eta", "1.2", "--kind", "second"] + SEQ,
        ["evolve", "--n-max", "30", "--eta", "1.2", "--what", "norms"] + SEQ,
        ["prufer", "--n-max", "40", "--eta", "0.3", "--beta", "2"] + SEQ,
        ["tails", "--n-max", "40", "--eta", "0.3"] + SEQ,
        ["tails", "--n-max", "40", "--eta", "0.3", "--format", "json"] + SEQ,
        ["energy", "--n-max", "1000"] + SEQ,
        ["energy", "--n-max", "1000", "--what", "blocks", "--epsilon", "0.2"] + SEQ,
        ["energy", "--n-max", "1000", "--what", "log-divergence", "--tau", "0.3"] + SEQ,
        ["energy", "--what", "sz", "--trials", "3", "--seed", "4"],
        ["scan", "--grid", "64", "--n-max", "500", "--threshold", "3", "--workers", "1"] + SEQ,
        ["scan", "--grid", "64", "--n-max", "500", "--format", "csv", "--workers", "1"] + SEQ,
        ["gen", "--explicit", "0.1,0.2+0.3j", "--n-max", "4"],
    ],
)
def test_round_trip(tmp_path, args):
    first = tmp_path / "first.out"
    assert run(args + ["--out", str(first)]) == 0
    second = tmp_path / "second.out"
    assert run([args[0], "--config", str(first), "--out", str(second)]) == 0
    assert strip_timestamp(first.read_text()) == strip_timestamp(second.read_text())


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seq_kind=power-decay\namplitude=0.5\nexponent=1\nn_max=2\n")
    code, out = call(["gen", "--config", str(cfg), "--n-max", "1"])
    assert code == 0
    assert load_config(str(cfg))["amplitude"] == "0.5"
    rows = [l for l in out.splitlines() if not l.startswith("#")]
    assert len(rows) == 3 and rows[2].startswith("1,0.25,")


def test_energy_measure(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("center,width,mass\n1.0,0.01,0.5\n2.0,0.01,0.5\n")
    code, out = call(["energy", "--measure", str(m), "--s", "0.5"])
    assert code == 0
    res = json.loads(out)["result"]
    assert set(res) == {"s", "energy", "ratio", "trial_seed"}
    assert res["energy"] == pytest.approx(14.833336458424403, rel=1e-10)


def test_exit_codes(tmp_path):
    assert call(["frobnicate"])[0] == 2
    assert call(["gen", "--amplitude", "1.5", "--seq-kind", "constant"])[0] == 2
    assert call(["gen", "--seq-kind", "random-phase-power-decay", "--amplitude", "0.5"])[0] == 2  # no seed
    bad = tmp_path / "bad.cfg"
    bad.write_text("this is not a config\n")
    assert call(["gen", "--config", str(bad)])[0] == 3
    bad.write_text("n_max=abc\n")
    assert call(["gen", "--config", str(bad)])[0] == 3
    bad.write_text("colour=blue\n")
    assert call(["gen", "--config", str(bad)])[0] == 3
    assert call(["gen", "--config", str(tmp_path / "missing.cfg")])[0] == 3
    assert run(["gen", "--out", str(tmp_path / "no" / "such" / "dir.csv")]) == 4


def test_check_failure_exit_code(monkeypatch):
    import opucscan.cli as cli

    monkeypatch.setattr(cli, "identity_suite", lambda seq, n: {"ok": False})
    assert call(["check"])[0] == 1


def test_workers_do_not_change_scan(tmp_path):
    base = ["scan", "--grid", "256", "--n-max", "3000"] + SEQ
    outs = []
    for w in ("1", "8"):
        p = tmp_path / f"w{w}.json"
        assert run(base + ["--workers", w, "--out", str(p)]) == 0
        outs.append(strip_timestamp(p.read_text()))
    assert outs[0] == outs[1]
