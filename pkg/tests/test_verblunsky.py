import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opucscan.verblunsky import (
    MODULUS_CAP,
    CoefficientSequence,
    SequenceError,
    check_log_divergence,
    dyadic_l1_sum,
    materialize,
    parse_explicit,
    weighted_energy,
    weighted_energy_partial_sums,
    write_blocks_csv,
    write_energy_csv,
)

# 50-digit decimal partial sum of sqrt(n)/(n+1)**2 for n = 1..1000
HARMONIC_HALF_1000 = 1.3576728511257522290846707817386742003098311518554


def test_zero_materializes_to_zeros():
    np.testing.assert_array_equal(materialize(CoefficientSequence.zero(), 3), np.zeros(4))


def test_power_decay_values():
    seq = CoefficientSequence("power-decay", amplitude=0.5, exponent=1.0)
    np.testing.assert_allclose(materialize(seq, 2), [0.5, 0.25, 0.5 / 3], rtol=0, atol=1e-16)


def test_explicit_passthrough_and_range():
    seq = CoefficientSequence.from_values([0.3 + 0.4j], zero_tail=False)
    assert materialize(seq, 0)[0] == 0.3 + 0.4j
    with pytest.raises(SequenceError):
        materialize(seq, 1)
    padded = CoefficientSequence.from_values([0.3 + 0.4j])
    np.testing.assert_array_equal(materialize(padded, 2), [0.3 + 0.4j, 0, 0])


def test_amplitude_rejected():
    with pytest.raises(SequenceError):
        CoefficientSequence("constant", amplitude=1.0)
    with pytest.raises(SequenceError):
        CoefficientSequence.from_values([0.8 + 0.8j])


def test_random_phase_deterministic_and_prefix_consistent():
    seq = CoefficientSequence("random-phase-power-decay", amplitude=0.6, exponent=0.55, seed=11)
    a = materialize(seq, 1000)
    b = materialize(CoefficientSequence("random-phase-power-decay", amplitude=0.6, exponent=0.55, seed=11), 1000)
    assert a.tobytes() == b.tobytes()
    short = materialize(CoefficientSequence("random-phase-power-decay", amplitude=0.6, exponent=0.55, seed=11), 10)
    assert short.tobytes() == a[:11].tobytes()
    np.testing.assert_allclose(np.abs(a), 0.6 * np.arange(1, 1002) ** -0.55, rtol=1e-15)
    other = materialize(CoefficientSequence("random-phase-power-decay", amplitude=0.6, exponent=0.55, seed=12), 1000)
    assert not np.allclose(a, other)


def test_sparse_spikes():
    a = materialize(CoefficientSequence("sparse", amplitude=0.4, exponent=0.5), 20)
    nz = np.nonzero(a)[0].tolist()
    assert nz == [0, 1, 3, 7, 15]


def test_config_round_trip():
    for seq in (
        CoefficientSequence("random-phase-power-decay", amplitude=0.6, exponent=0.55, seed=3, gamma_target=0.8),
        CoefficientSequence.from_values([0.1, 0.2j, -0.3 + 0.1j]),
    ):
        cfg = json.loads(json.dumps(seq.to_config()))
        assert CoefficientSequence.from_config(cfg) == seq


def test_parse_explicit_forms():
    assert parse_explicit("0.5, 0.3+0.4j") == (0.5 + 0j, 0.3 + 0.4j)
    assert parse_explicit("[[0.5, 0], [0.3, 0.4]]") == (0.5 + 0j, 0.3 + 0.4j)


@settings(max_examples=40, deadline=None)
@given(
    kind=st.sampled_from(["constant", "power-decay", "random-phase-power-decay", "sparse"]),
    amp=st.floats(0.0, 0.999999),
    p=st.floats(0.05, 3.0),
    seed=st.integers(0, 2**63 - 1),
)
def test_moduli_below_cap(kind, amp, p, seed):
    a = materialize(CoefficientSequence(kind, amplitude=amp, exponent=p, seed=seed), 500)
    assert np.all(np.abs(a) < MODULUS_CAP)


def test_weighted_energy_examples():
    assert weighted_energy(CoefficientSequence.zero(), 0.5, 1000) == 0.0
    spike = CoefficientSequence.from_values([0.9])
    assert weighted_energy(spike, 0.7, 10) == 0.0
    # alpha_0 = 1 is not admissible, so scale the frozen sum by amplitude**2
    seq = CoefficientSequence("power-decay", amplitude=0.5, exponent=1.0)
    assert weighted_energy(seq, 0.5, 1000) == pytest.approx(0.25 * HARMONIC_HALF_1000, rel=1e-14)


def test_weighted_energy_monotone(rng):
    seq = CoefficientSequence("random-phase-power-decay", amplitude=0.7, exponent=0.6, seed=5)
    rows = weighted_energy_partial_sums(seq, 0.8, [1, 2, 10, 100, 1000])
    vals = [v for _, v in rows]
    assert vals == sorted(vals)
    g = [weighted_energy(seq, gm, 500) for gm in (0.1, 0.4, 0.7, 0.95)]
    assert g == sorted(g)


def test_dyadic_blocks_examples():
    d = dyadic_l1_sum(CoefficientSequence.zero(), 0.5, 0.1, 6)
    assert all(b == 0 for b in d.block_l1) and all(m == 0 for m in d.block_majorant)
    d = dyadic_l1_sum(CoefficientSequence("power-decay", amplitude=0.9, exponent=1.0), 0.8, 0.1, 12)
    for b, m in zip(d.block_l1, d.block_majorant):
        assert b <= m * (1 + 1e-12)
    assert [v for _, v in d.dyadic_l1] == sorted(v for _, v in d.dyadic_l1)
    vals = [0.0] * 9
    vals[8] = 0.5
    d = dyadic_l1_sum(CoefficientSequence.from_values(vals), 0.5, 0.2, 5)
    nz = [k for k, b in enumerate(d.block_l1) if b != 0]
    assert nz == [3]
    assert d.block_l1[3] == pytest.approx(8 ** -(0.25 + 0.05) * 0.5, rel=1e-15)


def test_log_divergence_examples():
    lhs, maj = check_log_divergence(CoefficientSequence.zero(), 0.5, 0.3, 100)
    assert lhs == 0 and not any(maj)
    lhs, maj = check_log_divergence(CoefficientSequence("power-decay", amplitude=0.9, exponent=0.6), 0.5, 0.3, 4096)
    assert lhs <= math.fsum(maj) * (1 + 1e-12)
    lhs, maj = check_log_divergence(CoefficientSequence.from_values([0, 0, 0.5]), 0.9, 0.5, 4)
    assert lhs == pytest.approx(2**0.5 * 0.25, rel=1e-15)
    assert maj[1] == pytest.approx(2**-0.4 * 2**0.9 * 0.25, rel=1e-15)
    assert lhs <= maj[1] * (1 + 1e-12)  # equality in exact arithmetic
    with pytest.raises(ValueError):
        check_log_divergence(CoefficientSequence.zero(), 0.5, 0.5, 10)


def test_csv_headers():
    buf = io.StringIO()
    write_energy_csv(buf, [(1, 0.5)])
    assert buf.getvalue().splitlines()[0] == "N,weighted_energy"
    buf = io.StringIO()
    write_blocks_csv(buf, dyadic_l1_sum(CoefficientSequence.zero(), 0.5, 0.1, 2))
    assert buf.getvalue().splitlines()[0] == "k,block_l1,block_majorant"
