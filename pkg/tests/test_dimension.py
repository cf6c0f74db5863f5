import json
import math

import numpy as np
import pytest

from opucscan.dimension import (
    ScanConfig,
    bound_check,
    box_counting_dimension,
    box_counts,
    cantor_mask,
    default_scales,
    run_length_decode,
    run_length_encode,
    scan_exceptional_set,
)
from opucscan.verblunsky import CoefficientSequence

ZERO = CoefficientSequence.zero()
STRESS = CoefficientSequence("random-phase-power-decay", amplitude=0.6, exponent=0.55, seed=2024)


def test_config_validation():
    with pytest.raises(ValueError):
        ScanConfig(grid_size=100)
    with pytest.raises(ValueError):
        ScanConfig(norm_threshold=1.0)
    with pytest.raises(ValueError):
        ScanConfig(beta_samples=0)
    cfg = ScanConfig(grid_size=64, beta_samples=4)
    assert cfg.k_max == 6 and len(cfg.etas()) == 64
    np.testing.assert_allclose(cfg.betas(), [0, math.pi / 2, math.pi, 3 * math.pi / 2])


def test_zero_sequence_scan():
    rep = scan_exceptional_set(ZERO, ScanConfig(grid_size=256, n_max=2000))
    assert rep.n_flagged == 0 and rep.dim_estimate == 0.0
    assert not rep.sup_log_norm.any() and not rep.argmax_n.any()


def test_single_factor_not_flagged():
    rep = scan_exceptional_set(CoefficientSequence.from_values([0.5]), ScanConfig(grid_size=64, n_max=50, norm_threshold=1.8))
    assert rep.n_flagged == 0
    assert rep.sup_log_norm[0] == pytest.approx(math.log(math.sqrt(3)), rel=1e-14)
    assert rep.argmax_n[0] == 1


def test_threshold_and_horizon_monotone():
    seq = CoefficientSequence("random-phase-power-decay", amplitude=0.6, exponent=0.4, seed=8)
    base = scan_exceptional_set(seq, ScanConfig(grid_size=128, n_max=3000, norm_threshold=5))
    hi = scan_exceptional_set(seq, ScanConfig(grid_size=128, n_max=3000, norm_threshold=20))
    assert base.n_flagged > 0
    assert np.all(hi.flagged <= base.flagged)
    longer = scan_exceptional_set(seq, ScanConfig(grid_size=128, n_max=6000, norm_threshold=5))
    assert np.all(longer.sup_log_radius >= base.sup_log_radius)
    assert np.all(longer.sup_log_norm >= base.sup_log_norm)


def test_box_counts_examples():
    assert box_counting_dimension(np.zeros(4096, bool), range(4, 13))[0] == 0.0
    dim, counts = box_counting_dimension(np.ones(4096, bool), range(4, 13))
    assert dim == pytest.approx(1.0, abs=1e-14)
    assert counts == [(k, 2**k) for k in range(4, 13)]
    with pytest.raises(ValueError):
        box_counting_dimension(np.ones(4096, bool), range(4, 6))


def test_cantor_calibration():
    dim, counts = box_counting_dimension(cantor_mask(12, 8), range(3, 9))
    assert dim == pytest.approx(math.log(2) / math.log(3), abs=0.05)


def test_box_count_consistency(rng):
    for _ in range(20):
        mask = rng.uniform(size=1024) < rng.uniform(0, 0.05)
        c = [n for _, n in box_counts(mask, range(0, 11))]
        for lo, hi in zip(c[:-1], c[1:]):
            assert lo <= hi <= 2 * lo or (lo == hi == 0)


def test_rle_round_trip(rng):
    mask = rng.uniform(size=500) < 0.3
    assert np.array_equal(run_length_decode(run_length_encode(mask), 500), mask)


def test_default_scales():
    assert list(default_scales(12)) == list(range(2, 11))


def test_bound_check_examples():
    v = bound_check(0.0, 0.9, 0.0)
    assert v.passed and v.margin == pytest.approx(0.2)
    assert not bound_check(1.0, 0.9, 0.1).passed


def test_worker_independence():
    cfg = ScanConfig(grid_size=512, n_max=2000)
    a = scan_exceptional_set(STRESS, cfg, workers=1).to_json()
    b = scan_exceptional_set(STRESS, cfg, workers=3).to_json()
    assert a == b
    assert json.loads(a)["config"]["grid_size"] == 512


@pytest.mark.slow
def test_stress_case_smoke():
    rep = scan_exceptional_set(STRESS, ScanConfig(grid_size=4096, n_max=100_000))
    assert rep.n_flagged > 0
    json.loads(rep.to_json())
