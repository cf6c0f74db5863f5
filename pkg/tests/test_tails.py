import io
import math

import numpy as np
import pytest

from opucscan.prufer import RotationParams, evolve_prufer
from opucscan.tails import (
    DiscreteMeasure,
    abel_identity_check,
    cell_kernel_matrix,
    fourier_tail,
    phase_increment_bound_check,
    phase_increment_ratios,
    random_sz_trial,
    s_energy,
    sz_inequality_ratio,
    tail_table,
    telescoping_defect,
)
from opucscan.verblunsky import CoefficientSequence

ZERO = CoefficientSequence.zero()

# two cells of mass 1/2 and width 0.01 centered 1 apart, s = 0.5; value from
# adaptive quadrature of |t|**-s against the exact density of x - y
TWO_CELL_ENERGY = 14.833336458424403


def test_fourier_tail_examples():
    assert fourier_tail(ZERO, 0.3, 2, 50).value == 0
    c = 0.3 - 0.4j
    vals = [0] * 5 + [c]
    seq = CoefficientSequence.from_values(vals)
    for n in range(7):
        v = fourier_tail(seq, 0.7, n, 20).value
        expect = c * np.exp(5j * 0.7) if n <= 5 else 0
        assert abs(v - expect) < 1e-15
    assert fourier_tail(seq, 0.7, 21, 20).value == 0


def test_geometric_tail():
    r, eta, N = 0.8, 1.3, 60
    # alpha_0 = 1 is not admissible, so use alpha_j = r**(j+1) = r * r**j
    seq = CoefficientSequence.from_values(r ** np.arange(1, N + 2))
    v = fourier_tail(seq, eta, 0, N).value
    err = abs(v / r - 1 / (1 - r * np.exp(1j * eta)))
    assert err <= r ** (N + 1) / (1 - r)
    assert err >= 0.5 * abs(r ** (N + 1) / (1 - r * np.exp(1j * eta)))  # the truncation really shows
    assert abs(tail_table(seq, eta, N)[0] - v) < 1e-14


def test_telescoping(rng):
    seq = CoefficientSequence("random-phase-power-decay", amplitude=0.9, exponent=0.3, seed=4)
    assert telescoping_defect(seq, 2.0, 5000) <= 1e-12


def test_abel_examples(rng):
    assert abel_identity_check(ZERO, (1.0, 0.2), 50, 50) == 0
    seq = CoefficientSequence.from_values(0.9 * np.sqrt(rng.uniform(0, 1, 201)) * np.exp(2j * np.pi * rng.uniform(0, 1, 201)))
    assert abel_identity_check(seq, (0.7, 1.1), 200, 200) <= 1e-10
    assert abel_identity_check(seq, (0.7, 1.1), 0, 10) == 0
    for n in (1, 10, 100, 1000):
        seq = CoefficientSequence("random-phase-power-decay", amplitude=0.9, exponent=0.2, seed=n)
        assert abel_identity_check(seq, RotationParams(*rng.uniform(0, 6, 2)), n, n + 5) <= 1e-10 * n


def test_phase_increment_examples(rng):
    assert phase_increment_bound_check(ZERO, (1.0, 0.0), 10) == 0
    half = CoefficientSequence.from_values([0.5])
    p = RotationParams(0.4, 0.9)
    dth = evolve_prufer(half, p, 1).theta[1]
    r = phase_increment_ratios(half, p, 3)
    assert r[0] == pytest.approx(2 * abs(math.sin(dth)) / 0.5, rel=1e-14)
    assert r[0] <= 2 * abs(dth) / 0.5
    # direct evaluation from the large angles, to a looser tolerance
    traj = evolve_prufer(half, p, 1)
    g = traj.phases()
    direct = abs(np.exp(1j * g[1]) - np.exp(1j * (g[0] + p.eta))) / 0.5
    assert r[0] == pytest.approx(direct, rel=1e-12)
    with pytest.raises(ValueError):
        phase_increment_ratios(CoefficientSequence("constant", amplitude=0.95), p, 3)


def test_phase_increment_constant(constants, rng):
    bound = constants["phase_increment"]["bound"]
    for _ in range(20):
        a = 0.5 * rng.uniform(0, 1, 500) * np.exp(2j * np.pi * rng.uniform(0, 1, 500))
        assert phase_increment_bound_check(CoefficientSequence.from_values(a), RotationParams(*rng.uniform(0, 6, 2)), 499) <= bound


def test_measure_validation(tmp_path):
    with pytest.raises(ValueError):
        DiscreteMeasure([0.1], [0.0], [1.0])
    with pytest.raises(ValueError):
        DiscreteMeasure([7.0], [0.1], [1.0])
    with pytest.raises(ValueError):
        DiscreteMeasure([1.0], [0.1], [0.0])
    nu = DiscreteMeasure([0.5, 2.0], [0.1, 0.2], [0.25, 0.75])
    buf = io.StringIO()
    nu.to_csv(buf)
    path = tmp_path / "m.csv"
    path.write_text("# a comment\n" + buf.getvalue())
    back = DiscreteMeasure.from_csv(path)
    np.testing.assert_array_equal(back.centers, nu.centers)
    np.testing.assert_array_equal(back.masses, nu.masses)


def test_s_energy_examples(rng):
    nu = DiscreteMeasure(rng.uniform(0, 6, 7), rng.uniform(0.01, 0.3, 7), rng.uniform(0.1, 1, 7))
    assert s_energy(nu, 0.0) == pytest.approx(2 * nu.total_mass**2, rel=1e-15)
    two = DiscreteMeasure([1.0, 2.0], [0.01, 0.01], [0.5, 0.5])
    assert s_energy(two, 0.5) == pytest.approx(TWO_CELL_ENERGY, rel=1e-10)
    with pytest.raises(ValueError):
        s_energy(two, 1.0)


def test_uniform_circle_energy_monte_carlo():
    w = 2 * math.pi
    nu = DiscreteMeasure.single(math.pi, w)
    closed = 1 + 2 * w**-0.5 / (0.5 * 1.5)
    assert s_energy(nu, 0.5) == pytest.approx(closed, rel=1e-13)
    rng = np.random.default_rng(77)
    x = rng.uniform(0, w, 10**7)
    y = rng.uniform(0, w, 10**7)
    mc = 1 + np.mean(np.abs(x - y) ** -0.5)
    assert mc == pytest.approx(closed, rel=1e-3)


def test_energy_properties(rng):
    for _ in range(20):
        k = int(rng.integers(1, 12))
        c = rng.uniform(0.5, 1.3, k)
        nu = DiscreteMeasure(c, rng.uniform(1e-3, 0.2, k), rng.uniform(0.01, 1, k))
        es = [s_energy(nu, s) for s in (0.0, 0.2, 0.5, 0.8, 0.95)]
        assert es == sorted(es)  # diameter < 1
        assert all(e >= nu.total_mass**2 for e in es)


def test_kernel_near_far_switch():
    # the midpoint branch and the closed form agree where both are accurate
    nu = DiscreteMeasure([1.0, 4.0], [1e-3, 2e-3], [1, 1])
    K = cell_kernel_matrix(nu, 0.5)
    assert K[0, 1] == pytest.approx(3.0**-0.5, rel=1e-6)


def test_sz_examples():
    nu = DiscreteMeasure.single(1.0, 0.2, 0.7)
    assert sz_inequality_ratio(np.zeros(5), 3, nu, 0.5) == 0.0
    r = sz_inequality_ratio([0.3 + 0.1j], 0, nu, 0.5)
    assert r == pytest.approx(0.7**2 / s_energy(nu, 0.5), rel=1e-13)
    assert r <= 1


def test_sz_random_under_constant(constants):
    c_emp = constants["sz"]["C_emp"]
    for seed in range(500, 520):
        tr = random_sz_trial(seed)
        e = s_energy(tr.nu, 0.5)
        assert e >= tr.nu.total_mass**2
        assert sz_inequality_ratio(tr.c, tr.m, tr.nu, 0.5, energy=e) <= c_emp
