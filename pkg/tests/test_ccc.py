import numpy as np
import pytest

from ccclab import ccc
from ccclab.ensemble import scaling_fit
from ccclab.model import DisorderSpec, LatticeSpec, build_hamiltonian
from ccclab.spectral import EnergyInterval, diagonalize
from conftest import make_eigensystem


def grid_for(es, n_bins=128):
    return ccc.CccGrid(float(es.energies[0]) - 0.01,
                       float(es.energies[-1]) + 0.01, n_bins)


def test_velocity_elements_two_site(two_site):
    es, _ = two_site
    v = ccc.eigen_velocities(es)[0]
    assert abs(v[0, 1]) == pytest.approx(1.0, abs=1e-12)
    assert abs(v[1, 0]) == pytest.approx(1.0, abs=1e-12)
    assert abs(v[0, 0]) <= 1e-12 and abs(v[1, 1]) <= 1e-12
    assert np.abs(v - v.conj().T).max() <= 1e-12


def test_velocity_elements_vanish_between_distinct_ring_levels(ring256):
    # current commutes with the clean ring Hamiltonian: nonzero elements
    # only inside degenerate blocks
    es, _ = ring256
    v = ccc.eigen_velocities(es)[0]
    de = np.abs(np.subtract.outer(es.energies, es.energies))
    assert np.abs(v[de > 1e-8]).max() <= 1e-12


def test_velocity_elements_zero_without_hopping():
    es, _ = make_eigensystem((6,), ("open",), "uniform", 2.0, seed=1,
                             hopping=0.0)
    assert np.abs(ccc.eigen_velocities(es)[0]).max() == 0.0


def test_histogram_two_site_atoms(two_site):
    es, _ = two_site
    grid = ccc.CccGrid(-1.5, 1.5, 3)  # bins [-1.5,-0.5), [-0.5,0.5), [0.5,1.5)
    hist = ccc.accumulate_ccc(es, grid)
    mean = hist.component_mean(1, 1)
    expected = np.zeros((3, 3))
    expected[0, 2] = expected[2, 0] = 0.5
    assert np.allclose(mean, expected, atol=1e-12)


def test_histogram_free_ring_mass_on_diagonal(ring256):
    es, _ = ring256
    hist = ccc.accumulate_ccc(es, grid_for(es, 200))
    mean = hist.component_mean(1, 1)
    off = mean - np.diag(np.diag(mean))
    assert np.abs(off).max() <= 1e-12
    assert mean.sum() == pytest.approx(2.0, rel=1e-10)


def test_histogram_empty_without_hopping():
    es, _ = make_eigensystem((6,), ("open",), "uniform", 2.0, seed=1,
                             hopping=0.0)
    hist = ccc.accumulate_ccc(es, grid_for(es))
    assert np.all(hist.component_mean(1, 1) == 0)


def test_histogram_overflow_counted(two_site):
    es, _ = two_site
    hist = ccc.accumulate_ccc(es, ccc.CccGrid(-0.5, 0.5, 4))
    assert hist.overflow_weight == pytest.approx(1.0, rel=1e-10)


def test_histogram_symmetry_and_positivity_2d():
    es, _ = make_eigensystem((5, 5), ("open", "open"), "uniform", 2.0, seed=9)
    hist = ccc.accumulate_ccc(es, grid_for(es, 64))
    hist.check_invariants()
    m12 = hist.component_mean(1, 2)
    m21 = hist.component_mean(2, 1)
    assert np.abs(m12 - m21.T).max() <= 1e-13
    for a in (1, 2):
        assert hist.component_mean(a, a).min() >= -1e-12


def test_histogram_merge_order_independent():
    systems = [make_eigensystem((24,), ("open",), "uniform", 2.0, seed=s)[0]
               for s in range(4)]
    grid = ccc.CccGrid(-3.2, 3.2, 32)
    d = systems[0].lattice.dimension
    fwd = ccc.CccHistogram(grid, d)
    rev = ccc.CccHistogram(grid, d)
    for es in systems:
        fwd.accumulate(es)
    for es in reversed(systems):
        rev.accumulate(es)
    assert np.abs(fwd.component_mean(1, 1) - rev.component_mean(1, 1)).max() \
        <= 1e-12
    assert np.abs(fwd.re[(1, 1)].variance - rev.re[(1, 1)].variance).max() \
        <= 1e-12


def test_window_measure_two_site(two_site):
    es, _ = two_site
    val = ccc.window_measure(es, EnergyInterval(-1.5, -0.5),
                             EnergyInterval(0.5, 1.5), check_dual=True)
    assert val == pytest.approx(0.5, abs=1e-12)
    assert ccc.window_measure(es, EnergyInterval(3.0, 4.0),
                              EnergyInterval(0.5, 1.5)) == 0.0
    everything = EnergyInterval(-10.0, 10.0)
    total = ccc.window_measure(es, everything, everything)
    assert total == pytest.approx(ccc.sum_rule(es)[1], rel=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_window_measure_dual_route_random_intervals(seed):
    es, _ = make_eigensystem((48,), ("open",), "uniform", 2.0, seed=seed)
    rng = np.random.default_rng(seed + 100)
    for _ in range(4):
        a, b = np.sort(rng.uniform(-3.2, 3.2, 2))
        c, d = np.sort(rng.uniform(-3.2, 3.2, 2))
        ccc.window_measure(es, EnergyInterval(a, b + 1e-6),
                           EnergyInterval(c, d + 1e-6), check_dual=True)


def test_window_measure_dual_route_2d_mixed_components():
    es, _ = make_eigensystem((4, 5), ("open", "open"), "uniform", 1.5, seed=3)
    d1 = EnergyInterval(-2.0, 0.3)
    d2 = EnergyInterval(-0.5, 2.5)
    eig = ccc.window_measure(es, d1, d2, alpha=1, beta=2)
    tr = ccc._window_measure_trace(es, d1, d2, 1, 2)
    assert eig == pytest.approx(tr, abs=1e-10)


def test_measure_symmetry_under_component_swap():
    es, _ = make_eigensystem((4, 4), ("open", "open"), "uniform", 2.0, seed=5)
    vel = ccc.eigen_velocities(es)
    d1 = EnergyInterval(-2.5, 0.0)
    d2 = EnergyInterval(0.0, 2.5)
    m12 = ccc.window_measure(es, d1, d2, 1, 2, velocities=vel)
    m21 = ccc.window_measure(es, d2, d1, 2, 1, velocities=vel)
    assert m12 == pytest.approx(m21, abs=1e-13)


def test_sum_rule_two_site_and_trivial(two_site):
    es, _ = two_site
    mass, trace = ccc.sum_rule(es)
    assert mass == pytest.approx(1.0, abs=1e-12)
    assert trace == pytest.approx(1.0, abs=1e-12)
    es0, _ = make_eigensystem((5,), ("open",), "uniform", 1.0, seed=2,
                              hopping=0.0)
    assert ccc.sum_rule(es0) == (0.0, 0.0)


def test_sum_rule_clean_four_ring():
    es, _ = make_eigensystem((4,), ("periodic",))
    mass, trace = ccc.sum_rule(es)
    # per-site average of squared band velocity: (0 + 4 + 0 + 4) / 4
    assert mass == pytest.approx(2.0, abs=1e-12)
    assert trace == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("seed", [0, 1])
def test_sum_rule_random_realizations(seed):
    es, _ = make_eigensystem((40,), ("open",), "uniform", 3.0, seed=seed)
    mass, trace = ccc.sum_rule(es)
    assert mass == pytest.approx(trace, rel=1e-10)


def test_decomposition_two_site_exact(two_site):
    es, _ = two_site
    for energy, eps in ((-1.2, 2.5), (-1.0, 0.5), (0.9, 0.3)):
        chk = ccc.decomposition_check(es, energy, eps)
        assert chk.residual <= 1e-12 * max(1.0, abs(chk.measure))


def test_decomposition_empty_window(two_site):
    es, _ = two_site
    chk = ccc.decomposition_check(es, 5.0, 0.5)
    assert chk.measure == 0.0
    assert chk.terms == (0.0, 0.0, 0.0, 0.0)
    assert chk.residual == 0.0


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_decomposition_random_windows(seed):
    es, _ = make_eigensystem((64,), ("open",), "uniform", 2.0, seed=seed)
    rng = np.random.default_rng(seed)
    lo, hi = es.energies[0], es.energies[-1]
    for _ in range(3):
        eps = float((hi - lo) * rng.uniform(0.02, 0.3))
        energy = float(rng.uniform(lo, hi - eps))
        chk = ccc.decomposition_check(es, energy, eps)
        assert chk.residual <= 1e-9 * max(1.0, abs(chk.measure))


def test_decomposition_requires_open_boundaries(ring256):
    es, _ = ring256
    with pytest.raises(ValueError):
        ccc.decomposition_check(es, 0.0, 0.5)


def test_diagonal_scan_free_ring_grows(ring256):
    es, _ = ring256
    ladder = 0.6 * np.sqrt(2.0) ** -np.arange(10)
    scan = ccc.diagonal_scan([es], 0.01, ladder)
    usable = scan.level_counts >= 3
    vals = scan.values[usable]
    eps = scan.epsilons[usable]
    slope = np.polyfit(np.log(eps), np.log(vals), 1)[0]
    assert -1.35 <= slope <= -0.65
    assert scan.n_realizations == 1


def test_scans_zero_without_hopping():
    es, _ = make_eigensystem((32,), ("open",), "uniform", 2.0, seed=7,
                             hopping=0.0)
    ladder = [0.5, 0.25, 0.125]
    assert np.all(ccc.diagonal_scan([es], 0.0, ladder).values == 0)
    assert np.all(ccc.box_scan([es], 0.0, ladder).values == 0)


def test_box_scan_nonnegative_and_reported():
    systems = [make_eigensystem((64,), ("open",), "uniform", 4.0, seed=s)[0]
               for s in range(5)]
    ladder = [1.0, 0.5, 0.25, 0.125]
    scan = ccc.box_scan(systems, 0.0, ladder)
    assert np.all(scan.values >= 0)
    assert scan.variant == "box"
    assert scan.n_realizations == 5
    assert np.all(scan.std_errors >= 0)


def test_scan_level_counts_reported(ring256):
    es, _ = ring256
    scan = ccc.diagonal_scan([es], 0.0, [0.5])
    # density of levels near band center is about N / (2 pi) per unit energy
    assert scan.level_counts[0] == pytest.approx(256 * 0.5 / (2 * np.pi),
                                                 rel=0.2)


def test_centered_scan_variant(ring256):
    es, _ = ring256
    anchored = ccc.diagonal_scan([es], 0.0, [0.4])
    centered = ccc.diagonal_scan([es], 0.0, [0.4], centered=True)
    assert centered.centered and not anchored.centered
    assert centered.values[0] != anchored.values[0]


def test_scaling_fit_recovers_synthetic_exponents():
    eps = 0.5 * 2.0 ** -np.arange(8)
    scan = ccc.WindowScan(0.0, eps, 3.0 * eps, np.zeros(8), 10 * np.ones(8),
                          "diagonal", 1)
    fit = scaling_fit(scan)
    assert fit.a == pytest.approx(1.0, abs=1e-6)
    assert fit.c == pytest.approx(3.0, rel=1e-6)
    vals = 0.7 * eps**2 * np.abs(np.log(eps)) ** 4
    scan = ccc.WindowScan(0.0, eps, vals, np.zeros(8), 10 * np.ones(8),
                          "diagonal", 1)
    fit = scaling_fit(scan, model="power_log")
    assert fit.a == pytest.approx(2.0, abs=1e-6)
    assert fit.b == pytest.approx(4.0, abs=1e-5)


def test_scaling_fit_drops_noisy_rungs_and_flags_degenerate():
    eps = 0.5 * 2.0 ** -np.arange(8)
    vals = 3.0 * eps
    ses = np.zeros(8)
    ses[-1] = vals[-1]  # 100% relative error: dropped
    scan = ccc.WindowScan(0.0, eps, vals, ses, 10 * np.ones(8), "diagonal", 2)
    fit = scaling_fit(scan)
    assert fit.n_rungs_used == 7
    same = np.full(4, 0.25)
    scan = ccc.WindowScan(0.0, same, 3.0 * same, np.zeros(4), np.ones(4),
                          "diagonal", 1)
    assert scaling_fit(scan).degenerate


def test_grid_validation_and_bins():
    with pytest.raises(ValueError):
        ccc.CccGrid(1.0, 1.0, 4)
    grid = ccc.CccGrid(0.0, 1.0, 4)
    assert np.array_equal(grid.bin_of(np.array([-0.1, 0.0, 0.99, 1.0])),
                          [-1, 0, 3, -1])
