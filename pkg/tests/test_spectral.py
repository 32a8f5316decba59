import numpy as np
import pytest

from ccclab.errors import InvariantError
from ccclab.model import DisorderSpec, LatticeSpec, Operator, build_hamiltonian
from ccclab.spectral import (EigenSystem, EnergyInterval, TraceWindow,
                             diagonalize, dos_ids, eigenvalues_only,
                             fermi_projector, fermi_weight, heisenberg_evolve,
                             spectral_projector, trace_per_volume)
from conftest import make_eigensystem


def test_two_site_eigensystem(two_site):
    es, _ = two_site
    assert np.allclose(es.energies, [-1.0, 1.0])
    minus = np.array([1.0, 1.0]) / np.sqrt(2.0)
    plus = np.array([1.0, -1.0]) / np.sqrt(2.0)
    assert abs(abs(minus @ es.states[:, 0])) == pytest.approx(1.0, abs=1e-12)
    assert abs(abs(plus @ es.states[:, 1])) == pytest.approx(1.0, abs=1e-12)


def test_diagonal_matrix_eigensystem():
    H = Operator(np.diag([-0.3, 1.7]))
    es = diagonalize(H)
    assert np.allclose(es.energies, [-0.3, 1.7])
    assert np.allclose(np.abs(es.states), np.eye(2))


def test_clean_ring_spectrum():
    es, _ = make_eigensystem((4,), ("periodic",))
    assert np.allclose(np.sort(es.energies), [-2.0, 0.0, 0.0, 2.0],
                       atol=1e-12)


def test_eigenvalues_only_matches_full():
    lat = LatticeSpec((40,), ("open",))
    H = build_hamiltonian(lat, DisorderSpec("uniform", 2.0, master_seed=3))
    assert np.allclose(eigenvalues_only(H), diagonalize(H).energies,
                       atol=1e-12)


def test_validation_rejects_corrupt_eigensystem(chain64):
    es, H = chain64
    bad = EigenSystem(es.energies.copy(), es.states * 1.001, es.lattice)
    with pytest.raises(InvariantError):
        bad.validate(H)


def test_projector_two_site(two_site):
    es, _ = two_site
    p = spectral_projector(es, EnergyInterval(-2.0, 0.0)).matrix
    assert np.allclose(p, 0.5 * np.ones((2, 2)), atol=1e-12)
    full = spectral_projector(es, EnergyInterval(-5.0, 5.0)).matrix
    assert np.allclose(full, np.eye(2), atol=1e-12)
    empty = spectral_projector(es, EnergyInterval(5.0, 6.0)).matrix
    assert np.all(empty == 0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_projector_interval_algebra(seed):
    es, _ = make_eigensystem((48,), ("open",), "uniform", 2.0, seed=seed)
    rng = np.random.default_rng(seed)
    for _ in range(4):
        a, b, c, d = np.sort(rng.uniform(-3.2, 3.2, 4))
        d1 = EnergyInterval(a, c)
        d2 = EnergyInterval(b, d)
        p1 = spectral_projector(es, d1).matrix
        p2 = spectral_projector(es, d2).matrix
        inter = d1.intersect(d2)
        pi = spectral_projector(es, inter).matrix if inter is not None else 0
        assert np.abs(p1 @ p2 - pi).max() <= 1e-10
        # idempotent and Hermitian
        assert np.abs(p1 @ p1 - p1).max() <= 1e-10
        assert np.abs(p1 - p1.conj().T).max() <= 1e-12


def test_fermi_weight_values():
    assert fermi_weight(0.7, 0.7, 2.0) == pytest.approx(0.5)
    assert fermi_weight(0.7, 0.7, 0.0) == 1.0  # closed half-line at T=0
    assert fermi_weight(0.70001, 0.7, 0.0) == 0.0
    assert fermi_weight(1.0, 0.0, 1.0) == pytest.approx(1.0 / (1.0 + np.e))
    grid = np.linspace(-5, 5, 101)
    vals = fermi_weight(grid, 0.0, 0.37)
    assert np.all(np.diff(vals) <= 0)
    assert np.all((vals >= 0) & (vals <= 1))
    with pytest.raises(ValueError):
        fermi_weight(0.0, 0.0, -1.0)


def test_fermi_weight_extreme_arguments_stable():
    assert fermi_weight(1e4, 0.0, 1.0) == 0.0
    assert fermi_weight(-1e4, 0.0, 1.0) == 1.0


def test_fermi_projector_matches_spectral(chain64):
    es, _ = chain64
    ef = float(es.energies[30])  # exactly at an eigenvalue: closed side
    p = fermi_projector(es, ef).matrix
    u = es.states[:, :31]
    assert np.abs(p - u @ u.conj().T).max() <= 1e-12
    assert np.all(fermi_projector(es, es.energies[0] - 1.0).matrix == 0)
    assert np.abs(fermi_projector(es, es.energies[-1] + 1.0).matrix
                  - np.eye(es.n)).max() <= 1e-10


def test_heisenberg_identity_at_zero_time(chain64):
    es, H = chain64
    a = Operator(np.diag(np.arange(es.n, dtype=float)), es.lattice)
    scale = np.abs(a.matrix).max()
    assert np.abs(heisenberg_evolve(es, a, 0.0).matrix - a.matrix).max() \
        <= 1e-13 * scale


def test_heisenberg_fixes_functions_of_hamiltonian(chain64):
    es, H = chain64
    assert np.abs(heisenberg_evolve(es, H, 2.31).matrix - H.matrix).max() \
        <= 1e-10


def test_heisenberg_two_site_spread(two_site):
    es, _ = two_site
    from ccclab.model import position_operator

    x = position_operator(es.lattice, 1)
    ground = es.states[:, 0]
    for t in (0.3, 1.7, 4.0):
        xt = heisenberg_evolve(es, x, t).matrix
        d = xt - x.matrix
        val = ground.conj() @ (d.conj().T @ d) @ ground
        assert val.real == pytest.approx(0.25 * (2 - 2 * np.cos(2 * t)),
                                         abs=1e-12)


def test_heisenberg_preserves_hilbert_schmidt_norm(chain64):
    es, _ = chain64
    rng = np.random.default_rng(0)
    a = rng.standard_normal((es.n, es.n))
    a = Operator(a + a.T, es.lattice)
    for t in (0.5, 3.0, 11.0):
        at = heisenberg_evolve(es, a, t).matrix
        assert np.linalg.norm(at) == pytest.approx(np.linalg.norm(a.matrix),
                                                   rel=1e-10)


def test_trace_per_volume_basics(two_site):
    es, H = two_site
    from ccclab.model import velocity_operator

    lat = es.lattice
    v = velocity_operator(H, lat, 1)
    assert trace_per_volume(Operator(np.eye(2), lat)) == pytest.approx(1.0)
    assert trace_per_volume(v) == pytest.approx(0.0, abs=1e-15)
    v2 = Operator(v.matrix @ v.matrix, lat)
    assert trace_per_volume(v2) == pytest.approx(1.0)


def test_trace_per_volume_linear_and_cyclic(chain64):
    es, _ = chain64
    rng = np.random.default_rng(1)
    a = rng.standard_normal((64, 64))
    b = rng.standard_normal((64, 64))
    lat = es.lattice
    lhs = trace_per_volume(Operator(2.0 * a + b, lat), check_real=False)
    rhs = 2.0 * trace_per_volume(Operator(a, lat), check_real=False) \
        + trace_per_volume(Operator(b, lat), check_real=False)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    ab = trace_per_volume(Operator(a @ b, lat), check_real=False)
    ba = trace_per_volume(Operator(b @ a, lat), check_real=False)
    assert ab == pytest.approx(ba, rel=1e-10)


def test_trace_window_geometry():
    lat = LatticeSpec((10,), ("open",))
    mask = TraceWindow(0.6).site_mask(lat)
    assert mask.sum() == 6
    assert np.all(np.flatnonzero(mask) == np.arange(2, 8))
    assert TraceWindow(1.0).site_mask(lat).sum() == 10
    with pytest.raises(ValueError):
        TraceWindow(1.5)
    with pytest.raises(ValueError):
        TraceWindow(0.0)


def test_dos_ids_clean_and_disordered():
    spectra = [make_eigensystem((128,), ("periodic",))[0].energies]
    d = dos_ids(spectra, grid=64)
    assert d.bin_edges[0] >= -2.1 and d.bin_edges[-1] <= 2.1
    assert d.ids_at(3.0) == 1.0
    assert np.all(np.diff(d.ids) >= 0)
    w = 3.0
    spectra = [make_eigensystem((64,), ("open",), "uniform", w, seed=s)[0]
               .energies for s in range(3)]
    d = dos_ids(spectra, grid=64)
    assert d.bin_edges[0] >= -2.0 - w / 2 - 0.1
    assert d.bin_edges[-1] <= 2.0 + w / 2 + 0.1
    assert d.n_realizations == 3
    with pytest.raises(ValueError):
        dos_ids([])
