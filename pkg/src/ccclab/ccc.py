"""Current-current correlation measure of one realization and its ensemble
statistics: binned histograms, window scans on and near the diagonal, sum
rules, and an exact four-term operator-decomposition cross-check.

For eigenvalues E_i with velocity matrix elements v_{a;ij} in the
eigenbasis, the measure assigns the pair (E_i, E_j) the weight
v_{a;ij} v_{b;ji} / N. Diagonal components (a == b) are nonnegative;
mixed components carry a real (dissipative) and imaginary (Hall) part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import Ensemble, StreamingMoments
from .errors import InvariantError
from .model import Operator, build_hamiltonian, velocity_operators
from .spectral import EigenSystem, EnergyInterval, window_anchored

DUAL_ROUTE_TOL = 1e-10


def velocity_matrix_elements(es: EigenSystem, v: Operator | np.ndarray) -> np.ndarray:
    """Velocity operator rotated to the eigenbasis (Hermitian)."""
    return es.to_eigenbasis(v)


def site_hamiltonian(es: EigenSystem) -> Operator:
    """The realization's Hamiltonian in the site basis.

    Rebuilt from the disorder metadata when present (bit-identical to the
    diagonalized matrix); otherwise reconstructed from the eigendata.
    """
    if es.lattice is None:
        raise ValueError("eigen system carries no lattice geometry")
    if es.disorder is not None:
        return build_hamiltonian(es.lattice, es.disorder)
    return Operator(
        es.from_eigenbasis(np.diag(es.energies.astype(complex))), es.lattice
    )


def eigen_velocities(es: EigenSystem,
                     H: Operator | None = None) -> list[np.ndarray]:
    """Eigenbasis velocity matrices for every lattice axis."""
    if H is None:
        H = site_hamiltonian(es)
    return [velocity_matrix_elements(es, v)
            for v in velocity_operators(H, es.lattice)]


def pair_weights(es: EigenSystem, v_alpha: np.ndarray,
                 v_beta: np.ndarray | None = None) -> np.ndarray:
    """Matrix of per-pair measure weights v_{a;ij} v_{b;ji} / N.

    Equal components give |v_{ij}|^2 / N >= 0; the result is complex for
    mixed components (real part pairs with symmetric response, imaginary
    part with the Hall channel).
    """
    if v_beta is None or v_beta is v_alpha:
        return (np.abs(v_alpha) ** 2) / es.n
    return (v_alpha * v_beta.T) / es.n


# ---------------------------------------------------------------------------
# Binned histogram with streaming ensemble moments
# ---------------------------------------------------------------------------

@dataclass
class CccGrid:
    """Uniform 2-D energy grid shared by every histogram component."""

    e_min: float
    e_max: float
    n_bins: int = 512

    def __post_init__(self):
        if not self.e_min < self.e_max:
            raise ValueError("grid requires e_min < e_max")
        if self.n_bins < 1:
            raise ValueError("grid needs at least one bin")

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.e_min, self.e_max, self.n_bins + 1)

    def bin_of(self, energies: np.ndarray) -> np.ndarray:
        """Bin index per energy; -1 marks out-of-range (overflow)."""
        idx = np.floor(
            (energies - self.e_min) / (self.e_max - self.e_min) * self.n_bins
        ).astype(int)
        idx[(energies < self.e_min) | (energies >= self.e_max)] = -1
        return idx

    @classmethod
    def for_model(cls, lattice, disorder, n_bins: int = 512,
                  margin: float = 0.01) -> "CccGrid":
        """Grid from the a priori spectral enclosure, so no first pass over
        the ensemble is needed and overflow is impossible by construction."""
        half = lattice.bandwidth_estimate(disorder) / 2.0
        return cls(-half - margin, half + margin, n_bins)


class CccHistogram:
    """Binned correlation measure with per-bin ensemble mean and variance.

    One component per ordered axis pair (a, b); mixed components also
    track the imaginary (Hall) part. Contributions merge through streaming
    moments, so any grouping of partial merges agrees to rounding.
    """

    def __init__(self, grid: CccGrid, dimension: int):
        self.grid = grid
        self.dimension = dimension
        shape = (grid.n_bins, grid.n_bins)
        self.re: dict[tuple[int, int], StreamingMoments] = {}
        self.im: dict[tuple[int, int], StreamingMoments] = {}
        for a in range(1, dimension + 1):
            for b in range(1, dimension + 1):
                self.re[(a, b)] = StreamingMoments(shape)
                if a != b:
                    self.im[(a, b)] = StreamingMoments(shape)
        self.overflow_weight = 0.0
        self.n_realizations = 0

    def accumulate(self, es: EigenSystem,
                   velocities: list[np.ndarray] | None = None) -> None:
        """Add one realization's atoms to every component histogram."""
        if velocities is None:
            velocities = eigen_velocities(es)
        bins = self.grid.bin_of(es.energies)
        inside = bins >= 0
        nb = self.grid.n_bins
        pair_bins = (bins[inside][:, None] * nb + bins[inside][None, :]).ravel()
        for a in range(1, self.dimension + 1):
            for b in range(1, self.dimension + 1):
                w = pair_weights(es, velocities[a - 1],
                                 None if a == b else velocities[b - 1])
                win = w[np.ix_(inside, inside)]
                re2d = np.bincount(pair_bins, weights=win.real.ravel(),
                                   minlength=nb * nb).reshape(nb, nb)
                self.re[(a, b)].update(re2d)
                if a != b:
                    im2d = np.bincount(pair_bins, weights=win.imag.ravel(),
                                       minlength=nb * nb).reshape(nb, nb)
                    self.im[(a, b)].update(im2d)
                if a == b:
                    self.overflow_weight += float(
                        w.real.sum() - win.real.sum())
        self.n_realizations += 1

    def merge(self, other: "CccHistogram") -> "CccHistogram":
        if other.grid.edges.shape != self.grid.edges.shape or \
                not np.array_equal(other.grid.edges, self.grid.edges):
            raise ValueError("histogram grids differ")
        for key, acc in self.re.items():
            acc.merge(other.re[key])
        for key, acc in self.im.items():
            acc.merge(other.im[key])
        self.overflow_weight += other.overflow_weight
        self.n_realizations += other.n_realizations
        return self

    def component_mean(self, a: int, b: int, part: str = "re") -> np.ndarray:
        acc = (self.re if part == "re" else self.im)[(a, b)]
        return acc.mean

    def check_invariants(self, tol: float = 1e-12) -> None:
        for a in range(1, self.dimension + 1):
            diag = self.re[(a, a)].mean
            if diag.min() < -tol:
                raise InvariantError(
                    f"diagonal histogram ({a},{a}) has negative bin "
                    f"{diag.min():g}")
        for a in range(1, self.dimension + 1):
            for b in range(1, self.dimension + 1):
                lhs = self.re[(a, b)].mean
                rhs = self.re[(b, a)].mean.T
                if np.abs(lhs - rhs).max() > tol:
                    raise InvariantError("histogram symmetry violated")


def accumulate_ccc(es: EigenSystem, grid: CccGrid,
                   velocities: list[np.ndarray] | None = None) -> CccHistogram:
    """One realization's histogram contribution (mergeable)."""
    if es.lattice is None:
        raise ValueError("eigen system carries no lattice geometry")
    hist = CccHistogram(grid, es.lattice.dimension)
    hist.accumulate(es, velocities)
    return hist


# ---------------------------------------------------------------------------
# Exact window measure, two routes
# ---------------------------------------------------------------------------

def window_measure(es: EigenSystem, delta1: EnergyInterval,
                   delta2: EnergyInterval, alpha: int = 1, beta: int = 1,
                   velocities: list[np.ndarray] | None = None,
                   check_dual: bool = False) -> float:
    """Measure mass of the energy rectangle delta1 x delta2 (real part).

    Evaluated as the exact eigen-sum of pair weights; with
    ``check_dual=True`` the independent projector-trace route
    Tr(P1 v_a P2 v_b)/N is evaluated in the site basis and the two must
    agree to 1e-10.
    """
    if velocities is None:
        velocities = eigen_velocities(es)
    va = velocities[alpha - 1]
    vb = velocities[beta - 1]
    i1 = es.indices_in(delta1)
    i2 = es.indices_in(delta2)
    if i1.size == 0 or i2.size == 0:
        value = 0.0
    elif alpha == beta:
        # |v_ij|^2 form keeps equal-component masses nonnegative exactly
        value = float((np.abs(va[np.ix_(i1, i2)]) ** 2).sum()) / es.n
    else:
        block = va[np.ix_(i1, i2)] * vb[np.ix_(i2, i1)].T
        value = float(block.real.sum()) / es.n
    if check_dual:
        trace_route = _window_measure_trace(es, delta1, delta2, alpha, beta)
        if abs(trace_route - value) > DUAL_ROUTE_TOL * max(1.0, abs(value)):
            raise InvariantError(
                f"window measure routes disagree: {value!r} vs {trace_route!r}")
    return value


def _window_measure_trace(es: EigenSystem, delta1: EnergyInterval,
                          delta2: EnergyInterval, alpha: int, beta: int) -> float:
    """Site-basis projector-trace route Tr(P1 v_a P2 v_b)/N."""
    from .model import velocity_operator
    from .spectral import spectral_projector

    H = site_hamiltonian(es)
    va = velocity_operator(H, es.lattice, alpha).matrix
    vb = velocity_operator(H, es.lattice, beta).matrix
    p1 = spectral_projector(es, delta1).matrix
    p2 = spectral_projector(es, delta2).matrix
    return float(np.trace(p1 @ va @ p2 @ vb).real) / es.n


def total_measure(es: EigenSystem, alpha: int = 1, beta: int | None = None,
                  velocities: list[np.ndarray] | None = None) -> float:
    """Mass of the whole plane for one component (completeness sum)."""
    if velocities is None:
        velocities = eigen_velocities(es)
    beta = alpha if beta is None else beta
    w = pair_weights(es, velocities[alpha - 1],
                     None if alpha == beta else velocities[beta - 1])
    return float(w.real.sum())


def sum_rule(es: EigenSystem, alpha: int = 1,
             velocities: list[np.ndarray] | None = None) -> tuple[float, float]:
    """Total measure mass against the independent trace of v_a^2 per site.

    The two numbers agree to 1e-10 by completeness of the eigenbasis.
    """
    if velocities is None:
        velocities = eigen_velocities(es)
    mass = total_measure(es, alpha, velocities=velocities)
    from .model import velocity_operator

    v_site = velocity_operator(site_hamiltonian(es), es.lattice, alpha).matrix
    trace = float(np.trace(v_site @ v_site).real) / es.n
    return mass, trace


# ---------------------------------------------------------------------------
# Window scans over an epsilon ladder
# ---------------------------------------------------------------------------

def default_ladder(bandwidth: float, rungs: int = 8,
                   ratio: float = 2.0) -> np.ndarray:
    """Geometric width ladder eps_k = (bandwidth/8) * ratio^-k."""
    eps0 = bandwidth / 8.0
    return eps0 * ratio ** -np.arange(rungs)


@dataclass
class WindowScan:
    """Values of M(window, window)/eps^2 over a width ladder.

    ``variant`` is "diagonal" for coinciding anchored windows and "box"
    for the adjacent rectangle [E, E+eps) x [E-eps, E). ``level_counts``
    reports the mean number of eigenvalues per window, the resolution
    diagnostic to keep well above 1.
    """

    energy: float
    epsilons: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    level_counts: np.ndarray
    variant: str
    n_realizations: int
    centered: bool = False

    def __post_init__(self):
        order = np.argsort(self.epsilons)[::-1]
        for name in ("epsilons", "values", "std_errors", "level_counts"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float)[order])


def scan_intervals(energy: float, eps: float, variant: str,
                   centered: bool = False):
    if variant == "diagonal":
        win = (EnergyInterval(energy - eps / 2.0, energy + eps / 2.0)
               if centered else window_anchored(energy, eps))
        return win, win
    if variant == "box":
        return window_anchored(energy, eps), EnergyInterval(energy - eps, energy)
    raise ValueError(f"unknown scan variant {variant!r}")


def _scan_one(es: EigenSystem, energy: float, ladder: np.ndarray,
              variant: str, centered: bool) -> dict[str, np.ndarray]:
    velocities = eigen_velocities(es)
    weights = sum(pair_weights(es, v) for v in velocities)
    vals = np.empty(ladder.size)
    counts = np.empty(ladder.size)
    for k, eps in enumerate(ladder):
        d1, d2 = scan_intervals(energy, eps, variant, centered)
        i1 = es.indices_in(d1)
        i2 = es.indices_in(d2)
        if i1.size and i2.size:
            vals[k] = weights[np.ix_(i1, i2)].sum() / eps**2
        else:
            vals[k] = 0.0
        counts[k] = i1.size
    return {"value": vals, "count": counts}


def _run_scan(ensemble, energy, ladder, variant, centered) -> WindowScan:
    ladder = np.asarray(ladder, dtype=float)
    value_acc = StreamingMoments(ladder.shape)
    count_acc = StreamingMoments(ladder.shape)
    if isinstance(ensemble, Ensemble):
        partials = ensemble.map(
            lambda es: _scan_one(es, energy, ladder, variant, centered))
    else:
        partials = [_scan_one(es, energy, ladder, variant, centered)
                    for es in ensemble]
    for part in partials:
        value_acc.update(part["value"])
        count_acc.update(part["count"])
    return WindowScan(energy, ladder, value_acc.mean, value_acc.std_error,
                      count_acc.mean, variant, value_acc.count, centered)


def diagonal_scan(ensemble, energy: float, ladder, centered: bool = False) -> WindowScan:
    """Scan of M(I_eps(E), I_eps(E)) / eps^2 over the width ladder.

    A vanishing trend certifies the absence of diagonal mass at E; a
    1/eps growth signals a spectral atom (ballistic channel).
    """
    return _run_scan(ensemble, energy, ladder, "diagonal", centered)


def box_scan(ensemble, energy: float, ladder) -> WindowScan:
    """Scan of M([E, E+eps), [E-eps, E)) / eps^2, the off-diagonal box
    adjacent to the diagonal; decays faster than the diagonal scan."""
    return _run_scan(ensemble, energy, ladder, "box", False)


# ---------------------------------------------------------------------------
# Four-term decomposition cross-check
# ---------------------------------------------------------------------------

@dataclass
class DecompositionCheck:
    measure: float
    terms: tuple[float, float, float, float]
    residual: float
    axis: int


def decomposition_check(es: EigenSystem, energy: float, eps: float,
                        axis: int = 1) -> DecompositionCheck:
    """Exact finite-volume identity M_a(I, I) = -eps^2 (I + II + III + IV).

    With P the window projector, f(H) = (H - E) P / eps and x the open-
    boundary position operator, expanding the two commutators in
    M_a = -T(P [H-E, x] P [H-E, x] P) yields four windowed traces. The
    identity holds to rounding on every realization; it requires open
    boundaries (position well-defined) and the full trace window.
    """
    if es.lattice is None or not es.lattice.all_open:
        raise ValueError("decomposition check requires open boundaries")
    from .model import position_operator

    window = window_anchored(energy, eps)
    idx = es.indices_in(window)
    velocities = eigen_velocities(es)
    v = velocities[axis - 1]
    if idx.size == 0:
        return DecompositionCheck(0.0, (0.0, 0.0, 0.0, 0.0), 0.0, axis)
    block = v[np.ix_(idx, idx)]
    measure = float((block * block.conj()).real.sum()) / es.n

    # f and the window indicator vanish off the window, so every trace
    # below lives in the window block of the eigenbasis position matrix.
    x_site = position_operator(es.lattice, axis).matrix
    x_eig = es.to_eigenbasis(x_site)[np.ix_(idx, idx)]
    f = (es.energies[idx] - energy) / eps  # |f| <= 1 on the window
    p = np.ones_like(f)

    def tr4(d1, m1, d2, m2):
        # Tr(D1 M1 D2 M2) with diagonal D1, D2 restricted to the block
        return float(np.einsum("i,ij,j,ji->", d1, m1, d2, m2).real)

    term1 = tr4(f * p, x_eig, f, x_eig) / es.n
    term2 = -tr4(f * f, x_eig, p, x_eig) / es.n
    term3 = -tr4(p, x_eig, f * f, x_eig) / es.n
    term4 = tr4(p * f, x_eig, f, x_eig) / es.n
    total = -(eps**2) * (term1 + term2 + term3 + term4)
    residual = abs(measure - total)
    return DecompositionCheck(measure, (term1, term2, term3, term4),
                              residual, axis)
