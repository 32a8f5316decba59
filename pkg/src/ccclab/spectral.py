"""Eigendecomposition and spectral-calculus primitives.

Everything downstream (correlation measures, conductivities, localization
lengths) is evaluated in the full eigenbasis of one realization, so the
solver contract is dense-only with validated residual and orthonormality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.special

from .errors import CapacityError, InvariantError
from .model import DENSE_CAP, DisorderSpec, LatticeSpec, Operator

EIGEN_TOL = 1e-10

# Pairs closer than DEG_REL * ||H|| are treated as degenerate wherever a
# formula divides by an energy difference; excluded weight is reported.
DEG_REL = 1e-9


@dataclass(frozen=True)
class EnergyInterval:
    """Half-open energy interval [lower, upper)."""

    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("interval requires lower < upper")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def indicator(self, energies: np.ndarray) -> np.ndarray:
        e = np.asarray(energies)
        return (e >= self.lower) & (e < self.upper)

    def intersect(self, other: "EnergyInterval") -> "EnergyInterval | None":
        lo = max(self.lower, other.lower)
        hi = min(self.upper, other.upper)
        return EnergyInterval(lo, hi) if lo < hi else None


def window_anchored(energy: float, eps: float) -> EnergyInterval:
    """The interval [E, E + eps) anchored at its lower edge."""
    return EnergyInterval(energy, energy + eps)


def window_centered(energy: float, eps: float) -> EnergyInterval:
    return EnergyInterval(energy - eps / 2.0, energy + eps / 2.0)


@dataclass(frozen=True)
class TraceWindow:
    """Central sub-box over which site-diagonal traces are averaged.

    ``fraction`` is the linear window fraction per axis; the default 0.6
    suppresses open-boundary contamination in trace-per-volume surrogates.
    """

    fraction: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError("window fraction must be in (0, 1]")

    def site_mask(self, lattice: LatticeSpec) -> np.ndarray:
        coords = lattice.coordinates()
        mask = np.ones(lattice.n_sites, dtype=bool)
        for axis, L in enumerate(lattice.lengths):
            span = max(1, int(round(self.fraction * L)))
            lo = (L - span) // 2
            hi = lo + span
            mask &= (coords[:, axis] >= lo) & (coords[:, axis] < hi)
        if not mask.any():
            raise ValueError("trace window selects no sites")
        return mask


FULL_WINDOW = TraceWindow(1.0)


@dataclass
class EigenSystem:
    """Ascending eigenvalues and orthonormal eigenvectors of one realization."""

    energies: np.ndarray
    states: np.ndarray  # columns are eigenvectors
    lattice: LatticeSpec | None = None
    disorder: DisorderSpec | None = None

    @property
    def n(self) -> int:
        return self.energies.shape[0]

    @property
    def norm(self) -> float:
        return float(max(abs(self.energies[0]), abs(self.energies[-1])))

    @property
    def deg_tol(self) -> float:
        return DEG_REL * max(1.0, self.norm)

    def indices_in(self, interval: EnergyInterval) -> np.ndarray:
        lo = int(np.searchsorted(self.energies, interval.lower, side="left"))
        hi = int(np.searchsorted(self.energies, interval.upper, side="left"))
        return np.arange(lo, hi)

    def to_eigenbasis(self, A: Operator | np.ndarray) -> np.ndarray:
        m = A.matrix if isinstance(A, Operator) else np.asarray(A)
        return self.states.conj().T @ m @ self.states

    def from_eigenbasis(self, a: np.ndarray) -> np.ndarray:
        return self.states @ a @ self.states.conj().T

    def validate(self, H: Operator) -> None:
        h = H.matrix
        scale = max(1.0, float(np.abs(h).max()) * self.n)
        resid = h @ self.states - self.states * self.energies[None, :]
        worst = float(np.linalg.norm(resid, axis=0).max())
        if worst > EIGEN_TOL * scale:
            raise InvariantError(
                f"eigen residual {worst:g} exceeds tolerance "
                f"(matrix fingerprint: n={self.n}, trace={np.trace(h):.6g})"
            )
        gram = self.states.conj().T @ self.states
        defect = float(np.abs(gram - np.eye(self.n)).max())
        if defect > EIGEN_TOL:
            raise InvariantError(f"eigenvectors not orthonormal: defect {defect:g}")
        if np.any(np.diff(self.energies) < 0):
            raise InvariantError("eigenvalues not ascending")


def _is_tridiagonal_real(h: np.ndarray) -> bool:
    if np.iscomplexobj(h) and np.abs(h.imag).max() > 0:
        return False
    hr = h.real
    return np.abs(hr - np.diag(np.diag(hr))
                  - np.diag(np.diag(hr, 1), 1)
                  - np.diag(np.diag(hr, -1), -1)).max() == 0.0


def diagonalize(H: Operator, check: bool = True,
                disorder: DisorderSpec | None = None) -> EigenSystem:
    """Full eigendecomposition of a Hermitian operator.

    Real tridiagonal matrices (open 1-D chains) go through the banded
    LAPACK path; everything else uses the dense Hermitian driver.
    """
    if H.n > DENSE_CAP:
        raise CapacityError(f"n={H.n} beyond dense-solver cap {DENSE_CAP}")
    H.check_hermitian()
    h = H.matrix
    if h.shape[0] >= 3 and _is_tridiagonal_real(h):
        w, u = scipy.linalg.eigh_tridiagonal(
            np.ascontiguousarray(np.diag(h).real),
            np.ascontiguousarray(np.diag(h, 1).real),
        )
    else:
        w, u = np.linalg.eigh(h)
    es = EigenSystem(np.asarray(w, dtype=float), np.asarray(u),
                     lattice=H.lattice, disorder=disorder)
    if check:
        es.validate(H)
    return es


def eigenvalues_only(H: Operator) -> np.ndarray:
    """Ascending spectrum without eigenvectors (fast path for counting)."""
    if H.n > DENSE_CAP:
        raise CapacityError(f"n={H.n} beyond dense-solver cap {DENSE_CAP}")
    h = H.matrix
    if h.shape[0] >= 3 and _is_tridiagonal_real(h):
        return scipy.linalg.eigvalsh_tridiagonal(
            np.ascontiguousarray(np.diag(h).real),
            np.ascontiguousarray(np.diag(h, 1).real),
        )
    return np.linalg.eigvalsh(h)


def spectral_projector(es: EigenSystem, interval: EnergyInterval) -> Operator:
    """Orthogonal projector onto eigenstates with energy in the interval."""
    idx = es.indices_in(interval)
    if idx.size == 0:
        return Operator(np.zeros((es.n, es.n), dtype=es.states.dtype), es.lattice)
    u = es.states[:, idx]
    return Operator(u @ u.conj().T, es.lattice, name="projector")


def fermi_weight(energy, fermi_energy: float, temperature: float):
    """Fermi occupation at the given temperature.

    At T=0 this is the indicator of the closed half-line E <= E_F.
    """
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    e = np.asarray(energy, dtype=float)
    if temperature == 0.0:
        out = np.where(e <= fermi_energy, 1.0, 0.0)
    else:
        out = scipy.special.expit(-(e - fermi_energy) / temperature)
    return float(out) if np.isscalar(energy) else out


def fermi_occupations(es: EigenSystem, fermi_energy: float,
                      temperature: float = 0.0) -> np.ndarray:
    return fermi_weight(es.energies, fermi_energy, temperature)


def fermi_projector(es: EigenSystem, fermi_energy: float) -> Operator:
    """Projector onto energies <= E_F (the T=0 equilibrium state)."""
    hi = int(np.searchsorted(es.energies, fermi_energy, side="right"))
    if hi == 0:
        return Operator(np.zeros((es.n, es.n), dtype=es.states.dtype), es.lattice)
    u = es.states[:, :hi]
    return Operator(u @ u.conj().T, es.lattice, name="fermi_projector")


def heisenberg_evolve(es: EigenSystem, A: Operator, t: float) -> Operator:
    """A(t) = exp(-itH) A exp(itH), evaluated in the eigenbasis."""
    a = es.to_eigenbasis(A)
    phase = np.exp(-1j * np.subtract.outer(es.energies, es.energies) * t)
    return Operator(es.from_eigenbasis(a * phase), es.lattice)


def trace_per_volume(A: Operator | np.ndarray,
                     window: TraceWindow = FULL_WINDOW,
                     lattice: LatticeSpec | None = None,
                     check_real: bool = True) -> float:
    """Window-averaged site-diagonal trace, the finite-volume stand-in for
    the trace per unit volume."""
    if isinstance(A, Operator):
        m, lat = A.matrix, A.lattice if lattice is None else lattice
    else:
        m, lat = np.asarray(A), lattice
    diag = np.diagonal(m)
    if window.fraction < 1.0:
        if lat is None:
            raise ValueError("windowed trace requires lattice geometry")
        mask = window.site_mask(lat)
        value = complex(diag[mask].mean())
    else:
        value = complex(diag.mean())
    if check_real and abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise InvariantError(f"trace has imaginary part {value.imag:g}")
    return value.real


@dataclass
class DosIds:
    """Ensemble density of states (per site, per energy) and integrated
    density of states on a common energy grid."""

    bin_edges: np.ndarray
    dos: np.ndarray
    ids_grid: np.ndarray
    ids: np.ndarray
    n_realizations: int

    def ids_at(self, energy: float) -> float:
        return float(np.interp(energy, self.ids_grid, self.ids, left=0.0, right=1.0))


def dos_ids(spectra, grid: np.ndarray | int = 256,
            bounds: tuple[float, float] | None = None) -> DosIds:
    """Histogram DOS and eigenvalue-counting IDS from an ensemble of spectra.

    ``spectra`` is an iterable of ascending eigenvalue arrays (one per
    realization); all realizations must share the matrix dimension.
    """
    spectra = [np.asarray(s, dtype=float) for s in spectra]
    if not spectra:
        raise ValueError("empty ensemble")
    n_sites = spectra[0].size
    if bounds is None:
        lo = min(s[0] for s in spectra)
        hi = max(s[-1] for s in spectra)
        pad = 1e-9 + 1e-3 * (hi - lo)
        bounds = (lo - pad, hi + pad)
    if np.isscalar(grid):
        edges = np.linspace(bounds[0], bounds[1], int(grid) + 1)
    else:
        edges = np.asarray(grid, dtype=float)
    width = np.diff(edges)
    counts = np.zeros(edges.size - 1)
    for s in spectra:
        c, _ = np.histogram(s, bins=edges)
        counts += c
    dos = counts / (len(spectra) * n_sites * width)
    pooled = np.sort(np.concatenate(spectra))
    ids_grid = edges
    ids = np.searchsorted(pooled, ids_grid, side="right") / (len(spectra) * n_sites)
    return DosIds(edges, dos, ids_grid, ids, len(spectra))
