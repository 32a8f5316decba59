"""Finite random lattice Hamiltonians, position and velocity operators.

Tight-binding models on 1-D chains and 2-D rectangles: nearest-neighbor
hopping -t, i.i.d. on-site disorder, optional uniform magnetic flux in
two dimensions (Landau-gauge bond phases on x-bonds). Units: hbar = 1,
e = 1, lattice constant 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CapacityError

# All in-scope quantities need the full eigenbasis, so the solver is
# dense-only; this cap keeps a single realization within desk memory/time.
DENSE_CAP = 4096

HERMITICITY_TOL = 1e-12

OPEN = "open"
PERIODIC = "periodic"


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry of a finite lattice: dimension, side lengths, boundaries.

    ``flux`` is the dimensionless flux per plaquette, applied as Peierls
    phases on x-direction bonds in Landau gauge; it is meaningful only in
    two dimensions and is normalized to 0 for d=1.
    """

    lengths: tuple[int, ...]
    boundary: tuple[str, ...]
    hopping: float = 1.0
    flux: float = 0.0

    def __post_init__(self):
        lengths = tuple(int(x) for x in self.lengths)
        boundary = tuple(self.boundary)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "boundary", boundary)
        d = len(lengths)
        if d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {d}")
        if len(boundary) != d:
            raise ValueError("one boundary condition per axis required")
        for bc in boundary:
            if bc not in (OPEN, PERIODIC):
                raise ValueError(f"unknown boundary condition {bc!r}")
        for L, bc in zip(lengths, boundary):
            if L < 2:
                raise ValueError("side lengths must be >= 2")
            if bc == PERIODIC and L < 3:
                raise ValueError("periodic axes require length >= 3")
        if self.n_sites < 2:
            raise ValueError("total site count must be >= 2")
        if d == 1:
            object.__setattr__(self, "flux", 0.0)
        elif self.flux != 0.0 and boundary[1] == PERIODIC:
            # Landau gauge needs an integer number of flux quanta through
            # the torus, otherwise wrap plaquettes carry the wrong flux.
            if abs(self.flux * lengths[1] - round(self.flux * lengths[1])) > 1e-12:
                raise ValueError(
                    "periodic y-axis requires flux * L_y to be an integer"
                )

    @property
    def dimension(self) -> int:
        return len(self.lengths)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.lengths))

    def coordinates(self) -> np.ndarray:
        """Integer site coordinates, shape (n_sites, d), row-major order."""
        grids = np.meshgrid(
            *[np.arange(L) for L in self.lengths], indexing="ij"
        )
        return np.stack([g.ravel() for g in grids], axis=1)

    def centered_coordinates(self) -> np.ndarray:
        """Coordinates shifted so the lattice midpoint sits at 0."""
        coords = self.coordinates().astype(float)
        center = (np.asarray(self.lengths, dtype=float) - 1.0) / 2.0
        return coords - center

    def site_index(self, coord) -> int:
        return int(np.ravel_multi_index(tuple(int(c) for c in coord), self.lengths))

    def is_open(self, axis: int) -> bool:
        return self.boundary[axis - 1] == OPEN

    @property
    def all_open(self) -> bool:
        return all(bc == OPEN for bc in self.boundary)

    def bandwidth_estimate(self, disorder: "DisorderSpec | None" = None) -> float:
        """A priori spectral diameter bound 4*d*t + W."""
        w = 0.0 if disorder is None else disorder.strength
        return 4.0 * self.dimension * abs(self.hopping) + w


@dataclass(frozen=True)
class DisorderSpec:
    """On-site disorder law plus the seeds that make one realization.

    ``uniform`` draws i.i.d. on [-W/2, W/2] (density bound 1/W),
    ``bernoulli`` takes +W/2 with probability p and -W/2 otherwise.
    The potential vector is a pure function of (master_seed,
    realization_index, lattice), bit-identical across runs and workers.
    """

    kind: str = "none"
    strength: float = 0.0
    p: float = 0.5
    master_seed: int = 0
    realization_index: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "uniform", "bernoulli"):
            raise ValueError(f"unknown disorder kind {self.kind!r}")
        if self.strength < 0:
            raise ValueError("disorder strength W must be >= 0")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("bernoulli probability p must be in [0, 1]")
        if self.realization_index < 0:
            raise ValueError("realization_index must be >= 0")

    def with_realization(self, index: int) -> "DisorderSpec":
        return replace(self, realization_index=int(index))

    @property
    def density_bound(self) -> float:
        """Sup-norm of the single-site density (uniform law only)."""
        if self.kind == "uniform" and self.strength > 0:
            return 1.0 / self.strength
        return math.inf

    def rng(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=int(self.master_seed) & (2**64 - 1),
            spawn_key=(int(self.realization_index),),
        )
        return np.random.default_rng(seq)

    def potential(self, lattice: LatticeSpec) -> np.ndarray:
        n = lattice.n_sites
        if self.kind == "none" or self.strength == 0.0:
            return np.zeros(n)
        rng = self.rng()
        half = self.strength / 2.0
        if self.kind == "uniform":
            return rng.uniform(-half, half, n)
        # bernoulli
        return np.where(rng.random(n) < self.p, half, -half)


@dataclass
class Operator:
    """Dense matrix in the site basis of a given lattice."""

    matrix: np.ndarray
    lattice: LatticeSpec | None = None
    name: str = ""

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("operator matrix must be square")
        if self.lattice is not None and self.matrix.shape[0] != self.lattice.n_sites:
            raise ValueError("operator dimension does not match lattice site count")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def check_hermitian(self, tol: float = HERMITICITY_TOL) -> None:
        defect = self.hermiticity_defect()
        if defect > tol:
            raise ValueError(f"operator {self.name!r} not Hermitian: defect {defect:g}")


def _bonds(lattice: LatticeSpec):
    """Yield (i, j, axis, displacement, phase) for every directed bond i->j.

    Only the j > i representative of each bond is yielded; displacement is
    the minimal-image coordinate step from i to j along ``axis`` (1-based).
    ``phase`` multiplies the hopping amplitude for the i->j hop.
    """
    L = lattice.lengths
    d = lattice.dimension
    coords = lattice.coordinates()
    phi = lattice.flux if d == 2 else 0.0
    for i in range(lattice.n_sites):
        ci = coords[i]
        for axis in range(d):
            if ci[axis] + 1 < L[axis]:
                cj = ci.copy()
                cj[axis] += 1
                disp = 1.0
            elif lattice.boundary[axis] == PERIODIC:
                cj = ci.copy()
                cj[axis] = 0
                disp = 1.0  # minimal-image step across the wrap bond
            else:
                continue
            j = lattice.site_index(cj)
            if phi != 0.0 and axis == 0:
                # Landau gauge: x-bond at row y carries phase 2*pi*phi*y.
                theta = 2.0 * math.pi * phi * ci[1]
                phase = complex(math.cos(theta), math.sin(theta))
            else:
                phase = 1.0 + 0.0j
            yield i, j, axis + 1, disp, phase


def build_hamiltonian(lattice: LatticeSpec, disorder: DisorderSpec) -> Operator:
    """Assemble H = hopping + on-site potential for one disorder realization.

    Nearest-neighbor amplitude -t with Peierls phases on x-bonds when a
    flux is set; diagonal entries drawn from the disorder law. The result
    is Hermitian by construction and real when the flux vanishes.
    """
    n = lattice.n_sites
    if n > DENSE_CAP:
        raise CapacityError(
            f"lattice has {n} sites, beyond the dense-solver cap {DENSE_CAP}"
        )
    use_complex = lattice.dimension == 2 and lattice.flux != 0.0
    dtype = complex if use_complex else float
    h = np.zeros((n, n), dtype=dtype)
    t = lattice.hopping
    for i, j, _axis, _disp, phase in _bonds(lattice):
        amp = -t * (phase if use_complex else 1.0)
        h[j, i] += amp
        h[i, j] += np.conj(amp)
    v = disorder.potential(lattice)
    h[np.diag_indices(n)] += v
    return Operator(h, lattice, name="hamiltonian")


def position_operator(lattice: LatticeSpec, axis: int) -> Operator:
    """Diagonal operator of site coordinates along ``axis`` (1-based),
    centered so the lattice midpoint has coordinate 0."""
    if not 1 <= axis <= lattice.dimension:
        raise ValueError(f"axis {axis} out of range for d={lattice.dimension}")
    x = lattice.centered_coordinates()[:, axis - 1]
    return Operator(np.diag(x), lattice, name=f"x{axis}")


def velocity_operator(H: Operator, lattice: LatticeSpec, axis: int) -> Operator:
    """Current operator i[H, x_axis], built bond-wise.

    On open axes this equals the commutator with the position operator
    entrywise; on periodic axes the displacement across the wrap bond is
    the minimal image (+1), the standard lattice current.
    """
    if not 1 <= axis <= lattice.dimension:
        raise ValueError(f"axis {axis} out of range for d={lattice.dimension}")
    if H.n != lattice.n_sites:
        raise ValueError("Hamiltonian dimension inconsistent with lattice")
    h = H.matrix
    n = lattice.n_sites
    v = np.zeros((n, n), dtype=complex)
    for i, j, bond_axis, disp, _phase in _bonds(lattice):
        if bond_axis != axis:
            continue
        # v_{ab} = i (x_b - x_a) H_{ab} with the minimal-image displacement
        v[i, j] = 1j * disp * h[i, j]
        v[j, i] = -1j * disp * h[j, i]
    return Operator(v, lattice, name=f"v{axis}")


def velocity_operators(H: Operator, lattice: LatticeSpec) -> list[Operator]:
    return [velocity_operator(H, lattice, a) for a in range(1, lattice.dimension + 1)]


def plaquette_phases(H: Operator, lattice: LatticeSpec) -> np.ndarray:
    """Product of the four bond phases around every elementary plaquette.

    Traversal: (x,y) -> (x,y+1) -> (x+1,y+1) -> (x+1,y) -> (x,y). For the
    Landau-gauge Hamiltonian each product equals exp(2*pi*i*flux).
    """
    if lattice.dimension != 2:
        raise ValueError("plaquettes exist only for d=2")
    h = H.matrix
    Lx, Ly = lattice.lengths
    nx = Lx if lattice.boundary[0] == PERIODIC else Lx - 1
    ny = Ly if lattice.boundary[1] == PERIODIC else Ly - 1
    out = np.empty((nx, ny), dtype=complex)
    for x in range(nx):
        for y in range(ny):
            a = lattice.site_index((x, y))
            b = lattice.site_index((x, (y + 1) % Ly))
            c = lattice.site_index(((x + 1) % Lx, (y + 1) % Ly))
            d = lattice.site_index(((x + 1) % Lx, y))
            # hop amplitude from s to s' is h[s', s]
            prod = h[b, a] * h[c, b] * h[d, c] * h[a, d]
            mag = np.abs(prod)
            out[x, y] = prod / mag if mag > 0 else 0.0
    return out
