import numpy as np
import pytest

from ccclab.model import DisorderSpec, LatticeSpec, build_hamiltonian
from ccclab.spectral import diagonalize


def make_eigensystem(lengths, boundary, kind="none", strength=0.0, seed=0,
                     realization=0, hopping=1.0, flux=0.0):
    lattice = LatticeSpec(tuple(lengths), tuple(boundary), hopping=hopping,
                          flux=flux)
    disorder = DisorderSpec(kind, strength, master_seed=seed,
                            realization_index=realization)
    H = build_hamiltonian(lattice, disorder)
    return diagonalize(H, disorder=disorder), H


@pytest.fixture(scope="session")
def two_site():
    """Clean two-site chain: the fully hand-checkable reference system."""
    es, H = make_eigensystem((2,), ("open",))
    return es, H


@pytest.fixture(scope="session")
def chain64():
    """One disordered 64-site open chain used by many identity checks."""
    es, H = make_eigensystem((64,), ("open",), "uniform", 2.0, seed=123)
    return es, H


@pytest.fixture(scope="session")
def ring256():
    """Clean periodic 256-site ring (translation-invariant reference)."""
    es, H = make_eigensystem((256,), ("periodic",))
    return es, H
