"""Exact diagonalization and eigenstate-resolved scans."""

from dataclasses import dataclass

import numpy as np

from .basis import BasisMap, Sector, StateVector
from .errors import SectorError, SizeError
from .observables import entanglement_entropy
from .operators import OperatorMatrix

DENSE_CEILING = 4096


@dataclass(eq=False)
class EigenDecomposition:
    """Full spectrum of a Hermitian operator; eigenvectors are the columns."""

    basis: BasisMap
    energies: np.ndarray
    vectors: np.ndarray

    def state(self, k: int) -> StateVector:
        return StateVector(self.basis, self.vectors[:, k].copy())

    @property
    def dim(self) -> int:
        return self.energies.size


@dataclass(eq=False)
class EntropyScatter:
    """(energy, half-cut entropy) per eigenstate, for one disorder draw."""

    energies: np.ndarray
    entropies: np.ndarray
    strength: float
    seed: int | None
    cut: int


def diagonalize(H: OperatorMatrix, ceiling: int = DENSE_CEILING) -> EigenDecomposition:
    """Dense Hermitian eigendecomposition, energies ascending."""
    if H.dim > ceiling:
        raise SizeError(
            f"diagonalization refused at dimension {H.dim} > ceiling {ceiling}"
        )
    energies, vectors = np.linalg.eigh(H.to_dense())
    return EigenDecomposition(H.basis, energies, vectors)


def entropy_scan(
    H: OperatorMatrix,
    cut: int,
    strength: float = 0.0,
    seed: int | None = None,
    ceiling: int = DENSE_CEILING,
) -> EntropyScatter:
    """Half-cut entanglement entropy of every eigenstate of a constrained-sector H.

    `strength` and `seed` only tag the scatter with the disorder draw that
    produced H; they do not enter the computation.
    """
    if H.basis.sector is not Sector.CONSTRAINED:
        raise SectorError("entropy scans run on the constrained sector")
    eig = diagonalize(H, ceiling=ceiling)
    ent = np.array(
        [entanglement_entropy(eig.state(k), cut) for k in range(eig.dim)]
    )
    return EntropyScatter(eig.energies.copy(), ent, strength, seed, cut)
