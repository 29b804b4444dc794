"""Measured quantities: fidelity, bond-averaged ZZ correlation, bipartite
entanglement entropy, and eigenbasis overlap spectra.

All functions here are pure; they never mutate their inputs.
"""

from dataclasses import dataclass

import numpy as np

from .basis import (
    BasisMap,
    BoundaryCondition,
    Sector,
    StateVector,
    constrained_configs_obc,
)
from .errors import BasisMismatchError, ParameterError
from .dynamics import Trajectory


@dataclass(eq=False)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.times.shape != self.values.shape:
            raise ParameterError("times and values must have equal length")


@dataclass(eq=False)
class OverlapSpectrum:
    """|<E_k|psi>|^2 against the eigenenergies, sorted ascending in energy."""

    energies: np.ndarray
    overlaps: np.ndarray


def fidelity(psi0: StateVector, psi: StateVector) -> float:
    """|<psi0|psi>|^2."""
    return float(abs(psi0.inner(psi)) ** 2)


def fidelity_series(traj: Trajectory, psi0: StateVector, label: str = "fidelity") -> TimeSeries:
    if not traj.basis.same_space(psi0.basis):
        raise BasisMismatchError("trajectory and reference state bases differ")
    vals = np.array(
        [abs(np.vdot(psi0.amplitudes, s.amplitudes)) ** 2 for s in traj.snapshots]
    )
    return TimeSeries(traj.times, vals, label)


def bond_zz_values(basis: BasisMap) -> np.ndarray:
    """Per-configuration bond-averaged ZZ value (the observable is diagonal).

    Each bond contributes s_i * s_{i+1} with s = +1 excited, -1 ground; a ring
    averages all N bonds, an open chain its N-1 bonds.
    """
    n = basis.n_sites
    c = basis.configs
    total = np.zeros(basis.size)
    for i in range(n - 1):
        differ = ((c >> i) ^ (c >> (i + 1))) & 1
        total += 1.0 - 2.0 * differ
    if basis.boundary is BoundaryCondition.PBC:
        differ = ((c >> (n - 1)) ^ c) & 1
        total += 1.0 - 2.0 * differ
        return total / n
    return total / (n - 1)


def avg_zz_correlation(psi: StateVector) -> float:
    """Expectation of the bond-averaged nearest-neighbour ZZ operator."""
    weights = bond_zz_values(psi.basis)
    return float(np.dot(np.abs(psi.amplitudes) ** 2, weights))


def zz_correlation_series(traj: Trajectory, label: str = "zz") -> TimeSeries:
    weights = bond_zz_values(traj.basis)
    vals = np.array(
        [np.dot(np.abs(s.amplitudes) ** 2, weights) for s in traj.snapshots]
    )
    return TimeSeries(traj.times, vals, label)


def _segment_configs(basis: BasisMap, n_segment: int) -> np.ndarray:
    """Configurations a contiguous segment can take, given the basis sector.

    Any segment of a blockade-valid configuration is itself a valid open
    sub-chain, regardless of the parent boundary condition.
    """
    if basis.sector is Sector.FULL:
        return np.arange(1 << n_segment, dtype=np.int64)
    return constrained_configs_obc(n_segment)


def schmidt_matrix(psi: StateVector, cut: int) -> np.ndarray:
    """Amplitudes arranged as (left segment config) x (right segment config).

    The left block is sites 1..cut. Joint pairs that never occur in the basis
    (seam violations in the constrained sector) stay zero.
    """
    n = psi.basis.n_sites
    if not 1 <= cut <= n - 1:
        raise ParameterError(f"cut must lie in [1, {n - 1}], got {cut}")
    left = _segment_configs(psi.basis, cut)
    right = _segment_configs(psi.basis, n - cut)
    configs = psi.basis.configs
    mask = (1 << cut) - 1
    il = np.searchsorted(left, configs & mask)
    ir = np.searchsorted(right, configs >> cut)
    m = np.zeros((left.size, right.size), dtype=np.complex128)
    m[il, ir] = psi.amplitudes
    return m


def entanglement_entropy(psi: StateVector, cut: int) -> float:
    """Von Neumann entropy (natural log) of sites 1..cut.

    Computed from the singular values of the amplitude matrix; 0*ln(0) is 0.
    """
    sv = np.linalg.svd(schmidt_matrix(psi, cut), compute_uv=False)
    p = sv**2
    p = p[p > 0.0]
    return float(-np.sum(p * np.log(p)))


def overlap_spectrum(eig, psi: StateVector) -> OverlapSpectrum:
    """Squared overlaps of psi with every eigenvector of a decomposition."""
    if not eig.basis.same_space(psi.basis):
        raise BasisMismatchError("eigendecomposition and state bases differ")
    amps = eig.vectors.conj().T @ psi.amplitudes
    return OverlapSpectrum(eig.energies.copy(), np.abs(amps) ** 2)


def participation_ratio(spectrum: OverlapSpectrum) -> float:
    """(sum_k p_k^2)^-1: how many eigenstates the state is spread over."""
    return float(1.0 / np.sum(spectrum.overlaps**2))
