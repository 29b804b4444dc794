"""Spin-chain configurations, blockade-constrained sectors, and named product states.

Conventions used everywhere in this package:

* Sites are numbered 1..N. Site i lives in bit i-1, so site 1 is the least
  significant bit of the configuration word.
* Bit value 1 means the site is excited ("*" in pattern strings), 0 means
  ground ("."). Pattern strings print site 1 leftmost.
* The constrained sector contains every configuration with no two adjacent
  excited sites; under periodic boundaries the (N, 1) bond counts as adjacent.
* Basis order is canonical: configurations sorted by increasing integer value.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    BasisMismatchError,
    ConfigNotInSectorError,
    SectorError,
    SizeError,
    StateMismatchError,
)

MAX_SITES = 62  # signed 64-bit words keep every bit operation overflow-free


class BoundaryCondition(str, Enum):
    OBC = "obc"
    PBC = "pbc"


class Sector(str, Enum):
    FULL = "full"
    CONSTRAINED = "constrained"


class StateLabel(str, Enum):
    Z2 = "z2"
    Z2_SHIFT = "z2shift"
    Z3 = "z3"
    ALL_DOWN = "all_down"
    Z2_DEFECT_UP = "z2_defect_up"
    Z2_DEFECT_DOWN = "z2_defect_down"


def constrained_configs_obc(n_sites: int) -> np.ndarray:
    """All open-chain configurations without adjacent excitations, ascending.

    Built by the two-term recursion over the top site: the valid words on k
    sites are the valid words on k-1 sites (top site down) followed by the
    valid words on k-2 sites with bit k-1 set (top site up forces site k-1
    down). Both blocks are internally sorted and the second block starts at
    2^(k-1), so concatenation preserves the ascending order. Runs in time
    proportional to the output size.
    """
    if n_sites < 0:
        raise SizeError(f"n_sites must be nonnegative, got {n_sites}")
    prev2 = np.array([0], dtype=np.int64)       # zero sites: the empty word
    prev1 = np.array([0, 1], dtype=np.int64)    # one site
    if n_sites == 0:
        return prev2
    if n_sites == 1:
        return prev1
    for k in range(2, n_sites + 1):
        cur = np.concatenate([prev1, prev2 + (1 << (k - 1))])
        prev2, prev1 = prev1, cur
    return prev1


def _constrained_configs(n_sites: int, boundary: BoundaryCondition) -> np.ndarray:
    configs = constrained_configs_obc(n_sites)
    if boundary is BoundaryCondition.PBC:
        ends_both = (configs & 1).astype(bool) & (configs >> (n_sites - 1)).astype(bool)
        configs = configs[~ends_both]
    return configs


@dataclass(eq=False)
class BasisMap:
    """Ordered enumeration of a Hilbert-space sector with O(1) index lookup.

    Immutable after construction; safe to share across threads.
    """

    n_sites: int
    boundary: BoundaryCondition
    sector: Sector
    configs: np.ndarray
    _index: dict[int, int] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.configs.setflags(write=False)
        if self.sector is Sector.CONSTRAINED and self._index is None:
            self._index = {int(c): k for k, c in enumerate(self.configs)}

    @property
    def size(self) -> int:
        return len(self.configs)

    def __len__(self) -> int:
        return len(self.configs)

    def index_of(self, bits: int) -> int:
        """Position of a configuration in the basis; raises on a miss."""
        if self.sector is Sector.FULL:
            if 0 <= bits < (1 << self.n_sites):
                return bits
            raise ConfigNotInSectorError(
                f"configuration {bits} outside the {self.n_sites}-site full space"
            )
        idx = self._index.get(bits)
        if idx is None:
            raise ConfigNotInSectorError(
                f"configuration {bits:#x} is not in the constrained sector"
            )
        return idx

    def contains(self, bits: int) -> bool:
        if self.sector is Sector.FULL:
            return 0 <= bits < (1 << self.n_sites)
        return bits in self._index

    def config(self, k: int) -> int:
        return int(self.configs[k])

    def pattern(self, bits: int) -> str:
        """Pattern string, site 1 leftmost, '*' excited and '.' ground."""
        return "".join("*" if (bits >> i) & 1 else "." for i in range(self.n_sites))

    def bitstring(self, bits: int) -> str:
        """Plain binary literal of the configuration word (site N leftmost)."""
        return format(bits, f"0{self.n_sites}b")

    def same_space(self, other: "BasisMap") -> bool:
        return (
            self.n_sites == other.n_sites
            and self.boundary == other.boundary
            and self.sector == other.sector
        )

    def signature(self) -> str:
        return f"n={self.n_sites};bc={self.boundary.value};sector={self.sector.value}"


def enumerate_basis(
    n_sites: int, boundary: BoundaryCondition, sector: Sector
) -> BasisMap:
    """Enumerate a sector of the N-site chain in canonical (ascending) order."""
    if not 2 <= n_sites <= MAX_SITES:
        raise SizeError(f"n_sites must be in [2, {MAX_SITES}], got {n_sites}")
    boundary = BoundaryCondition(boundary)
    sector = Sector(sector)
    if sector is Sector.FULL:
        configs = np.arange(1 << n_sites, dtype=np.int64)
    else:
        configs = _constrained_configs(n_sites, boundary)
    return BasisMap(n_sites, boundary, sector, configs)


@dataclass(eq=False)
class StateVector:
    """Complex amplitudes over a BasisMap. Unit norm unless stated otherwise."""

    basis: BasisMap
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (self.basis.size,):
            raise StateMismatchError(
                f"amplitude vector of length {self.amplitudes.shape} does not "
                f"match basis of size {self.basis.size}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        if not self.basis.same_space(other.basis):
            raise BasisMismatchError("states live in different bases")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.basis, self.amplitudes.copy())


def basis_state(basis: BasisMap, bits: int) -> StateVector:
    """The configuration-basis state |bits> as a unit vector."""
    amps = np.zeros(basis.size, dtype=np.complex128)
    amps[basis.index_of(bits)] = 1.0
    return StateVector(basis, amps)


# -- named product states ------------------------------------------------------

_EVERY_OTHER = 0x5555555555555555  # bits 0, 2, 4, ... set


def z2_bits(n_sites: int) -> int:
    """Period-2 density wave, excited on odd sites (site 1 excited)."""
    return _EVERY_OTHER & ((1 << n_sites) - 1)


def z2_shift_bits(n_sites: int) -> int:
    """Period-2 density wave shifted by one site (site 2 excited)."""
    return (_EVERY_OTHER << 1) & ((1 << n_sites) - 1)


def z3_bits(n_sites: int) -> int:
    """Period-3 density wave, excited on sites 1, 4, 7, ..."""
    bits = 0
    for i in range(0, n_sites, 3):
        bits |= 1 << i
    return bits


def default_defect_site(n_sites: int, label: StateLabel) -> int:
    """Defect placement near the middle of the chain.

    The up-flip targets a ground (even) site of the period-2 pattern, the
    down-flip an excited (odd) site; floor(N/2) is nudged to the nearest site
    of that parity, upward on ties.
    """
    want_even = label is StateLabel.Z2_DEFECT_UP
    mid = n_sites // 2
    if (mid % 2 == 0) == want_even:
        return mid
    return mid + 1


def named_state_bits(
    label: StateLabel,
    n_sites: int,
    boundary: BoundaryCondition,
    defect_site: int | None = None,
) -> int:
    """Configuration word of a named state, validating representability."""
    label = StateLabel(label)
    boundary = BoundaryCondition(boundary)
    if label is StateLabel.ALL_DOWN:
        return 0
    if label in (StateLabel.Z2, StateLabel.Z2_SHIFT):
        if n_sites % 2:
            raise StateMismatchError(
                f"{label.value} needs an even number of sites, got {n_sites}"
            )
        return z2_bits(n_sites) if label is StateLabel.Z2 else z2_shift_bits(n_sites)
    if label is StateLabel.Z3:
        if boundary is BoundaryCondition.PBC and n_sites % 3:
            raise StateMismatchError(
                f"z3 on a ring needs N divisible by 3, got {n_sites}"
            )
        return z3_bits(n_sites)
    # defect states: start from the period-2 pattern and flip one site
    if n_sites % 2:
        raise StateMismatchError(
            f"{label.value} needs an even number of sites, got {n_sites}"
        )
    if defect_site is None:
        defect_site = default_defect_site(n_sites, label)
    if not 1 <= defect_site <= n_sites:
        raise StateMismatchError(
            f"defect_site {defect_site} outside chain of {n_sites} sites"
        )
    want_even = label is StateLabel.Z2_DEFECT_UP
    if (defect_site % 2 == 0) != want_even:
        kind = "ground (even)" if want_even else "excited (odd)"
        raise StateMismatchError(
            f"{label.value} must flip a {kind} site, got site {defect_site}"
        )
    return z2_bits(n_sites) ^ (1 << (defect_site - 1))


def make_state(
    label: StateLabel, basis: BasisMap, defect_site: int | None = None
) -> StateVector:
    """Unit-norm state with a single nonzero amplitude at the named pattern."""
    label = StateLabel(label)
    if label is StateLabel.Z2_DEFECT_UP and basis.sector is not Sector.FULL:
        raise SectorError(
            "the up-flipped defect has two adjacent excitations and only "
            "exists in the full sector"
        )
    bits = named_state_bits(label, basis.n_sites, basis.boundary, defect_site)
    return basis_state(basis, bits)
