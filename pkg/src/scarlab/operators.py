"""Sparse Hermitian operators on a BasisMap.

Pauli conventions (fixed once, used everywhere): bit 1 is the excited state,

    Z|*> = +|*>,   Z|.> = -|.>,
    X = |*><.| + |.><*|,
    Y = i|*><.| - i|.><*|,
    P = |.><.|   (projector onto the ground state).

With these signs the period-2 density wave has <Z_i Z_{i+1}> = -1, the
baseline of the correlation oscillations.

A spin flips under the kinetic term only when every existing neighbour is in
the ground state. On an open chain the end sites have a single neighbour, so
the edge terms carry one projector instead of two; the same edge rule is
applied to the projected perturbation.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import BasisMap, BoundaryCondition, Sector
from .errors import BasisMismatchError, ParameterError, SectorError, SizeError


@dataclass(eq=False)
class OperatorMatrix:
    """Sparse Hermitian operator expressed in a specific BasisMap."""

    basis: BasisMap
    matrix: sp.csr_matrix
    provenance: str = ""
    _digest: str | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        return self.matrix @ amplitudes

    def expectation(self, amplitudes: np.ndarray) -> float:
        return float(np.vdot(amplitudes, self.matrix @ amplitudes).real)

    def digest(self) -> str:
        """Hash identifying the operator: its provenance if set, else its entries."""
        if self._digest is None:
            h = hashlib.sha256()
            h.update(self.basis.signature().encode())
            if self.provenance:
                h.update(self.provenance.encode())
            else:
                csr = self.matrix
                h.update(csr.indptr.tobytes())
                h.update(csr.indices.tobytes())
                h.update(csr.data.tobytes())
            self._digest = h.hexdigest()
        return self._digest

    def _check_same_basis(self, other: "OperatorMatrix"):
        if not self.basis.same_space(other.basis):
            raise BasisMismatchError("operators live in different bases")

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check_same_basis(other)
        prov = f"{self.provenance}+{other.provenance}"
        return OperatorMatrix(self.basis, (self.matrix + other.matrix).tocsr(), prov)

    def __neg__(self) -> "OperatorMatrix":
        return OperatorMatrix(self.basis, (-self.matrix).tocsr(), f"-({self.provenance})")


def _neighbour_mask(site: int, n: int, boundary: BoundaryCondition) -> int:
    """Bit mask of the sites adjacent to `site` (0-based); edges drop off-chain bits."""
    mask = 0
    if boundary is BoundaryCondition.PBC:
        mask |= 1 << ((site - 1) % n)
        mask |= 1 << ((site + 1) % n)
    else:
        if site > 0:
            mask |= 1 << (site - 1)
        if site < n - 1:
            mask |= 1 << (site + 1)
    return mask


def _flip_targets(basis: BasisMap, configs: np.ndarray, flipped: np.ndarray) -> np.ndarray:
    """Indices of flipped configurations, for flips that stay in the sector."""
    if basis.sector is Sector.FULL:
        return flipped
    return np.searchsorted(configs, flipped)


def _assemble(basis: BasisMap, rows, cols, data, dtype, provenance) -> OperatorMatrix:
    dim = basis.size
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        data = np.concatenate(data).astype(dtype)
    else:
        rows = np.empty(0, dtype=np.int64)
        cols = np.empty(0, dtype=np.int64)
        data = np.empty(0, dtype=dtype)
    mat = sp.coo_matrix((data, (rows, cols)), shape=(dim, dim)).tocsr()
    mat.sum_duplicates()
    mat.eliminate_zeros()
    mat.sort_indices()
    return OperatorMatrix(basis, mat, provenance)


def build_pxp(basis: BasisMap) -> OperatorMatrix:
    """Kinetic blockade Hamiltonian: flip site i when its neighbours are down.

    On a ring every site carries both neighbour projectors. On an open chain
    the bulk does too, while the two edge terms keep only the projector on
    their single existing neighbour. All nonzero entries equal 1; the matrix
    is Hermitian by construction because each allowed flip is its own inverse.
    """
    n = basis.n_sites
    configs = basis.configs
    rows, cols, data = [], [], []
    all_idx = np.arange(basis.size, dtype=np.int64)
    for i in range(n):
        mask = _neighbour_mask(i, n, basis.boundary)
        allowed = (configs & mask) == 0
        src = all_idx[allowed]
        flipped = configs[allowed] ^ (1 << i)
        dst = _flip_targets(basis, configs, flipped)
        rows.append(dst)
        cols.append(src)
        data.append(np.ones(len(src)))
    return _assemble(basis, rows, cols, data, np.float64, f"pxp[{basis.signature()}]")


@dataclass(eq=False)
class DisorderRealization:
    """Per-site field triples (h_X, h_Y, h_Z) drawn uniformly from [-W/2, W/2]."""

    n_sites: int
    strength: float
    fields: np.ndarray  # shape (n_sites, 3), columns (h_X, h_Y, h_Z)
    seed: int

    def __post_init__(self):
        self.fields = np.asarray(self.fields, dtype=np.float64)
        if self.fields.shape != (self.n_sites, 3):
            raise ParameterError(
                f"fields must have shape ({self.n_sites}, 3), got {self.fields.shape}"
            )
        half = self.strength / 2.0
        if np.any(np.abs(self.fields) > half):
            raise ParameterError("field values exceed the [-W/2, W/2] range")

    @property
    def hx(self) -> np.ndarray:
        return self.fields[:, 0]

    @property
    def hy(self) -> np.ndarray:
        return self.fields[:, 1]

    @property
    def hz(self) -> np.ndarray:
        return self.fields[:, 2]

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "strength": self.strength,
            "seed": self.seed,
            "fields": self.fields.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DisorderRealization":
        return cls(d["n_sites"], d["strength"], np.array(d["fields"]), d["seed"])


def sample_disorder(n_sites: int, strength: float, seed: int) -> DisorderRealization:
    """Draw i.i.d. uniform fields on [-W/2, W/2] for every site and Pauli axis.

    Uses the Philox 4x64 counter-based generator keyed by `seed`, so the same
    (seed, W, N) always reproduces the same fields bit for bit. Fields scale
    linearly with W at fixed seed: the underlying unit draws are W-independent.
    """
    if strength < 0:
        raise ParameterError(f"disorder strength must be nonnegative, got {strength}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    unit = rng.random((n_sites, 3))
    fields = strength * (unit - 0.5)
    return DisorderRealization(n_sites, strength, fields, seed)


def _check_fields(basis: BasisMap, fields: DisorderRealization):
    if fields.n_sites != basis.n_sites:
        raise SizeError(
            f"disorder for {fields.n_sites} sites does not fit a "
            f"{basis.n_sites}-site basis"
        )


def build_perturbation_full(
    basis: BasisMap, fields: DisorderRealization
) -> OperatorMatrix:
    """Sum of bare single-site fields h_X X_i + h_Y Y_i + h_Z Z_i on the full space.

    These terms do not preserve the constrained sector, hence the full-space
    requirement. Flipping a site up contributes h_X + i h_Y off the diagonal,
    flipping down the conjugate; the Z fields sit on the diagonal with sign
    +1 for an excited site.
    """
    if basis.sector is not Sector.FULL:
        raise SectorError("bare single-site fields require the full sector")
    _check_fields(basis, fields)
    n = basis.n_sites
    configs = basis.configs
    dim = basis.size
    all_idx = np.arange(dim, dtype=np.int64)
    rows, cols, data = [], [], []
    diag = np.zeros(dim)
    for i in range(n):
        bit_up = ((configs >> i) & 1).astype(bool)
        diag += np.where(bit_up, fields.hz[i], -fields.hz[i])
        flipped = configs ^ (1 << i)
        # sign of the i h_Y part: + when flipping up, - when flipping down
        amp = np.where(bit_up, fields.hx[i] - 1j * fields.hy[i],
                       fields.hx[i] + 1j * fields.hy[i])
        rows.append(flipped)
        cols.append(all_idx)
        data.append(amp)
    rows.append(all_idx)
    cols.append(all_idx)
    data.append(diag.astype(np.complex128))
    prov = f"disorder_full[w={fields.strength!r};seed={fields.seed};{basis.signature()}]"
    return _assemble(basis, rows, cols, data, np.complex128, prov)


def build_perturbation_projected(
    basis: BasisMap, fields: DisorderRealization
) -> OperatorMatrix:
    """Single-site fields sandwiched between ground-state projectors on the
    neighbours, expressed directly in the constrained sector.

    A term at site i survives only on configurations whose neighbours of i are
    all down (edge sites of an open chain have a single neighbour). Under that
    condition the X and Y flips stay inside the sector, so the operator maps
    the constrained space to itself.
    """
    if basis.sector is not Sector.CONSTRAINED:
        raise SectorError("projected fields are defined on the constrained sector")
    _check_fields(basis, fields)
    n = basis.n_sites
    configs = basis.configs
    dim = basis.size
    all_idx = np.arange(dim, dtype=np.int64)
    rows, cols, data = [], [], []
    diag = np.zeros(dim)
    for i in range(n):
        mask = _neighbour_mask(i, n, basis.boundary)
        allowed = (configs & mask) == 0
        src = all_idx[allowed]
        sub = configs[allowed]
        bit_up = ((sub >> i) & 1).astype(bool)
        diag[src] += np.where(bit_up, fields.hz[i], -fields.hz[i])
        flipped = sub ^ (1 << i)
        dst = _flip_targets(basis, configs, flipped)
        amp = np.where(bit_up, fields.hx[i] - 1j * fields.hy[i],
                       fields.hx[i] + 1j * fields.hy[i])
        rows.append(dst)
        cols.append(src)
        data.append(amp)
    rows.append(all_idx)
    cols.append(all_idx)
    data.append(diag.astype(np.complex128))
    prov = f"disorder_proj[w={fields.strength!r};seed={fields.seed};{basis.signature()}]"
    return _assemble(basis, rows, cols, data, np.complex128, prov)


def build_hamiltonian(
    basis: BasisMap, disorder: DisorderRealization | None = None
) -> OperatorMatrix:
    """Kinetic term plus the disorder appropriate for the basis sector.

    Full sector gets the bare fields, constrained sector the projected ones.
    With no disorder (or W = 0) this is just the kinetic term.
    """
    h = build_pxp(basis)
    if disorder is None or disorder.strength == 0.0:
        return h
    if basis.sector is Sector.FULL:
        return h + build_perturbation_full(basis, disorder)
    return h + build_perturbation_projected(basis, disorder)
