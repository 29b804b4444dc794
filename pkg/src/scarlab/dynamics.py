"""Propagation of state vectors under a time-independent Hermitian operator.

Two routes:

* `evolve_krylov` — Hermitian Lanczos (three-term recurrence) with adaptive
  windowing. One factorization serves every grid point that falls inside the
  accepted window, so a fine output grid costs little more than a coarse one.
* `evolve_dense` — full eigendecomposition, exact up to roundoff. Guarded by a
  dimension ceiling; this is the validation oracle for the Krylov route.

Both renormalize a snapshot only when its norm has drifted from 1 by more
than `RENORM_THRESHOLD`, and both record the drift they saw.
"""

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
import scipy.linalg as sla

from .basis import BasisMap, StateVector
from .errors import BasisMismatchError, ConvergenceError, ParameterError, SizeError
from .operators import OperatorMatrix

DENSE_EVOLVE_CEILING = 4096
DEFAULT_KRYLOV_DIM = 30
DEFAULT_KRYLOV_TOL = 1e-10  # error budget per unit time
RENORM_THRESHOLD = 1e-12
_BREAKDOWN = 1e-12
_MIN_STEP = 1e-8


@dataclass(eq=False)
class Trajectory:
    """States sampled on a time grid, tagged with the generating operator."""

    basis: BasisMap
    times: np.ndarray
    snapshots: list[StateVector]
    hamiltonian_digest: str
    norm_drifts: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.snapshots):
            raise ParameterError("one snapshot per grid point required")


def time_grid(t_max: float, dt: float) -> np.ndarray:
    """Uniform grid 0..t_max with spacing dt (endpoints exact)."""
    if t_max <= 0 or dt <= 0:
        raise ParameterError("t_max and dt must be positive")
    n = int(round(t_max / dt))
    if n < 1 or abs(n * dt - t_max) > dt / 2:
        raise ParameterError(f"dt={dt} does not tile t_max={t_max}")
    return np.linspace(0.0, t_max, n + 1)


def _validate_grid(times) -> np.ndarray:
    t = np.asarray(times, dtype=np.float64)
    if t.ndim != 1 or t.size == 0:
        raise ParameterError("time grid must be a nonempty 1-d array")
    if t[0] != 0.0:
        raise ParameterError("time grid must start at t=0")
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise ParameterError("time grid must be strictly increasing")
    return t


def _check_compatible(H: OperatorMatrix, psi0: StateVector):
    if not H.basis.same_space(psi0.basis):
        raise BasisMismatchError("operator and state live in different bases")


def _complex_matvec(H: OperatorMatrix) -> Callable[[np.ndarray], np.ndarray]:
    mat = H.matrix
    if mat.dtype != np.complex128:
        mat = mat.astype(np.complex128)  # one copy; avoids per-product upcasts
    return lambda v: mat @ v


# -- Lanczos route ---------------------------------------------------------------


def _lanczos(matvec, v0: np.ndarray, m: int):
    """Three-term Lanczos recurrence from the unit vector v0.

    Returns (V, alphas, betas, beta_next) with V holding k <= m basis vectors
    as rows. beta_next == 0 signals an invariant subspace (happy breakdown):
    the tridiagonal matrix then represents the operator exactly on span(V).
    """
    dim = v0.shape[0]
    V = np.empty((m, dim), dtype=np.complex128)
    alphas = np.empty(m)
    betas = np.empty(max(m - 1, 0))
    V[0] = v0
    w = matvec(v0)
    alphas[0] = np.vdot(V[0], w).real
    w = w - alphas[0] * V[0]
    for j in range(1, m):
        b = np.linalg.norm(w)
        if b <= _BREAKDOWN:
            return V[:j], alphas[:j], betas[: j - 1], 0.0
        betas[j - 1] = b
        V[j] = w / b
        w = matvec(V[j])
        w = w - b * V[j - 1]
        alphas[j] = np.vdot(V[j], w).real
        w = w - alphas[j] * V[j]
    return V, alphas, betas, float(np.linalg.norm(w))


def _tridiag_eig(alphas: np.ndarray, betas: np.ndarray):
    if len(alphas) == 1:
        return alphas.copy(), np.array([[1.0]])
    return sla.eigh_tridiagonal(alphas, betas)


def _small_propagate(w: np.ndarray, S: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """Rows exp(-i tau T) e1 for each tau, via the tridiagonal eigenpairs."""
    phases = np.exp(-1j * np.outer(taus, w))
    return (phases * S[0]) @ S.T


def krylov_stream(
    H: OperatorMatrix,
    psi0: StateVector,
    times,
    krylov_dim: int = DEFAULT_KRYLOV_DIM,
    tol: float = DEFAULT_KRYLOV_TOL,
) -> Iterator[tuple[float, np.ndarray, float]]:
    """Yield (t, amplitudes, norm_drift) at every grid point, t=0 included.

    Each Lanczos factorization is reused for every grid point inside the
    window it can serve at the requested accuracy; the window is found by
    halving from an optimistic guess using the standard residual estimate
    beta_{k+1} * tau * |y_k(tau)| and grows again after easy steps. `tol`
    is an error budget per unit time, so the accumulated propagation error
    over a horizon T stays near tol * T.
    """
    _check_compatible(H, psi0)
    times = _validate_grid(times)
    if krylov_dim < 2:
        raise ParameterError("krylov_dim must be at least 2")
    matvec = _complex_matvec(H)

    psi = psi0.amplitudes.astype(np.complex128, copy=True)
    yield 0.0, psi, abs(np.linalg.norm(psi) - 1.0)

    t_cur = 0.0
    t_end = float(times[-1])
    i_next = 1
    n_pts = times.size
    window = t_end if t_end > 0 else 1.0
    while i_next < n_pts:
        nrm = np.linalg.norm(psi)
        V, alphas, betas, beta_next = _lanczos(matvec, psi / nrm, krylov_dim)
        w, S = _tridiag_eig(alphas, betas)
        remaining = t_end - t_cur
        if beta_next == 0.0:
            tau = remaining  # invariant subspace: exact at any horizon
        else:
            tau = min(window, remaining)
            while True:
                y_far = _small_propagate(w, S, np.array([tau]))[0]
                err = beta_next * tau * abs(y_far[-1])
                if err <= tol * tau:
                    break
                tau *= 0.5
                if tau < _MIN_STEP:
                    raise ConvergenceError(
                        f"Lanczos step collapsed below {_MIN_STEP} at t={t_cur}",
                        residual=err,
                    )
        j = i_next
        horizon = t_cur + tau + 1e-12 * max(1.0, abs(t_cur))
        while j < n_pts and times[j] <= horizon:
            j += 1
        if j > i_next:
            taus = times[i_next:j] - t_cur
            block = (_small_propagate(w, S, taus) * nrm) @ V
            for row, t in zip(block, times[i_next:j]):
                norm_row = np.linalg.norm(row)
                drift = abs(norm_row - 1.0)
                out = row if drift <= RENORM_THRESHOLD else row / norm_row
                yield float(t), out, drift
            psi = block[-1]
            t_cur = float(times[j - 1])
        else:
            # grid coarser than the stable window: take an internal substep
            psi = (_small_propagate(w, S, np.array([tau]))[0] * nrm) @ V
            t_cur = t_cur + tau
        i_next = j
        window = tau * 1.5


def evolve_krylov(
    H: OperatorMatrix,
    psi0: StateVector,
    times,
    krylov_dim: int = DEFAULT_KRYLOV_DIM,
    tol: float = DEFAULT_KRYLOV_TOL,
) -> Trajectory:
    """Lanczos propagation collecting a full Trajectory (see `krylov_stream`)."""
    times = _validate_grid(times)
    snapshots = []
    drifts = np.zeros(times.size)
    for k, (_, amps, drift) in enumerate(
        krylov_stream(H, psi0, times, krylov_dim=krylov_dim, tol=tol)
    ):
        if k == 0:
            snapshots.append(psi0.copy())
            drifts[0] = drift
        else:
            snapshots.append(StateVector(psi0.basis, amps.copy()))
            drifts[k] = drift
    return Trajectory(psi0.basis, times, snapshots, H.digest(), drifts)


# -- dense oracle ----------------------------------------------------------------


def eigenbasis_stream(
    energies: np.ndarray,
    vectors: np.ndarray,
    psi0: StateVector,
    times,
) -> Iterator[tuple[float, np.ndarray, float]]:
    """Exact propagation through a precomputed eigendecomposition (column vectors)."""
    times = _validate_grid(times)
    c0 = vectors.conj().T @ psi0.amplitudes
    for t in times:
        if t == 0.0:
            amps = psi0.amplitudes.astype(np.complex128, copy=True)
        else:
            amps = vectors @ (np.exp(-1j * energies * t) * c0)
        nrm = np.linalg.norm(amps)
        drift = abs(nrm - 1.0)
        if drift > RENORM_THRESHOLD:
            amps = amps / nrm
        yield float(t), amps, drift


def evolve_dense(
    H: OperatorMatrix,
    psi0: StateVector,
    times,
    ceiling: int = DENSE_EVOLVE_CEILING,
) -> Trajectory:
    """Propagate through the full eigendecomposition of H.

    Intended as the validation oracle and for small sectors; refuses to
    densify anything larger than `ceiling`.
    """
    _check_compatible(H, psi0)
    if H.dim > ceiling:
        raise SizeError(
            f"dense evolution refused at dimension {H.dim} > ceiling {ceiling}"
        )
    times = _validate_grid(times)
    energies, vectors = np.linalg.eigh(H.to_dense())
    snapshots = []
    drifts = np.zeros(times.size)
    for k, (_, amps, drift) in enumerate(
        eigenbasis_stream(energies, vectors, psi0, times)
    ):
        snapshots.append(StateVector(psi0.basis, amps))
        drifts[k] = drift
    return Trajectory(psi0.basis, times, snapshots, H.digest(), drifts)
