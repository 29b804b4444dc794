"""Experiment protocols: quenches, disorder ensembles, revival-peak analysis,
and the defect studies with their frozen-region reduction.

Disorder sweeps fan out over (strength, realization) cells; each cell is an
independent job, so they run in a process pool and are reduced in a fixed
order to keep results bit-identical regardless of scheduling. The realization
seed is always master_seed + realization index.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .basis import (
    BoundaryCondition,
    Sector,
    StateLabel,
    StateVector,
    basis_state,
    default_defect_site,
    enumerate_basis,
    make_state,
)
from .dynamics import (
    DEFAULT_KRYLOV_DIM,
    DEFAULT_KRYLOV_TOL,
    eigenbasis_stream,
    krylov_stream,
)
from .errors import ParameterError, WindowError
from .observables import (
    OverlapSpectrum,
    TimeSeries,
    bond_zz_values,
    overlap_spectrum,
)
from .operators import (
    OperatorMatrix,
    build_perturbation_full,
    build_pxp,
    sample_disorder,
)
from .spectral import DENSE_CEILING, diagonalize

DEFAULT_T_EXCLUDE = 1.0
_DENSE_STREAM_LIMIT = 1024  # beyond this an eigh costs more than Lanczos


# -- single quenches ---------------------------------------------------------------


@dataclass(eq=False)
class QuenchSeries:
    """Fidelity and correlation traces of one quench, with drift diagnostics."""

    fidelity: TimeSeries
    correlation: TimeSeries
    max_norm_drift: float
    max_energy_drift: float | None


def _evolution_stream(H, psi0, times, krylov_dim, tol, eig=None):
    if eig is not None:
        return eigenbasis_stream(eig.energies, eig.vectors, psi0, times)
    if H.dim <= _DENSE_STREAM_LIMIT:
        energies, vectors = np.linalg.eigh(H.to_dense())
        return eigenbasis_stream(energies, vectors, psi0, times)
    return krylov_stream(H, psi0, times, krylov_dim=krylov_dim, tol=tol)


def quench_series(
    H: OperatorMatrix,
    psi0: StateVector,
    times,
    method: str = "auto",
    krylov_dim: int = DEFAULT_KRYLOV_DIM,
    tol: float = DEFAULT_KRYLOV_TOL,
    track_energy: bool = False,
) -> QuenchSeries:
    """Evolve psi0 under H and record fidelity and ZZ correlation on the grid.

    `method` is "auto" (dense below a size threshold, Lanczos above),
    "dense", or "krylov". Snapshots are consumed streaming, so the grid can
    be long even in large sectors.
    """
    if method == "auto":
        stream = _evolution_stream(H, psi0, times, krylov_dim, tol)
    elif method == "dense":
        energies, vectors = np.linalg.eigh(H.to_dense())
        stream = eigenbasis_stream(energies, vectors, psi0, times)
    elif method == "krylov":
        stream = krylov_stream(H, psi0, times, krylov_dim=krylov_dim, tol=tol)
    else:
        raise ParameterError(f"unknown evolution method {method!r}")
    weights = bond_zz_values(psi0.basis)
    ref = psi0.amplitudes
    ts, fids, corrs = [], [], []
    max_drift = 0.0
    e0 = None
    max_edrift = 0.0
    for t, amps, drift in stream:
        ts.append(t)
        fids.append(abs(np.vdot(ref, amps)) ** 2)
        corrs.append(np.dot(np.abs(amps) ** 2, weights))
        max_drift = max(max_drift, drift)
        if track_energy:
            e = float(np.vdot(amps, H.matrix @ amps).real)
            if e0 is None:
                e0 = e
            max_edrift = max(max_edrift, abs(e - e0))
    ts = np.asarray(ts)
    return QuenchSeries(
        TimeSeries(ts, np.asarray(fids), "fidelity"),
        TimeSeries(ts, np.asarray(corrs), "zz"),
        max_drift,
        max_edrift if track_energy else None,
    )


# -- revival peaks and their decay law ----------------------------------------------


def find_revival_peak(series: TimeSeries, t_exclude: float) -> tuple[float, float]:
    """Global maximum of the series restricted to t > t_exclude.

    Ties resolve to the earliest time; the returned value is a grid point of
    the input, never an interpolation.
    """
    if series.times.size == 0:
        raise WindowError("empty series")
    if t_exclude < 0:
        raise ParameterError("t_exclude must be nonnegative")
    mask = series.times > t_exclude
    if not np.any(mask):
        raise WindowError(
            f"no grid points beyond t_exclude={t_exclude} (grid ends at "
            f"{series.times[-1]})"
        )
    times = series.times[mask]
    values = series.values[mask]
    k = int(np.argmax(values))  # argmax takes the first of equal maxima
    return float(times[k]), float(values[k])


def first_crossing_time(series: TimeSeries, threshold: float) -> float | None:
    """First grid time at which the series drops below `threshold`, if any."""
    below = np.nonzero(series.values < threshold)[0]
    if below.size == 0:
        return None
    return float(series.times[below[0]])


@dataclass(eq=False)
class GaussianFit:
    """Least-squares parameters of a * exp(-b W^2) + c."""

    a: float
    b: float
    c: float
    residual_norm: float
    converged: bool

    def evaluate(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=np.float64)
        return self.a * np.exp(-self.b * w**2) + self.c


def fit_gaussian_decay(
    w_values,
    peaks,
    max_iter: int = 200,
    rtol: float = 1e-10,
) -> GaussianFit:
    """Fit a * exp(-b W^2) + c by damped Gauss-Newton.

    Start values: a0 = first - last peak, c0 = last peak, b0 from a log-linear
    regression of (peaks - c0) / a0 against W^2. Each iteration solves the
    linearized least-squares step and halves it until the residual does not
    increase. Convergence is declared when the relative residual change drops
    below `rtol`. All-equal peaks leave b unidentifiable: the fit degenerates
    to a = b = 0, c = mean, flagged as not converged.
    """
    w = np.asarray(w_values, dtype=np.float64)
    p = np.asarray(peaks, dtype=np.float64)
    if w.size != p.size:
        raise ParameterError("w_values and peaks must have equal length")
    if w.size < 4:
        raise ParameterError("need at least 4 points to fit three parameters")
    if np.unique(w).size != w.size:
        raise ParameterError("w_values must be distinct")

    scale = max(float(np.max(np.abs(p))), 1e-300)
    if float(np.ptp(p)) <= 1e-14 * scale:
        c = float(np.mean(p))
        res = float(np.linalg.norm(p - c))
        return GaussianFit(0.0, 0.0, c, res, converged=False)

    w2 = w**2
    a0 = float(p[0] - p[-1])
    c0 = float(p[-1])
    if a0 == 0.0:
        a0 = float(np.ptp(p))
    ratio = (p - c0) / a0
    usable = ratio > 1e-12
    if np.count_nonzero(usable) >= 2:
        slope = np.polyfit(w2[usable], np.log(ratio[usable]), 1)[0]
        b0 = max(-float(slope), 0.0)
    else:
        b0 = 1.0

    theta = np.array([a0, b0, c0])

    def residual(th):
        return th[0] * np.exp(-th[1] * w2) + th[2] - p

    r = residual(theta)
    res = float(np.linalg.norm(r))
    converged = False
    for _ in range(max_iter):
        if res <= 1e-15 * scale:
            converged = True
            break
        decay = np.exp(-theta[1] * w2)
        jac = np.column_stack([decay, -theta[0] * w2 * decay, np.ones_like(w2)])
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        lam = 1.0
        accepted = False
        while lam >= 1e-10:
            cand = theta + lam * step
            r_c = residual(cand)
            res_c = float(np.linalg.norm(r_c))
            if res_c <= res:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            break
        theta, r = cand, r_c
        if abs(res - res_c) <= rtol * max(res, 1e-300):
            res = res_c
            converged = True
            break
        res = res_c
    a, b, c = (float(x) for x in theta)
    return GaussianFit(a, b, c, res, converged)


# -- disorder sweeps ----------------------------------------------------------------


@dataclass(eq=False)
class DisorderSweepResult:
    """Ensemble statistics of the dominant revival peak per disorder strength."""

    w_values: np.ndarray
    mean_peaks: np.ndarray
    stderr_peaks: np.ndarray
    peaks: np.ndarray       # (n_W, R) individual magnitudes
    peak_times: np.ndarray  # (n_W, R)
    realizations: int
    master_seed: int
    n_sites: int
    boundary: BoundaryCondition
    state_label: StateLabel
    t_exclude: float


_WORKER_CACHE: dict = {}


def _cached_full_pxp(n_sites: int, boundary_value: str):
    key = (n_sites, boundary_value)
    hit = _WORKER_CACHE.get(key)
    if hit is None:
        basis = enumerate_basis(n_sites, BoundaryCondition(boundary_value), Sector.FULL)
        hit = (basis, build_pxp(basis))
        _WORKER_CACHE[key] = hit
    return hit


def _sweep_cell(task):
    """One (strength, realization) cell; module-level so it pickles."""
    (iw, r, n, bc_value, label_value, strength, seed, times, t_exclude,
     krylov_dim, tol) = task
    basis, pxp = _cached_full_pxp(n, bc_value)
    if strength == 0.0:
        H = pxp
    else:
        H = pxp + build_perturbation_full(basis, sample_disorder(n, strength, seed))
    psi0 = make_state(StateLabel(label_value), basis)
    ref = psi0.amplitudes
    fids = np.empty(len(times))
    for k, (_, amps, _) in enumerate(
        krylov_stream(H, psi0, times, krylov_dim=krylov_dim, tol=tol)
    ):
        fids[k] = abs(np.vdot(ref, amps)) ** 2
    t_star, f_star = find_revival_peak(TimeSeries(times, fids), t_exclude)
    return iw, r, t_star, f_star


def run_disorder_sweep(
    n_sites: int,
    boundary: BoundaryCondition,
    state_label: StateLabel,
    w_values,
    realizations: int,
    master_seed: int,
    times,
    t_exclude: float = DEFAULT_T_EXCLUDE,
    krylov_dim: int = DEFAULT_KRYLOV_DIM,
    tol: float = DEFAULT_KRYLOV_TOL,
    max_workers: int | None = None,
) -> DisorderSweepResult:
    """Ensemble of quenches on the full space with bare disorder fields.

    For every strength W and realization r the Hamiltonian is the kinetic
    term plus fields drawn with seed master_seed + r, the state is evolved,
    and the dominant revival peak past t_exclude is recorded. Reported are
    per-W ensemble means and standard errors of the peak magnitude. At W = 0
    every realization coincides, so that cell is computed once.
    """
    if realizations < 1:
        raise ParameterError("need at least one realization")
    w_arr = np.asarray(w_values, dtype=np.float64)
    if np.any(w_arr < 0):
        raise ParameterError("disorder strengths must be nonnegative")
    times = np.asarray(times, dtype=np.float64)
    boundary = BoundaryCondition(boundary)
    state_label = StateLabel(state_label)

    tasks = []
    for iw, w in enumerate(w_arr):
        reps = 1 if w == 0.0 else realizations
        for r in range(reps):
            tasks.append(
                (iw, r, n_sites, boundary.value, state_label.value, float(w),
                 master_seed + r, times, t_exclude, krylov_dim, tol)
            )

    peaks = np.zeros((w_arr.size, realizations))
    peak_times = np.zeros((w_arr.size, realizations))
    if max_workers == 1 or len(tasks) == 1:
        results = [_sweep_cell(t) for t in tasks]
    else:
        if max_workers is None:
            max_workers = os.cpu_count() or 1
        max_workers = min(max_workers, len(tasks))
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_sweep_cell, tasks, chunksize=1))
    for iw, r, t_star, f_star in results:
        peaks[iw, r] = f_star
        peak_times[iw, r] = t_star
    for iw, w in enumerate(w_arr):
        if w == 0.0:  # deterministic cell, replicated across the ensemble
            peaks[iw, :] = peaks[iw, 0]
            peak_times[iw, :] = peak_times[iw, 0]

    mean = peaks.mean(axis=1)
    if realizations > 1:
        stderr = peaks.std(axis=1, ddof=1) / np.sqrt(realizations)
    else:
        stderr = np.zeros(w_arr.size)
    stderr[w_arr == 0.0] = 0.0
    return DisorderSweepResult(
        w_arr, mean, stderr, peaks, peak_times, realizations, master_seed,
        n_sites, boundary, state_label, t_exclude,
    )


# -- defect studies -----------------------------------------------------------------


@dataclass(eq=False)
class FrozenRegionReduction:
    """Ring with an up-flipped defect mapped to a shorter open chain.

    Three consecutive excitations pin themselves and their two ground
    neighbours, so five contiguous sites never move; the remaining sites form
    an open chain whose ends sit next to pinned ground sites.
    """

    n_sites: int
    defect_site: int
    frozen_sites: tuple[int, ...]
    reduced_n: int
    site_map: dict[int, int]  # original dynamic site -> reduced site, 1-based
    reduced_state_bits: int


def reduce_frozen_chain(n_sites: int, defect_site: int | None = None) -> FrozenRegionReduction:
    """Map the up-flipped defect problem on an N-site ring to an (N-5)-site
    open chain in the constrained sector.

    The frozen block is {defect-2, ..., defect+2} on the ring; reduced site 1
    is the first site past the block, following ring order. The reduced
    initial state is the restriction of the defect state to the dynamic
    sites, which is just the period-2 pattern there.
    """
    if n_sites % 2 or n_sites < 8:
        raise ParameterError("the reduction needs an even ring of at least 8 sites")
    if defect_site is None:
        defect_site = default_defect_site(n_sites, StateLabel.Z2_DEFECT_UP)
    if defect_site % 2:
        raise ParameterError(
            f"defect_site must be a ground (even) site of the period-2 "
            f"pattern, got {defect_site}"
        )
    if not 1 <= defect_site <= n_sites:
        raise ParameterError(f"defect_site {defect_site} outside the ring")
    frozen = tuple(
        ((defect_site - 1 + d) % n_sites) + 1 for d in range(-2, 3)
    )
    reduced_n = n_sites - 5
    site_map: dict[int, int] = {}
    bits = 0
    for j in range(1, reduced_n + 1):
        orig = ((defect_site - 1 + 2 + j) % n_sites) + 1
        site_map[orig] = j
        if orig % 2 == 1:  # excited in the period-2 pattern
            bits |= 1 << (j - 1)
    return FrozenRegionReduction(
        n_sites, defect_site, frozen, reduced_n, site_map, bits
    )


@dataclass(eq=False)
class DefectStudyResult:
    """Quench traces and overlap spectra for the defect configurations."""

    n_sites: int
    times: np.ndarray
    fidelity: dict[str, TimeSeries]
    correlation: dict[str, TimeSeries]
    overlaps: dict[str, OverlapSpectrum] | None
    reduction: FrozenRegionReduction
    defect_up_site: int
    defect_down_site: int


def run_defect_study(
    n_sites: int,
    boundary: BoundaryCondition,
    times,
    defect_up_site: int | None = None,
    defect_down_site: int | None = None,
    dense_ceiling: int = DENSE_CEILING,
    krylov_dim: int = DEFAULT_KRYLOV_DIM,
    tol: float = 1e-11,
) -> DefectStudyResult:
    """Compare the intact period-2 state with its two single-flip defects.

    Produces fidelity and correlation traces for the intact state and the
    down-flip (constrained sector), the up-flip (full space), the fidelity of
    the reduced open chain from `reduce_frozen_chain`, and, when the
    constrained sector fits under `dense_ceiling`, the overlap spectra of the
    intact and down-flipped states against the constrained eigenbasis.
    """
    boundary = BoundaryCondition(boundary)
    if boundary is not BoundaryCondition.PBC:
        raise ParameterError("the defect study is defined on a ring")
    if n_sites % 2:
        raise ParameterError("the period-2 pattern needs an even ring")
    times = np.asarray(times, dtype=np.float64)
    if defect_up_site is None:
        defect_up_site = default_defect_site(n_sites, StateLabel.Z2_DEFECT_UP)
    if defect_down_site is None:
        defect_down_site = default_defect_site(n_sites, StateLabel.Z2_DEFECT_DOWN)

    fidelity: dict[str, TimeSeries] = {}
    correlation: dict[str, TimeSeries] = {}

    cons = enumerate_basis(n_sites, boundary, Sector.CONSTRAINED)
    h_cons = build_pxp(cons)
    eig = diagonalize(h_cons, ceiling=dense_ceiling) if cons.size <= dense_ceiling else None
    overlaps = None
    for key, label, site in (
        ("z2", StateLabel.Z2, None),
        ("z2_defect_down", StateLabel.Z2_DEFECT_DOWN, defect_down_site),
    ):
        psi0 = make_state(label, cons, defect_site=site)
        stream = _evolution_stream(h_cons, psi0, times, krylov_dim, tol, eig=eig)
        qs = _collect_series(stream, psi0)
        fidelity[key] = qs[0]
        correlation[key] = qs[1]
    if eig is not None:
        overlaps = {
            "z2": overlap_spectrum(eig, make_state(StateLabel.Z2, cons)),
            "z2_defect_down": overlap_spectrum(
                eig, make_state(StateLabel.Z2_DEFECT_DOWN, cons, defect_site=defect_down_site)
            ),
        }

    full = enumerate_basis(n_sites, boundary, Sector.FULL)
    h_full = build_pxp(full)
    psi_up = make_state(StateLabel.Z2_DEFECT_UP, full, defect_site=defect_up_site)
    stream = _evolution_stream(h_full, psi_up, times, krylov_dim, tol)
    qs = _collect_series(stream, psi_up)
    fidelity["z2_defect_up"] = qs[0]
    correlation["z2_defect_up"] = qs[1]

    reduction = reduce_frozen_chain(n_sites, defect_up_site)
    red_basis = enumerate_basis(
        reduction.reduced_n, BoundaryCondition.OBC, Sector.CONSTRAINED
    )
    h_red = build_pxp(red_basis)
    psi_red = basis_state(red_basis, reduction.reduced_state_bits)
    stream = _evolution_stream(h_red, psi_red, times, krylov_dim, tol)
    qs = _collect_series(stream, psi_red)
    fidelity["z2_defect_up_reduced"] = qs[0]

    return DefectStudyResult(
        n_sites, times, fidelity, correlation, overlaps, reduction,
        defect_up_site, defect_down_site,
    )


def _collect_series(stream, psi0: StateVector) -> tuple[TimeSeries, TimeSeries]:
    weights = bond_zz_values(psi0.basis)
    ref = psi0.amplitudes
    ts, fids, corrs = [], [], []
    for t, amps, _ in stream:
        ts.append(t)
        fids.append(abs(np.vdot(ref, amps)) ** 2)
        corrs.append(np.dot(np.abs(amps) ** 2, weights))
    ts = np.asarray(ts)
    return (
        TimeSeries(ts, np.asarray(fids), "fidelity"),
        TimeSeries(ts, np.asarray(corrs), "zz"),
    )
