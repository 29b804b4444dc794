"""scarlab: exact quantum dynamics of the blockade-constrained spin chain.

Library layers, bottom up: `basis` (configurations, sectors, named states),
`operators` (sparse Hamiltonians and disorder), `dynamics` (Lanczos and dense
propagation), `observables`, `spectral` (exact diagonalization, entropy
scans), `experiments` (sweep and defect protocols), `io`/`plots`/`cli`
(persistence, figures, command line).
"""

__version__ = "0.1.0"

from .basis import (
    BasisMap,
    BoundaryCondition,
    Sector,
    StateLabel,
    StateVector,
    basis_state,
    enumerate_basis,
    make_state,
)
from .dynamics import (
    Trajectory,
    evolve_dense,
    evolve_krylov,
    krylov_stream,
    time_grid,
)
from .errors import ScarlabError
from .experiments import (
    DisorderSweepResult,
    GaussianFit,
    find_revival_peak,
    fit_gaussian_decay,
    quench_series,
    reduce_frozen_chain,
    run_defect_study,
    run_disorder_sweep,
)
from .observables import (
    OverlapSpectrum,
    TimeSeries,
    avg_zz_correlation,
    entanglement_entropy,
    fidelity,
    fidelity_series,
    overlap_spectrum,
    participation_ratio,
    zz_correlation_series,
)
from .operators import (
    DisorderRealization,
    OperatorMatrix,
    build_hamiltonian,
    build_perturbation_full,
    build_perturbation_projected,
    build_pxp,
    sample_disorder,
)
from .spectral import EigenDecomposition, EntropyScatter, diagonalize, entropy_scan

__all__ = [
    "__version__",
    "BasisMap",
    "BoundaryCondition",
    "Sector",
    "StateLabel",
    "StateVector",
    "basis_state",
    "enumerate_basis",
    "make_state",
    "Trajectory",
    "evolve_dense",
    "evolve_krylov",
    "krylov_stream",
    "time_grid",
    "ScarlabError",
    "DisorderSweepResult",
    "GaussianFit",
    "find_revival_peak",
    "fit_gaussian_decay",
    "quench_series",
    "reduce_frozen_chain",
    "run_defect_study",
    "run_disorder_sweep",
    "OverlapSpectrum",
    "TimeSeries",
    "avg_zz_correlation",
    "entanglement_entropy",
    "fidelity",
    "fidelity_series",
    "overlap_spectrum",
    "participation_ratio",
    "zz_correlation_series",
    "DisorderRealization",
    "OperatorMatrix",
    "build_hamiltonian",
    "build_perturbation_full",
    "build_perturbation_projected",
    "build_pxp",
    "sample_disorder",
    "EigenDecomposition",
    "EntropyScatter",
    "diagonalize",
    "entropy_scan",
]
