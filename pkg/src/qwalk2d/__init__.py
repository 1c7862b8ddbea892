"""Continuous-time quantum walks on 2D photonic waveguide lattices."""

__version__ = "0.1.0"

from .classical import (  # noqa: E402
    RateMatrix,
    build_rate_matrix,
    classical_trace,
    evolve_classical,
    gaussian_reference,
)
from .evolution import (  # noqa: E402
    EigendecompositionError,
    EvolutionError,
    EvolutionTrace,
    KrylovConvergenceError,
    ProbabilityGrid,
    evolve_krylov,
    evolve_spectral,
    evolve_trace,
    initial_state,
    probabilities,
)
from .hamiltonian import Hamiltonian, build_hamiltonian, hermiticity_check  # noqa: E402
from .lattice import (  # noqa: E402
    CouplingModel,
    Lattice,
    LatticeSpec,
    build_lattice,
    coupling_coefficient,
    neighbor_pairs,
)
from .observables import (  # noqa: E402
    ObservableSeries,
    PolyaEstimate,
    decay_exponent,
    loglog_slope,
    polya_number,
    projections,
    return_probability,
    boundary_free_limit,
    polya_series,
    similarity,
    variance,
    variance_series,
)
