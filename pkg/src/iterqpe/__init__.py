"""Quantum phase estimation with propagators and iterative comb refinement."""

from iterqpe.model import (
    HubbardParams,
    PauliSum,
    PauliTerm,
    Propagator,
    build_hubbard,
    exact_propagator,
    pauli_sum_to_matrix,
    trotter_propagator,
)
from iterqpe.numkernel import EigenDecomposition, hermitian_eigendecompose, tensor_product, unitary_exp
from iterqpe.qpe import (
    OutcomeDistribution,
    PeakReport,
    QpeConfig,
    analytic_distribution,
    detect_peak_plateau,
    sample_distribution,
    simulate_circuit,
)
from iterqpe.refine import (
    AmbiguousOverlap,
    CombFamily,
    IterationCapExceeded,
    NoOverlap,
    PhaseInterval,
    RefinementError,
    RefinementTrace,
    comb_from_outcome,
    error_bound,
    intersect,
    optimal_alpha,
    phase_to_energy,
    run_refinement,
)

__version__ = "0.1.0"
