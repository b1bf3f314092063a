"""Exact, product-formula, qDRIFT and adaptive quasi-probability (qSHIFT) simulation."""

from .exact import ObservableSpec, exact_expectation, random_state
from .hamiltonian import Hamiltonian, HermitianTerm, build_tfim, sum_z, term_unitary, total_matrix
from .protocol import (
    ProtocolParams,
    QuasiDistribution,
    RoundContext,
    SolverError,
    algorithmic_error,
    assemble_round_system,
    closed_form,
    exact_ensemble_expectation,
    quasi_normalize,
    run_protocol_sample,
    solve_round,
)
from .qdrift import QdriftParams, qdrift_distribution, qdrift_ensemble_expectation, qdrift_sample
from .stats import power_law_fit
from .trotter import FormulaSpec, formula_error, trotter_unitary

__version__ = "0.1.0"
