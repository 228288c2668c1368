"""Complex probability measures for pre- and post-selected quantum states."""

from .decompose import (
    COEFFICIENT_READING,
    DecompositionPlan,
    ProcessMixture,
    ProcessTerm,
    decompose_processes,
    default_plan,
    mixture_expectation,
    reconstruct,
    spin1_example,
    svd_decompose,
)
from .ensemble import MonteCarloEstimate, convergence_study, loglog_slope, sample_ensemble
from .errors import *  # noqa: F401,F403
from .linalg import (
    SpectralDecomposition,
    StateVector,
    normalize,
    orthogonal_complement_basis,
    projector_from_state,
    spectral_decomposition,
)
from .measure import (
    DoubleState,
    MeasureReport,
    affine_combine,
    born_measure,
    build_double_state,
    complex_measure,
    contextual_average,
    expectation_single,
    is_pure_process,
    lambda_expectation,
    verify_consistency,
    weak_value,
)
from .process import ProcessWindow, dual_process, evolve_double_state, verify_dual_equivalence

__version__ = "0.1.0"
