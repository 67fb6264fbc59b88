"""State shifts of bipartite systems induced by local cyclic operations.

A cyclic operation is a unitary acting on one subsystem that commutes
with that subsystem's reduced density matrix: it leaves both marginals
untouched, yet can move the joint state.  This package computes the
induced shift, maximizes it over all cyclic operations, uses the
maximum to classify correlations, and reconstructs the shift from CHSH
measurement records alone.
"""

from .analysis import (
    SEPARABLE_BOUND,
    DetectionReport,
    detect,
    gisin_bmax,
    partial_transpose,
    ppt_test,
)
from .bloch import BipartiteState, BlochForm, bloch_vector, decompose, reconstruct, reduced_bloch
from .chsh import (
    ChshTranscript,
    MeasurementSettings,
    StageResult,
    chsh_expectation,
    chsh_from_bloch,
    correlator,
    measurement_matrix,
    pauli_conjugate,
    rotation_from_unitary,
    run_protocol,
    transported_settings,
)
from .cyclic import (
    CommutantStructure,
    CyclicUnitary,
    ShiftResult,
    apply_cyclic,
    beta_final,
    commutant_basis,
    conjugation_matrix,
    cyclic_from_matrix,
    d_max,
    make_cyclic,
    phase_cyclic,
    shift_correlation,
    shift_direct,
)
from .errors import (
    ConsistencyError,
    DimensionError,
    NormalizationError,
    NotAStateError,
    NotCyclicError,
    OperatorError,
    RecoveryError,
)
from .operators import (
    GeneratorBasis,
    commutator,
    expi_hermitian,
    gell_mann_basis,
    hermitian_eig,
    is_hermitian,
    is_unitary,
    partial_trace,
    tensor,
)
from .states import (
    Ensemble,
    bell_state,
    cc5050,
    ensemble_state,
    haar_state_vector,
    haar_unitary,
    maximally_mixed,
    random_state_at,
    resolve_builtin,
    sample_random_state,
    sample_separable,
    schmidt_state,
    separable_at,
    state_from_json,
    state_to_json,
    swap_subsystems,
    werner_state,
)

__version__ = "0.1.0"

__all__ = [
    "BipartiteState",
    "BlochForm",
    "ChshTranscript",
    "CommutantStructure",
    "ConsistencyError",
    "CyclicUnitary",
    "DetectionReport",
    "DimensionError",
    "Ensemble",
    "GeneratorBasis",
    "MeasurementSettings",
    "NormalizationError",
    "NotAStateError",
    "NotCyclicError",
    "OperatorError",
    "RecoveryError",
    "SEPARABLE_BOUND",
    "ShiftResult",
    "StageResult",
    "apply_cyclic",
    "bell_state",
    "beta_final",
    "bloch_vector",
    "cc5050",
    "chsh_expectation",
    "chsh_from_bloch",
    "commutant_basis",
    "commutator",
    "conjugation_matrix",
    "correlator",
    "cyclic_from_matrix",
    "d_max",
    "decompose",
    "detect",
    "ensemble_state",
    "expi_hermitian",
    "gell_mann_basis",
    "gisin_bmax",
    "haar_state_vector",
    "haar_unitary",
    "hermitian_eig",
    "is_hermitian",
    "is_unitary",
    "make_cyclic",
    "maximally_mixed",
    "measurement_matrix",
    "partial_trace",
    "partial_transpose",
    "pauli_conjugate",
    "phase_cyclic",
    "ppt_test",
    "random_state_at",
    "reconstruct",
    "reduced_bloch",
    "resolve_builtin",
    "rotation_from_unitary",
    "run_protocol",
    "sample_random_state",
    "sample_separable",
    "schmidt_state",
    "separable_at",
    "shift_correlation",
    "shift_direct",
    "state_from_json",
    "state_to_json",
    "swap_subsystems",
    "tensor",
    "transported_settings",
    "werner_state",
    "__version__",
]
