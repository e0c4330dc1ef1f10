"""Pulse-sequence compiler for trapped-ion registers.

Targets hardware whose native operations are collective equatorial
rotations, addressed single-qubit Z shifts, and a global Molmer-Sorensen
entangling gate.  Local products compile analytically; entangling targets
go through a layered variational search that emits hardware pulses.
"""

from .gateset import (
    ADDRESSED_Z,
    COLLECTIVE,
    MS_GATE,
    Pulse,
    PulseSequence,
    addressed_z_matrix,
    collective_rotation_matrix,
    embed_on_subset,
    load_unitary,
    ms_gate_matrix,
    normalize_phase,
    normalize_rotation_angle,
    parse_sequence_text,
    pulse_unitary,
    rotation_2x2,
    save_unitary,
    sequence_unitary,
    unitary_from_json,
    unitary_to_json,
    zrot_2x2,
)
from .ansatz import (
    LAYER_FULL,
    LAYER_Z,
    TEMPLATE_FULL,
    TEMPLATE_PAPER,
    EmittedSequence,
    LayeredAnsatz,
    MsGridEntry,
    ansatz_unitary,
    build_ansatz,
    emit_physical,
    ms_grid_report,
    pack_params,
    unpack_params,
)
from .localcomp import (
    MODE_COLLECTIVE_Z,
    MODE_EXACT,
    MODE_INDEPENDENT_Z,
    MODES,
    AxisAngle,
    LocalCompileResult,
    Residual,
    TwoEquatorialSplitError,
    axis_angle,
    commuting_z_pair,
    compile_local_exact,
    compile_local_mod_collective_z,
    compile_local_mod_independent_z,
    equatorial_conjugator,
    group_and_compile,
    measurement_basis_factors,
    su2_normalize,
    two_equatorial_split,
)
from .objective import (
    ObjectiveValue,
    TargetSpec,
    block_fidelities,
    cnot_unitary,
    fidelity,
    fredkin_unitary,
    full_fidelity,
    objective_with_gradient,
    phased_subspace_fidelity,
    subspace_fidelity,
    toffoli_measurement_spec,
    toffoli_unitary,
    union_subspace,
)
from .optimizer import (
    CompileReport,
    CompileVerificationError,
    EscalationEntry,
    NonFiniteObjective,
    SearchConfig,
    SearchResult,
    bfgs_maximize,
    compile_target,
    repeated_local_search,
)
from .sampler import (
    RandomStream,
    clifford_generators,
    default_walk_steps,
    haar_unitary,
    is_clifford,
    random_clifford,
)
from .errcomp import (
    CompensationReport,
    ErrorModel,
    UncoveredPulseError,
    apply_model,
    basis_state_fidelities,
    compensate,
    uniform_crosstalk,
)

__version__ = "0.1.0"

__all__ = [
    "ADDRESSED_Z",
    "COLLECTIVE",
    "LAYER_FULL",
    "LAYER_Z",
    "MS_GATE",
    "MODE_COLLECTIVE_Z",
    "MODE_EXACT",
    "MODE_INDEPENDENT_Z",
    "MODES",
    "TEMPLATE_FULL",
    "TEMPLATE_PAPER",
    "AxisAngle",
    "CompensationReport",
    "CompileReport",
    "CompileVerificationError",
    "EmittedSequence",
    "ErrorModel",
    "EscalationEntry",
    "LayeredAnsatz",
    "LocalCompileResult",
    "MsGridEntry",
    "NonFiniteObjective",
    "ObjectiveValue",
    "Pulse",
    "PulseSequence",
    "RandomStream",
    "Residual",
    "SearchConfig",
    "SearchResult",
    "TargetSpec",
    "TwoEquatorialSplitError",
    "UncoveredPulseError",
    "addressed_z_matrix",
    "ansatz_unitary",
    "apply_model",
    "axis_angle",
    "basis_state_fidelities",
    "bfgs_maximize",
    "block_fidelities",
    "build_ansatz",
    "clifford_generators",
    "cnot_unitary",
    "collective_rotation_matrix",
    "commuting_z_pair",
    "compensate",
    "compile_local_exact",
    "compile_local_mod_collective_z",
    "compile_local_mod_independent_z",
    "compile_target",
    "default_walk_steps",
    "embed_on_subset",
    "emit_physical",
    "equatorial_conjugator",
    "fidelity",
    "fredkin_unitary",
    "full_fidelity",
    "group_and_compile",
    "haar_unitary",
    "is_clifford",
    "load_unitary",
    "measurement_basis_factors",
    "ms_gate_matrix",
    "ms_grid_report",
    "normalize_phase",
    "normalize_rotation_angle",
    "objective_with_gradient",
    "pack_params",
    "parse_sequence_text",
    "phased_subspace_fidelity",
    "pulse_unitary",
    "random_clifford",
    "repeated_local_search",
    "rotation_2x2",
    "save_unitary",
    "sequence_unitary",
    "su2_normalize",
    "subspace_fidelity",
    "toffoli_measurement_spec",
    "toffoli_unitary",
    "two_equatorial_split",
    "union_subspace",
    "unitary_from_json",
    "unitary_to_json",
    "unpack_params",
    "uniform_crosstalk",
    "zrot_2x2",
]
