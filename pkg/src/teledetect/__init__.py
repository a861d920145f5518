"""Detection of ideal and useful quantum teleportation resources."""

from .errors import ContractError, StateParseError, StateValidationError, UsageError
from .fef import (
    FefConfig,
    FefResult,
    TeleportationVerdict,
    fef_optimize,
    fef_pure,
    fidelity_from_fef,
    fully_entangled_fraction,
    is_useful,
)
from .gamma import (
    GammaOperator,
    GammaSearchResult,
    SearchConfig,
    build_gamma_product,
    build_gamma_sum,
    detect_ideal_resource,
    gamma_expectation,
    maximize_gamma,
    separability_test,
)
from .linalg import (
    DensityMatrix,
    PureState,
    SubsystemLayout,
    bell_tensor,
    max_entangled,
    werner,
)
from .pauli import ComplementaryTriple, EulerAngles, su2_from_euler, triple_from_frame, triple_from_su2
from .verdict import Verdict
from .witness import (
    OptimalityCertificate,
    Witness,
    check_optimality,
    detect_useful_via_witness,
    evaluate,
    optimality_vectors,
    witness_from_pure,
    witness_identity,
    witness_rotated,
)

__version__ = "0.1.0"
