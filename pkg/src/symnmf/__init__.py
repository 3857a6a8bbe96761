"""Symmetric nonnegative matrix factorization toolkit.

Factorizes a symmetric nonnegative matrix X as U U^T with U >= 0, three
ways: a classical penalized alternating scheme, projected gradient descent,
and a trainable unrolled network whose blocks replay the scheme's updates
with learnable weights. Ships the stability theory (penalty-weight bounds,
proximality certification) as executable checks, plus similarity-graph
construction and clustering metrics.

Hot numerical kernels run on a compiled extension when available and fall
back to a pure-Python implementation with identical arithmetic; see
symnmf.backend.
"""

from .backend import ACTIVE as backend_name
from .backend import HAVE_COMPILED as have_compiled_backend
from .classical import (
    ClassicalConfig,
    SolverTrace,
    TraceRecord,
    random_factor,
    run_classical,
    run_pgd,
    scheme_half_step,
    scheme_step,
)
from .errors import (
    CheckpointError,
    CheckpointShapeError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    CholeskyError,
    ConvergenceError,
    DivergenceError,
    InputError,
    MatrixFormatError,
    NumericalError,
    ShapeError,
)
from .graph import PlantedInstance, SimilarityConfig, build_similarity, synth_planted
from .linalg import DenseMatrix, fro_norm, spectral_norm
from .matio import load_matrix, save_matrix
from .metrics import (
    ClusteringResult,
    accuracy,
    assign_labels,
    nmi,
    purity,
    relative_error,
    sparse_factor,
)
from .net import (
    AdamState,
    BlockCache,
    NetGrads,
    NetParams,
    TrainConfig,
    adam_step,
    block_backward,
    block_forward,
    init_params,
    load_checkpoint,
    loss,
    net_backward,
    net_forward,
    project_lambda,
    save_checkpoint,
    train,
)
from .theory import (
    BoundInputs,
    PerturbationReport,
    ProximalityReport,
    check_inverse_perturbation,
    combined_lambda_bound,
    inversion_condition_number,
    proximality_constant,
    proximality_lambda_bound,
    sufficiency_lambda_bound,
    verify_proximality,
)

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "have_compiled_backend",
    "ClassicalConfig",
    "SolverTrace",
    "TraceRecord",
    "random_factor",
    "run_classical",
    "run_pgd",
    "scheme_half_step",
    "scheme_step",
    "CheckpointError",
    "CheckpointShapeError",
    "CheckpointTruncatedError",
    "CheckpointVersionError",
    "CholeskyError",
    "ConvergenceError",
    "DivergenceError",
    "InputError",
    "MatrixFormatError",
    "NumericalError",
    "ShapeError",
    "PlantedInstance",
    "SimilarityConfig",
    "build_similarity",
    "synth_planted",
    "DenseMatrix",
    "fro_norm",
    "spectral_norm",
    "load_matrix",
    "save_matrix",
    "ClusteringResult",
    "accuracy",
    "assign_labels",
    "nmi",
    "purity",
    "relative_error",
    "sparse_factor",
    "AdamState",
    "BlockCache",
    "NetGrads",
    "NetParams",
    "TrainConfig",
    "adam_step",
    "block_backward",
    "block_forward",
    "init_params",
    "load_checkpoint",
    "loss",
    "net_backward",
    "net_forward",
    "project_lambda",
    "save_checkpoint",
    "train",
    "BoundInputs",
    "PerturbationReport",
    "ProximalityReport",
    "check_inverse_perturbation",
    "combined_lambda_bound",
    "inversion_condition_number",
    "proximality_constant",
    "proximality_lambda_bound",
    "sufficiency_lambda_bound",
    "verify_proximality",
    "__version__",
]
