__version__ = "0.1.0"

from .alignment import (
    AlignmentResult,
    EditPathResult,
    SolverConfig,
    alignment_ties,
    cosine,
    distance,
    distance_matrix,
    ged,
    heuristic_align,
    kernel,
)
from .enums import Distortion, ExperimentKind, LossKind, SolverMode, Verdict
from .exceptions import (
    ConfigurationError,
    EmptySampleError,
    GraphConstructionError,
    InconsistentSolverError,
    InvalidLabelError,
    IterationError,
    OrbilearnError,
    ShapeMismatchError,
    SolverCapExceededError,
)
from .gendiff import (
    LOSSES,
    KernelScoreMap,
    LossPoint,
    OrbifoldMap,
    Subgradient,
    finite_diff_check,
    subgrad_adaline,
    subgrad_dist,
    subgrad_kernel,
    subgrad_mse_map,
    subgrad_quantize,
    subgrad_sq_half_dist,
)
from .graph import (
    AttributedGraph,
    GraphDataset,
    Permutation,
    apply_permutation,
    frobenius_inner,
    from_edge_list,
    from_networkx,
    length,
    pad_to_order,
    to_networkx,
)
from .learners import (
    AdalineModel,
    Codebook,
    adaline_predict,
    adaline_train,
    assign,
    batch_kcentroids,
    batch_kmedoids,
    check_labels,
    distortion_summary,
    estimate_mean,
    estimate_median,
    purity,
    quantize,
    set_median,
)
from .sgg import (
    ProjectionBall,
    SggConfig,
    SggTrace,
    StepSchedule,
    estimate_risk,
    project_ball,
    run_sgg,
    stationarity_diagnostic,
)

__all__ = [
    "__version__",
    "AttributedGraph",
    "GraphDataset",
    "Permutation",
    "apply_permutation",
    "frobenius_inner",
    "from_edge_list",
    "from_networkx",
    "length",
    "pad_to_order",
    "to_networkx",
    "AlignmentResult",
    "EditPathResult",
    "SolverConfig",
    "SolverMode",
    "alignment_ties",
    "cosine",
    "distance",
    "distance_matrix",
    "ged",
    "heuristic_align",
    "kernel",
    "LOSSES",
    "LossKind",
    "LossPoint",
    "KernelScoreMap",
    "OrbifoldMap",
    "Subgradient",
    "Verdict",
    "finite_diff_check",
    "subgrad_adaline",
    "subgrad_dist",
    "subgrad_kernel",
    "subgrad_mse_map",
    "subgrad_quantize",
    "subgrad_sq_half_dist",
    "ProjectionBall",
    "SggConfig",
    "SggTrace",
    "StepSchedule",
    "estimate_risk",
    "project_ball",
    "run_sgg",
    "stationarity_diagnostic",
    "AdalineModel",
    "Codebook",
    "Distortion",
    "adaline_predict",
    "adaline_train",
    "assign",
    "batch_kcentroids",
    "batch_kmedoids",
    "check_labels",
    "distortion_summary",
    "estimate_mean",
    "estimate_median",
    "purity",
    "quantize",
    "set_median",
    "ExperimentKind",
    "OrbilearnError",
    "GraphConstructionError",
    "ShapeMismatchError",
    "SolverCapExceededError",
    "InconsistentSolverError",
    "EmptySampleError",
    "InvalidLabelError",
    "ConfigurationError",
    "IterationError",
]
