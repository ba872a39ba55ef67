"""Generalized PageRank graph networks with analytic backprop and diagnostics.

The package implements a propagation model that mixes K+1 powers of the
symmetric normalized adjacency with learnable weights on top of a small MLP,
plus the surrounding toolkit: a contextual SBM generator, polynomial filter
analysis, over-smoothing diagnostics, a training harness, and a CLI.
"""

from .graphs import (
    LabelVector,
    SparseGraph,
    add_self_loops_and_normalize,
    augmented_degrees,
    build_graph,
    homophily_index,
    is_connected,
    to_dense,
)
from .linalg import (
    EigenDecomposition,
    add,
    matmul,
    row_softmax,
    scale,
    spmm,
    symmetric_eigen,
    transpose,
)
from .csbm import (
    CsbmSample,
    CsbmSpec,
    PhiSpec,
    generate,
    generate_phi,
    phi_to_lambda_mu,
)
from .model import (
    ForwardCache,
    GprModel,
    cross_entropy,
    delta_weights,
    forward,
    init_model,
    loss_and_backward,
    nppr_weights,
    parse_gamma_scheme,
    ppr_weights,
    random_weights,
)
from .optim import AdamState, EarlyStop, adam_step, should_stop
from .spectral import (
    HIGH_PASS,
    LOW_PASS,
    MIXED,
    FilterClassification,
    FilterResponse,
    classify_filter,
    filter_response,
    ppr_limit_matrix,
)
from .oversmooth import (
    GradientSignReport,
    OversmoothReport,
    StationaryProfile,
    detect_oversmoothing,
    gradient_sign_check,
    sharpened_argmax,
    stationary_profile,
)
from .harness import (
    ExperimentResult,
    RunResult,
    Split,
    TrainConfig,
    evaluate,
    make_model,
    make_split,
    run_experiment,
    run_phi_sweep,
    train_model,
    write_aggregates_csv,
    write_gamma_trajectory_csv,
    write_results_csv,
)
from .dataio import (
    load_bundle,
    load_checkpoint,
    save_bundle,
    save_checkpoint,
    save_sample,
)

__version__ = "0.1.0"

__all__ = [
    "LabelVector",
    "SparseGraph",
    "add_self_loops_and_normalize",
    "augmented_degrees",
    "build_graph",
    "homophily_index",
    "is_connected",
    "to_dense",
    "EigenDecomposition",
    "add",
    "matmul",
    "row_softmax",
    "scale",
    "spmm",
    "symmetric_eigen",
    "transpose",
    "CsbmSample",
    "CsbmSpec",
    "PhiSpec",
    "generate",
    "generate_phi",
    "phi_to_lambda_mu",
    "ForwardCache",
    "GprModel",
    "cross_entropy",
    "delta_weights",
    "forward",
    "init_model",
    "loss_and_backward",
    "nppr_weights",
    "parse_gamma_scheme",
    "ppr_weights",
    "random_weights",
    "AdamState",
    "EarlyStop",
    "adam_step",
    "should_stop",
    "HIGH_PASS",
    "LOW_PASS",
    "MIXED",
    "FilterClassification",
    "FilterResponse",
    "classify_filter",
    "filter_response",
    "ppr_limit_matrix",
    "GradientSignReport",
    "OversmoothReport",
    "StationaryProfile",
    "detect_oversmoothing",
    "gradient_sign_check",
    "sharpened_argmax",
    "stationary_profile",
    "ExperimentResult",
    "RunResult",
    "Split",
    "TrainConfig",
    "evaluate",
    "make_model",
    "make_split",
    "run_experiment",
    "run_phi_sweep",
    "train_model",
    "write_aggregates_csv",
    "write_gamma_trajectory_csv",
    "write_results_csv",
    "load_bundle",
    "load_checkpoint",
    "save_bundle",
    "save_checkpoint",
    "save_sample",
]
