"""Memory-bounded streaming PCA for federated edge clients.

Clients track a rank-r principal subspace over column streams in O(d(r+b))
memory, optionally releasing only noise-masked covariance slabs for
differential privacy, and a fan-out tree merges client summaries into one
global estimate.
"""

__version__ = "0.1.0"

from .datasets import (
    DataError,
    StreamPartition,
    SynthSpec,
    load_csv,
    normalize_unit_ball,
    partition_columns,
    save_matrix_csv,
    synth,
    synth_gaussian_cov,
)
from .edge import EdgeClient, EnergyBounds, adjust_rank, energy_ratio, ssvd
from .federation import (
    FederationConfig,
    FederationTree,
    GlobalEstimate,
    aggregate_once,
    build_tree,
    depth_error_probe,
    run_federation,
)
from .linalg import (
    SubspaceEstimate,
    SvdFactors,
    basic_merge,
    economy_qr,
    faster_merge,
    merge,
    singular_values,
    subspace_of,
    truncated_svd,
)
from .metrics import (
    MetricLog,
    MetricRow,
    procrustes_align_error,
    projection_error,
    qa_overlap,
    residual_rho,
    subspace_distance,
)
from .privacy import (
    CalibrationError,
    DpConfig,
    MaskedCovBlock,
    NoiseScale,
    PrivacyInfeasibleError,
    derive_rng,
    gaussian_mask,
    masked_cov_blocks,
    min_batch_size,
    omega_streaming,
    omega_symmetric_sulq,
)

__all__ = [
    "__version__",
    "CalibrationError",
    "DataError",
    "DpConfig",
    "EdgeClient",
    "EnergyBounds",
    "FederationConfig",
    "FederationTree",
    "GlobalEstimate",
    "MaskedCovBlock",
    "MetricLog",
    "MetricRow",
    "NoiseScale",
    "PrivacyInfeasibleError",
    "StreamPartition",
    "SubspaceEstimate",
    "SvdFactors",
    "SynthSpec",
    "adjust_rank",
    "aggregate_once",
    "basic_merge",
    "build_tree",
    "depth_error_probe",
    "derive_rng",
    "economy_qr",
    "energy_ratio",
    "faster_merge",
    "gaussian_mask",
    "load_csv",
    "masked_cov_blocks",
    "merge",
    "min_batch_size",
    "normalize_unit_ball",
    "omega_streaming",
    "omega_symmetric_sulq",
    "partition_columns",
    "procrustes_align_error",
    "projection_error",
    "qa_overlap",
    "residual_rho",
    "run_federation",
    "save_matrix_csv",
    "singular_values",
    "ssvd",
    "subspace_distance",
    "subspace_of",
    "synth",
    "synth_gaussian_cov",
    "truncated_svd",
]
