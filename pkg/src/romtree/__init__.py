"""Regression trees on the Grassmann manifold for predicting POD bases."""

from .errors import (
    ArchiveIOError,
    DimensionMismatch,
    LogMapUndefined,
    NonFiniteValue,
    RankError,
    RomTreeError,
    SvdConvergenceError,
    UndefinedCorrelation,
    ValidationError,
)
from .grassmann import (
    Stability,
    TangentVector,
    TangentInterpolator,
    exp_map,
    interpolate_basis,
    log_map,
    principal_angles,
    riemannian_distance,
    stability_check,
)
from .pod import PodBasis, ThinSvd, pod_basis, randomized_svd, reconstruction_error, thin_svd
from .snapshots import (
    SnapshotEntry,
    SnapshotSet,
    load_archive,
    read_matrix,
    save_archive,
    split_train_test,
    write_matrix,
)
from .tree import GrassmannTree, Leaf, Split, SplitCandidate, TreeConfig, best_split, fit, leaf_basis, predict

__version__ = "0.1.0"
