"""latentsim: object similarity over latent feature maps.

Ingest per-object feature-map bundles from a segmentation network, build
an activation-magnitude matrix, prune features by their first
singular-vector loading, and rank objects with fuzzy membership grades
under uniform, cluster-difference, or loading-based feature weights.  A
small pure-numpy training demo shows channel-level sparsification with a
gated penalty.
"""

from .engine import (
    QueryRequest,
    extract,
    ingest,
    magnitude_report_data,
    prepared_view,
    prune,
    recompute_weights,
    run_query,
    session_status,
)
from .errors import EngineError
from .extraction import (
    LayerDescriptor,
    SegmentRegion,
    backproject_region,
    build_activation_matrix,
    extract_object_vector,
    region_from_mask,
)
from .fuzzy import MembershipSpec, fuzzify, gaussian_grade, trapezoidal_grade
from .linalg import normalize_columns, svd_decompose
from .pruning import PrunedMatrix, prune_to_variance, rank_features
from .similarity import (
    ClusterSet,
    WeightVector,
    rank_objects,
    similarity_score,
    uniform_weights,
    weights_from_clusters,
    weights_from_svd,
)
from .store import (
    FeatureBundle,
    Session,
    apply_cluster_op,
    load_bundle,
    load_session,
    save_bundle,
    save_session,
)
from .synth import generate_bundle, planted_cluster

__version__ = "0.1.0"

__all__ = [
    "EngineError",
    "LayerDescriptor",
    "SegmentRegion",
    "region_from_mask",
    "backproject_region",
    "extract_object_vector",
    "build_activation_matrix",
    "svd_decompose",
    "normalize_columns",
    "PrunedMatrix",
    "rank_features",
    "prune_to_variance",
    "MembershipSpec",
    "gaussian_grade",
    "trapezoidal_grade",
    "fuzzify",
    "WeightVector",
    "ClusterSet",
    "similarity_score",
    "rank_objects",
    "uniform_weights",
    "weights_from_clusters",
    "weights_from_svd",
    "FeatureBundle",
    "Session",
    "load_bundle",
    "save_bundle",
    "load_session",
    "save_session",
    "apply_cluster_op",
    "QueryRequest",
    "ingest",
    "extract",
    "prune",
    "prepared_view",
    "run_query",
    "recompute_weights",
    "magnitude_report_data",
    "session_status",
    "generate_bundle",
    "planted_cluster",
    "__version__",
]
