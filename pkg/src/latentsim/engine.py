"""Pipeline orchestration over a session: ingest a bundle, extract the
activation matrix, prune features, resolve weights, and answer queries.

The CLI and the HTTP service both drive this module, so their outputs
agree by construction.  Queries never mutate the session; weight
recomputation and cluster edits are the only writers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateWeightsError
from .extraction import build_activation_matrix, feature_layout
from .fuzzy import MembershipSpec, canonical_kind
from .linalg import ColumnStats, normalize_columns, svd_decompose
from .pruning import PrunedMatrix, prune_by_scores
from .similarity import (
    CLUSTER_DIFF,
    ClusterSet,
    MagnitudeChangeReport,
    RankedResult,
    WeightVector,
    explicit_weights,
    magnitude_change_report,
    rank_objects,
    uniform_weights,
    weights_from_clusters,
    weights_from_loadings,
)
from .store import FeatureBundle, Session, load_bundle, replace_weights

WEIGHT_MODES = ("uniform", "cluster_diff", "svd", "explicit")
_MODE_ALIASES = {"cluster": "cluster_diff", "cluster-diff": "cluster_diff"}


def canonical_weight_mode(mode: str) -> str:
    m = _MODE_ALIASES.get(mode, mode)
    if m not in WEIGHT_MODES:
        raise ConfigError(
            f"unknown weight mode {mode!r}; expected one of {WEIGHT_MODES}"
        )
    return m


@dataclass(frozen=True, eq=False)
class PreparedView:
    """Normalized pruned matrix plus per-feature bookkeeping.

    ``columns`` holds the original feature ids of the view's columns;
    ``layers`` and ``groups`` run parallel to them.
    """

    matrix_normed: np.ndarray
    stats: ColumnStats
    columns: np.ndarray
    layers: list[str]
    groups: list[str]


@dataclass(frozen=True)
class QueryRequest:
    """One similarity query as issued by the CLI or the service."""

    kind: str
    tau: float
    object_ids: tuple[str, ...]
    weight_mode: str = "uniform"
    explicit: tuple[float, ...] | None = None
    top_k: int | None = None
    group: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        object.__setattr__(self, "weight_mode", canonical_weight_mode(self.weight_mode))
        object.__setattr__(self, "object_ids", tuple(self.object_ids))
        if self.top_k is not None and self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k}")
        if self.weight_mode == "explicit" and self.explicit is None:
            raise ConfigError("explicit weight mode requires a weight vector")


@dataclass(frozen=True, eq=False)
class QueryOutcome:
    """Ranked ids with the weighting actually used."""

    ranked: list[tuple[str, float]]
    result: RankedResult
    weights: WeightVector
    stale: bool
    warning: str | None = None


def ingest(bundle_path) -> Session:
    """Validate a bundle and start a fresh session around it."""
    bundle = load_bundle(bundle_path)
    layout = feature_layout(list(bundle.layers))
    groups = {lay.layer_id: lay.group for lay in bundle.layers}
    return Session(
        bundle_path=str(bundle_path),
        object_ids=tuple(bundle.object_ids),
        feature_layers=tuple(layer_id for layer_id, _ in layout),
        feature_channels=tuple(ch for _, ch in layout),
        feature_groups=tuple(groups[layer_id] for layer_id, _ in layout),
    )


def extract(
    session: Session,
    mode: str = "masked",
    box_mean: bool = False,
    bundle: FeatureBundle | None = None,
) -> Session:
    """Build the activation matrix and its decomposition summary.

    Invalidates any previous pruning and weights.
    """
    if bundle is None:
        if not session.bundle_path:
            raise ConfigError("session has no bundle; run ingest first")
        bundle = load_bundle(session.bundle_path)
    matrix = build_activation_matrix(bundle, mode=mode, box_mean=box_mean)
    svd = svd_decompose(matrix)
    session.mode = mode
    session.box_mean = box_mean
    session.matrix = matrix
    session.sigma = svd.sigma
    session.vt_first = svd.vt[0].copy()
    session.retained = None
    session.variance_target = None
    session.variance_retained = None
    session.weights = None
    session.weight_provenance = None
    session.weight_revision = session.cluster_revision
    return session


def prune(session: Session, target: float) -> PrunedMatrix:
    """Prune the session matrix to the variance target; resets weights."""
    if session.matrix is None or session.vt_first is None:
        raise ConfigError("session has no activation matrix; run extract first")
    pruned = prune_by_scores(session.matrix, np.abs(session.vt_first), target)
    session.retained = pruned.retained
    session.variance_target = float(target)
    session.variance_retained = float(pruned.variance_retained)
    session.weights = None
    session.weight_provenance = None
    session.weight_revision = session.cluster_revision
    return pruned


def prepared_view(session: Session, group: str | None = None) -> PreparedView:
    """Normalized pruned matrix restricted to an optional layer group."""
    if session.matrix is None:
        raise ConfigError("session has no activation matrix; run extract first")
    if session.retained is None:
        raise ConfigError("session has no retained features; run prune first")
    columns = np.asarray(session.retained, dtype=int)
    layers = [session.feature_layers[j] for j in columns]
    groups = [session.feature_groups[j] for j in columns]
    if group is not None:
        known = sorted(set(session.feature_groups))
        if group not in known:
            raise ConfigError(f"unknown layer group {group!r}; known groups: {known}")
        mask = [g == group for g in groups]
        if not any(mask):
            raise ConfigError(f"no retained features in layer group {group!r}")
        columns = columns[np.asarray(mask)]
        layers = [l for l, m in zip(layers, mask) if m]
        groups = [g for g, m in zip(groups, mask) if m]
    normed, stats = normalize_columns(session.matrix[:, columns])
    return PreparedView(
        matrix_normed=normed,
        stats=stats,
        columns=columns,
        layers=layers,
        groups=groups,
    )


def _cluster_set(session: Session) -> ClusterSet:
    return ClusterSet(clusters=session.cluster_rows())


def _column_positions(session: Session, columns: np.ndarray) -> np.ndarray:
    """Positions of ``columns`` within the session's retained list."""
    retained = np.asarray(session.retained, dtype=int)
    lookup = {int(j): pos for pos, j in enumerate(retained)}
    return np.array([lookup[int(j)] for j in columns], dtype=int)


def resolve_weights(
    session: Session, request: QueryRequest, view: PreparedView
) -> tuple[WeightVector, bool, str | None]:
    """Weight vector for a query: (weights, stale flag, warning).

    The installed session vector is reused when its provenance matches the
    requested mode; otherwise weights are computed on the fly without
    touching the session.  A degenerate cluster-difference computation
    falls back to uniform with a warning.
    """
    n = view.columns.size
    mode = request.weight_mode
    if mode == "uniform":
        return uniform_weights(n), False, None
    if mode == "explicit":
        return explicit_weights(request.explicit), False, None

    def restrict(full: WeightVector) -> WeightVector:
        positions = _column_positions(session, view.columns)
        values = full.values[positions]
        total = float(values.sum())
        if total <= 0:
            raise DegenerateWeightsError(
                "selected layer group carries zero weight"
            )
        return WeightVector(values / total, full.provenance)

    if mode == "svd":
        full = weights_from_loadings(session.vt_first, session.retained)
        return restrict(full), False, None

    # cluster_diff
    if session.weights is not None and session.weight_provenance == CLUSTER_DIFF:
        full = WeightVector(np.asarray(session.weights, dtype=np.float64), CLUSTER_DIFF)
        return restrict(full), session.weights_stale, None
    base = prepared_view(session)
    try:
        full = weights_from_clusters(_cluster_set(session), base.matrix_normed)
    except DegenerateWeightsError:
        return (
            uniform_weights(n),
            False,
            "cluster means are identical; fell back to uniform weights",
        )
    return restrict(full), False, None


def run_query(session: Session, request: QueryRequest) -> QueryOutcome:
    """Answer one similarity query against the session snapshot."""
    view = prepared_view(session, request.group)
    rows = tuple(session.row_index(oid) for oid in request.object_ids)
    spec = MembershipSpec(kind=request.kind, tau=request.tau, query_ids=rows)
    weights, stale, warning = resolve_weights(session, request, view)
    result = rank_objects(
        view.matrix_normed, view.stats, spec, weights, top_k=request.top_k
    )
    ranked = [(session.object_ids[i], score) for i, score in result.items]
    return QueryOutcome(
        ranked=ranked, result=result, weights=weights, stale=stale, warning=warning
    )


def recompute_weights(session: Session, method: str) -> tuple[WeightVector, str | None]:
    """Recompute and install the session weight vector.

    ``cluster_diff`` uses the current clusters on the normalized pruned
    matrix; a degenerate result installs uniform weights and returns a
    warning.  ``svd`` uses absolute first-singular-vector loadings.
    """
    method = canonical_weight_mode(method)
    view = prepared_view(session)
    warning = None
    if method == "cluster_diff":
        try:
            vector = weights_from_clusters(_cluster_set(session), view.matrix_normed)
        except DegenerateWeightsError:
            vector = uniform_weights(view.columns.size)
            warning = "cluster means are identical; installed uniform weights"
    elif method == "svd":
        vector = weights_from_loadings(session.vt_first, session.retained)
    elif method == "uniform":
        vector = uniform_weights(view.columns.size)
    else:
        raise ConfigError(f"weights cannot be recomputed with mode {method!r}")
    replace_weights(session, vector.values, vector.provenance)
    return vector, warning


def magnitude_report_data(session: Session, bins: int = 10) -> MagnitudeChangeReport:
    """Cluster-driven per-feature change magnitudes over retained features."""
    view = prepared_view(session)
    return magnitude_change_report(
        _cluster_set(session),
        view.matrix_normed,
        feature_layers=view.layers,
        feature_groups=view.groups,
        bins=bins,
    )


def session_status(session: Session) -> dict:
    """Summary dict used by the status endpoint and the CLI."""
    return {
        "bundle_path": session.bundle_path,
        "mode": session.mode,
        "objects": len(session.object_ids),
        "features_total": len(session.feature_layers),
        "features_retained": int(session.retained.size)
        if session.retained is not None
        else None,
        "variance_target": session.variance_target,
        "variance_retained": session.variance_retained,
        "clusters": {name: len(members) for name, members in session.clusters.items()},
        "cluster_revision": session.cluster_revision,
        "weight_provenance": session.weight_provenance,
        "weight_revision": session.weight_revision,
        "weights_stale": session.weights_stale,
    }
