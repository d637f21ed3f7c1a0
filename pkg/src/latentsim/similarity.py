"""Weighted aggregation of fuzzy grades into similarity scores, feature
weights from practitioner clusters or SVD loadings, and object ranking.

The per-feature weights always sum to one, so a score is a convex
combination of grades and stays in [0, 1]; uniform weights reduce it to
the plain mean grade.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DegenerateWeightsError,
    InsufficientClustersError,
    ShapeError,
)
from .fuzzy import MembershipSpec, fuzzify
from .linalg import ColumnStats, SVDResult

UNIFORM = "uniform"
CLUSTER_DIFF = "cluster_diff"
SVD = "svd"
EXPLICIT = "explicit"
PROVENANCES = (UNIFORM, CLUSTER_DIFF, SVD, EXPLICIT)


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Non-negative per-feature weights summing to one."""

    values: np.ndarray
    provenance: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size == 0:
            raise ShapeError(f"weights must be a non-empty vector, got shape {v.shape}")
        if self.provenance not in PROVENANCES:
            raise ConfigError(f"unknown weight provenance {self.provenance!r}")
        if np.any(v < 0):
            raise ConfigError("weights must be non-negative")
        total = float(v.sum())
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"weights must sum to 1, got {total!r}")


@dataclass(frozen=True)
class ClusterSet:
    """Named, possibly overlapping groups of object row indices."""

    clusters: dict[str, tuple[int, ...]]

    def member_lists(self, min_size: int = 1) -> list[tuple[str, tuple[int, ...]]]:
        out = []
        for name, members in self.clusters.items():
            if len(members) == 0:
                raise ConfigError(f"cluster {name!r} is empty")
            if len(members) < min_size:
                raise ConfigError(
                    f"cluster {name!r} has {len(members)} members, "
                    f"minimum is {min_size}"
                )
            out.append((name, tuple(int(i) for i in members)))
        return out


@dataclass(frozen=True)
class RankedResult:
    """Objects ordered by non-increasing score; ties by ascending id."""

    items: list[tuple[int, float]]
    spec: MembershipSpec
    created: float = field(default_factory=time.time)


def uniform_weights(n: int) -> WeightVector:
    if n < 1:
        raise ShapeError(f"weight vector needs at least one feature, got n={n}")
    return WeightVector(np.full(n, 1.0 / n), UNIFORM)


def explicit_weights(values) -> WeightVector:
    return WeightVector(np.asarray(values, dtype=np.float64), EXPLICIT)


def similarity_score(grades, weights: WeightVector) -> float:
    """Convex combination of one object's grades."""
    g = np.asarray(grades, dtype=np.float64)
    if g.shape != weights.values.shape:
        raise ShapeError(
            f"pattern has {g.shape} grades but weight vector has "
            f"{weights.values.shape}"
        )
    return float(min(1.0, max(0.0, float(g @ weights.values))))


def score_all(grades_matrix, weights: WeightVector) -> np.ndarray:
    g = np.asarray(grades_matrix, dtype=np.float64)
    if g.ndim != 2 or g.shape[1] != weights.values.size:
        raise ShapeError(
            f"grade matrix {g.shape} incompatible with {weights.values.size} weights"
        )
    return np.clip(g @ weights.values, 0.0, 1.0)


def rank_objects(
    matrix_normed,
    stats: ColumnStats,
    spec: MembershipSpec,
    weights: WeightVector,
    top_k: int | None = None,
) -> RankedResult:
    """Fuzzify every object, score it, and sort by descending score.

    A Gaussian self-query grades itself 1.0 on every feature and therefore
    ranks first (ties broken by ascending object id).
    """
    if top_k is not None and top_k < 1:
        raise ConfigError(f"top_k must be >= 1, got {top_k}")
    grades = fuzzify(matrix_normed, stats, spec)
    scores = score_all(grades, weights)
    order = np.argsort(-scores, kind="stable")
    if top_k is not None:
        order = order[:top_k]
    return RankedResult(
        items=[(int(i), float(scores[i])) for i in order],
        spec=spec,
    )


def cluster_mean_difference_sums(members: list[tuple[int, ...]], matrix_normed) -> np.ndarray:
    """Per-feature sum of |mean(cluster a) - mean(cluster b)| over unordered
    cluster pairs, un-normalized.

    The ordered reading (both (a, b) and (b, a)) doubles every term, which
    the later normalization cancels; the unordered form is used here.
    """
    x = np.asarray(matrix_normed, dtype=np.float64)
    means = np.vstack([x[list(rows)].mean(axis=0) for rows in members])
    raw = np.zeros(x.shape[1])
    for a in range(len(members)):
        for b in range(a + 1, len(members)):
            raw += np.abs(means[a] - means[b])
    return raw


def weights_from_clusters(
    clusters: ClusterSet, matrix_normed, min_size: int = 1
) -> WeightVector:
    """Normalized cluster mean-difference sums as feature weights."""
    members = [rows for _, rows in clusters.member_lists(min_size)]
    if len(members) < 2:
        raise InsufficientClustersError(
            f"cluster-difference weights need at least 2 clusters, got {len(members)}"
        )
    raw = cluster_mean_difference_sums(members, matrix_normed)
    total = float(raw.sum())
    if total == 0.0:
        raise DegenerateWeightsError(
            "all cluster means are identical; falling back to uniform weights "
            "is the caller's decision"
        )
    return WeightVector(raw / total, CLUSTER_DIFF)


def weights_from_svd(svd: SVDResult, retained) -> WeightVector:
    """Weights proportional to the absolute first right-singular-vector
    loading of each retained feature."""
    return weights_from_loadings(svd.vt[0], retained)


def weights_from_loadings(first_right_vector, retained) -> WeightVector:
    loadings = np.abs(np.asarray(first_right_vector, dtype=np.float64))[
        np.asarray(retained, dtype=int)
    ]
    total = float(loadings.sum())
    if total == 0.0:
        raise DegenerateWeightsError("retained features all have zero loading")
    return WeightVector(loadings / total, SVD)


@dataclass(frozen=True, eq=False)
class MagnitudeChangeReport:
    """Cluster-driven per-feature change magnitudes with layer roll-ups.

    ``raw`` holds the un-normalized mean-difference sums per retained
    feature, ``normalized`` the same scaled by the maximum.  Layer and
    group tables carry (sum, percent-of-total) pairs.  The histogram is
    over the normalized magnitudes with both frequency and cumulative
    fractions.
    """

    raw: np.ndarray
    normalized: np.ndarray
    per_layer: dict[str, tuple[float, float]]
    per_group: dict[str, tuple[float, float]]
    bin_edges: np.ndarray
    frequency: np.ndarray
    cumulative: np.ndarray


def magnitude_change_report(
    clusters: ClusterSet,
    matrix_normed,
    feature_layers: list[str],
    feature_groups: list[str],
    bins: int = 10,
    min_size: int = 1,
) -> MagnitudeChangeReport:
    members = [rows for _, rows in clusters.member_lists(min_size)]
    if len(members) < 2:
        raise InsufficientClustersError(
            f"magnitude change report needs at least 2 clusters, got {len(members)}"
        )
    raw = cluster_mean_difference_sums(members, matrix_normed)
    n = raw.size
    if len(feature_layers) != n or len(feature_groups) != n:
        raise ShapeError(
            f"layer map covers {len(feature_layers)} features, matrix has {n}"
        )
    peak = float(raw.max())
    normalized = raw / peak if peak > 0 else np.zeros_like(raw)
    total = float(raw.sum())

    def roll_up(tags: list[str]) -> dict[str, tuple[float, float]]:
        table: dict[str, float] = {}
        for tag, value in zip(tags, raw):
            table[tag] = table.get(tag, 0.0) + float(value)
        return {
            tag: (value, 100.0 * value / total if total > 0 else 0.0)
            for tag, value in table.items()
        }

    counts, edges = np.histogram(normalized, bins=bins, range=(0.0, 1.0))
    frequency = counts / n
    return MagnitudeChangeReport(
        raw=raw,
        normalized=normalized,
        per_layer=roll_up(feature_layers),
        per_group=roll_up(feature_groups),
        bin_edges=edges,
        frequency=frequency,
        cumulative=np.cumsum(frequency),
    )
