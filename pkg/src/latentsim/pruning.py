"""Rank features by their loading on the first right singular vector and
retain the shortest prefix that covers the variance target."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .linalg import SVDResult, as_matrix


@dataclass(frozen=True, eq=False)
class PrunedMatrix:
    """Retained columns of the activation matrix.

    ``retained`` holds the surviving original column ids in ascending
    order; ``scores`` are the per-feature ranking scores (absolute first
    right-singular-vector loadings) for all original columns.
    """

    matrix: np.ndarray
    retained: np.ndarray
    variance_retained: float
    scores: np.ndarray
    target: float


def rank_by_scores(scores) -> np.ndarray:
    """Feature ids sorted by descending score; ties by ascending index."""
    return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")


def rank_features(svd: SVDResult) -> np.ndarray:
    """Feature ids sorted by descending absolute loading on the first right
    singular vector; ties broken by ascending original index."""
    return rank_by_scores(np.abs(svd.vt[0]))


def prune_to_variance(x, svd: SVDResult, target: float) -> PrunedMatrix:
    """Keep the shortest ranking prefix whose columns reach ``target`` of
    the total squared magnitude of ``x``."""
    return prune_by_scores(x, np.abs(svd.vt[0]), target)


def prune_by_scores(x, scores, target: float) -> PrunedMatrix:
    """Ranking-prefix pruning driven by precomputed per-feature scores.

    Zero-energy columns contribute nothing, so they are dropped from the
    retained set even when the prefix walk passes over them; this is what
    makes channels silenced by sparse training disappear here.
    """
    if not 0.0 < target <= 1.0:
        raise ConfigError(f"variance target must be in (0, 1], got {target}")
    x = as_matrix(x)
    scores = np.abs(np.asarray(scores, dtype=np.float64))
    order = rank_by_scores(scores)
    energies = np.sum(np.square(x), axis=0)
    total = float(energies.sum())
    threshold = target * total
    ranked = energies[order]
    tail = np.concatenate([np.cumsum(ranked[::-1])[::-1], [0.0]])
    keep = []
    cum = 0.0
    for pos, j in enumerate(order):
        if cum >= threshold or tail[pos] == 0.0:
            break
        keep.append(int(j))
        cum += float(ranked[pos])
    retained = np.array(sorted(j for j in keep if energies[j] > 0.0), dtype=int)
    kept_energy = float(energies[retained].sum()) if retained.size else 0.0
    variance_retained = kept_energy / total if total > 0.0 else 1.0
    return PrunedMatrix(
        matrix=x[:, retained],
        retained=retained,
        variance_retained=variance_retained,
        scores=scores,
        target=target,
    )


def per_layer_retained(retained, feature_layers: list[tuple[str, int]]) -> dict[str, int]:
    """Diagnostic: surviving feature count per layer id."""
    counts: dict[str, int] = {layer_id: 0 for layer_id, _ in feature_layers}
    for j in retained:
        layer_id, _ = feature_layers[int(j)]
        counts[layer_id] += 1
    return counts
