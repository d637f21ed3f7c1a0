"""Dense matrix primitives: SVD, column normalization, masked region means.

All operations are pure functions over immutable numpy arrays; nothing here
holds shared mutable state, so concurrent reads are safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, EmptyRegionError, IngestionError, NumericError


@dataclass(frozen=True, eq=False)
class SVDResult:
    """Full decomposition ``x = t @ diag(sigma) @ vt`` with a fixed sign rule.

    ``t`` is s-by-s orthonormal, ``vt`` is N-by-N orthonormal, ``sigma``
    holds the min(s, N) singular values in descending order.  The sign of
    each right singular vector is fixed so its largest-magnitude entry is
    non-negative, which makes downstream feature rankings reproducible.
    """

    t: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray


@dataclass(frozen=True, eq=False)
class ColumnStats:
    """Per-column summary statistics (population convention for std)."""

    minimum: np.ndarray
    maximum: np.ndarray
    mean: np.ndarray
    std: np.ndarray


def as_matrix(values) -> np.ndarray:
    """Validate and return ``values`` as a finite 2-D float64 array."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 2:
        raise IngestionError(f"expected a 2-D matrix, got ndim={x.ndim}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise IngestionError(f"matrix must be non-empty, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise IngestionError("matrix contains NaN or Inf values")
    return x


def svd_decompose(m) -> SVDResult:
    """Full SVD with deterministic signs.

    Raises IngestionError for non-finite input and NumericError if the
    underlying iteration fails to converge.
    """
    x = as_matrix(m)
    try:
        t, sigma, vt = np.linalg.svd(x, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge: {exc}") from exc
    t = np.ascontiguousarray(t)
    vt = np.ascontiguousarray(vt)
    # Sign convention: largest-magnitude entry of each right singular vector
    # is made non-negative; the paired left vector flips with it.
    for k in range(vt.shape[0]):
        j = int(np.argmax(np.abs(vt[k])))
        if vt[k, j] < 0:
            vt[k] = -vt[k]
            if k < t.shape[1]:
                t[:, k] = -t[:, k]
    return SVDResult(t=t, sigma=sigma, vt=vt)


def reconstruct(svd: SVDResult) -> np.ndarray:
    """Multiply the factors back together (s-by-N)."""
    s = svd.t.shape[0]
    n = svd.vt.shape[0]
    sig = np.zeros((s, n))
    np.fill_diagonal(sig, svd.sigma)
    return svd.t @ sig @ svd.vt


def normalize_columns(m) -> tuple[np.ndarray, ColumnStats]:
    """Min-max scale each column to [0, 1].

    Constant columns map to all zeros: they carry no discriminative signal
    and a bounded domain is required by the membership functions.  The
    returned statistics describe the *normalized* columns, since the
    Gaussian membership spread is defined on that scale.
    """
    x = as_matrix(m)
    mins = x.min(axis=0)
    maxs = x.max(axis=0)
    span = maxs - mins
    out = np.zeros_like(x)
    nz = span > 0
    out[:, nz] = (x[:, nz] - mins[nz]) / span[nz]
    stats = ColumnStats(
        minimum=out.min(axis=0),
        maximum=out.max(axis=0),
        mean=out.mean(axis=0),
        std=out.std(axis=0),
    )
    return out, stats


def masked_mean(grid, region: tuple[int, int, np.ndarray]) -> float:
    """Mean of ``grid`` values selected by a boxed binary mask.

    ``region`` is ``(row0, col0, mask)`` where ``mask`` is a 2-D boolean
    array anchored at the top-left corner ``(row0, col0)`` of the grid.
    """
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2:
        raise IngestionError(f"expected a 2-D grid, got ndim={g.ndim}")
    row0, col0, mask = region
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    if row0 < 0 or col0 < 0 or row0 + h > g.shape[0] or col0 + w > g.shape[1]:
        raise BoundsError(
            f"region {h}x{w} at ({row0},{col0}) exceeds grid {g.shape}"
        )
    if not mask.any():
        raise EmptyRegionError("region selects no pixels")
    window = g[row0 : row0 + h, col0 : col0 + w]
    return float(window[mask].mean())


def full_region(grid) -> tuple[int, int, np.ndarray]:
    """Region covering every pixel of ``grid``."""
    g = np.asarray(grid)
    return 0, 0, np.ones(g.shape[:2], dtype=bool)


def frobenius(m) -> float:
    """Frobenius norm."""
    return float(math.sqrt(float(np.sum(np.square(np.asarray(m, dtype=np.float64))))))
