"""Membership functions that turn normalized activation columns into fuzzy
grades relative to a query (Gaussian) or a query set (trapezoidal)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, QueryError
from .linalg import ColumnStats

GAUSSIAN = "gaussian"
TRAPEZOID = "trapezoid"
KINDS = (GAUSSIAN, TRAPEZOID)

_KIND_ALIASES = {"trapezoidal": TRAPEZOID}


def canonical_kind(kind: str) -> str:
    k = _KIND_ALIASES.get(kind, kind)
    if k not in KINDS:
        raise ConfigError(f"unknown membership kind {kind!r}; expected one of {KINDS}")
    return k


@dataclass(frozen=True)
class MembershipSpec:
    """Choice of membership function, its spread factor, and the query rows.

    Gaussian takes exactly one query and any positive spread factor;
    trapezoidal takes at least two queries and a spread factor in [0, 1].
    """

    kind: str
    tau: float
    query_ids: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        object.__setattr__(self, "query_ids", tuple(int(q) for q in self.query_ids))
        if self.kind == GAUSSIAN:
            if len(self.query_ids) != 1:
                raise ConfigError("gaussian membership takes exactly one query id")
            if not self.tau > 0:
                raise ConfigError(f"gaussian spread factor must be > 0, got {self.tau}")
        else:
            if len(self.query_ids) < 2:
                raise ConfigError("trapezoidal membership needs at least two query ids")
            if not 0.0 <= self.tau <= 1.0:
                raise ConfigError(
                    f"trapezoidal spread factor must be in [0, 1], got {self.tau}"
                )


def gaussian_grade(x: float, x_q: float, sigma_j: float, tau: float) -> float:
    """exp(-((x - x_q) / (tau * sigma_j))^2).

    A zero-spread column (constant after normalization) degenerates to an
    exact-match indicator.
    """
    if not tau > 0:
        raise ConfigError(f"gaussian spread factor must be > 0, got {tau}")
    if sigma_j < 0:
        raise ConfigError(f"column spread must be >= 0, got {sigma_j}")
    if sigma_j == 0.0:
        return 1.0 if x == x_q else 0.0
    z = (x - x_q) / (tau * sigma_j)
    return math.exp(-(z * z))


def trapezoidal_grade(x: float, x_a: float, x_b: float, tau: float) -> float:
    """Four-sided trapezoid: 1 on the support [x_a, x_b], linear ramps of
    width tau * (x_b - x_a) on each side, 0 beyond the extended limits.

    A degenerate support (x_a == x_b) becomes an exact-match indicator.
    """
    if not 0.0 <= tau <= 1.0:
        raise ConfigError(f"trapezoidal spread factor must be in [0, 1], got {tau}")
    if x_b < x_a:
        raise ConfigError(f"support limits out of order: [{x_a}, {x_b}]")
    if x_a <= x <= x_b:
        return 1.0
    delta = tau * (x_b - x_a)
    if delta == 0.0:
        return 0.0
    lo = x_a - delta
    hi = x_b + delta
    if lo <= x < x_a:
        return (x - lo) / (x_a - lo)
    if x_b < x <= hi:
        return (hi - x) / (hi - x_b)
    return 0.0


def fuzzify(matrix_normed, stats: ColumnStats, spec: MembershipSpec) -> np.ndarray:
    """Grade every cell of the normalized matrix against the query pattern.

    Returns an (s, n) array of grades in [0, 1]; row i is the fuzzy
    pattern of object i relative to the query (set).
    """
    x = np.asarray(matrix_normed, dtype=np.float64)
    s, n = x.shape
    for q in spec.query_ids:
        if not 0 <= q < s:
            raise QueryError(f"unknown query row {q}; matrix has {s} objects")
    if spec.kind == GAUSSIAN:
        q = spec.query_ids[0]
        xq = x[q]
        denom = spec.tau * np.asarray(stats.std, dtype=np.float64)
        if denom.shape != (n,):
            raise ConfigError(
                f"column stats cover {denom.shape} features, matrix has {n}"
            )
        grades = np.zeros_like(x)
        live = denom > 0
        z = (x[:, live] - xq[live]) / denom[live]
        grades[:, live] = np.exp(-np.square(z))
        grades[:, ~live] = (x[:, ~live] == xq[~live]).astype(np.float64)
        return grades
    support = x[list(spec.query_ids)]
    xa = support.min(axis=0)
    xb = support.max(axis=0)
    delta = spec.tau * (xb - xa)
    lo = xa - delta
    hi = xb + delta
    grades = np.zeros_like(x)
    ramp = delta > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        left = (x - lo) / (xa - lo)
        right = (hi - x) / (hi - xb)
    on_left = ramp & (lo <= x) & (x < xa)
    on_right = ramp & (xb < x) & (x <= hi)
    grades[on_left] = left[on_left]
    grades[on_right] = right[on_right]
    grades[(xa <= x) & (x <= xb)] = 1.0
    return grades
