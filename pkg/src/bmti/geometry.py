"""Point-cloud container, exact nearest-neighbour queries and ball volumes.

All distances are Euclidean. Queries are exact: a k-d tree accelerates low
embedding dimensions and an exhaustive scan covers high ones, and both paths
recompute distances with the same numpy expression and order candidates by
(distance, index), so results are identical and ties are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gammaln

from .exceptions import DataError, ParameterError

# k-d trees lose to brute force as the embedding dimension grows; beyond this
# we scan. Both paths return bit-identical results.
KDTREE_MAX_DIM = 15

# Extra candidates fetched from the tree so that equal-distance points
# straddling the cut are ordered by index, not by tree internals.
_TIE_PAD = 8


@dataclass(frozen=True)
class PointCloud:
    """Immutable set of points with optional per-point ground truth.

    Parameters
    ----------
    points : ndarray, shape (n, D)
        Sample coordinates, float64, finite.
    truth_F : ndarray, shape (n,), optional
        Known negative log-density per point (any additive constant), used
        only for evaluation.
    """

    points: np.ndarray
    truth_F: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ParameterError(f"points must be 2-d, got shape {pts.shape}")
        n, dim = pts.shape
        if n < 2:
            raise DataError(f"need at least 2 points, got {n}")
        if dim < 1:
            raise ParameterError("embedding dimension must be >= 1")
        if not np.all(np.isfinite(pts)):
            raise DataError("points contain NaN or Inf")
        object.__setattr__(self, "points", pts)
        if self.truth_F is not None:
            t = np.asarray(self.truth_F, dtype=np.float64).ravel()
            if t.shape[0] != n:
                raise ParameterError(
                    f"truth_F has {t.shape[0]} entries for {n} points"
                )
            if not np.all(np.isfinite(t)):
                raise DataError("truth_F contains NaN or Inf")
            object.__setattr__(self, "truth_F", t)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.points.shape[1]

    @cached_property
    def _tree(self) -> cKDTree | None:
        if self.embed_dim > KDTREE_MAX_DIM:
            return None
        return cKDTree(self.points)


@dataclass(frozen=True)
class NeighborQueryResult:
    """Neighbours of one query point, nearest first, the point itself excluded."""

    indices: np.ndarray
    distances: np.ndarray


def unit_ball_volume(d: float) -> float:
    """Volume of the unit ball in d dimensions, (2/d) pi^(d/2) / Gamma(d/2).

    Accepts non-integer d (intrinsic dimensions are real-valued).
    """
    d = float(d)
    if not np.isfinite(d) or d <= 0:
        raise ParameterError(f"dimension must be positive and finite, got {d}")
    return float(np.exp(np.log(2.0 / d) + 0.5 * d * np.log(np.pi) - gammaln(0.5 * d)))


def _canonical_order(diffs_sq: np.ndarray, cand: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort candidates by (distance, index); distances via one canonical path."""
    dist = np.sqrt(diffs_sq)
    order = np.lexsort((cand, dist))
    return cand[order], dist[order]


def _query_one(cloud: PointCloud, i: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    pts = cloud.points
    n = cloud.n_points
    tree = cloud._tree
    if tree is None:
        cand = np.delete(np.arange(n), i)
    else:
        m = min(k + 1 + _TIE_PAD, n)
        _, idx = tree.query(pts[i], k=m)
        idx = np.atleast_1d(idx)
        cand = idx[idx != i]
    d2 = ((pts[cand] - pts[i]) ** 2).sum(axis=1)
    cand, dist = _canonical_order(d2, cand)
    return cand[:k], dist[:k]


def knn_query(cloud: PointCloud, i: int, k: int) -> NeighborQueryResult:
    """Exact k nearest neighbours of point i, self excluded.

    Ties are broken by the lower point index. Raises ParameterError for k
    outside [1, n-1] or i out of range.
    """
    n = cloud.n_points
    if not 0 <= i < n:
        raise ParameterError(f"point index {i} out of range for {n} points")
    if not 1 <= k <= n - 1:
        raise ParameterError(f"k must be in [1, {n - 1}], got {k}")
    idx, dist = _query_one(cloud, i, k)
    return NeighborQueryResult(indices=idx, distances=dist)


def knn_query_all(cloud: PointCloud, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact k nearest neighbours of every point at once.

    Returns (indices, distances), each of shape (n, k), rows sorted nearest
    first with ties broken by index. Same results as per-point knn_query.
    """
    n = cloud.n_points
    if not 1 <= k <= n - 1:
        raise ParameterError(f"k must be in [1, {n - 1}], got {k}")
    pts = cloud.points
    tree = cloud._tree
    out_idx = np.empty((n, k), dtype=np.int64)
    out_dist = np.empty((n, k), dtype=np.float64)
    if tree is not None:
        m = min(k + 1 + _TIE_PAD, n)
        _, idx = tree.query(pts, k=m, workers=-1)
        for i in range(n):
            cand = idx[i][idx[i] != i]
            d2 = ((pts[cand] - pts[i]) ** 2).sum(axis=1)
            cand, dist = _canonical_order(d2, cand)
            out_idx[i] = cand[:k]
            out_dist[i] = dist[:k]
    else:
        # Exhaustive path, chunked to bound the (chunk, n, dim) workspace.
        chunk = max(1, int(1e7) // (n * cloud.embed_dim))
        all_idx = np.arange(n)
        for lo in range(0, n, chunk):
            hi = min(lo + chunk, n)
            d2 = ((pts[lo:hi, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
            for row, i in enumerate(range(lo, hi)):
                cand = np.delete(all_idx, i)
                c, dist = _canonical_order(d2[row][cand], cand)
                out_idx[i] = c[:k]
                out_dist[i] = dist[:k]
    return out_idx, out_dist
