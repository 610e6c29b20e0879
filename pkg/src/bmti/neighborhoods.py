"""Adaptive neighbourhood selection and the directed neighbourhood graph.

Each point i gets a neighbourhood Omega_i consisting of the point itself plus
its k[i]-1 nearest neighbours; k[i] grows from k_min until a likelihood-ratio
test says the local density stops being constant. The graph stores, per
directed edge, the overlap count |Omega_i & Omega_j| used by the Pearson
correlation proxy downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from .exceptions import DataError, ParameterError
from .geometry import PointCloud, knn_query_all

# Likelihood-ratio stop threshold: chi-squared, 1 dof, p about 1e-6.
LR_THRESHOLD = 23.928
K_MIN = 4
K_MAX = 256


@dataclass
class NeighborGraph:
    """Directed adaptive-neighbourhood graph.

    Attributes
    ----------
    k : ndarray, shape (n,)
        Neighbourhood sizes counting the centre, so k[i]-1 neighbours listed.
    neighbors : list of ndarray
        neighbors[i] holds the k[i]-1 nearest neighbours of i, nearest first.
    radii : ndarray, shape (n,)
        Distance from i to its outermost listed neighbour.
    overlap : csr_matrix
        Overlap counts |Omega_i & Omega_j| (centres included) for every pair
        joined by at least one directed edge, plus the diagonal k[i].
    edge_src, edge_dst : ndarray, shape (E,)
        All directed edges (i -> j for j in neighbors[i]), flattened in point
        order then neighbour order.
    edge_overlap : ndarray, shape (E,)
        Overlap count per directed edge, aligned with edge_src/edge_dst.
    """

    k: np.ndarray
    neighbors: list[np.ndarray]
    radii: np.ndarray
    overlap: sp.csr_matrix
    edge_src: np.ndarray
    edge_dst: np.ndarray
    edge_overlap: np.ndarray

    @property
    def n_points(self) -> int:
        return self.k.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edge_src.shape[0]

    def overlap_count(self, i: int, j: int) -> int:
        """|Omega_i & Omega_j| with centres counted; exact for any pair."""
        if i == j:
            return int(self.k[i])
        c = self.overlap[i, j]
        if c != 0:
            return int(c)
        # Pair not covered by the edge table: count directly.
        a = set(self.neighbors[i].tolist())
        a.add(i)
        b = set(self.neighbors[j].tolist())
        b.add(j)
        return len(a & b)


def select_adaptive_k(
    cloud: PointCloud,
    d: float,
    lr_threshold: float = LR_THRESHOLD,
    k_min: int = K_MIN,
    k_max: int = K_MAX,
) -> np.ndarray:
    """Choose per-point neighbourhood sizes by a constant-density test.

    Growth to size k admits the (k-1)-th nearest neighbour j. Both points'
    neighbour-shell volumes are i.i.d. exponential under constant density, so
    with m = k-1 shells each and ball volumes V ~ r^d the statistic

        D = -2 [log L0 - log L1] = 2 m log((V_i + V_j)^2 / (4 V_i V_j))

    compares a shared density against separate ones. k[i] is the largest size
    <= min(k_max, n-1) reached before D crosses lr_threshold.

    Returns the integer array k, with k_min <= k[i] <= min(k_max, n-1).
    """
    n = cloud.n_points
    if k_min < 4:
        raise ParameterError(f"k_min must be >= 4, got {k_min}")
    if k_max < k_min:
        raise ParameterError(f"k_max ({k_max}) below k_min ({k_min})")
    if not np.isfinite(d) or d <= 0:
        raise ParameterError(f"intrinsic dimension must be positive, got {d}")
    if lr_threshold <= 0:
        raise ParameterError("lr_threshold must be positive")
    cap = min(k_max, n - 1)
    if cap < k_min:
        raise DataError(
            f"n = {n} is too small for k_min = {k_min} with cap n-1 = {n - 1}"
        )

    idx, dist = knn_query_all(cloud, cap - 1)
    if np.any(dist[:, k_min - 2] == 0.0):
        raise DataError("duplicate points inside the minimum neighbourhood")

    # log(V) up to the omega_d constant, which cancels in the statistic.
    with np.errstate(divide="ignore"):
        log_rd = d * np.log(dist)

    k_arr = np.full(n, k_min, dtype=np.int64)
    active = np.arange(n)
    for k in range(k_min + 1, cap + 1):
        m = k - 2  # column of the newest member, the (k-1)-th neighbour
        j = idx[active, m]
        li = log_rd[active, m]
        lj = log_rd[j, m]
        # 2 (k-1) log((Vi+Vj)^2/(4 Vi Vj)), computed via log-volumes.
        s = np.logaddexp(li, lj)
        stat = 2.0 * (k - 1) * (2.0 * s - np.log(4.0) - li - lj)
        ok = stat < lr_threshold
        active = active[ok]
        if active.size == 0:
            break
        k_arr[active] = k
    return k_arr


def build_neighbor_graph(cloud: PointCloud, k: np.ndarray) -> NeighborGraph:
    """Materialize neighbour lists, radii and overlap counts for given sizes."""
    n = cloud.n_points
    k = np.asarray(k, dtype=np.int64)
    if k.shape != (n,):
        raise ParameterError(f"k must have shape ({n},), got {k.shape}")
    if np.any(k < 2) or np.any(k > n - 1):
        raise ParameterError("every k[i] must lie in [2, n-1]")

    kmax = int(k.max())
    idx, dist = knn_query_all(cloud, kmax - 1)
    radii = dist[np.arange(n), k - 2].copy()
    if np.any(radii == 0.0):
        raise DataError("zero neighbourhood radius: duplicate points")

    neighbors = [idx[i, : k[i] - 1].copy() for i in range(n)]
    counts = k - 1
    edge_src = np.repeat(np.arange(n, dtype=np.int64), counts)
    edge_dst = np.concatenate(neighbors) if n else np.empty(0, dtype=np.int64)

    # Membership matrix: row i flags Omega_i including the centre.
    col = np.concatenate([edge_dst, np.arange(n, dtype=np.int64)])
    row = np.concatenate([edge_src, np.arange(n, dtype=np.int64)])
    member = sp.csr_matrix(
        (np.ones(col.shape[0], dtype=np.int64), (row, col)), shape=(n, n)
    )

    # Overlap counts once per unordered pair, then scattered onto edges.
    lo = np.minimum(edge_src, edge_dst)
    hi = np.maximum(edge_src, edge_dst)
    codes = lo * n + hi
    ucodes, inverse = np.unique(codes, return_inverse=True)
    ulo = ucodes // n
    uhi = ucodes % n
    ucount = np.empty(ucodes.shape[0], dtype=np.int64)
    batch = max(1, int(8e6) // max(kmax, 1))
    for s in range(0, ucodes.shape[0], batch):
        e = min(s + batch, ucodes.shape[0])
        prod = member[ulo[s:e]].multiply(member[uhi[s:e]])
        ucount[s:e] = np.asarray(prod.sum(axis=1)).ravel()
    edge_overlap = ucount[inverse]

    diag = np.arange(n, dtype=np.int64)
    overlap = sp.csr_matrix(
        (
            np.concatenate([ucount, ucount, k]),
            (np.concatenate([ulo, uhi, diag]), np.concatenate([uhi, ulo, diag])),
        ),
        shape=(n, n),
    )
    overlap.sum_duplicates()

    return NeighborGraph(
        k=k.copy(),
        neighbors=neighbors,
        radii=radii,
        overlap=overlap,
        edge_src=edge_src,
        edge_dst=edge_dst,
        edge_overlap=edge_overlap,
    )


def jaccard_overlap(graph: NeighborGraph, i: int, j: int) -> float:
    """Neighbourhood Jaccard index k_ij / (k_i + k_j - k_ij), in [0, 1].

    Pairs without a stored overlap entry count as 0 (distant neighbourhoods).
    """
    n = graph.n_points
    if not (0 <= i < n and 0 <= j < n):
        raise ParameterError("point index out of range")
    if i == j:
        return 1.0
    kij = int(graph.overlap[i, j])
    if kij == 0:
        return 0.0
    return kij / float(graph.k[i] + graph.k[j] - kij)


def connected_components(graph: NeighborGraph) -> np.ndarray:
    """Weakly-connected component label per point."""
    n = graph.n_points
    adj = sp.csr_matrix(
        (np.ones(graph.n_edges, dtype=np.int8), (graph.edge_src, graph.edge_dst)),
        shape=(n, n),
    )
    _, labels = _cc(adj, directed=True, connection="weak")
    return labels
