"""Pairwise log-density differences along graph edges, with uncertainties.

Every directed edge (i, j) gets a midpoint-rule estimate of F_j - F_i from the
two endpoint gradients, plus an error bar that accounts for the correlation
between the endpoint estimates through a neighbourhood-overlap proxy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.stats import kstest

from .exceptions import CapabilityError, DataError, ParameterError
from .geometry import PointCloud
from .gradients import GradientField
from .neighborhoods import NeighborGraph

EPS2_MIN = 1e-12

# Negative quadratic forms beyond this (relative) tolerance indicate a broken
# covariance input rather than roundoff.
_QFORM_RTOL = 1e-8


@dataclass
class DeltaFEdgeSet:
    """Per-edge difference estimates, aligned with the graph's edge arrays.

    src, dst : (E,) edge endpoints (directed, dst in Omega_src).
    delta_f : (E,) midpoint estimates of F_dst - F_src.
    eps2 : (E,) error-bar variances, floored at eps2_min.
    dir_src, dir_dst : (E,) one-endpoint (directional) difference estimates.
    eps_src, eps_dst : (E,) their standard deviations.
    pearson : (E,) signed Jaccard correlation proxy between the two.
    """

    src: np.ndarray
    dst: np.ndarray
    delta_f: np.ndarray
    eps2: np.ndarray
    dir_src: np.ndarray
    dir_dst: np.ndarray
    eps_src: np.ndarray
    eps_dst: np.ndarray
    pearson: np.ndarray
    n_points: int
    eps2_min: float = EPS2_MIN

    @property
    def n_edges(self) -> int:
        return self.src.shape[0]


@dataclass(frozen=True)
class PullStats:
    """Standardized-residual summary: mean, spread, KS distance to N(0,1)."""

    mean: float
    std: float
    ks_distance: float
    n: int


def _sign(x: np.ndarray | float) -> np.ndarray | float:
    """Sign with sign(0) = +1, keeping the correlation proxy well-defined."""
    return np.where(np.asarray(x) < 0.0, -1.0, 1.0)


def estimate_delta_f(
    gradients: GradientField, cloud: PointCloud, i: int, j: int
) -> float:
    """Midpoint estimate of F_j - F_i: average endpoint gradient dotted with
    the displacement x_j - x_i. Antisymmetric in (i, j) by construction."""
    r = cloud.points[j] - cloud.points[i]
    return float(0.5 * (gradients.g[i] + gradients.g[j]) @ r)


def directional_delta_f(
    gradients: GradientField, cloud: PointCloud, i: int, j: int, which: int
) -> tuple[float, float]:
    """One-endpoint estimate of F_j - F_i using only the gradient at `which`.

    Returns (value, std) where value = g_w . (x_j - x_i) and
    std = sqrt((x_j - x_i)^T var[g_w] (x_j - x_i)).
    """
    if which not in (i, j):
        raise ParameterError(f"which = {which} must be one of the endpoints {i}, {j}")
    r = cloud.points[j] - cloud.points[i]
    value = float(gradients.g[which] @ r)
    q = float(r @ gradients.var_g[which] @ r)
    scale = float(np.trace(gradients.var_g[which])) * float(r @ r)
    if q < -_QFORM_RTOL * max(scale, 1.0):
        raise DataError(f"covariance of point {which} is not PSD along the edge")
    return value, float(np.sqrt(max(q, 0.0)))


def delta_f_variance(
    dir_i: float,
    dir_j: float,
    eps_i: float,
    eps_j: float,
    chi: float,
    eps2_min: float = EPS2_MIN,
) -> tuple[float, float]:
    """Variance of the midpoint estimate from its two directional halves.

    The correlation between the two directional estimates is approximated by
    the signed neighbourhood Jaccard index: p = sign(dir_i * dir_j) * chi.
    Then eps2 = (eps_i^2 + eps_j^2 + 2 p eps_i eps_j) / 4, floored at
    eps2_min. Returns (eps2, p).
    """
    if not 0.0 <= chi <= 1.0:
        raise ParameterError(f"chi must be in [0, 1], got {chi}")
    if eps_i < 0.0 or eps_j < 0.0:
        raise ParameterError("directional standard deviations must be >= 0")
    p = float(_sign(dir_i * dir_j) * chi)
    eps2 = 0.25 * (eps_i * eps_i + eps_j * eps_j + 2.0 * p * eps_i * eps_j)
    return max(eps2, eps2_min), p


def build_delta_f_edges(
    graph: NeighborGraph,
    gradients: GradientField,
    cloud: PointCloud,
    eps2_min: float = EPS2_MIN,
) -> DeltaFEdgeSet:
    """Difference estimates and error bars for every directed edge at once.

    Vectorized form of the per-edge operations; values agree exactly.
    """
    if eps2_min <= 0.0:
        raise ParameterError("eps2_min must be positive")
    src, dst = graph.edge_src, graph.edge_dst
    n_e = src.shape[0]
    pts = cloud.points
    g, var_g = gradients.g, gradients.var_g
    k = graph.k

    delta_f = np.empty(n_e)
    dir_src = np.empty(n_e)
    dir_dst = np.empty(n_e)
    q_src = np.empty(n_e)
    q_dst = np.empty(n_e)

    dim = cloud.embed_dim
    batch = max(1, int(4e6) // (dim * dim))
    for s in range(0, n_e, batch):
        e = min(s + batch, n_e)
        i_b, j_b = src[s:e], dst[s:e]
        r = pts[j_b] - pts[i_b]
        ds = np.einsum("ed,ed->e", g[i_b], r)
        dd = np.einsum("ed,ed->e", g[j_b], r)
        dir_src[s:e] = ds
        dir_dst[s:e] = dd
        delta_f[s:e] = 0.5 * (ds + dd)
        q_src[s:e] = np.einsum("ec,ecd,ed->e", r, var_g[i_b], r)
        q_dst[s:e] = np.einsum("ec,ecd,ed->e", r, var_g[j_b], r)

    for q in (q_src, q_dst):
        neg = q < 0.0
        if np.any(neg):
            worst = float(q.min())
            if worst < -_QFORM_RTOL * max(float(np.abs(q).max()), 1.0):
                raise DataError("non-PSD gradient covariance along an edge")
            q[neg] = 0.0
    eps_src = np.sqrt(q_src)
    eps_dst = np.sqrt(q_dst)

    kij = graph.edge_overlap
    chi = kij / (k[src] + k[dst] - kij)
    p = _sign(dir_src * dir_dst) * chi
    eps2 = 0.25 * (q_src + q_dst + 2.0 * p * eps_src * eps_dst)
    np.maximum(eps2, eps2_min, out=eps2)

    return DeltaFEdgeSet(
        src=src.copy(),
        dst=dst.copy(),
        delta_f=delta_f,
        eps2=eps2,
        dir_src=dir_src,
        dir_dst=dir_dst,
        eps_src=eps_src,
        eps_dst=eps_dst,
        pearson=p,
        n_points=graph.n_points,
        eps2_min=eps2_min,
    )


def covariance_entry(
    graph: NeighborGraph,
    gradients: GradientField,
    cloud: PointCloud,
    edge_ij: tuple[int, int],
    edge_lm: tuple[int, int],
) -> float:
    """Covariance between the midpoint estimates of two edges.

    Each estimate is the average of its two directional halves, so the
    covariance sums over the four endpoint pairings (w, v), w on edge (i, j)
    and v on edge (l, m):

        C = 1/4 sum_wv sign(dir_w * dir_v) chi_wv eps_w eps_v,

    with chi_wv the Jaccard overlap of the endpoint neighbourhoods. The
    diagonal entry (same edge twice) reproduces the unfloored eps2.
    """
    i, j = edge_ij
    l, m = edge_lm
    total = 0.0
    for w in (i, j):
        dw, ew = directional_delta_f(gradients, cloud, i, j, w)
        for v in (l, m):
            dv, ev = directional_delta_f(gradients, cloud, l, m, v)
            kwv = graph.overlap_count(w, v)
            if kwv == 0:
                continue
            chi = kwv / float(graph.k[w] + graph.k[v] - kwv)
            total += float(_sign(dw * dv)) * chi * ew * ev
    return 0.25 * total


def build_covariance(
    graph: NeighborGraph,
    gradients: GradientField,
    cloud: PointCloud,
    edges: DeltaFEdgeSet,
    max_entries: int = 20_000_000,
) -> sp.csr_matrix:
    """Sparse covariance matrix over all edge pairs with overlapping ends.

    Entry (a, b) follows covariance_entry; pairs whose four endpoint
    neighbourhoods are disjoint are exact zeros and never stored. Intended
    for small problems (the production solver uses the diagonal); raises
    CapabilityError when the candidate pair count exceeds max_entries.
    """
    n = graph.n_points
    n_e = edges.n_edges
    # All pairwise neighbourhood overlap counts (centres included). Any pair
    # of intersecting neighbourhoods appears, whether or not it is an edge.
    col = np.concatenate([np.concatenate(graph.neighbors), np.arange(n)])
    row = np.concatenate(
        [np.repeat(np.arange(n), graph.k - 1), np.arange(n)]
    ).astype(np.int64)
    member = sp.csr_matrix(
        (np.ones(col.shape[0], dtype=np.int64), (row, col)), shape=(n, n)
    )
    pair_counts = (member @ member.T).tocsr()

    # Edge-to-endpoint incidence, then candidate edge pairs.
    einc = sp.csr_matrix(
        (
            np.ones(2 * n_e, dtype=np.int8),
            (np.concatenate([np.arange(n_e)] * 2), np.concatenate([edges.src, edges.dst])),
        ),
        shape=(n_e, n),
    )
    cand = sp.coo_matrix(
        (einc @ pair_counts.astype(bool).astype(np.int8) @ einc.T).astype(bool)
    )
    if cand.nnz > max_entries:
        raise CapabilityError(
            f"{cand.nnz} candidate edge pairs exceed the limit {max_entries}; "
            "use the diagonal precision mode at this size"
        )

    a_idx, b_idx = cand.row, cand.col
    dirs = np.stack([edges.dir_src, edges.dir_dst], axis=1)
    epss = np.stack([edges.eps_src, edges.eps_dst], axis=1)
    ends = np.stack([edges.src, edges.dst], axis=1)
    k = graph.k
    values = np.zeros(a_idx.shape[0])
    for wa in range(2):
        w_pts = ends[a_idx, wa]
        dw = dirs[a_idx, wa]
        ew = epss[a_idx, wa]
        for vb in range(2):
            v_pts = ends[b_idx, vb]
            dv = dirs[b_idx, vb]
            ev = epss[b_idx, vb]
            kwv = np.asarray(pair_counts[w_pts, v_pts]).ravel().astype(np.float64)
            chi = kwv / (k[w_pts] + k[v_pts] - kwv)
            values += _sign(dw * dv) * chi * ew * ev
    values *= 0.25
    out = sp.csr_matrix((values, (a_idx, b_idx)), shape=(n_e, n_e))
    out.eliminate_zeros()
    return out


def calibration_report(edges: DeltaFEdgeSet, cloud: PointCloud) -> PullStats:
    """Pull statistics of the edge estimates against per-point ground truth.

    The pull of an edge is (delta_f - (F_true_dst - F_true_src)) / sqrt(eps2);
    a calibrated estimator gives mean 0, spread 1 and a small KS distance to
    the standard normal.
    """
    if cloud.truth_F is None:
        raise ParameterError("cloud carries no ground truth")
    if edges.n_edges == 0:
        raise DataError("empty edge set")
    truth = cloud.truth_F[edges.dst] - cloud.truth_F[edges.src]
    z = (edges.delta_f - truth) / np.sqrt(edges.eps2)
    ks = kstest(z, "norm").statistic
    return PullStats(
        mean=float(z.mean()), std=float(z.std(ddof=1)), ks_distance=float(ks), n=z.shape[0]
    )
