"""Pointwise log-density gradient estimates from neighbourhood mean shifts.

For a point with neighbourhood radius r and intrinsic dimension d, the shift
of the neighbour centroid away from the point estimates the local density
gradient: under a linear density model over the ball, the centroid of a ball
sample obeys E[m] = <x x^T>_ball grad(rho)/rho = r^2/(d+2) grad(log rho), so

    g_hat = -(d+2)/r^2 * m_hat

estimates the gradient of F = -log(rho). Gradients live in the embedding
space; no tangent projection is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, ParameterError
from .geometry import PointCloud
from .neighborhoods import NeighborGraph


@dataclass
class GradientField:
    """Per-point gradient estimates of F = -log(rho).

    g : (n, D) gradient estimates.
    var_g : (n, D, D) per-point gradient covariance estimates.
    mean_shift : (n, D) neighbour-centroid shifts.
    """

    g: np.ndarray
    var_g: np.ndarray
    mean_shift: np.ndarray


def _check_point(graph: NeighborGraph, i: int) -> None:
    if not 0 <= i < graph.n_points:
        raise ParameterError(f"point index {i} out of range")


def sample_mean_shift(graph: NeighborGraph, cloud: PointCloud, i: int) -> np.ndarray:
    """Average displacement from point i to its listed neighbours."""
    _check_point(graph, i)
    nb = graph.neighbors[i]
    return (cloud.points[nb] - cloud.points[i]).mean(axis=0)


def estimate_gradient(
    graph: NeighborGraph, cloud: PointCloud, d: float, i: int
) -> np.ndarray:
    """Gradient of F at point i: -(d+2)/r^2 times the mean shift."""
    _check_point(graph, i)
    r = graph.radii[i]
    if r <= 0.0:
        raise DataError(f"point {i} has zero neighbourhood radius")
    return -(d + 2.0) / (r * r) * sample_mean_shift(graph, cloud, i)


def gradient_autocovariance(
    graph: NeighborGraph, cloud: PointCloud, d: float, i: int
) -> np.ndarray:
    """Covariance estimate of the gradient at point i.

    With m = k_i - 1 neighbour shifts y_j and their mean m_hat,

        var[g_i] = ((d+2)/r^2)^2 * 1/(k_i-2) * [sum y y^T / m - m_hat m_hat^T],

    the bracket being the (biased) sample covariance of the shifts and the
    1/(k_i-2) Bessel-style factor accounting for the estimated mean. Needs
    k_i >= 4. The result is symmetric positive semidefinite.
    """
    _check_point(graph, i)
    k = int(graph.k[i])
    if k < 4:
        raise ParameterError(f"autocovariance needs k >= 4, point {i} has k = {k}")
    r = graph.radii[i]
    if r <= 0.0:
        raise DataError(f"point {i} has zero neighbourhood radius")
    y = cloud.points[graph.neighbors[i]] - cloud.points[i]
    m_hat = y.mean(axis=0)
    yc = y - m_hat
    bracket = yc.T @ yc / (k - 1)
    pref = ((d + 2.0) / (r * r)) ** 2 / (k - 2)
    cov = pref * bracket
    return 0.5 * (cov + cov.T)


def gradient_cross_covariance(
    graph: NeighborGraph, cloud: PointCloud, d: float, i: int, j: int
) -> np.ndarray:
    """Covariance between the gradient estimates at points i and j.

    Both estimates average over their neighbourhoods; points common to
    Omega_i and Omega_j correlate them. With S the shared points (the two
    centres excluded), k_sh = |S|, and m_hat the two mean shifts,

        cov[g_i, g_j] = (d+2)^2/(r_i^2 r_j^2) * k_sh/((k_i-1)(k_j-1))
                        * [<(x-x_i)(x-x_j)^T>_S - m_hat_i m_hat_j^T].

    Returns the zero matrix when the neighbourhoods share no points. For
    i = j this reduces to the autocovariance without its Bessel factor.
    """
    _check_point(graph, i)
    _check_point(graph, j)
    dim = cloud.embed_dim
    omega_i = set(graph.neighbors[i].tolist()) | {i}
    omega_j = set(graph.neighbors[j].tolist()) | {j}
    shared = np.array(sorted((omega_i & omega_j) - {i, j}), dtype=np.int64)
    if shared.size == 0:
        return np.zeros((dim, dim))
    ri, rj = graph.radii[i], graph.radii[j]
    if ri <= 0.0 or rj <= 0.0:
        raise DataError("zero neighbourhood radius")
    yi = cloud.points[shared] - cloud.points[i]
    yj = cloud.points[shared] - cloud.points[j]
    second = yi.T @ yj / shared.size
    mi = sample_mean_shift(graph, cloud, i)
    mj = sample_mean_shift(graph, cloud, j)
    pref = (
        (d + 2.0) ** 2
        / (ri * ri * rj * rj)
        * shared.size
        / float((graph.k[i] - 1) * (graph.k[j] - 1))
    )
    return pref * (second - np.outer(mi, mj))


def compute_gradient_field(
    graph: NeighborGraph, cloud: PointCloud, d: float
) -> GradientField:
    """Gradient, covariance and mean shift for every point.

    Same formulas as the per-point operations, looped; values agree exactly.
    """
    if not np.isfinite(d) or d <= 0:
        raise ParameterError(f"intrinsic dimension must be positive, got {d}")
    if np.any(graph.k < 4):
        raise ParameterError("gradient field needs k >= 4 everywhere")
    n = graph.n_points
    dim = cloud.embed_dim
    pts = cloud.points
    g = np.empty((n, dim))
    var_g = np.empty((n, dim, dim))
    shift = np.empty((n, dim))
    radii = graph.radii
    if np.any(radii <= 0.0):
        raise DataError("zero neighbourhood radius in graph")
    for i in range(n):
        y = pts[graph.neighbors[i]] - pts[i]
        m_hat = y.mean(axis=0)
        shift[i] = m_hat
        r2 = radii[i] * radii[i]
        g[i] = -(d + 2.0) / r2 * m_hat
        yc = y - m_hat
        k = graph.k[i]
        cov = ((d + 2.0) / r2) ** 2 / (k - 2) * (yc.T @ yc) / (k - 1)
        var_g[i] = 0.5 * (cov + cov.T)
    return GradientField(g=g, var_g=var_g, mean_shift=shift)
