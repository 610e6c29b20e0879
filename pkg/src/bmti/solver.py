"""Global integration of edge differences into per-point log-densities.

The maximum-likelihood F solves a weighted graph-Laplacian system: each
directed edge (i, j) with difference estimate v and precision w = 1/eps2
contributes w to both diagonal entries, -w to both off-diagonal entries of A,
and (+w v, -w v) to (b_j, b_i). A is symmetric positive semidefinite with the
per-component constant vectors as kernel, so solutions are fixed to zero mean
per connected component.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from .delta_f import DeltaFEdgeSet, build_covariance
from .exceptions import (
    CapabilityError,
    ConvergenceError,
    NumericalError,
    ParameterError,
    StateError,
)
from .geometry import PointCloud, unit_ball_volume
from .gradients import GradientField
from .neighborhoods import NeighborGraph

UNCERTAINTY_CAP = 2000


@dataclass
class SolverSystem:
    """Assembled linear system A F = b with component bookkeeping."""

    A: sp.csr_matrix
    b: np.ndarray
    n_edges: int
    component_labels: np.ndarray

    @property
    def n_points(self) -> int:
        return self.b.shape[0]


@dataclass
class LogDensityEstimate:
    """Estimated F per point, optionally with variances and solve diagnostics."""

    F: np.ndarray
    var_F: np.ndarray | None
    method: str
    alpha: float
    cg_iterations: int
    residual: float


def _edge_weights(
    edges: DeltaFEdgeSet,
    precision_mode: str,
    graph: NeighborGraph | None,
    gradients: GradientField | None,
    cloud: PointCloud | None,
) -> np.ndarray:
    if precision_mode == "diagonal":
        return 1.0 / edges.eps2
    if precision_mode == "optimal_diagonal":
        if graph is None or gradients is None or cloud is None:
            raise ParameterError(
                "optimal_diagonal needs graph, gradients and cloud"
            )
        cov = build_covariance(graph, gradients, cloud, edges)
        diag = cov.diagonal()
        row_sq = np.asarray(cov.multiply(cov).sum(axis=1)).ravel()
        if np.any(row_sq <= 0.0):
            raise NumericalError("zero covariance row in optimal_diagonal mode")
        return diag / row_sq
    raise ParameterError(f"unknown precision_mode {precision_mode!r}")


def assemble_system(
    edges: DeltaFEdgeSet,
    precision_mode: str = "diagonal",
    graph: NeighborGraph | None = None,
    gradients: GradientField | None = None,
    cloud: PointCloud | None = None,
) -> SolverSystem:
    """Build the PSD Laplacian system from the edge set.

    precision_mode picks the per-edge weights: "diagonal" uses 1/eps2,
    "optimal_diagonal" uses the variance-minimizing diagonal surrogate of the
    full edge covariance (small problems only; needs graph/gradients/cloud).
    """
    if edges.n_edges == 0:
        raise StateError("cannot assemble a system from an empty edge set")
    n = edges.n_points
    w = _edge_weights(edges, precision_mode, graph, gradients, cloud)
    if np.any(~np.isfinite(w)) or np.any(w <= 0.0):
        raise NumericalError("edge weights must be finite and positive")
    src, dst = edges.src, edges.dst

    rows = np.concatenate([src, dst, src, dst])
    cols = np.concatenate([src, dst, dst, src])
    vals = np.concatenate([w, w, -w, -w])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    A.sum_duplicates()

    b = np.zeros(n)
    wv = w * edges.delta_f
    np.add.at(b, dst, wv)
    np.subtract.at(b, src, wv)

    adj = sp.csr_matrix((np.ones(src.shape[0], dtype=np.int8), (src, dst)), shape=(n, n))
    _, labels = _cc(adj, directed=True, connection="weak")
    return SolverSystem(A=A, b=b, n_edges=edges.n_edges, component_labels=labels)


def _center_per_component(x: np.ndarray, labels: np.ndarray, counts: np.ndarray) -> None:
    means = np.bincount(labels, weights=x, minlength=counts.shape[0]) / counts
    x -= means[labels]


def _pcg(
    A: sp.csr_matrix,
    b: np.ndarray,
    tol: float,
    max_iter: int,
    labels: np.ndarray | None,
) -> tuple[np.ndarray, int, float]:
    """Jacobi-preconditioned CG; optionally projects out per-component means."""
    n = b.shape[0]
    diag = A.diagonal()
    inv_diag = np.where(diag > 0.0, 1.0 / np.where(diag > 0.0, diag, 1.0), 1.0)
    counts = None
    if labels is not None:
        counts = np.bincount(labels).astype(np.float64)

    b = b.copy()
    if labels is not None:
        _center_per_component(b, labels, counts)
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros(n), 0, 0.0

    x = np.zeros(n)
    r = b.copy()
    z = inv_diag * r
    if labels is not None:
        _center_per_component(z, labels, counts)
    p = z.copy()
    rz = float(r @ z)
    res = float(np.linalg.norm(r)) / b_norm
    it = 0
    while res > tol and it < max_iter:
        Ap = A @ p
        pAp = float(p @ Ap)
        if not np.isfinite(pAp) or pAp <= 0.0:
            raise NumericalError("conjugate gradient broke down (p^T A p <= 0)")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if labels is not None:
            _center_per_component(r, labels, counts)
        z = inv_diag * r
        if labels is not None:
            _center_per_component(z, labels, counts)
        rz_new = float(r @ z)
        if not np.isfinite(rz_new):
            raise NumericalError("NaN in conjugate-gradient iterates")
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
        res = float(np.linalg.norm(r)) / b_norm
    if res > tol:
        raise ConvergenceError(
            f"CG stopped at relative residual {res:.3e} after {it} iterations "
            f"(tol {tol:.1e})"
        )
    if labels is not None:
        _center_per_component(x, labels, counts)
    return x, it, res


def solve_bmti(
    system: SolverSystem,
    tol: float = 1e-8,
    max_iter: int | None = None,
) -> LogDensityEstimate:
    """Solve A F = b by preconditioned conjugate gradient.

    The constant vector per connected component spans the kernel of A, so
    iterates are kept mean-zero per component (the gauge): returned F has
    zero mean over each component. Relative residual ||A F - b|| / ||b||
    must reach tol within max_iter (default 10 n) iterations.
    """
    if tol <= 0.0:
        raise ParameterError("tol must be positive")
    n = system.n_points
    if max_iter is None:
        max_iter = 10 * n
    F, it, res = _pcg(system.A, system.b, tol, max_iter, system.component_labels)
    return LogDensityEstimate(
        F=F, var_F=None, method="bmti", alpha=1.0, cg_iterations=it, residual=res
    )


def estimate_uncertainties(system: SolverSystem, cap: int = UNCERTAINTY_CAP) -> np.ndarray:
    """Per-point variances: the diagonal of the pseudo-inverse of A.

    Dense computation, limited to n <= cap points. With diagonal edge
    precisions these are mildly optimistic since correlated edge errors are
    ignored off the diagonal.
    """
    n = system.n_points
    if n > cap:
        raise CapabilityError(
            f"uncertainty estimation is dense and capped at {cap} points, got {n}"
        )
    pinv = np.linalg.pinv(system.A.toarray(), hermitian=True)
    var = np.diag(pinv).copy()
    var[var < 0.0] = 0.0
    return var


def knn_anchor(
    graph: NeighborGraph, cloud: PointCloud, d: float
) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise anchor for the regularized solve.

    F0_i = -log((k_i - 1) / (n omega_d r_i^d)) is the adaptive-neighbourhood
    density estimate; the curvature h_i = k_i is the second derivative of the
    Poisson neighbour-count log-likelihood at its maximum.
    """
    if not np.isfinite(d) or d <= 0:
        raise ParameterError(f"intrinsic dimension must be positive, got {d}")
    n = graph.n_points
    log_vol = np.log(unit_ball_volume(d)) + d * np.log(graph.radii)
    f0 = np.log(float(n)) + log_vol - np.log(graph.k - 1.0)
    h = graph.k.astype(np.float64)
    return f0, h


def solve_regularized(
    edges: DeltaFEdgeSet,
    anchor_f0: np.ndarray,
    anchor_h: np.ndarray,
    alpha: float,
    tol: float = 1e-8,
    max_iter: int | None = None,
) -> LogDensityEstimate:
    """Blend the edge-difference likelihood with a pointwise anchor.

    Solves (alpha A + (1-alpha) diag(h)) F = alpha b + (1-alpha) h F0.
    alpha = 1 reproduces solve_bmti (gauge per component, with a warning if
    the graph is disconnected); alpha = 0 returns the anchor exactly. For
    0 < alpha < 1 the system is positive definite, needs no gauge, and the
    anchor supplies absolute normalization across components.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must be in [0, 1], got {alpha}")
    n = edges.n_points
    f0 = np.asarray(anchor_f0, dtype=np.float64)
    h = np.asarray(anchor_h, dtype=np.float64)
    if f0.shape != (n,) or h.shape != (n,):
        raise ParameterError("anchor arrays must have one entry per point")
    if np.any(h <= 0.0):
        raise ParameterError("anchor curvatures must be positive")

    if alpha == 0.0:
        return LogDensityEstimate(
            F=f0.copy(), var_F=None, method="bmti", alpha=0.0,
            cg_iterations=0, residual=0.0,
        )

    system = assemble_system(edges)
    if alpha == 1.0:
        n_comp = int(system.component_labels.max()) + 1
        if n_comp > 1:
            warnings.warn(
                f"graph has {n_comp} components; solving with a per-component "
                "gauge (relative offsets between components are undetermined)",
                stacklevel=2,
            )
        return solve_bmti(system, tol=tol, max_iter=max_iter)

    M = (alpha * system.A + sp.diags((1.0 - alpha) * h)).tocsr()
    rhs = alpha * system.b + (1.0 - alpha) * h * f0
    if max_iter is None:
        max_iter = 10 * n
    F, it, res = _pcg(M, rhs, tol, max_iter, labels=None)
    return LogDensityEstimate(
        F=F, var_F=None, method="bmti", alpha=float(alpha),
        cg_iterations=it, residual=res,
    )
