"""Divergence-form diffusion operators a(x, s, xi) and their linearizations.

Two kinds:
  p_laplacian      a(xi) = (|xi|^2 + eps^2)^{(p-2)/2} xi,   p >= 2, eps >= 0
  matrix_diffusion a(x, xi) = M(x) xi, p forced to 2, M symmetric
                   positive definite at every node

eps > 0 smooths the p > 2 flux so the Jacobian stays bounded at
zero-gradient cells; coercivity a(xi).xi >= (1-delta)|xi|^p is preserved
away from |xi| ~ eps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class SingularOperatorError(RuntimeError):
    """Jacobian of the p > 2 flux requested at a zero-gradient cell with eps = 0."""


@dataclass(frozen=True)
class OperatorSpec:
    kind: str  # "p_laplacian" | "matrix_diffusion"
    p: float = 2.0
    eps: float = 0.0
    matrix: Optional[np.ndarray] = field(default=None, repr=False)  # (nodes, N, N)
    alpha: float = 1.0  # coercivity constant
    beta: float = 1.0  # growth constant
    b_offset: Optional[np.ndarray] = field(default=None, repr=False)  # growth offset b(x)

    def __post_init__(self):
        if self.kind == "p_laplacian":
            if self.p < 2:
                raise ValueError("p must be >= 2")
            if self.eps < 0:
                raise ValueError("eps must be >= 0")
        elif self.kind == "matrix_diffusion":
            if self.matrix is None:
                raise ValueError("matrix_diffusion needs nodal matrices")
            if self.p != 2.0:
                raise ValueError("matrix_diffusion forces p = 2")
        else:
            raise ValueError(f"unknown operator kind {self.kind!r}")


def p_laplacian(p: float, eps: float = 0.0, alpha: float = 1.0) -> OperatorSpec:
    return OperatorSpec(kind="p_laplacian", p=p, eps=eps, alpha=alpha)


def matrix_diffusion(matrix: np.ndarray, alpha: float, beta: float) -> OperatorSpec:
    return OperatorSpec(
        kind="matrix_diffusion", p=2.0, matrix=np.asarray(matrix, dtype=float),
        alpha=alpha, beta=beta,
    )


def default_regularization(mesh_dim: int, spacing: float) -> float:
    """Default smoothing eps = 1e-8 * (domain diameter / h)."""
    return 1e-8 * np.sqrt(mesh_dim) / spacing


def flux(op: OperatorSpec, xi: np.ndarray, cell_matrix: Optional[np.ndarray] = None) -> np.ndarray:
    """a(xi) per cell; xi has shape (num_cells, dim)."""
    if op.kind == "matrix_diffusion":
        return np.einsum("cij,cj->ci", cell_matrix, xi)
    p, eps = op.p, op.eps
    if p == 2.0:
        return xi
    g = (np.sum(xi * xi, axis=1) + eps * eps) ** ((p - 2.0) / 2.0)
    return g[:, None] * xi


def flux_jacobian(op: OperatorSpec, xi: np.ndarray, cell_matrix: Optional[np.ndarray] = None) -> np.ndarray:
    """d a / d xi per cell, shape (num_cells, dim, dim)."""
    nc, dim = xi.shape
    eye = np.eye(dim)
    if op.kind == "matrix_diffusion":
        return np.array(cell_matrix, copy=True)
    p, eps = op.p, op.eps
    if p == 2.0:
        return np.broadcast_to(eye, (nc, dim, dim)).copy()
    norm2 = np.sum(xi * xi, axis=1)
    if eps == 0.0 and np.any(norm2 == 0.0):
        raise SingularOperatorError(
            "p > 2 flux Jacobian is singular at a zero-gradient cell; set eps > 0"
        )
    w = norm2 + eps * eps
    g = w ** ((p - 2.0) / 2.0)
    dg = (p - 2.0) * w ** ((p - 4.0) / 2.0)
    return g[:, None, None] * eye + dg[:, None, None] * (
        xi[:, :, None] * xi[:, None, :]
    )


def monotonicity_gap(op: OperatorSpec, xi: np.ndarray, xi2: np.ndarray) -> np.ndarray:
    """(a(xi) - a(xi')) . (xi - xi') per row; the strong-monotonicity LHS."""
    d = flux(op, xi) - flux(op, xi2)
    return np.sum(d * (xi - xi2), axis=1)
