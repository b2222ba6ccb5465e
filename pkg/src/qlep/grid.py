"""Structured tensor grids on (0,1)^N and nodal fields.

Nodes are the (n+1)^N lattice points, flattened in C order. Cells are the
n^N axis-aligned boxes; every integral in the package is a midpoint rule
over cells, with cell values reconstructed from the 2^N corner nodes
(average for the value, face-averaged differences for the gradient).
In 1D this is exactly P1 elements with midpoint quadrature.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np


class MeshMismatchError(ValueError):
    """Fields from different meshes were combined."""


@dataclass(frozen=True)
class Mesh:
    dim: int
    cells_per_axis: int
    coords: np.ndarray = field(repr=False, compare=False)  # (num_nodes, dim)
    cell_corners: np.ndarray = field(repr=False, compare=False)  # (num_cells, 2^dim)
    corner_offsets: np.ndarray = field(repr=False, compare=False)  # (2^dim, dim)
    interior: np.ndarray = field(repr=False, compare=False)  # interior node indices
    boundary: np.ndarray = field(repr=False, compare=False)  # boundary node indices

    @property
    def spacing(self) -> float:
        return 1.0 / self.cells_per_axis

    @property
    def num_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def num_cells(self) -> int:
        return self.cell_corners.shape[0]

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def same_as(self, other: "Mesh") -> bool:
        return self.dim == other.dim and self.cells_per_axis == other.cells_per_axis

    # Per-corner gradient weights: D phi_{corner} at the cell center.
    # Component d is +-1/(h 2^{dim-1}) depending on which side of the cell
    # the corner sits on in direction d.
    def corner_grad_weights(self) -> np.ndarray:
        sign = 2.0 * self.corner_offsets - 1.0  # (2^dim, dim), entries +-1
        return sign / (self.spacing * 2.0 ** (self.dim - 1))


def build_mesh(dim: int, cells_per_axis: int) -> Mesh:
    """Uniform tensor grid on (0,1)^dim with cells_per_axis cells per axis."""
    if dim not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {dim}")
    if cells_per_axis < 2:
        raise ValueError(f"need at least 2 cells per axis, got {cells_per_axis}")
    n = cells_per_axis
    axes = [np.linspace(0.0, 1.0, n + 1) for _ in range(dim)]
    grids = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)

    # node index arithmetic: strides of the C-ordered lattice
    strides = [(n + 1) ** (dim - 1 - d) for d in range(dim)]
    offsets = np.array(list(itertools.product((0, 1), repeat=dim)), dtype=float)

    cell_ids = np.array(
        list(itertools.product(range(n), repeat=dim)), dtype=int
    )  # (n^dim, dim)
    base = cell_ids @ np.array(strides)
    corner_shift = (offsets.astype(int) @ np.array(strides)).astype(int)
    cell_corners = base[:, None] + corner_shift[None, :]

    on_boundary = np.any((coords == 0.0) | (coords == 1.0), axis=1)
    interior = np.nonzero(~on_boundary)[0]
    boundary = np.nonzero(on_boundary)[0]
    return Mesh(
        dim=dim,
        cells_per_axis=n,
        coords=coords,
        cell_corners=cell_corners,
        corner_offsets=offsets,
        interior=interior,
        boundary=boundary,
    )


@dataclass(frozen=True)
class Field:
    """Nodal scalar function. values has shape (num_nodes,)."""

    mesh: Mesh
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.mesh.num_nodes,):
            raise ValueError(f"bad field shape {v.shape}")
        object.__setattr__(self, "values", v)

    def replace_values(self, values: np.ndarray) -> "Field":
        return Field(self.mesh, values)

    def check_dirichlet(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.values[self.mesh.boundary]) <= tol))

    def cell_values(self) -> np.ndarray:
        """Cell-center values (corner averages), shape (num_cells,)."""
        return self.values[self.mesh.cell_corners].mean(axis=1)

    def cell_gradients(self) -> np.ndarray:
        """Cell-center gradients, shape (num_cells, dim)."""
        w = self.mesh.corner_grad_weights()  # (2^dim, dim)
        return self.values[self.mesh.cell_corners] @ w


@dataclass(frozen=True)
class VectorField:
    """Nodal vector function. values has shape (num_nodes, dim)."""

    mesh: Mesh
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.mesh.num_nodes, self.mesh.dim):
            raise ValueError(f"bad vector field shape {v.shape}")
        object.__setattr__(self, "values", v)

    def replace_values(self, values: np.ndarray) -> "VectorField":
        return VectorField(self.mesh, values)

    def cell_values(self) -> np.ndarray:
        """Cell-center values, shape (num_cells, dim)."""
        return self.values[self.mesh.cell_corners].mean(axis=1)


def zero_field(mesh: Mesh) -> Field:
    return Field(mesh, np.zeros(mesh.num_nodes))


def constant_vector_field(mesh: Mesh, vec) -> VectorField:
    vec = np.asarray(vec, dtype=float)
    return VectorField(mesh, np.broadcast_to(vec, (mesh.num_nodes, mesh.dim)).copy())


def field_from_callable(mesh: Mesh, fn) -> Field:
    """Nodal interpolant of a callable of the coordinate array."""
    vals = np.asarray(fn(mesh.coords), dtype=float)
    if vals.shape != (mesh.num_nodes,):
        vals = np.broadcast_to(vals, (mesh.num_nodes,)).astype(float)
    return Field(mesh, vals)
