import numpy as np
import pytest

from qlep.assembly import norm, residual_norm
from qlep.grid import (
    Field,
    VectorField,
    build_mesh,
    constant_vector_field,
    field_from_callable,
    zero_field,
)


def test_mesh_counts_1d():
    mesh = build_mesh(1, 4)
    assert mesh.num_nodes == 5
    assert mesh.num_cells == 4
    assert mesh.spacing == 0.25
    assert mesh.cell_volume == 0.25
    assert mesh.interior.size == 3
    assert mesh.boundary.size == 2


@pytest.mark.parametrize("dim,n", [(2, 3), (3, 2)])
def test_mesh_counts_nd(dim, n):
    mesh = build_mesh(dim, n)
    assert mesh.num_nodes == (n + 1) ** dim
    assert mesh.num_cells == n**dim
    assert mesh.interior.size == (n - 1) ** dim
    assert mesh.interior.size + mesh.boundary.size == mesh.num_nodes
    # every cell has 2^dim distinct corner nodes
    assert mesh.cell_corners.shape == (n**dim, 2**dim)
    for row in mesh.cell_corners:
        assert len(set(row)) == 2**dim


def test_mesh_validation():
    with pytest.raises(ValueError):
        build_mesh(4, 8)
    with pytest.raises(ValueError):
        build_mesh(1, 1)


def test_field_shape_checks():
    mesh = build_mesh(2, 3)
    with pytest.raises(ValueError):
        Field(mesh, np.zeros(7))
    with pytest.raises(ValueError):
        VectorField(mesh, np.zeros((mesh.num_nodes, 3)))


def test_linear_fields_have_exact_cell_data():
    # the corner-average / face-difference reconstruction reproduces
    # affine functions exactly
    for dim in (1, 2, 3):
        mesh = build_mesh(dim, 3)
        coeff = np.arange(1.0, dim + 1.0)
        u = Field(mesh, mesh.coords @ coeff + 0.5)
        g = u.cell_gradients()
        assert np.allclose(g, coeff[None, :], atol=1e-13)
        centers = mesh.coords[mesh.cell_corners].mean(axis=1)
        assert np.allclose(u.cell_values(), centers @ coeff + 0.5, atol=1e-13)


def test_dirichlet_check():
    mesh = build_mesh(1, 4)
    assert zero_field(mesh).check_dirichlet()
    u = field_from_callable(mesh, lambda c: c[:, 0] * (1.0 - c[:, 0]))
    assert u.check_dirichlet()
    assert not field_from_callable(mesh, lambda c: c[:, 0]).check_dirichlet()


def test_constant_vector_field():
    mesh = build_mesh(2, 3)
    E = constant_vector_field(mesh, [2.0, -1.0])
    assert E.values.shape == (mesh.num_nodes, 2)
    assert np.all(E.cell_values() == [2.0, -1.0])


# --- discrete norms ----------------------------------------------------------


def test_norm_constant_field():
    mesh = build_mesh(2, 5)
    u = Field(mesh, np.full(mesh.num_nodes, 3.0))
    # |domain| = 1, so every Lq norm of a constant is its magnitude
    for q in (1.0, 2.0, 6.0):
        assert norm(u, "lq", q) == pytest.approx(3.0, abs=1e-14)
    assert norm(u, "linf") == 3.0


def test_norm_midpoint_oracle_1d():
    # u = x on cells with midpoints (i+1/2)h: ||u||_q^q = h sum m_i^q
    mesh = build_mesh(1, 4)
    u = field_from_callable(mesh, lambda c: c[:, 0])
    mids = (np.arange(4) + 0.5) / 4.0
    for q in (1.0, 3.0):
        assert norm(u, "lq", q) == pytest.approx(
            (0.25 * np.sum(mids**q)) ** (1.0 / q), abs=1e-14
        )
    # gradient of x is 1 everywhere: the W^{1,p} seminorm is 1 for every p
    assert norm(u, "w1p", 2.0) == pytest.approx(1.0, abs=1e-14)
    assert norm(u, "w1p", 4.0) == pytest.approx(1.0, abs=1e-14)


def test_norm_vector_field_magnitude():
    mesh = build_mesh(1, 8)
    E = constant_vector_field(mesh, [3.0])
    assert norm(E, "lq", 2.0) == pytest.approx(3.0, abs=1e-14)
    assert norm(E, "linf") == 3.0
    with pytest.raises(ValueError):
        norm(E, "w1p", 2.0)


def test_norm_validation():
    mesh = build_mesh(1, 4)
    u = zero_field(mesh)
    with pytest.raises(ValueError):
        norm(u, "lq", 0.5)
    with pytest.raises(ValueError):
        norm(u, "h2")


def test_residual_norm_scaling():
    # the scaled norm of a constant residual density is mesh independent
    for n in (8, 32):
        mesh = build_mesh(1, n)
        r = np.full(mesh.interior.size, mesh.cell_volume)
        # ||r||_2 h^{-1/2} = h sqrt(n-1) / sqrt(h) ~ 1 as n grows
        assert residual_norm(mesh, r) == pytest.approx(
            np.sqrt((n - 1) / n), abs=1e-14
        )
