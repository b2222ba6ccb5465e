"""Weak-form assembly and norms on structured grids.

The discrete weak form tested against the nodal basis function phi_i is

    r_i = int a(x,u,Du).Dphi_i + mu int u phi_i
          - int h(u) E.Dphi_i - int f phi_i,

with cell-midpoint quadrature and cell-centered reconstruction throughout.
The interior residual vector is zero exactly at the discrete solution.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
import scipy.sparse as sp

from .grid import Field, Mesh, MeshMismatchError, VectorField
from .operators import OperatorSpec, flux, flux_jacobian
from .profiles import HSpec, eval_dh, eval_h


def _check_meshes(*objs) -> Mesh:
    mesh = objs[0].mesh
    for o in objs[1:]:
        if o is not None and not o.mesh.same_as(mesh):
            raise MeshMismatchError("fields live on different meshes")
    return mesh


def _cell_matrix(op: OperatorSpec, mesh: Mesh) -> Optional[np.ndarray]:
    if op.kind != "matrix_diffusion":
        return None
    return op.matrix[mesh.cell_corners].mean(axis=1)


def assemble_residual(
    op: OperatorSpec,
    h: HSpec,
    E: VectorField,
    f: Field,
    mu: float,
    u: Field,
    frozen_state: Optional[Field] = None,
) -> np.ndarray:
    """Residual of the discrete weak form at u, over interior nodes.

    With frozen_state = v, the convection data is h(v) E instead of
    h(u) E (the frozen-coefficient problem of the fixed-point map).
    """
    mesh = _check_meshes(u, E, f)
    if not np.all(np.isfinite(u.values)):
        raise ValueError("non-finite nodal values in u")

    uc = u.cell_values()
    du = u.cell_gradients()
    a = flux(op, du, _cell_matrix(op, mesh))  # (cells, dim)
    conv_arg = uc if frozen_state is None else frozen_state.cell_values()
    conv = eval_h(h, conv_arg)[:, None] * E.cell_values()  # h(.) E at cell centers
    fc = f.cell_values()

    vol = mesh.cell_volume
    w = mesh.corner_grad_weights()  # (2^dim, dim)
    phi = 2.0 ** (-mesh.dim)

    grad_part = (a - conv) @ w.T  # (cells, 2^dim)
    mass_part = (mu * uc - fc) * phi  # (cells,)

    r = np.zeros(mesh.num_nodes)
    contrib = vol * (grad_part + mass_part[:, None])
    np.add.at(r, mesh.cell_corners, contrib)
    return r[mesh.interior]


def assemble_jacobian(
    op: OperatorSpec,
    h: HSpec,
    E: VectorField,
    mu: float,
    u: Field,
    frozen: bool = False,
) -> sp.csr_matrix:
    """Directional derivative of assemble_residual at u (interior x interior).

    frozen=True drops the convection linearization (the frozen-coefficient
    problem has no h(u) dependence on the unknown).
    """
    mesh = _check_meshes(u, E)
    uc = u.cell_values()
    du = u.cell_gradients()
    da = flux_jacobian(op, du, _cell_matrix(op, mesh))  # (cells, dim, dim)
    dhc = np.zeros(mesh.num_cells) if frozen else eval_dh(h, uc)  # (cells,)
    ec = E.cell_values()

    vol = mesh.cell_volume
    w = mesh.corner_grad_weights()  # (ncorner, dim)
    phi = 2.0 ** (-mesh.dim)
    ncorner = w.shape[0]

    # Dphi_i . (da . Dphi_j) for all corner pairs: (cells, ncorner, ncorner)
    daw = np.einsum("cde,je->cjd", da, w)  # da . Dphi_j
    diff_blk = np.einsum("id,cjd->cij", w, daw)
    # convection linearization: -h'(u) phi_j E . Dphi_i
    e_dot_wi = ec @ w.T  # (cells, ncorner)
    conv_blk = -dhc[:, None, None] * phi * e_dot_wi[:, :, None]
    mass_blk = mu * phi * phi
    blk = vol * (diff_blk + conv_blk + mass_blk)

    rows = np.repeat(mesh.cell_corners, ncorner, axis=1).ravel()
    cols = np.tile(mesh.cell_corners, (1, ncorner)).ravel()
    # blk[c, i, j]: row corner i, col corner j -> repeat rows, tile cols
    data = blk.transpose(0, 1, 2).reshape(-1)

    n = mesh.num_nodes
    J = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    idx = mesh.interior
    return J[np.ix_(idx, idx)].tocsr()


def norm(u, kind: str, exponent: float = 2.0) -> float:
    """Discrete norms by midpoint quadrature.

    kind: "lq" (needs exponent q >= 1), "linf", or "w1p" (seminorm,
    needs exponent p). Accepts Field, and for "lq"/"linf" also
    VectorField (pointwise Euclidean magnitude).
    """
    mesh = u.mesh
    vol = mesh.cell_volume
    if kind == "linf":
        v = u.values
        if v.ndim == 2:
            return float(np.max(np.linalg.norm(v, axis=1))) if v.size else 0.0
        return float(np.max(np.abs(v)))
    if kind == "lq":
        q = exponent
        if q < 1:
            raise ValueError("Lq norm needs q >= 1")
        c = u.cell_values()
        mag = np.linalg.norm(c, axis=1) if c.ndim == 2 else np.abs(c)
        return float((vol * np.sum(mag**q)) ** (1.0 / q))
    if kind == "w1p":
        p = exponent
        if not isinstance(u, Field):
            raise ValueError("w1p seminorm applies to scalar fields")
        g = np.linalg.norm(u.cell_gradients(), axis=1)
        return float((vol * np.sum(g**p)) ** (1.0 / p))
    raise ValueError(f"unknown norm kind {kind!r}")


def residual_norm(mesh: Mesh, r: np.ndarray) -> float:
    """Mesh-independent scaling of the interior residual vector: the
    discrete L2 norm of the residual density r_i / h^N."""
    return float(np.linalg.norm(r) * mesh.cell_volume**-0.5)


# ---------------------------------------------------------------------------
# manufactured right-hand sides


class DescriptorError(ValueError):
    """Closed-form descriptor outside the supported catalog."""


def _sympy_h(h: HSpec, u):
    import sympy as sym

    if h.family == "zero":
        return sym.Integer(0)
    if h.family == "linear":
        return u
    if h.family in ("power", "power_mu"):
        return u * sym.Abs(u) ** sym.nsimplify(h.exponent())
    if h.family == "log":
        return u * sym.log(sym.E + sym.Abs(u))
    raise DescriptorError("custom h has no symbolic form; manufacture is unsupported")


def manufacture_rhs(
    op: OperatorSpec,
    h: HSpec,
    E,
    u_exact,
    mesh: Mesh,
    mu: float = 0.0,
) -> Field:
    """Nodal interpolant of f = -div(a(x,u,Du)) + mu u + div(h(u) E)
    for a closed-form exact solution.

    u_exact: sympy expression in x0..x{N-1}, or anything with a
    .sympy_expr(xs) method (the config descriptors). E likewise, or a
    constant sequence. Only the p-Laplacian operator is supported.
    """
    import sympy as sym

    if op.kind != "p_laplacian":
        raise DescriptorError("manufactured solutions support only the p-Laplacian")
    dim = mesh.dim
    xs = sym.symbols(f"x0:{dim}", real=True)

    u = _as_sympy(u_exact, xs)
    e_comps = _as_sympy_vector(E, xs, dim)

    du = [sym.diff(u, x) for x in xs]
    grad2 = sum(d * d for d in du)
    p = sym.nsimplify(op.p)
    a = [grad2 ** ((p - 2) / 2) * d for d in du]
    hu = _sympy_h(h, u)

    f = -sum(sym.diff(a[d], xs[d]) for d in range(dim))
    f = f + mu * u
    f = f + sum(sym.diff(hu * e_comps[d], xs[d]) for d in range(dim))

    fn = sym.lambdify(xs, f, modules="numpy")
    cols = [mesh.coords[:, d] for d in range(dim)]
    with np.errstate(all="ignore"):
        vals = np.asarray(fn(*cols), dtype=float)
    if vals.shape != (mesh.num_nodes,):
        vals = np.broadcast_to(vals, (mesh.num_nodes,)).astype(float)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        # removable 0 * inf at isolated critical points; nudge and average
        shift = 1e-9
        with np.errstate(all="ignore"):
            lo = np.asarray(fn(*[c - shift for c in cols]), dtype=float)
            hi = np.asarray(fn(*[c + shift for c in cols]), dtype=float)
        vals = np.where(bad, 0.5 * (lo + hi), vals)
        if not np.all(np.isfinite(vals)):
            raise DescriptorError("manufactured f is singular at grid nodes")
    return Field(mesh, vals)


def _as_sympy(desc, xs):
    import sympy as sym

    if hasattr(desc, "sympy_expr"):
        return desc.sympy_expr(xs)
    if isinstance(desc, sym.Expr):
        return desc
    if np.isscalar(desc):
        return sym.nsimplify(desc)
    raise DescriptorError(f"unsupported closed-form descriptor {desc!r}")


def _as_sympy_vector(desc, xs, dim):
    import sympy as sym

    if hasattr(desc, "sympy_components"):
        return desc.sympy_components(xs)
    if isinstance(desc, (list, tuple, np.ndarray)):
        if len(desc) != dim:
            raise DescriptorError("vector descriptor has wrong length")
        return [_as_sympy(c, xs) for c in desc]
    raise DescriptorError(f"unsupported vector descriptor {desc!r}")
