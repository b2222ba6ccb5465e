"""qlep: solver and a-priori estimate verification harness for
quasi-linear elliptic Dirichlet problems with superlinear convection,

    -div(a(x,u,Du)) + mu u = -div(h(u) E(x)) + f(x),  u = 0 on the boundary,

with p-Laplacian-type operators (p >= 2)."""

from .assembly import assemble_jacobian, assemble_residual, manufacture_rhs, norm
from .estimates import (
    ExponentRecord,
    estimate_sobolev_constant,
    exponents,
    fit_linf_bound,
    invariant_ball,
    majorant_recursion,
    smallness_threshold,
    verify_bounds,
)
from .grid import Field, Mesh, VectorField, build_mesh
from .operators import OperatorSpec, matrix_diffusion, p_laplacian
from .profiles import GrowthClass, HSpec, classify_growth, compute_R, compute_S, eval_dh, eval_h
from .solver import (
    ProblemSpec,
    SolveReport,
    SweepReport,
    fixed_point_iterate,
    frozen_step,
    solve_newton,
    solve_truncated,
    solve_with_lower_order,
    truncation_sweep,
    uniqueness_experiment,
)
from .truncation import remainder, truncate, truncate_field

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
