"""Nonlinear solves of the discrete weak problem.

Four drivers:
  solve_newton           damped Newton with backtracking line search
  solve_truncated /      the truncated approximating problems (T_n o h,
  truncation_sweep       truncated E and f) and the level sweep
  frozen_step /          the fixed-point map v -> u solving the problem
  fixed_point_iterate    with the convection data frozen at v
  solve_with_lower_order the mu u variant with h(s) = s|s|^{p-2+theta}

All randomness is caller-provided (seed fields); the solves themselves
are deterministic.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import assemble_jacobian, assemble_residual, norm, residual_norm
from .grid import Field, Mesh, VectorField, zero_field
from .operators import OperatorSpec, p_laplacian
from .profiles import HSpec
from .truncation import truncate_field

LINEAR_RTOL = 1e-10
MAX_BACKTRACKS = 30


class SingularJacobianError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    """A full problem instance on a realized mesh."""

    mesh: Mesh
    op: OperatorSpec
    h: HSpec
    E: VectorField
    f: Field
    mu: float = 0.0
    exponents: Optional[object] = None  # estimates.ExponentRecord, when relevant

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        for fld in (self.E, self.f):
            if not fld.mesh.same_as(self.mesh):
                raise ValueError("E/f not realizable on the problem mesh")


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_trace: list[float]
    step_lengths: list[float]
    field: Field
    wall_time: float
    message: str = ""
    checks: dict = field(default_factory=dict)


@dataclass
class SweepReport:
    levels: list[float]
    entries: list[dict]  # per level: converged, linf, w1p, l2, iterations
    stabilized: bool
    stabilization_level: Optional[float] = None
    fields: list[Field] = field(default_factory=list)  # per-level solutions


@dataclass
class FixedPointReport:
    converged: bool
    iterations: int
    iterate_norms: list[float]  # L^s norm per iterate (v0 included)
    differences: list[float]  # successive L^s differences
    all_in_ball: bool
    ball_radius: Optional[float]
    field: Field
    reports: list[SolveReport] = field(default_factory=list)


def _linear_solve(J, rhs: np.ndarray) -> np.ndarray:
    """Diagonally preconditioned Krylov solve; direct sparse fallback."""
    d = J.diagonal()
    if np.any(d == 0.0):
        d = np.where(d == 0.0, 1.0, d)
    M = spla.LinearOperator(J.shape, matvec=lambda x: x / d)
    x, info = spla.bicgstab(J, rhs, rtol=LINEAR_RTOL, atol=0.0, M=M, maxiter=2000)
    if info == 0 and np.all(np.isfinite(x)):
        return x
    try:
        x = spla.spsolve(J.tocsc(), rhs)
    except RuntimeError as exc:  # umfpack/superlu singular matrix
        raise SingularJacobianError(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularJacobianError("linear solve produced non-finite update")
    return x


def _residual(problem: ProblemSpec, u: Field, frozen_state: Optional[Field]) -> np.ndarray:
    return assemble_residual(
        problem.op, problem.h, problem.E, problem.f, problem.mu, u,
        frozen_state=frozen_state,
    )


def solve_newton(
    problem: ProblemSpec,
    u0: Optional[Field] = None,
    tol: float = 1e-11,
    max_iter: int = 50,
    _frozen_state: Optional[Field] = None,
) -> SolveReport:
    """Damped Newton on the interior residual.

    Convergence is declared on the mesh-scaled residual norm
    ||r||_2 / h^{N/2} <= tol. The line search halves the step up to 30
    times and accepts on residual-norm decrease; a fully failed line
    search ends the iteration (non-converged, not an error).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    mesh = problem.mesh
    t0 = time.perf_counter()
    u = zero_field(mesh) if u0 is None else u0
    if not u.check_dirichlet():
        raise ValueError("u0 does not satisfy homogeneous Dirichlet values")

    r = _residual(problem, u, _frozen_state)
    rn = residual_norm(mesh, r)
    trace = [rn]
    steps: list[float] = []
    converged = rn <= tol
    message = ""
    it = 0
    while not converged and it < max_iter:
        J = assemble_jacobian(
            problem.op, problem.h, problem.E, problem.mu, u,
            frozen=_frozen_state is not None,
        )
        d = _linear_solve(J, -r)
        t = 1.0
        accepted = False
        for _ in range(MAX_BACKTRACKS + 1):
            vals = u.values.copy()
            vals[mesh.interior] += t * d
            u_try = u.replace_values(vals)
            r_try = _residual(problem, u_try, _frozen_state)
            rn_try = residual_norm(mesh, r_try)
            if np.isfinite(rn_try) and rn_try < rn:
                u, r, rn = u_try, r_try, rn_try
                accepted = True
                break
            t *= 0.5
        it += 1
        if not accepted:
            message = "line search failed to reduce the residual"
            break
        trace.append(rn)
        steps.append(t)
        converged = rn <= tol
    if not converged and not message:
        message = f"residual {rn:.3e} > tol after {it} iterations"
    return SolveReport(
        converged=converged,
        iterations=it,
        residual_trace=trace,
        step_lengths=steps,
        field=u,
        wall_time=time.perf_counter() - t0,
        message=message,
    )


def warm_start(problem: ProblemSpec, tol: float = 1e-11) -> Field:
    """Initial guess for degenerate p > 2 problems: the solution of the
    corresponding p = 2 problem without convection."""
    lin = dataclasses.replace(
        problem, op=p_laplacian(2.0), h=HSpec("zero"), exponents=None
    )
    return solve_newton(lin, tol=tol, max_iter=10).field


def truncated_problem(problem: ProblemSpec, level: float) -> ProblemSpec:
    if level <= 0:
        raise ValueError("truncation level must be positive")
    return dataclasses.replace(
        problem,
        h=dataclasses.replace(problem.h, clip_level=level),
        E=truncate_field(problem.E, level),
        f=truncate_field(problem.f, level),
    )


def solve_truncated(
    problem: ProblemSpec,
    level: float,
    u0: Optional[Field] = None,
    tol: float = 1e-11,
    max_iter: int = 50,
) -> SolveReport:
    """Solve the truncated approximating problem at the given level."""
    return solve_newton(truncated_problem(problem, level), u0=u0, tol=tol,
                        max_iter=max_iter)


STABILIZATION_TOL = 1e-10


def truncation_sweep(
    problem: ProblemSpec,
    levels: list[float],
    tol: float = 1e-11,
    max_iter: int = 50,
    u0: Optional[Field] = None,
) -> SweepReport:
    """Solve at each truncation level and watch the L-infinity norm settle."""
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    entries = []
    linf_prev = None
    stabilized = False
    stab_level = None
    p = problem.op.p
    fields = []
    for level in levels:
        rep = solve_truncated(problem, level, u0=u0, tol=tol, max_iter=max_iter)
        u = rep.field
        linf = norm(u, "linf")
        entry = {
            "level": level,
            "converged": rep.converged,
            "iterations": rep.iterations,
            "linf": linf,
            "w1p": norm(u, "w1p", p),
            "l2": norm(u, "lq", 2.0),
        }
        entries.append(entry)
        fields.append(u)
        if linf_prev is not None and abs(linf - linf_prev) < STABILIZATION_TOL:
            if not stabilized:
                stab_level = level
            stabilized = True
        linf_prev = linf
    return SweepReport(
        levels=list(levels), entries=entries, stabilized=stabilized,
        stabilization_level=stab_level, fields=fields,
    )


def frozen_step(
    problem: ProblemSpec,
    v: Field,
    tol: float = 1e-11,
    max_iter: int = 50,
    u0: Optional[Field] = None,
) -> SolveReport:
    """One application of the fixed-point map T: solve the problem with the
    convection data frozen at v (so the equation in u is coercive)."""
    if problem.h.family not in ("power", "power_mu"):
        raise ValueError("frozen_step expects a power-family nonlinearity")
    if not v.mesh.same_as(problem.mesh):
        raise ValueError("v lives on a different mesh")
    return solve_newton(problem, u0=u0, tol=tol, max_iter=max_iter,
                        _frozen_state=v)


def fixed_point_iterate(
    problem: ProblemSpec,
    v0: Optional[Field] = None,
    max_iters: int = 50,
    tol: float = 1e-8,
    ball_radius: Optional[float] = None,
    norm_exponent: Optional[float] = None,
    inner_tol: float = 1e-11,
) -> FixedPointReport:
    """Iterate v_{k+1} = T(v_k) and track L^s norms against the invariant
    ball of radius R (if provided)."""
    s = norm_exponent
    if s is None:
        rec = problem.exponents
        if rec is None or getattr(rec, "s", None) is None:
            raise ValueError("no L^s exponent available (need exponents record)")
        s = rec.s
    v = zero_field(problem.mesh) if v0 is None else v0
    norms = [norm(v, "lq", s)]
    diffs: list[float] = []
    reports: list[SolveReport] = []
    converged = False
    for _ in range(max_iters):
        rep = frozen_step(problem, v, tol=inner_tol, u0=v)
        reports.append(rep)
        if not rep.converged:
            break
        u = rep.field
        diff = norm(Field(problem.mesh, u.values - v.values), "lq", s)
        diffs.append(diff)
        norms.append(norm(u, "lq", s))
        v = u
        if diff <= tol:
            converged = True
            break
    all_in_ball = (
        all(x <= ball_radius for x in norms) if ball_radius is not None else False
    )
    return FixedPointReport(
        converged=converged,
        iterations=len(diffs),
        iterate_norms=norms,
        differences=diffs,
        all_in_ball=all_in_ball,
        ball_radius=ball_radius,
        field=v,
        reports=reports,
    )


def solve_with_lower_order(
    problem: ProblemSpec,
    u0: Optional[Field] = None,
    tol: float = 1e-11,
    max_iter: int = 50,
) -> SolveReport:
    """Solve the mu-term variant and record the discrete L1 balance
    mu ||u||_1 <= ||f||_1 in the report checks."""
    if problem.h.family != "power_mu":
        raise ValueError("lower-order scenario expects the power_mu family")
    theta, p, dim = problem.h.theta, problem.op.p, problem.mesh.dim
    if theta >= (p - 1.0) / dim:
        raise ValueError(
            f"theta = {theta} violates theta < (p-1)/N = {(p - 1.0) / dim}"
        )
    rep = solve_newton(problem, u0=u0, tol=tol, max_iter=max_iter)
    if problem.mu > 0:
        lhs = problem.mu * norm(rep.field, "lq", 1.0)
        rhs = norm(problem.f, "lq", 1.0)
        rep.checks["mu_l1_lhs"] = lhs
        rep.checks["mu_l1_rhs"] = rhs
        rep.checks["r_exponent"] = dim / (p - 1.0 - theta * dim)
    return rep


def uniqueness_experiment(
    problem: ProblemSpec,
    seeds: list[Field],
    tol: float = 1e-11,
    max_iter: int = 50,
) -> dict:
    """Solve from each seed; return the max pairwise L^p distance between
    the converged solutions (non-converged seeds are excluded)."""
    p = problem.op.p
    reports = [solve_newton(problem, u0=s, tol=tol, max_iter=max_iter) for s in seeds]
    ok = [r for r in reports if r.converged]
    excluded = len(reports) - len(ok)
    dist = 0.0
    for i in range(len(ok)):
        for j in range(i + 1, len(ok)):
            d = norm(
                Field(problem.mesh, ok[i].field.values - ok[j].field.values),
                "lq", p,
            )
            dist = max(dist, d)
    return {
        "max_pairwise_distance": dist,
        "converged_seeds": len(ok),
        "excluded_seeds": excluded,
        "reports": reports,
    }
