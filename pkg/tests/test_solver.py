import numpy as np
import pytest

from qlep.assembly import norm
from qlep.grid import Field, build_mesh, constant_vector_field, field_from_callable
from qlep.operators import p_laplacian, default_regularization
from qlep.profiles import HSpec
from qlep.solver import (
    ProblemSpec,
    fixed_point_iterate,
    frozen_step,
    solve_newton,
    solve_truncated,
    solve_with_lower_order,
    truncated_problem,
    truncation_sweep,
    uniqueness_experiment,
    warm_start,
)


def _constant_f(mesh, value):
    return field_from_callable(mesh, lambda c: np.full(c.shape[0], value))


def _problem(n=32, p=2.0, h=None, e=1.0, f=2.0, mu=0.0, dim=1, eps=None):
    mesh = build_mesh(dim, n)
    if eps is None:
        eps = 0.0 if p == 2.0 else default_regularization(dim, mesh.spacing)
    return ProblemSpec(
        mesh=mesh,
        op=p_laplacian(p, eps=eps),
        h=h if h is not None else HSpec("zero"),
        E=constant_vector_field(mesh, [e] + [0.0] * (dim - 1)),
        f=_constant_f(mesh, f),
        mu=mu,
    )


def test_linear_problem_exact_at_nodes():
    # p = 2, f = 2: the discrete solution is the nodal x(1-x) exactly
    problem = _problem(n=32)
    rep = solve_newton(problem, tol=1e-12)
    assert rep.converged
    assert rep.iterations <= 2
    x = problem.mesh.coords[:, 0]
    assert np.max(np.abs(rep.field.values - x * (1 - x))) < 1e-12
    # trace bookkeeping: one residual per iterate, one step per update
    assert len(rep.residual_trace) == rep.iterations + 1
    assert len(rep.step_lengths) == rep.iterations
    assert all(s == 1.0 for s in rep.step_lengths)  # no damping needed


def test_newton_nonlinear_convection():
    h = HSpec("power", theta=1.0)
    rep = solve_newton(_problem(n=64, h=h), tol=1e-11)
    assert rep.converged
    assert rep.residual_trace[-1] <= 1e-11
    assert rep.field.check_dirichlet()


def test_newton_respects_max_iter():
    h = HSpec("power", theta=1.0)
    rep = solve_newton(_problem(n=64, h=h), tol=1e-15, max_iter=1)
    assert not rep.converged
    assert rep.iterations == 1
    assert "residual" in rep.message


def test_newton_rejects_bad_initial_guess():
    problem = _problem(n=8)
    bad = field_from_callable(problem.mesh, lambda c: c[:, 0])  # u(1) = 1
    with pytest.raises(ValueError):
        solve_newton(problem, u0=bad)


def test_warm_start_enables_p4_solve():
    problem = _problem(n=64, p=4.0, f=1.0)
    u0 = warm_start(problem)
    rep = solve_newton(problem, u0=u0, tol=1e-10)
    assert rep.converged
    # closed-form first integral: u = (p-1)/p ((1/2)^{p'} - |1/2 - x|^{p'})
    x = problem.mesh.coords[:, 0]
    exact = 0.75 * (0.5 ** (4 / 3) - np.abs(0.5 - x) ** (4 / 3))
    err = norm(Field(problem.mesh, rep.field.values - exact), "lq", 2.0)
    assert err < 1e-3


# --- truncated problems -------------------------------------------------------


def test_truncated_problem_validation():
    with pytest.raises(ValueError):
        truncated_problem(_problem(), 0.0)


def test_inactive_truncation_is_bitwise_identical():
    problem = _problem(n=32, h=HSpec("log"))
    direct = solve_newton(problem, tol=1e-11)
    trunc = solve_truncated(problem, 256.0, tol=1e-11)
    assert np.array_equal(direct.field.values, trunc.field.values)


def test_truncation_sweep_stabilizes():
    problem = _problem(n=32, h=HSpec("log"))
    levels = [float(2**k) for k in range(9)]  # 1 .. 256
    rep = truncation_sweep(problem, levels, tol=1e-11)
    assert rep.stabilized
    assert all(e["converged"] for e in rep.entries)
    direct = solve_newton(problem, tol=1e-11)
    bound = max(norm(direct.field, "linf"), 2.0)  # data bound: ||f||_inf = 2
    linfs = [e["linf"] for e in rep.entries]
    for (la, lb), lv in zip(zip(linfs, linfs[1:]), levels[1:]):
        if lv > bound:
            assert abs(lb - la) < 1e-10
    assert np.array_equal(rep.fields[-1].values, direct.field.values)


def test_truncation_sweep_rejects_unordered_levels():
    with pytest.raises(ValueError):
        truncation_sweep(_problem(), [1.0, 1.0, 2.0])


# --- fixed-point map ----------------------------------------------------------


def test_frozen_step_is_identity_at_fixed_point():
    # a Newton solution of the full problem is a fixed point of T
    h = HSpec("power", theta=1.0)
    problem = _problem(n=32, h=h)
    u = solve_newton(problem, tol=1e-12).field
    rep = frozen_step(problem, u, tol=1e-12)
    assert rep.converged
    assert np.max(np.abs(rep.field.values - u.values)) < 1e-10


def test_frozen_step_requires_power_family():
    with pytest.raises(ValueError):
        frozen_step(_problem(h=HSpec("log")), field_from_callable(
            build_mesh(1, 32), lambda c: 0.0 * c[:, 0]))


def test_fixed_point_iterate_converges():
    h = HSpec("power", theta=1.0)
    problem = _problem(n=32, h=h, f=0.5)
    rep = fixed_point_iterate(problem, max_iters=50, tol=1e-10,
                              norm_exponent=6.0)
    assert rep.converged
    assert rep.iterations <= 50
    assert len(rep.iterate_norms) == rep.iterations + 1
    # the limit solves the full nonlinear problem
    direct = solve_newton(problem, tol=1e-12).field
    assert np.max(np.abs(rep.field.values - direct.values)) < 1e-8


def test_fixed_point_needs_norm_exponent():
    with pytest.raises(ValueError):
        fixed_point_iterate(_problem(h=HSpec("power", theta=1.0)))


# --- lower-order-term scenario ------------------------------------------------


def test_lower_order_checks_and_l1_bound():
    h = HSpec("power_mu", theta=0.4, p=2.0)
    problem = _problem(n=64, h=h, mu=10.0)
    rep = solve_with_lower_order(problem, tol=1e-11)
    assert rep.converged
    assert rep.checks["mu_l1_lhs"] <= rep.checks["mu_l1_rhs"] * 1.05
    # r = N / (p - 1 - theta N) for N = 1, p = 2, theta = 0.4
    assert rep.checks["r_exponent"] == pytest.approx(1.0 / 0.6)


def test_lower_order_validation():
    with pytest.raises(ValueError):
        solve_with_lower_order(_problem(h=HSpec("power", theta=0.4), mu=1.0))
    with pytest.raises(ValueError):
        # theta >= (p-1)/N
        solve_with_lower_order(
            _problem(h=HSpec("power_mu", theta=1.5, p=2.0), mu=1.0)
        )


# --- uniqueness ---------------------------------------------------------------


def test_uniqueness_experiment_small():
    h = HSpec("power", theta=1.0)
    problem = _problem(n=32, h=h)
    rng = np.random.default_rng(0)
    seeds = []
    for _ in range(3):
        vals = np.zeros(problem.mesh.num_nodes)
        vals[problem.mesh.interior] = 0.1 * rng.standard_normal(
            problem.mesh.interior.size
        )
        seeds.append(Field(problem.mesh, vals))
    out = uniqueness_experiment(problem, seeds, tol=1e-11)
    assert out["excluded_seeds"] == 0
    assert out["max_pairwise_distance"] <= 1e-9
