"""Scenario orchestration: one entry point per subcommand, shared by the
HTTP service and the CLI. Results are pydantic models so they serialize
losslessly over the wire (floats round-trip via repr)."""

from __future__ import annotations

from typing import Optional

import numpy as np
from pydantic import BaseModel, Field as PField

from . import estimates as est
from .config import ScenarioConfig, build_problem, validate
from .grid import Field, zero_field
from .profiles import classify_growth
from .solver import (
    ProblemSpec,
    SolveReport,
    fixed_point_iterate,
    solve_newton,
    solve_with_lower_order,
    truncation_sweep,
    uniqueness_experiment,
    warm_start,
)


class TraceRow(BaseModel):
    iter: int
    residual_norm: float
    step_length: Optional[float] = None


class SolutionPayload(BaseModel):
    coords: list[list[float]]
    values: list[float]


class SweepRow(BaseModel):
    level: float
    converged: bool
    linf: float
    w1p: float
    l2: float
    iterations: int


class FixedPointRow(BaseModel):
    iter: int
    norm_s: float
    diff_s: Optional[float] = None


class EstimatePayloadRow(BaseModel):
    id: str
    lhs: float
    rhs: float
    slack: float
    passed: bool


class ScenarioResult(BaseModel):
    subcommand: str
    converged: bool = True
    summary: str = ""
    solution: Optional[SolutionPayload] = None
    trace: list[TraceRow] = PField(default_factory=list)
    seed_traces: list[list[TraceRow]] = PField(default_factory=list)
    sweep: list[SweepRow] = PField(default_factory=list)
    fixed_point: list[FixedPointRow] = PField(default_factory=list)
    estimates: list[EstimatePayloadRow] = PField(default_factory=list)
    extras: dict = PField(default_factory=dict)


def _solution_payload(u: Field) -> SolutionPayload:
    return SolutionPayload(
        coords=[list(row) for row in u.mesh.coords],
        values=list(u.values),
    )


def _trace_rows(rep: SolveReport) -> list[TraceRow]:
    rows = [TraceRow(iter=0, residual_norm=rep.residual_trace[0])]
    for k, rn in enumerate(rep.residual_trace[1:], start=1):
        step = rep.step_lengths[k - 1] if k - 1 < len(rep.step_lengths) else None
        rows.append(TraceRow(iter=k, residual_norm=rn, step_length=step))
    return rows


def _initial_guess(problem: ProblemSpec) -> Optional[Field]:
    # degenerate p > 2 problems need a nonzero start; a p = 2 presolve does
    if problem.op.p > 2.0:
        return warm_start(problem)
    return None


def _summary_lines(cfg: ScenarioConfig, lines: list[str]) -> str:
    head = [
        f"subcommand: {cfg.subcommand}",
        f"problem: N={cfg.problem.dimension} n={cfg.problem.cells} "
        f"p={cfg.problem.p} mu={cfg.problem.mu} h={cfg.problem.h.family}",
    ]
    return "\n".join(head + lines) + "\n"


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Dispatch a validated config to its handler."""
    validate(cfg)
    handler = _HANDLERS[cfg.subcommand]
    return handler(cfg)


def _run_solve(cfg: ScenarioConfig) -> ScenarioResult:
    problem = build_problem(cfg)
    opts = cfg.solver
    u0 = _initial_guess(problem)
    if problem.mu > 0 and problem.h.family == "power_mu":
        rep = solve_with_lower_order(problem, u0=u0, tol=opts.tol,
                                     max_iter=opts.max_iter)
    else:
        rep = solve_newton(problem, u0=u0, tol=opts.tol, max_iter=opts.max_iter)
    from .assembly import norm

    lines = [
        f"converged: {rep.converged} in {rep.iterations} iterations",
        f"final residual: {rep.residual_trace[-1]!r}",
        f"linf: {norm(rep.field, 'linf')!r}",
        f"w1p seminorm: {norm(rep.field, 'w1p', problem.op.p)!r}",
    ]
    for key, val in rep.checks.items():
        lines.append(f"{key}: {val!r}")
    if not problem.h.conforming:
        lines.append("note: h family is non-conforming (growth not superlinear)")
    return ScenarioResult(
        subcommand=cfg.subcommand,
        converged=rep.converged,
        summary=_summary_lines(cfg, lines),
        solution=_solution_payload(rep.field),
        trace=_trace_rows(rep),
        extras={"checks": rep.checks, "message": rep.message},
    )


def _run_sweep(cfg: ScenarioConfig) -> ScenarioResult:
    problem = build_problem(cfg)
    rep = truncation_sweep(problem, cfg.scenario.levels, tol=cfg.solver.tol,
                           max_iter=cfg.solver.max_iter)
    rows = [SweepRow(**{k: e[k] for k in
                        ("level", "converged", "linf", "w1p", "l2", "iterations")})
            for e in rep.entries]
    lines = [
        f"levels: {rep.levels}",
        f"stabilized: {rep.stabilized}"
        + (f" at level {rep.stabilization_level}" if rep.stabilized else ""),
    ]
    all_conv = all(e["converged"] for e in rep.entries)
    return ScenarioResult(
        subcommand=cfg.subcommand,
        converged=all_conv,
        summary=_summary_lines(cfg, lines),
        solution=_solution_payload(rep.fields[-1]) if rep.fields else None,
        sweep=rows,
    )


def _sobolev_constant(cfg: ScenarioConfig, problem: ProblemSpec, q: float) -> float:
    if cfg.scenario.sobolev is not None:
        return cfg.scenario.sobolev
    return est.estimate_sobolev_constant(problem.mesh, problem.op.p, q=q)


def _run_fixed_point(cfg: ScenarioConfig) -> ScenarioResult:
    problem = build_problem(cfg)
    rec = problem.exponents
    from .assembly import norm

    q = cfg.scenario.sobolev_q if cfg.scenario.sobolev_q is not None else rec.s
    sob = _sobolev_constant(cfg, problem, q)
    alpha = cfg.scenario.alpha
    a, b = est.ball_coefficients(
        rec, alpha, sob,
        f_norm=norm(problem.f, "lq", rec.m),
        e_norm=norm(problem.E, "lq", rec.r),
    )
    ball = est.invariant_ball(a, b, rec.theta)
    rep = fixed_point_iterate(
        problem, max_iters=cfg.scenario.max_iters, tol=cfg.scenario.fp_tol,
        ball_radius=ball.radius, inner_tol=cfg.solver.tol,
    )
    rows = [FixedPointRow(iter=0, norm_s=rep.iterate_norms[0])]
    for k, nrm in enumerate(rep.iterate_norms[1:], start=1):
        rows.append(FixedPointRow(iter=k, norm_s=nrm, diff_s=rep.differences[k - 1]))
    thr = est.smallness_threshold(rec, alpha, sob)
    data_product = norm(problem.f, "lq", rec.m) * norm(problem.E, "lq", rec.r) ** (
        1.0 / rec.theta
    )
    lines = [
        f"sobolev constant: {sob!r}",
        f"smallness threshold: {thr!r}",
        f"data product ||f||_m ||E||_r^(1/theta): {data_product!r}",
        f"ball: a={ball.a!r} b={ball.b!r} radius={ball.radius!r} "
        f"invariant={ball.invariant}",
        f"converged: {rep.converged} in {rep.iterations} iterations",
        f"all iterates in ball: {rep.all_in_ball}",
    ]
    return ScenarioResult(
        subcommand=cfg.subcommand,
        converged=rep.converged,
        summary=_summary_lines(cfg, lines),
        solution=_solution_payload(rep.field),
        fixed_point=rows,
        extras={
            "radius": ball.radius,
            "invariant": ball.invariant,
            "all_in_ball": rep.all_in_ball,
            "threshold": thr,
            "data_product": data_product,
            "sobolev": sob,
        },
    )


def _run_classify(cfg: ScenarioConfig) -> ScenarioResult:
    prob = cfg.problem
    h = prob.h.build(prob.p)
    g = classify_growth(h, prob.p)
    label = "Divergent" if g.kind == "divergent" else "Bounded"
    lines = [f"growth of S: {label} (method: {g.method})"]
    if g.asymptote is not None:
        lines.append(f"asymptote estimate: {g.asymptote!r}")
    return ScenarioResult(
        subcommand=cfg.subcommand,
        summary=_summary_lines(cfg, lines),
        extras={"kind": g.kind, "method": g.method, "asymptote": g.asymptote},
    )


def _run_threshold(cfg: ScenarioConfig) -> ScenarioResult:
    prob = cfg.problem
    rec = est.exponents(prob.p, prob.dimension, m=cfg.exponents.m,
                        r=cfg.exponents.r, theta=prob.h.theta or None)
    sob = cfg.scenario.sobolev
    if sob is None:
        from .grid import build_mesh

        sob = est.estimate_sobolev_constant(
            build_mesh(prob.dimension, prob.cells), prob.p,
            q=cfg.scenario.sobolev_q if cfg.scenario.sobolev_q is not None else rec.s,
        )
    thr = est.smallness_threshold(rec, cfg.scenario.alpha, sob)
    lines = [
        f"exponents: p'={rec.p_conj!r} p*={rec.p_star!r} (p*)'={rec.p_star_conj!r}",
        f"s: {rec.s!r}  theta: {rec.theta!r}  gamma: {rec.gamma!r}",
        f"alpha: {cfg.scenario.alpha!r}  sobolev: {sob!r}",
        f"threshold: {thr!r}",
    ]
    return ScenarioResult(
        subcommand=cfg.subcommand,
        summary=_summary_lines(cfg, lines),
        extras={
            "threshold": thr, "s": rec.s, "theta": rec.theta,
            "p_star": rec.p_star, "sobolev": sob,
        },
    )


def _run_verify(cfg: ScenarioConfig) -> ScenarioResult:
    problem = build_problem(cfg)
    opts = cfg.solver
    rep = solve_newton(problem, u0=_initial_guess(problem), tol=opts.tol,
                       max_iter=opts.max_iter)
    rec = problem.exponents
    sob = None
    if rec is not None and rec.s is not None:
        sob = _sobolev_constant(cfg, problem, rec.s)
    report = est.verify_bounds(problem, rep.field, rec, sob, newton_tol=opts.tol)
    rows = [
        EstimatePayloadRow(id=r.id, lhs=r.lhs, rhs=r.rhs, slack=r.slack,
                           passed=r.passed)
        for r in report.rows
    ]
    lines = [f"solve converged: {rep.converged}"]
    for r in report.rows:
        lines.append(
            f"{r.id}: lhs={r.lhs!r} rhs={r.rhs!r} "
            f"{'PASS' if r.passed else 'FAIL'}"
        )
    for k, v in report.skipped.items():
        lines.append(f"{k}: skipped ({v})")
    return ScenarioResult(
        subcommand=cfg.subcommand,
        converged=rep.converged,
        summary=_summary_lines(cfg, lines),
        solution=_solution_payload(rep.field),
        trace=_trace_rows(rep),
        estimates=rows,
        extras={"skipped": report.skipped, "all_passed": report.all_passed},
    )


def _run_uniqueness(cfg: ScenarioConfig) -> ScenarioResult:
    problem = build_problem(cfg)
    rng = np.random.default_rng(cfg.scenario.rng_seed)
    seeds = []
    base = _initial_guess(problem)
    for _ in range(cfg.scenario.seeds):
        u = zero_field(problem.mesh)
        vals = u.values
        vals[problem.mesh.interior] = cfg.scenario.seed_scale * rng.standard_normal(
            problem.mesh.interior.size
        )
        if base is not None:
            vals += base.values
        seeds.append(Field(problem.mesh, vals))
    out = uniqueness_experiment(problem, seeds, tol=cfg.solver.tol,
                                max_iter=cfg.solver.max_iter)
    lines = [
        f"seeds: {cfg.scenario.seeds} (excluded non-converged: "
        f"{out['excluded_seeds']})",
        f"max pairwise Lp distance: {out['max_pairwise_distance']!r}",
    ]
    return ScenarioResult(
        subcommand=cfg.subcommand,
        converged=out["excluded_seeds"] == 0,
        summary=_summary_lines(cfg, lines),
        seed_traces=[_trace_rows(r) for r in out["reports"]],
        extras={
            "max_pairwise_distance": out["max_pairwise_distance"],
            "excluded_seeds": out["excluded_seeds"],
        },
    )


_HANDLERS = {
    "solve": _run_solve,
    "sweep": _run_sweep,
    "fixed-point": _run_fixed_point,
    "classify": _run_classify,
    "threshold": _run_threshold,
    "verify": _run_verify,
    "uniqueness": _run_uniqueness,
}
