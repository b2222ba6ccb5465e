"""Scenario configuration: pydantic models, TOML loading, validation.

A scenario file looks like

    [problem]
    dimension = 1
    cells = 64
    p = 2.0
    mu = 0.0

    [problem.h]
    family = "power"
    theta = 1.0

    [problem.E]
    kind = "constant"
    value = [1.0]

    [problem.f]
    kind = "constant"
    value = 2.0

    [exponents]
    m = 1.2
    r = 6.0

    [solver]
    tol = 1e-11
    max_iter = 50

    [scenario]
    levels = [1.0, 2.0, 4.0]
    seeds = 5

Scalar/vector data descriptors support constant values, per-axis
polynomial products, tabulated CSV, and (for f) a manufactured right-hand
side derived from a closed-form exact solution.
"""

from __future__ import annotations

import sys
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field as PField, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import assembly, grid
from .operators import OperatorSpec, default_regularization, p_laplacian
from .profiles import HSpec


class ConfigError(ValueError):
    """Invalid or inconsistent scenario configuration."""


class HConfig(BaseModel):
    family: Literal["power", "power_mu", "log", "linear", "zero"]
    theta: float = 0.0

    def build(self, p: float) -> HSpec:
        return HSpec(self.family, theta=self.theta, p=p)


class PolyAxes(BaseModel):
    """Product of one polynomial per axis; coefficients in ascending powers."""

    kind: Literal["poly"] = "poly"
    axes: list[list[float]]

    def evaluate(self, coords: np.ndarray) -> np.ndarray:
        out = np.ones(coords.shape[0])
        for d, coeffs in enumerate(self.axes):
            out *= np.polynomial.polynomial.polyval(coords[:, d], coeffs)
        return out

    def sympy_expr(self, xs):
        import sympy as sym

        expr = sym.Integer(1)
        for d, coeffs in enumerate(self.axes):
            expr *= sum(
                sym.nsimplify(c) * xs[d] ** k for k, c in enumerate(coeffs)
            )
        return expr


class ConstantScalar(BaseModel):
    kind: Literal["constant"] = "constant"
    value: float

    def evaluate(self, coords: np.ndarray) -> np.ndarray:
        return np.full(coords.shape[0], self.value)

    def sympy_expr(self, xs):
        import sympy as sym

        return sym.nsimplify(self.value)


class CsvScalar(BaseModel):
    kind: Literal["csv"] = "csv"
    path: str


class ManufacturedRhs(BaseModel):
    """f derived symbolically so that u_exact solves the problem."""

    kind: Literal["manufactured"] = "manufactured"
    u_exact: PolyAxes


ScalarDescriptor = Union[ConstantScalar, PolyAxes, CsvScalar, ManufacturedRhs]


class ConstantVector(BaseModel):
    kind: Literal["constant"] = "constant"
    value: list[float]

    def sympy_components(self, xs):
        import sympy as sym

        return [sym.nsimplify(v) for v in self.value]


class PolyVector(BaseModel):
    kind: Literal["poly"] = "poly"
    components: list[PolyAxes]

    def sympy_components(self, xs):
        return [c.sympy_expr(xs) for c in self.components]


class CsvVector(BaseModel):
    kind: Literal["csv"] = "csv"
    path: str


VectorDescriptor = Union[ConstantVector, PolyVector, CsvVector]


class ProblemConfig(BaseModel):
    dimension: int
    cells: int
    p: float = 2.0
    mu: float = 0.0
    epsilon: Optional[float] = None  # None = automatic regularization
    h: HConfig
    E: VectorDescriptor = PField(discriminator="kind")
    f: ScalarDescriptor = PField(discriminator="kind")

    @model_validator(mode="after")
    def _check(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if self.cells < 2:
            raise ValueError("cells must be >= 2")
        if self.p < 2:
            raise ValueError("p must be >= 2")
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if self.h.family in ("power", "power_mu") and self.h.theta <= 0:
            raise ValueError("power families need theta > 0")
        if isinstance(self.E, ConstantVector) and len(self.E.value) != self.dimension:
            raise ValueError("E constant has wrong number of components")
        if isinstance(self.E, PolyVector) and len(self.E.components) != self.dimension:
            raise ValueError("E poly has wrong number of components")
        return self


class ExponentConfig(BaseModel):
    m: Optional[float] = None
    r: Optional[float] = None


class SolverOptions(BaseModel):
    tol: float = 1e-11
    max_iter: int = 50

    @model_validator(mode="after")
    def _check(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        return self


class ScenarioOptions(BaseModel):
    levels: list[float] = PField(default_factory=list)
    seeds: int = 5
    seed_scale: float = 0.1
    rng_seed: int = 0
    max_iters: int = 50  # fixed-point iterations
    fp_tol: float = 1e-8
    alpha: float = 1.0  # coercivity constant for thresholds
    sobolev: Optional[float] = None  # None = estimate on the mesh
    sobolev_q: Optional[float] = None  # None = s from the exponent record


SUBCOMMANDS = (
    "solve", "sweep", "fixed-point", "classify", "threshold", "verify",
    "uniqueness",
)


class ScenarioConfig(BaseModel):
    subcommand: str
    problem: ProblemConfig
    exponents: ExponentConfig = PField(default_factory=ExponentConfig)
    solver: SolverOptions = PField(default_factory=SolverOptions)
    scenario: ScenarioOptions = PField(default_factory=ScenarioOptions)


def load_config(path: str, subcommand: str) -> ScenarioConfig:
    """Parse a TOML scenario file; raise ConfigError with a useful message."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raw["subcommand"] = subcommand
    try:
        cfg = ScenarioConfig.model_validate(raw)
    except Exception as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    validate(cfg)
    return cfg


def validate(cfg: ScenarioConfig) -> None:
    """Cross-field preconditions, checked before any compute starts."""
    if cfg.subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {cfg.subcommand!r}")
    prob = cfg.problem
    N, p = prob.dimension, prob.p
    if cfg.subcommand == "sweep":
        lv = cfg.scenario.levels
        if len(lv) < 1:
            raise ConfigError("sweep needs a nonempty levels list")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise ConfigError("sweep levels must be strictly increasing")
        if any(x <= 0 for x in lv):
            raise ConfigError("sweep levels must be positive")
    if cfg.subcommand in ("fixed-point", "threshold"):
        m, r = cfg.exponents.m, cfg.exponents.r
        if m is None or r is None:
            raise ConfigError(f"{cfg.subcommand} needs [exponents] m and r")
        if N <= p:
            raise ConfigError(
                f"N = {N} <= p = {p}: the critical exponent p* degenerates"
            )
        if N <= m * p:
            raise ConfigError(
                f"N = {N} <= m*p = {m * p}: the L^s exponent s = Nm/(N-mp) degenerates"
            )
        if (p - 1.0) / N - 1.0 / r <= 0:
            raise ConfigError("(p-1)/N - 1/r must be positive")
        if prob.h.family != "power":
            raise ConfigError(f"{cfg.subcommand} expects the power family")
    if cfg.subcommand == "fixed-point" and cfg.scenario.max_iters < 1:
        raise ConfigError("max_iters must be >= 1")
    if prob.mu > 0 and prob.h.family == "power_mu":
        if prob.h.theta >= (p - 1.0) / N:
            raise ConfigError(
                f"theta = {prob.h.theta} >= (p-1)/N = {(p - 1.0) / N}; "
                "the lower-order-term scenario requires theta < (p-1)/N"
            )
    if cfg.subcommand == "uniqueness" and cfg.scenario.seeds < 2:
        raise ConfigError("uniqueness needs at least 2 seeds")


# ---------------------------------------------------------------------------
# realization on a mesh


def _read_csv_column(path: str, mesh: grid.Mesh, ncols: int) -> np.ndarray:
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    data = np.atleast_2d(data)
    if data.shape != (mesh.num_nodes, mesh.dim + ncols):
        raise ConfigError(
            f"{path}: expected {mesh.num_nodes} rows x {mesh.dim + ncols} cols, "
            f"got {data.shape}"
        )
    if not np.allclose(data[:, : mesh.dim], mesh.coords):
        raise ConfigError(f"{path}: node coordinates do not match the mesh")
    return data[:, mesh.dim:]


def realize_scalar(desc: ScalarDescriptor, mesh: grid.Mesh,
                   prob: Optional[ProblemConfig] = None) -> grid.Field:
    if isinstance(desc, (ConstantScalar, PolyAxes)):
        return grid.Field(mesh, desc.evaluate(mesh.coords))
    if isinstance(desc, CsvScalar):
        return grid.Field(mesh, _read_csv_column(desc.path, mesh, 1)[:, 0])
    if isinstance(desc, ManufacturedRhs):
        if prob is None:
            raise ConfigError("manufactured f needs the problem context")
        op = build_operator(prob, mesh)
        e_field_desc = prob.E
        if isinstance(e_field_desc, CsvVector):
            raise ConfigError("manufactured f needs a closed-form E")
        return assembly.manufacture_rhs(
            op, prob.h.build(prob.p), e_field_desc, desc.u_exact, mesh, mu=prob.mu
        )
    raise ConfigError(f"unsupported scalar descriptor {desc!r}")


def realize_vector(desc: VectorDescriptor, mesh: grid.Mesh) -> grid.VectorField:
    if isinstance(desc, ConstantVector):
        return grid.constant_vector_field(mesh, desc.value)
    if isinstance(desc, PolyVector):
        cols = [c.evaluate(mesh.coords) for c in desc.components]
        return grid.VectorField(mesh, np.stack(cols, axis=1))
    if isinstance(desc, CsvVector):
        return grid.VectorField(mesh, _read_csv_column(desc.path, mesh, mesh.dim))
    raise ConfigError(f"unsupported vector descriptor {desc!r}")


def build_operator(prob: ProblemConfig, mesh: grid.Mesh) -> OperatorSpec:
    eps = prob.epsilon
    if eps is None:
        eps = 0.0 if prob.p == 2.0 else default_regularization(mesh.dim, mesh.spacing)
    return p_laplacian(prob.p, eps=eps)


def build_problem(cfg: ScenarioConfig):
    """Realize the configured problem on its mesh; returns a ProblemSpec."""
    from . import estimates as est
    from .solver import ProblemSpec

    prob = cfg.problem
    mesh = grid.build_mesh(prob.dimension, prob.cells)
    op = build_operator(prob, mesh)
    h = prob.h.build(prob.p)
    E = realize_vector(prob.E, mesh)
    f = realize_scalar(prob.f, mesh, prob)
    rec = None
    if cfg.exponents.m is not None or cfg.exponents.r is not None:
        theta = prob.h.theta if prob.h.family in ("power", "power_mu") else None
        rec = est.exponents(prob.p, prob.dimension, m=cfg.exponents.m,
                            r=cfg.exponents.r, theta=theta)
    return ProblemSpec(mesh=mesh, op=op, h=h, E=E, f=f, mu=prob.mu,
                       exponents=rec)
