"""Report emission: CSV files and the text summary.

Fixed schemas:
  solution.csv   coord_1..coord_N, value
  trace.csv      iter, residual_norm, step_length
  sweep.csv      level, linf, w1p
  estimates.csv  id, lhs, rhs, slack, pass
  fixed_point.csv iter, norm_s, diff_s

Floats are written with repr so a re-imported solution is bitwise
identical to the field that produced it.
"""

from __future__ import annotations

import os

import numpy as np

from .grid import Field, Mesh
from .scenarios import ScenarioResult


class OutputError(OSError):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))  # shortest string that round-trips bitwise
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def _write(path: str, header: list[str], rows) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path!r}: {exc}") from exc


def write_solution_csv(path: str, coords, values) -> None:
    dim = len(coords[0])
    header = [f"coord_{d + 1}" for d in range(dim)] + ["value"]
    _write(path, header, (list(c) + [v] for c, v in zip(coords, values)))


def read_solution_csv(path: str, mesh: Mesh) -> Field:
    """Re-import a solution CSV written for this mesh (bitwise round trip)."""
    values = np.empty(mesh.num_nodes)
    with open(path) as fh:
        header = fh.readline()
        ncols = len(header.strip().split(","))
        if ncols != mesh.dim + 1:
            raise ValueError(f"{path}: expected {mesh.dim + 1} columns")
        for i, line in enumerate(fh):
            parts = line.strip().split(",")
            values[i] = float(parts[-1])
    return Field(mesh, values)


def _trace_rows(trace) -> list[list]:
    return [[t.iter, t.residual_norm, t.step_length] for t in trace]


def emit_report(result: ScenarioResult, out_dir: str) -> list[str]:
    """Write every artifact of a scenario result; returns the paths."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out_dir!r}: {exc}") from exc
    written = []

    def path(name: str) -> str:
        p = os.path.join(out_dir, name)
        written.append(p)
        return p

    try:
        with open(path("summary.txt"), "w") as fh:
            fh.write(result.summary)
    except OSError as exc:
        raise OutputError(f"cannot write summary: {exc}") from exc

    if result.solution is not None:
        write_solution_csv(
            path("solution.csv"), result.solution.coords, result.solution.values
        )
    if result.trace or result.subcommand in ("solve", "verify"):
        _write(path("trace.csv"), ["iter", "residual_norm", "step_length"],
               _trace_rows(result.trace))
    for i, tr in enumerate(result.seed_traces):
        _write(path(f"trace_seed_{i}.csv"),
               ["iter", "residual_norm", "step_length"], _trace_rows(tr))
    if result.sweep:
        _write(path("sweep.csv"), ["level", "linf", "w1p"],
               ([r.level, r.linf, r.w1p] for r in result.sweep))
    if result.fixed_point:
        _write(path("fixed_point.csv"), ["iter", "norm_s", "diff_s"],
               ([r.iter, r.norm_s, r.diff_s] for r in result.fixed_point))
    if result.estimates:
        _write(path("estimates.csv"), ["id", "lhs", "rhs", "slack", "pass"],
               ([r.id, r.lhs, r.rhs, r.slack, r.passed] for r in result.estimates))
    return written
