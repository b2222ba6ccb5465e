"""HTTP service wrapping the scenario handlers.

POST /run takes a full scenario config (subcommand included); the
per-subcommand endpoints take the same payload minus the subcommand.
Responses are ScenarioResult JSON. Validation errors map to 422.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import __version__
from .config import ConfigError, ScenarioConfig, SUBCOMMANDS, validate
from .scenarios import ScenarioResult, run_scenario

app = FastAPI(
    title="qlep",
    description="Quasi-linear elliptic solves with superlinear convection, "
    "plus a-priori estimate verification.",
    version=__version__,
)


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


def _run(cfg: ScenarioConfig) -> ScenarioResult:
    try:
        validate(cfg)
        return run_scenario(cfg)
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.post("/run", response_model=ScenarioResult)
def run(cfg: ScenarioConfig) -> ScenarioResult:
    return _run(cfg)


def _make_endpoint(name: str):
    def endpoint(cfg: ScenarioConfig) -> ScenarioResult:
        cfg = cfg.model_copy(update={"subcommand": name})
        return _run(cfg)

    endpoint.__name__ = f"run_{name.replace('-', '_')}"
    return endpoint


for _name in SUBCOMMANDS:
    app.post(f"/{_name}", response_model=ScenarioResult)(_make_endpoint(_name))
