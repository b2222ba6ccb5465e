import numpy as np
from fastapi.testclient import TestClient

from qlep.service import app

client = TestClient(app)


def _solve_payload(**overrides):
    payload = {
        "subcommand": "solve",
        "problem": {
            "dimension": 1,
            "cells": 16,
            "p": 2.0,
            "h": {"family": "power", "theta": 1.0},
            "E": {"kind": "constant", "value": [1.0]},
            "f": {"kind": "constant", "value": 2.0},
        },
    }
    payload.update(overrides)
    return payload


def test_health():
    resp = client.get("/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert "version" in body


def test_run_solve():
    resp = client.post("/run", json=_solve_payload())
    assert resp.status_code == 200
    body = resp.json()
    assert body["subcommand"] == "solve"
    assert body["converged"] is True
    assert body["solution"] is not None
    assert len(body["trace"]) >= 2
    # values round-trip as exact floats through JSON
    vals = np.array(body["solution"]["values"])
    assert vals.shape == (17,)
    assert np.all(np.abs(vals) <= 0.3)


def test_subcommand_endpoint_overrides_field():
    # posting to /classify runs classify no matter what the body says
    resp = client.post("/classify", json=_solve_payload(subcommand="solve"))
    assert resp.status_code == 200
    body = resp.json()
    assert body["subcommand"] == "classify"
    assert body["extras"]["kind"] == "bounded"


def test_threshold_endpoint_reference_instance():
    payload = _solve_payload(subcommand="threshold")
    payload["problem"].update(
        dimension=3, cells=4,
        E={"kind": "constant", "value": [1.0, 0.0, 0.0]},
    )
    payload["exponents"] = {"m": 1.2, "r": 6.0}
    payload["scenario"] = {"sobolev": 1.0, "alpha": 1.0}
    resp = client.post("/threshold", json=payload)
    assert resp.status_code == 200
    extras = resp.json()["extras"]
    assert extras["threshold"] == 0.25
    assert extras["s"] == 6.0
    assert extras["theta"] == 1.0


def test_semantic_validation_maps_to_422():
    payload = _solve_payload(subcommand="sweep")  # no levels supplied
    resp = client.post("/run", json=payload)
    assert resp.status_code == 422
    assert "levels" in resp.json()["detail"]


def test_pydantic_validation_maps_to_422():
    payload = _solve_payload()
    payload["problem"]["p"] = 1.5
    resp = client.post("/run", json=payload)
    assert resp.status_code == 422
