"""Command-line client.

    qlep <subcommand> --config scenario.toml [--out DIR] [--threads K]
                      [--server URL]
    qlep serve [--host H] [--port P]

Subcommands: solve, sweep, fixed-point, classify, threshold, verify,
uniqueness. Computation runs in-process by default; with --server the
config is POSTed to a running qlep service and only report emission
happens locally.

Exit codes: 0 success, 2 config/validation error, 3 solver
non-convergence, 4 unwritable output.
"""

from __future__ import annotations

import argparse
import sys

from .config import SUBCOMMANDS, ConfigError, load_config
from .reports import OutputError, emit_report
from .scenarios import ScenarioResult, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_OUTPUT = 4


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qlep",
        description="Quasi-linear elliptic solves with superlinear convection.",
    )
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML scenario file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads (kept fixed for reproducibility)")
        p.add_argument("--server", default=None,
                       help="base URL of a running qlep service")
    srv = sub.add_parser("serve")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    return ap


def _run_remote(server: str, cfg) -> ScenarioResult:
    import httpx

    resp = httpx.post(f"{server.rstrip('/')}/run", json=cfg.model_dump(),
                      timeout=600.0)
    if resp.status_code == 422:
        raise ConfigError(resp.json().get("detail", resp.text))
    resp.raise_for_status()
    return ScenarioResult.model_validate(resp.json())


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.subcommand == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK

    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.subcommand)
        if args.server:
            result = _run_remote(args.server, cfg)
        else:
            result = run_scenario(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        written = emit_report(result, args.out)
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT

    print(result.summary, end="")
    for path in written:
        print(f"wrote {path}")
    if not result.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
