"""Command-line front end.

The CLI is a thin client over the HTTP service: every command ships its
request to the service layer and renders the response.  By default the
service runs in-process (no socket, no daemon); ``--server`` points the same
commands at a remote instance instead.

Exit codes: 0 success, 1 config error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import pathlib
import sys

import httpx

from .pipeline import write_files

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

EXIT_BY_KIND = {"config": EXIT_CONFIG, "data": EXIT_DATA, "numeric": EXIT_NUMERIC}


class _Parser(argparse.ArgumentParser):
    # usage mistakes are config-class failures, not argparse's default 2
    def error(self, message):
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


class ServiceClient:
    """POSTs to a remote server when given one, else to the in-process app."""

    def __init__(self, server: str | None = None):
        self.server = server

    def post(self, path: str, payload: dict) -> httpx.Response:
        if self.server is not None:
            with httpx.Client(base_url=self.server, timeout=600.0) as client:
                return client.post(path, json=payload)
        return asyncio.run(self._post_in_process(path, payload))

    async def _post_in_process(self, path: str, payload: dict) -> httpx.Response:
        from .service import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://trifolio.local", timeout=600.0
        ) as client:
            return await client.post(path, json=payload)


def _read_config_file(path: str) -> dict:
    try:
        text = pathlib.Path(path).read_text()
    except OSError as exc:
        raise SystemExit(_fail(f"cannot read config {path}: {exc}", EXIT_CONFIG))
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemExit(_fail(f"config {path} is not valid JSON: {exc}", EXIT_CONFIG))
    if not isinstance(raw, dict):
        raise SystemExit(_fail(f"config {path}: top level must be an object", EXIT_CONFIG))
    return raw


def _fail(message: str, code: int) -> int:
    print(message, file=sys.stderr)
    return code


def _error_exit(body: dict) -> int:
    stage = body.get("stage", "request")
    kind = body.get("kind", "config")
    message = body.get("message", "unknown error")
    return _fail(f"error in stage '{stage}': {message}", EXIT_BY_KIND.get(kind, EXIT_CONFIG))


def _post_or_fail(client: ServiceClient, path: str, payload: dict):
    try:
        return client.post(path, payload)
    except httpx.HTTPError as exc:
        raise SystemExit(_fail(f"cannot reach service: {exc}", EXIT_DATA))


def cmd_run(args) -> int:
    raw = _read_config_file(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out is not None:
        raw["output_dir"] = args.out
    out_dir = raw.get("output_dir", "output")

    response = _post_or_fail(ServiceClient(args.server), "/run", {"config": raw})
    if response.status_code != 200:
        return _error_exit(response.json())

    body = response.json()
    try:
        names = write_files(body["files"], out_dir)
    except OSError as exc:
        return _fail(f"cannot write artifacts to {out_dir}: {exc}", EXIT_DATA)
    print(f"wrote {len(names)} files to {out_dir}")
    print(body["files"]["performance.csv"], end="")
    return EXIT_OK


def cmd_validate(args) -> int:
    raw = _read_config_file(args.config)
    response = _post_or_fail(ServiceClient(args.server), "/validate", {"config": raw})
    if response.status_code != 200:
        return _error_exit(response.json())
    violations = response.json()["violations"]
    if violations:
        for violation in violations:
            print(violation, file=sys.stderr)
        return EXIT_CONFIG
    print("config ok")
    return EXIT_OK


def cmd_fetch(args) -> int:
    raw = _read_config_file(args.config)
    response = _post_or_fail(ServiceClient(args.server), "/fetch", {"config": raw})
    if response.status_code != 200:
        return _error_exit(response.json())
    body = response.json()
    print(f"cached {len(body['cached'])} tickers in {body['cache_dir']}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("trifolio.service:app", host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trifolio", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a full run and write its artifacts")
    run.add_argument("--config", required=True, help="path to a run config JSON file")
    run.add_argument("--out", help="output directory (overrides the config)")
    run.add_argument("--seed", type=int, help="seed override")
    run.add_argument("--server", help="remote service URL; default runs in-process")
    run.set_defaults(func=cmd_run)

    validate = sub.add_parser("validate", help="check a config file and list violations")
    validate.add_argument("--config", required=True)
    validate.add_argument("--server")
    validate.set_defaults(func=cmd_validate)

    fetch = sub.add_parser("fetch", help="populate the price cache, nothing else")
    fetch.add_argument("--config", required=True)
    fetch.add_argument("--server")
    fetch.set_defaults(func=cmd_fetch)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
