"""Command-line front door.

Exit codes: 0 success, 2 input/validation problem, 3 backend failure.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path

from .config import AppConfig
from .errors import BackendError, PromptGridError, ValidationError
from .extraction import load_vocabularies
from .model import canonical_json, validate_session_input
from .pipeline import Pipeline, PipelineResult
from .tables import render_html, render_json, render_linear, render_markdown

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BACKEND = 3

_RENDERERS = {
    "json": render_json,
    "html": render_html,
    "linear": render_linear,
    "markdown": render_markdown,
}

_OUT_FILES = {
    "json": "tables.json",
    "html": "tables.html",
    "linear": "tables.txt",
    "markdown": "tables.md",
}


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=["live", "record", "replay"], default=None,
                        help="gateway mode (default: replay)")
    parser.add_argument("--fixtures", default=None, help="fixture store directory")
    parser.add_argument("--config", default=None, help="JSON config file")


def _load_config(args: argparse.Namespace, **extra) -> AppConfig:
    return AppConfig.load(
        args.config,
        backend_mode=args.backend,
        fixtures_dir=args.fixtures,
        **extra,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promptgrid",
        description="Describe and compare text-to-image candidates as accessible tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    describe = sub.add_parser("describe", help="run the full pipeline for a prompt and images")
    describe.add_argument("-p", "--prompt", required=True)
    describe.add_argument("-i", "--images", nargs="+", required=True, metavar="IMAGE")
    describe.add_argument("--format", choices=sorted(_RENDERERS), default="json")
    describe.add_argument("--out", default=None, help="directory for all renders and the session snapshot")
    describe.add_argument("--vocab-dir", default=None)
    _add_backend_flags(describe)

    ask = sub.add_parser("ask", help="ask a follow-up question on a saved session")
    ask.add_argument("session_dir", help="directory written by describe --out")
    ask.add_argument("question")
    ask.add_argument("--table", choices=["verification", "content", "style"], default=None,
                     help="table the new row is appended to (default: content)")
    _add_backend_flags(ask)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--storage", default=None, help="session storage directory")
    serve.add_argument("--static", default=None, help="directory with the web UI bundle")
    _add_backend_flags(serve)

    return parser


def _write_outputs(out_dir: Path, result: PipelineResult) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    tableset = result.tables()
    for fmt, renderer in _RENDERERS.items():
        (out_dir / _OUT_FILES[fmt]).write_text(renderer(tableset), "utf-8")
    snapshot = {"status": result.session.status.value, "result": result.to_dict()}
    (out_dir / "session.json").write_text(canonical_json(snapshot) + "\n", "utf-8")


def cmd_describe(args: argparse.Namespace) -> int:
    config = _load_config(args)
    gateway = config.build_gateway()
    vocabularies = load_vocabularies(args.vocab_dir or config.vocab_dir)
    pipeline = Pipeline(
        gateway,
        vocabularies=vocabularies,
        detection_threshold=config.detection_threshold,
        parallelism=config.parallelism,
    )
    session = validate_session_input(args.prompt, args.images)
    result = pipeline.run(session)
    sys.stdout.write(_RENDERERS[args.format](result.tables()))
    if args.out:
        _write_outputs(Path(args.out), result)
    return EXIT_OK


def cmd_ask(args: argparse.Namespace) -> int:
    snapshot_path = Path(args.session_dir) / "session.json"
    if not snapshot_path.exists():
        raise ValidationError(f"no saved session at {snapshot_path}")
    snapshot = json.loads(snapshot_path.read_text("utf-8"))
    if not snapshot.get("result"):
        raise ValidationError(f"session at {args.session_dir} is not ready")
    result = PipelineResult.from_dict(snapshot["result"])

    config = _load_config(args)
    pipeline = Pipeline(
        config.build_gateway(),
        detection_threshold=config.detection_threshold,
        parallelism=config.parallelism,
    )
    result, row = pipeline.ask(
        result, args.question, host_table=args.table or config.default_host_table
    )
    sys.stdout.write(json.dumps(row.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n")
    _write_outputs(Path(args.session_dir), result)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import logging
    import signal
    import threading

    import uvicorn

    from .service import create_app  # deferred: fastapi import is serve-only

    config = _load_config(args, storage_dir=args.storage)
    app = create_app(config, static_dir=args.static)

    # One structured line per session event on stdout.
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stdout)

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((args.host, args.port))
    except OSError as exc:
        sock.close()
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    host, port = sock.getsockname()[:2]
    print(f"promptgrid service listening on http://{host}:{port}", flush=True)

    # Run the server off the main thread so we own signal handling: a
    # SIGTERM/SIGINT triggers a graceful shutdown and a clean zero exit.
    server = uvicorn.Server(uvicorn.Config(app, log_level="info"))

    def request_shutdown(_signum, _frame):
        server.should_exit = True

    signal.signal(signal.SIGTERM, request_shutdown)
    signal.signal(signal.SIGINT, request_shutdown)

    worker = threading.Thread(target=server.run, kwargs={"sockets": [sock]}, daemon=True)
    worker.start()
    while worker.is_alive():
        worker.join(timeout=0.2)
    logging.shutdown()
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"describe": cmd_describe, "ask": cmd_ask, "serve": cmd_serve}
    try:
        return handlers[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BackendError as exc:
        print(f"backend error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except PromptGridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
