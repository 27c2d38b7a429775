"""Command line entry point.

Subcommands:
  serve    run the HTTP service
  expand   print a template's Cartesian cells and single-change chain order
  metrics  compute exploration metrics for a saved session directory
  mockgen  render deterministic mock images to disk

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .errors import DuplicateValue, EmptyValue, EngineError

_PLACEHOLDER = re.compile(r"\{([^{}]+)\}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="promptmap")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.add_argument("--data-dir", default=None)
    serve.add_argument("--backend", choices=["mock", "remote"], default=None)
    serve.add_argument("--backend-url", default=None)
    serve.add_argument("--api-key", default=None)
    serve.add_argument("--static-dir", default=None)
    serve.add_argument("--heartbeat", type=float, default=None,
                       help="SSE heartbeat interval in seconds")

    expand = sub.add_parser("expand", help="expand a prompt template")
    expand.add_argument("--template", required=True,
                        help='prompt with {name} placeholders, e.g. "a {x} pet"')
    expand.add_argument("--dim", action="append", default=[], metavar="NAME=V1,V2",
                        help="values for one placeholder; repeatable")

    metrics = sub.add_parser("metrics", help="metrics for a saved session")
    metrics.add_argument("session_dir")
    metrics.add_argument("--bin", type=int, default=60,
                         help="histogram bin width in seconds")

    mockgen = sub.add_parser("mockgen", help="render deterministic mock images")
    mockgen.add_argument("--prompt", required=True)
    mockgen.add_argument("--n", type=int, default=4)
    mockgen.add_argument("--seed", type=int, default=None)
    mockgen.add_argument("--width", type=int, default=512)
    mockgen.add_argument("--height", type=int, default=512)
    mockgen.add_argument("--out", required=True)

    return parser


def _run_serve(args: argparse.Namespace) -> int:
    from .service import ServerConfig, start_server

    config = ServerConfig.from_env()
    if args.host:
        config.host = args.host
    if args.port is not None:
        config.port = args.port
    if args.data_dir:
        config.data_dir = Path(args.data_dir)
    if args.backend:
        config.backend.kind = args.backend
    if args.backend_url:
        config.backend.base_url = args.backend_url
    if args.api_key:
        config.backend.auth_token = args.api_key
    if args.static_dir:
        config.static_dir = Path(args.static_dir)
    if args.heartbeat is not None:
        config.heartbeat_seconds = args.heartbeat
    return start_server(config)


def _run_expand(args: argparse.Namespace) -> int:
    from . import subspace as sub
    from .subspace import Dimension, Placeholder, Subspace, Template, instantiate

    values_by_name: dict[str, list[str]] = {}
    for spec in args.dim:
        name, eq, values = spec.partition("=")
        if not eq or not name:
            raise _UsageError(f"--dim needs NAME=V1,V2 form, got {spec!r}")
        if name in values_by_name:
            raise _UsageError(f"--dim {name} given twice")
        values_by_name[name] = [v for v in values.split(",")]

    names = _PLACEHOLDER.findall(args.template)
    if len(set(names)) != len(names):
        raise _UsageError("each placeholder may appear only once")
    missing = [n for n in names if n not in values_by_name]
    if missing:
        raise _UsageError(f"no --dim given for placeholder(s): {', '.join(missing)}")
    unused = [n for n in values_by_name if n not in names]
    if unused:
        raise _UsageError(f"--dim without matching placeholder: {', '.join(unused)}")

    # Build the base text by substituting each placeholder's first value,
    # tracking the spans the dimensions bind to.
    base = ""
    cursor = 0
    dims: list[Dimension] = []
    placeholders: list[Placeholder] = []
    for i, match in enumerate(_PLACEHOLDER.finditer(args.template)):
        name = match.group(1)
        values = values_by_name[name]
        for v in values:
            if not v:
                raise EmptyValue(f"dimension {name!r} has an empty value")
        if len(set(values)) != len(values):
            raise DuplicateValue(f"dimension {name!r} has duplicate values")
        base += args.template[cursor:match.start()]
        start = len(base)
        base += values[0]
        placeholders.append(Placeholder(start, len(base), f"d{i}"))
        dims.append(Dimension(dimension_id=f"d{i}", name=name,
                              color_index=i % sub.PALETTE_SLOTS, values=list(values)))
        cursor = match.end()
    base += args.template[cursor:]

    space = Subspace(template=Template(base_text=base, placeholders=placeholders),
                     dimensions=dims)
    cells = instantiate(space)
    chain = sub.gray_order(space.radices())
    out = {
        "dimensions": [{"name": d.name, "values": d.values} for d in dims],
        "cells": [{"coords": list(c.coords), "text": c.prompt_text} for c in cells],
        "chain": [
            {"coords": list(coords),
             "text": sub.cell_text(space, coords)}
            for coords in chain
        ],
    }
    print(json.dumps(out, indent=2))
    return 0


def _run_metrics(args: argparse.Namespace) -> int:
    from .analytics import compute_metrics
    from .store import load_session

    session = load_session(Path(args.session_dir))
    metrics = compute_metrics(session, args.bin)
    print(json.dumps(metrics.to_dict(), indent=2, sort_keys=True))
    return 0


def _run_mockgen(args: argparse.Namespace) -> int:
    from .graph import GenParams
    from .mockgen import content_hash, mock_generate

    params = GenParams(image_count=args.n, seed=args.seed,
                       width=args.width, height=args.height).validate()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    blobs = mock_generate(args.prompt, params)
    manifest = []
    for i, data in enumerate(blobs):
        path = out_dir / f"mock_{i:03d}.png"
        path.write_bytes(data)
        manifest.append({"file": str(path), "content_hash": content_hash(data),
                         "byte_length": len(data)})
    print(json.dumps({"prompt": args.prompt, "images": manifest}, indent=2))
    return 0


class _UsageError(Exception):
    pass


_USAGE_ERRORS = (DuplicateValue, EmptyValue, _UsageError)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "serve": _run_serve,
        "expand": _run_expand,
        "metrics": _run_metrics,
        "mockgen": _run_mockgen,
    }
    try:
        return handlers[args.command](args)
    except _USAGE_ERRORS as exc:
        name = type(exc).__name__ if not isinstance(exc, _UsageError) else "usage error"
        print(f"error: {name}: {exc}", file=sys.stderr)
        return 2
    except EngineError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
