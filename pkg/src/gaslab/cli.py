"""Command line entry point.

    gaslab verify
    gaslab experiment <gaps|jlm|kpoint|discrepancy> --config FILE --out DIR [--seed S] [--chains K]

Exit codes: 0 success, 1 failure (a verify property or a runtime error),
2 invalid configuration or arguments.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, config_hash, dump, load
from .experiments import CSV_SCHEMA, CSV_VERSION, RUNNERS, Context
from .sampler import worker_count

log = logging.getLogger("gaslab")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def content_version():
    """Git-style hash of the package sources: sha1 over the blob hashes of every module."""
    root = resources.files("gaslab")
    outer = hashlib.sha1()
    for path in sorted(p for p in root.iterdir() if p.name.endswith(".py")):
        data = path.read_bytes()
        blob = hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()
        outer.update(f"{blob} {path.name}\n".encode())
    return outer.hexdigest()


def shipped_config(name):
    """Path of the example configuration shipped for experiment ``name``."""
    return resources.files("gaslab") / "configs" / f"{name}.toml"


def cmd_verify(args):
    from .verify import run_all

    results = run_all(args.only or None)
    width = max(len(r[0]) for r in results)
    print(f"{'property':<{width}}  result  detail")
    for name, ok, detail in results:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL':<6}  {detail}")
    failed = [r[0] for r in results if not r[1]]
    if failed:
        print(f"FAILED: {', '.join(failed)}")
        return EXIT_FAIL
    print(f"all {len(results)} properties hold")
    return EXIT_OK


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x) if np.isfinite(x) else str(float(x))
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _columns(filename):
    if filename.startswith("gaps_N"):
        return CSV_SCHEMA["gaps_N{N}.csv"]
    return CSV_SCHEMA.get(filename)


def cmd_experiment(args):
    try:
        config = load(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    declared = config["experiment"]["name"]
    if declared != args.name:
        print(f"config error: {args.config}: [experiment] name is {declared!r}, "
              f"but {args.name!r} was requested", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        config["sampler"]["seed"] = args.seed
    if args.chains is not None:
        config["sampler"]["chains"] = args.chains

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ctx = Context(config)
    start = time.monotonic()
    try:
        files, summary = RUNNERS[args.name](ctx, out)
    except Exception as exc:
        log.exception("experiment %s failed", args.name)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for w in ctx.warnings:
        print(f"warning: {w}", file=sys.stderr)
    (out / "config.toml").write_text(dump(config))
    manifest = {
        "experiment": args.name,
        "gaslab_version": __version__,
        "content_version": content_version(),
        "config_hash": config_hash(config),
        "config": config,
        "seed": config["sampler"]["seed"],
        "chains": config["sampler"]["chains"],
        "threads": worker_count(config["sampler"]["chains"]),
        "csv_version": CSV_VERSION,
        "outputs": {f: _columns(f) for f in files},
        "results": summary,
        "partial": ctx.partial,
        "warnings": ctx.warnings,
        "runtime_seconds": round(time.monotonic() - start, 3),
    }
    (out / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2))
    print(json.dumps(_jsonable(summary), indent=2))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser():
    p = _Parser(prog="gaslab", description="Coulomb gas sampling and verification")
    p.add_argument("--version", action="version", version=f"gaslab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="run the electrostatic identity suite")
    v.add_argument("--only", nargs="*", help="restrict to these properties")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("experiment", help="run a sampling experiment")
    e.add_argument("name", choices=sorted(RUNNERS))
    e.add_argument("--config", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--seed", type=int)
    e.add_argument("--chains", type=int)
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "chains", None) is not None and args.chains < 1:
        print("error: --chains must be positive", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
