"""Command-line entry point: one subcommand per experiment kind, plus ``run CONFIG``.

Exit codes: 0 success, 1 configuration error, 2 failed acceptance checks
(only with --check) or failed tasks.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ConfigError, load_config, make_config
from .kinds import KINDS
from .runner import run

log = logging.getLogger("rbising")

# common flag -> parameter name
_COMMON = {"dim": "dim", "size": "size", "sizes": "sizes", "j": "J", "jprime": "Jp", "samples": "samples"}
_EXTRA = {
    "metastate": [("--provenance", "provenance"), ("--bc", "bc"), ("--provider", "provider")],
    "gs-recurrence": [("--sequence", "sequence"), ("--delta", "delta")],
    "fe-survey": [("--tau", "tau")],
    "stacked-census": [("--deltas", "deltas")],
    "overlap": [("--delta", "delta")],
}


def _add_common(p):
    p.add_argument("--dim", type=int)
    p.add_argument("--size", type=int)
    p.add_argument("--sizes", help="comma or space separated list")
    p.add_argument("--j", type=float, help="bulk coupling J (negative = ferromagnetic)")
    p.add_argument("--jprime", type=float, help="boundary coupling J'")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--samples", type=int)
    p.add_argument("--workers", type=int, help="worker processes (default from RBISING_WORKERS, else 1)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--check", action="store_true", help="exit 2 unless every acceptance check passes")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="any other parameter of the experiment")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbising", description="Random-boundary Ising experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        _add_common(p)
        for flag, _ in _EXTRA.get(kind, []):
            p.add_argument(flag)
    p = sub.add_parser("run", help="run an experiment from a config file")
    p.add_argument("config")
    _add_common(p)
    return parser


def _overrides(args, kind) -> dict:
    params = {}
    for flag, name in _COMMON.items():
        val = getattr(args, flag)
        if val is not None:
            params[name] = val
    for flag, name in _EXTRA.get(kind, []):
        val = getattr(args, flag.lstrip("-").replace("-", "_"), None)
        if val is not None:
            params[name] = val
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        params[key.strip()] = val.strip()
    return params


def config_from_args(args):
    if args.command == "run":
        base = load_config(args.config)
        params = {**base.params, **_overrides(args, base.kind)}
        return make_config(
            base.kind, params,
            base.master_seed if args.seed is None else args.seed,
            base.workers if args.workers is None else args.workers,
            args.out or base.out,
        )
    return make_config(args.command, _overrides(args, args.command), args.seed or 0, args.workers, args.out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    result = run(cfg, progress=(lambda d, n: log.info("%d/%d tasks", d, n)) if args.verbose else None)
    if result.failures:
        print(json.dumps({"failures": result.failures}), file=sys.stderr)
        return 2
    summary = {k: v for k, v in result.report.items() if k not in ("metastate", "histograms")}
    print(json.dumps({"out": cfg.out, "new_tasks": result.n_new, **summary}, sort_keys=True, default=str))
    for name, ok in result.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    if args.check and not result.passed:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
