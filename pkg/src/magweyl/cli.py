"""Command-line entry point: ``magweyl <kind> --config <path>``."""
from __future__ import annotations

import argparse
import json
import sys

from threadpoolctl import threadpool_limits

from .experiments import KINDS, ConfigError, emit_plots, load_config, run_experiment
from .moyal import DEFAULT_NODE_BUDGET
from .schatten import SizeLimitError


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="magweyl", description="Magnetic Weyl calculus experiments.")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--config", required=True, help="config file or bundled config name")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--threads", type=int, default=None, help="BLAS/FFT thread cap")
    p.add_argument("--max-quadrature-nodes", type=float, default=DEFAULT_NODE_BUDGET,
                   help="node budget for quadrature-heavy checks")
    p.add_argument("--no-plots", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error at {exc.pointer or '/'}: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if cfg["kind"] != args.kind:
        print(f"config error at /kind: config is for {cfg['kind']!r}, not {args.kind!r}", file=sys.stderr)
        return 2
    try:
        with threadpool_limits(limits=args.threads):
            manifest = run_experiment(cfg, args.out, args.max_quadrature_nodes)
    except SizeLimitError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return 2
    if not args.no_plots:
        emit_plots(manifest)
    for c in manifest.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status}  {c.name}: {c.value:.3e} ({c.relation} {c.tolerance:g})")
    if manifest.error:
        print(f"ERROR  {manifest.error}")
    print(f"{'PASS' if manifest.passed else 'FAIL'}  {manifest.name} -> {manifest.out_dir}")
    return 0 if manifest.passed else 1


if __name__ == "__main__":
    sys.exit(main())
