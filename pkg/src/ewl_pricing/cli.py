"""Command-line entry point.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from typing import Sequence

from .config import COMMANDS, ConfigError, RunConfig, load_config_file
from .experiments import run_sweep
from .market_simulator import POLICY_KINDS, run_episode
from .reporting import RenderError, render_charts, write_results

log = logging.getLogger("ewl_pricing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ewl-pricing",
        description="Earning-while-learning pricing simulator for a single airline leg.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    helps = {
        "episode": "simulate one episode and write its trace",
        "sweep-eta": "sweep the trade-off parameter with random true frat5",
        "sweep-frat5": "compare greedy and unified pricing on a grid of true frat5",
        "detailed": "offered-fare and estimate histograms at a few true frat5 values",
        "render": "render SVG charts from the CSVs in --out",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name], argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="flat 'key = value' config file")
        p.add_argument("--out", help="output directory (default: results)")
        if name != "render":
            p.add_argument("--seed", type=int)
            p.add_argument("--eta", type=float, help="trade-off weight (default 2167)")
            p.add_argument("--frat5", type=float, help="true frat5 (episode) or single grid point")
            p.add_argument("--policy", choices=POLICY_KINDS, help="episode policy")
            p.add_argument("--scale", choices=("desk", "paper"),
                           help="desk (minutes) or paper (hours) sizes")
            p.add_argument("--workers", type=int)
            p.add_argument("--episodes", type=int, help="episodes per experiment point")
    return parser


def parse_cli(args: Sequence[str]) -> RunConfig:
    """Merge CLI flags over the config file over built-in defaults."""
    parser = build_parser()
    if not args:
        parser.print_help(sys.stderr)
        raise SystemExit(2)
    ns = vars(parser.parse_args(list(args)))
    command = ns.pop("command")
    if command is None:
        parser.print_help(sys.stderr)
        raise SystemExit(2)
    merged: dict = {}
    try:
        config_path = ns.pop("config", None)
        if config_path is not None:
            merged.update(load_config_file(config_path))
        merged.update(ns)
        merged["command"] = command
        return RunConfig.from_dict(merged)
    except ConfigError as exc:
        parser.error(str(exc))


def execute(cfg: RunConfig) -> list:
    if cfg.command == "render":
        return render_charts(cfg.out)
    start = time.perf_counter()
    if cfg.command == "episode":
        result = run_episode(cfg.episode_config())
    else:
        spec = cfg.sweep_spec()
        if cfg.scale == "paper":
            log.warning("paper-scale preset: expect many hours of compute")
        result = run_sweep(spec)
    return write_results(result, cfg.out, cfg.to_dict(), time.perf_counter() - start)


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    cfg = parse_cli(sys.argv[1:] if argv is None else argv)
    try:
        paths = execute(cfg)
    except (RenderError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
