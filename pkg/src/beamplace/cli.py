"""Command line entry point: ``beamplace run | example1 | validate``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from .balancer import refine
from .coverage_graph import CoverageGraph, build_graph, enumerate_cliques, expand_dictionary, select_min_beams
from .scenario import ALGORITHMS, ConfigError, example1_config, load_config, load_example1, run, write_outputs

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4

log = logging.getLogger("beamplace")


def _setup_logging() -> None:
    level = os.environ.get("BEAM_LOG", "WARNING").upper()
    if level.isdigit():
        lvl = int(level)
    else:
        lvl = getattr(logging, level, None)
        if not isinstance(lvl, int):
            lvl = logging.WARNING
    logging.basicConfig(level=lvl, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _one_based(partition) -> str:
    return ", ".join("(" + ",".join(str(k + 1) for k in group) + ")" for group in partition)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.trials is not None:
            overrides["n_trials"] = args.trials
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.algorithms is not None:
            overrides["algorithms"] = tuple(a.strip() for a in args.algorithms.split(",") if a.strip())
        if overrides:
            cfg = replace(cfg, **overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    doc = run(cfg, workers=args.workers)
    try:
        paths = write_outputs(doc, args.out)
    except OSError as exc:
        print(f"cannot write results: {exc}", file=sys.stderr)
        return EXIT_IO

    for row in doc["summary"]:
        print(f"{row['algorithm']:>14} K={row['K']:<3d} min CNR {row['min_cnr_db']:7.3f} dB  "
              f"avg CNR {row['avg_cnr_db']:7.3f} dB  load gap {row['avg_load_gap']:6.3f}  "
              f"beams {row['avg_n_beams']:6.3f}")
    log.info("wrote %s", ", ".join(str(p) for p in paths))
    if doc["violations"]:
        print(f"{len(doc['violations'])} plans exceed max_beams={cfg.max_beams}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_example1(args: argparse.Namespace) -> int:
    data = load_example1()
    cfg = example1_config()
    users = list(cfg.users)
    g = build_graph(users, cfg.satellite, cfg.half_beamwidth)
    published = CoverageGraph.from_adjacency(data["adjacency"])
    if not (g.adjacency == published.adjacency).all():
        print("fixture coordinates no longer realize the toy adjacency matrix", file=sys.stderr)
        return EXIT_CONFIG
    catalog = enumerate_cliques(g)
    for size in sorted(catalog.by_size):
        print(f"H{size}: {_one_based(catalog.by_size[size])}")
    candidates = expand_dictionary(catalog)
    for i, cand in enumerate(sorted(candidates, key=len), 1):
        print(f"candidate {i} ({len(cand)} beams): {_one_based(cand)}")
    plan = select_min_beams(candidates, users)
    print(f"stage 1: |B| = {plan.n_beams}: {_one_based(plan.partition())}")
    res = refine(plan, users, g)
    status = "kept stage-1 plan" if res.fallback else f"accepted restart {res.accepted_restart}"
    print(f"stage 2 ({status}): {_one_based(res.plan.partition())}")
    for b, beam in enumerate(res.plan.beams):
        print(f"  beam {b + 1}: center ({beam.center.lat:.4f}, {beam.center.lon:.4f})")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"ok: K={list(cfg.n_users)}, {cfg.n_trials} trials, algorithms {', '.join(cfg.algorithms)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beamplace", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a Monte-Carlo scenario and write result files")
    p.add_argument("--config", required=True, help="YAML or JSON scenario file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--trials", type=int, help="override n_trials")
    p.add_argument("--seed", type=int, help="override seed")
    p.add_argument("--algorithms", help=f"comma list from {','.join(ALGORITHMS)}")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("example1", help="run the pinned 10-user example and print the partition")
    p.set_defaults(func=cmd_example1)

    p = sub.add_parser("validate", help="check a scenario file against the schema")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
