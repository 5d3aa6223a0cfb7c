"""Command line: ``saladrl {train,evaluate,play,aggregate}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .agents.gating import GATINGS
from .engine import WorldError
from .harness import AGENTS, RunConfig, aggregate, evaluate, play, resolve_level, train
from .harness.metrics import write_aggregate


def _level(text: str):
    return int(text) if text.isdigit() else text


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="saladrl", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train agents and write metrics")
    t.add_argument("--config", type=Path, help="TOML run config; flags below override it")
    t.add_argument("--level", type=_level, help="level number 1-7 or a level file")
    t.add_argument("--agent", choices=AGENTS)
    t.add_argument("--gating", choices=GATINGS)
    t.add_argument("--mask-threshold", type=float)
    t.add_argument("--heads", type=int)
    t.add_argument("--seed", type=int, action="append", help="repeat for several seeds")
    t.add_argument("--steps", type=int)
    t.add_argument("--oracle-gating", action=argparse.BooleanOptionalAction, default=None)
    t.add_argument("--eps-anneal", type=int, help="steps over which epsilon decays to its floor")
    t.add_argument("--out", type=str)

    e = sub.add_parser("evaluate", help="greedy rollouts of a checkpoint")
    e.add_argument("checkpoint", type=Path)
    e.add_argument("--level", type=_level)
    e.add_argument("--episodes", type=int, default=10)

    pl = sub.add_parser("play", help="play a level in the terminal")
    pl.add_argument("--level", type=_level, default=1)

    a = sub.add_parser("aggregate", help="smooth and average per-seed metrics")
    a.add_argument("run_dir", type=Path)
    a.add_argument("--window", type=int, default=20_000)
    a.add_argument("--grid", type=int, default=1000)
    a.add_argument("--out", type=Path, help="default: <run_dir>/aggregate.csv")
    return p


def run_config_from_args(args) -> RunConfig:
    run = RunConfig.load(args.config) if args.config else RunConfig()
    data = run.to_dict()
    agent = data["agent_cfg"]
    for flag, key in (("level", "level"), ("agent", "agent"), ("steps", "steps"), ("out", "out"),
                      ("oracle_gating", "oracle_gating")):
        if getattr(args, flag) is not None:
            data[key] = getattr(args, flag)
    if args.seed:
        data["seeds"] = args.seed
    for flag, key in (("gating", "gating"), ("mask_threshold", "mask_threshold"), ("heads", "heads"),
                      ("eps_anneal", "eps_anneal_steps")):
        if getattr(args, flag) is not None:
            agent[key] = getattr(args, flag)
    return RunConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "train":
            out = train(run_config_from_args(args))
            print(f"run written to {out}")
        elif args.command == "evaluate":
            for line in evaluate(args.checkpoint, args.level, args.episodes).lines():
                print(line)
        elif args.command == "play":
            play(resolve_level(args.level))
        elif args.command == "aggregate":
            paths = sorted(args.run_dir.glob("metrics_seed*.csv"))
            if not paths:
                raise FileNotFoundError(f"no metrics_seed*.csv files in {args.run_dir}")
            dest = args.out or args.run_dir / "aggregate.csv"
            write_aggregate(aggregate(paths, args.window, args.grid), dest)
            print(f"aggregate written to {dest}")
    except (ValueError, WorldError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
