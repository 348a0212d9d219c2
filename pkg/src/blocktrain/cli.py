"""Command-line entry point: serve, sim, verify, tamper-demo."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from typing import Optional

from . import chain as chain_mod
from .rules import BlocktrainError, GameConfig, config_from_dict
from .sim import (
    DEFAULT_SECONDS_PER_TURN,
    aggregate,
    duration_band,
    run_episodes,
    simulation_report,
)


def _setup_logging() -> None:
    level = os.environ.get("BLOCKTRAIN_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO))


def _load_config(path: Optional[str]) -> GameConfig:
    if path is None:
        return GameConfig(players=5)
    with open(path, "r", encoding="utf-8") as handle:
        return config_from_dict(json.load(handle))


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import Settings, create_app

    host, _, port = args.addr.rpartition(":")
    if not host or not port.isdigit():
        print(f"error: --addr must be HOST:PORT, got {args.addr!r}", file=sys.stderr)
        return 2
    app = create_app(
        Settings(
            ledger_path=args.ledger,
            journal_dir=args.journal_dir,
            turn_timeout=args.turn_timeout,
        )
    )
    uvicorn.run(app, host=host, port=int(port), log_level="info")
    return 0


def cmd_sim(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    stats = run_episodes(
        config, args.policy, args.episodes, args.seed, workers=args.workers
    )
    agg = aggregate(stats, args.seed, args.policy, args.seconds_per_turn)
    report = simulation_report(config, agg)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as handle:
            json.dump(report, handle, indent=2, sort_keys=True)
            handle.write("\n")
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(
                ["episode", "seed", "total_turns", "fill_turns", "validation_turns", "wagons_validated"]
            )
            for i, ep in enumerate(stats):
                writer.writerow(
                    [i, ep.seed, ep.total_turns, sum(ep.fill_turns), sum(ep.validation_turns), ep.wagons_validated]
                )
    low, high = duration_band(agg)
    print(f"episodes:          {agg.episodes}")
    print(f"mean total turns:  {agg.total_turns.mean:.2f} (sd {agg.total_turns.stddev:.2f})")
    print(
        f"estimated minutes: {agg.estimated_minutes:.1f} at {agg.seconds_per_turn:.0f} s/turn"
    )
    print(f"duration band:     {low:.1f}-{high:.1f} min at 15-25 s/turn")
    print("calibration ref:   ~20 min typical for a human-played game")
    if args.report:
        print(f"report written:    {args.report}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    results = chain_mod.verify_ledger(args.ledger)
    if not results:
        print("ledger is empty")
        return 0
    bad = 0
    for i, result in enumerate(results):
        if result.valid:
            print(f"chain {i}: Valid")
        else:
            bad += 1
            print(
                f"chain {i}: Invalid at block {result.first_bad_index} ({result.reason})"
            )
    return 1 if bad else 0


def cmd_tamper_demo(args: argparse.Namespace) -> int:
    chains = chain_mod.load_ledger(args.ledger)
    if not 0 <= args.chain < len(chains):
        print(f"error: ledger has {len(chains)} chains, no chain {args.chain}", file=sys.stderr)
        return 2
    target = chains[args.chain]
    before = chain_mod.verify_chain(target)
    tampered = chain_mod.tamper(target, args.block, args.field)
    after = chain_mod.verify_chain(tampered)
    print(f"chain {args.chain} before tampering: {'Valid' if before.valid else 'Invalid'}")
    print(f"tampered block {args.block} field {args.field!r}")
    if after.valid:
        print("after tampering: still Valid (unexpected!)")
        return 1
    print(
        f"after tampering: Invalid at block {after.first_bad_index} ({after.reason}) "
        "- every peer re-verifying the chain notices"
    )
    if args.out:
        chains[args.chain] = tampered
        with open(args.out, "w", encoding="utf-8"):
            pass  # truncate
        for c in chains:
            chain_mod.append_chain(args.out, c)
        print(f"tampered ledger written: {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blocktrain")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the multiplayer service")
    serve.add_argument("--addr", default="127.0.0.1:8000", help="HOST:PORT to bind")
    serve.add_argument("--ledger", default="blocktrain-ledger.jsonl", help="ledger file path")
    serve.add_argument("--journal-dir", default=None, help="directory for session journals")
    serve.add_argument(
        "--turn-timeout",
        type=float,
        default=None,
        help="seconds to hold a disconnected seat's turn before auto-playing",
    )
    serve.set_defaults(func=cmd_serve)

    sim = sub.add_parser("sim", help="run Monte Carlo episodes and report stats")
    sim.add_argument("--config", default=None, help="game config JSON file")
    sim.add_argument("--episodes", type=int, default=1000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--policy", default="uniform_random_legal")
    sim.add_argument("--report", default=None, help="write simreport_v1 JSON here")
    sim.add_argument("--csv", default=None, help="write per-episode CSV here")
    sim.add_argument("--seconds-per-turn", type=float, default=DEFAULT_SECONDS_PER_TURN)
    sim.add_argument("--workers", type=int, default=1)
    sim.set_defaults(func=cmd_sim)

    verify = sub.add_parser("verify", help="verify every chain in a ledger file")
    verify.add_argument("--ledger", required=True)
    verify.set_defaults(func=cmd_verify)

    demo = sub.add_parser("tamper-demo", help="alter one block field and show detection")
    demo.add_argument("--ledger", required=True)
    demo.add_argument("--chain", type=int, default=0)
    demo.add_argument("--block", type=int, required=True)
    demo.add_argument("--field", required=True, help="block field to perturb")
    demo.add_argument("--out", default=None, help="optionally write the tampered ledger here")
    demo.set_defaults(func=cmd_tamper_demo)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BlocktrainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
