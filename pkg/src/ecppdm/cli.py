"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 transport error, 4 stage error.
"""
from __future__ import annotations

import argparse
import os
import sys

from .config import load_config
from .errors import ConfigError, EcppdmError, FrameError, IncompleteDelivery, StageError
from .pipeline import (
    run_etl,
    run_keygen,
    run_mine,
    run_perturb,
    run_pipeline,
    run_receive,
    run_send,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRANSPORT = 3
EXIT_STAGE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecppdm",
        description="Encrypted multi-source transfer, perturbation, and rule-mining pipeline",
    )
    parser.add_argument("--config", required=True, help="path to the YAML config")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", help="override the output directory")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("keygen", help="write the warehouse key pair")
    p_send = sub.add_parser("send", help="encrypt and transmit one source")
    p_send.add_argument("--source", required=True, help="source id to send")
    sub.add_parser("receive", help="decrypt all arrived batches into staging")
    sub.add_parser("etl", help="merge and clean staged datasets")
    sub.add_parser("perturb", help="apply the perturbation plan")
    sub.add_parser("mine", help="mine rules and write the accuracy report")
    sub.add_parser("pipeline", help="run every stage end to end")
    sub.add_parser("report", help="print the saved accuracy report")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed_override=args.seed, out_override=args.out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "keygen":
            kp = run_keygen(cfg)
            print(f"warehouse public point: ({kp.public_point.x}, {kp.public_point.y})")
        elif args.command == "send":
            run_send(cfg, args.source)
            print(f"sent {args.source}")
        elif args.command == "receive":
            staged = run_receive(cfg)
            if not staged:
                print("warning: no batches arrived; staging is empty", file=sys.stderr)
            else:
                print(f"staged {len(staged)} dataset(s)")
        elif args.command == "etl":
            cleaned = run_etl(cfg)
            print(f"cleaned dataset: {len(cleaned)} rows")
        elif args.command == "perturb":
            perturbed = run_perturb(cfg)
            print(f"perturbed dataset: {len(perturbed)} rows")
        elif args.command == "mine":
            report = run_mine(cfg)
            print(report.to_table(), end="")
        elif args.command == "pipeline":
            report = run_pipeline(cfg)
            print(report.to_table(), end="")
        elif args.command == "report":
            path = os.path.join(cfg.out_dir, "report.txt")
            if not os.path.exists(path):
                print("no report found; run 'mine' or 'pipeline' first", file=sys.stderr)
                return EXIT_STAGE
            with open(path) as f:
                print(f.read(), end="")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (FrameError, IncompleteDelivery, ConnectionError, OSError) as e:
        print(f"transport error: {e}", file=sys.stderr)
        return EXIT_TRANSPORT
    except StageError as e:
        print(f"pipeline error: {e}", file=sys.stderr)
        return EXIT_STAGE
    except EcppdmError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
