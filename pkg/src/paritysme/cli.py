"""Command-line entry point: ``paritysme <scenario> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 acceptance failure (``selfcheck`` only).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import acceptance
from . import pointer_fields as pf
from . import scenarios as sc
from . import sme

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paritysme", description="Three-qubit parity readout simulations.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON scenario configuration")
    common.add_argument("--seed", type=_u64, help="base seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--workers", type=_positive, help="worker processes for trajectory ensembles")
    common.add_argument("--fast", action="store_true", help=f"{sc.FAST_TRAJECTORIES} trajectories per ensemble")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in sc.SCENARIOS + ("selfcheck",):
        sub.add_parser(name, parents=[common])
    return parser


def _selfcheck(args) -> int:
    n = sc.FAST_TRAJECTORIES if args.fast else acceptance.REFERENCE_N
    results = acceptance.selfcheck(n=n, seed=args.seed or 0, workers=args.workers, echo=print)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        payload = {
            "n_trajectories": n,
            "criteria": [{"number": r.number, "title": r.title, "passed": r.passed, "detail": r.detail}
                         for r in results],
        }
        (args.out / "summary.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_ACCEPTANCE if failed else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "selfcheck":
            return _selfcheck(args)
        cfg = sc.load_config(args.config, args.command)
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": args.seed})
        out = args.out or Path("runs") / f"{args.command}-{cfg.seed}"
        summary = sc.run_scenario(cfg, out, workers=args.workers, fast=args.fast)
    except (sc.ConfigError, pf.CalibrationError, pf.StepSizeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (sme.NumericalError, pf.SingularSteadyState, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote {out} ({summary['scenario']})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
