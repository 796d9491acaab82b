"""
GICS toolkit — command line entry point.

Usage:
  python app.py run                          # full pipeline on the paper-sim preset
  python app.py run --config paper-exp --seed 3 --out runs/exp-3
  python app.py acquire|build|solve|cgi|compare --config my_run.json
  python app.py sweep --jobs 8               # efficiency sweep, local process pool
  python app.py sweep --remote               # efficiency sweep, one Modal container per cell
  python app.py reference                    # configuration schema with all defaults

Exit status: 0 on success, 2 on any domain error (printed as `error [stage]: message`).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from errors import GICSError, StageError
from pipeline.orchestrator import STAGES, run_pipeline, run_stage, run_sweep
from pipeline.settings import config_reference, load_config


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="paper-sim", help="config file or preset name (default: paper-sim)")
    common.add_argument("--seed", type=int, default=None, help="master seed, overrides the config")
    common.add_argument("--out", default=None, help="output directory, overrides the config")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="gics", description="Fourier-transform ghost imaging via compressive sampling")
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in STAGES:
        sub.add_parser(stage, parents=[common], help=f"run the {stage} stage only")
    sub.add_parser("run", parents=[common], help="acquire -> build -> solve -> cgi -> compare")
    sweep = sub.add_parser("sweep", parents=[common], help="reconstruction quality against shot count")
    sweep.add_argument("--jobs", type=int, default=1, help="local worker processes")
    sweep.add_argument("--remote", action="store_true", help="run cells on Modal")
    sub.add_parser("reference", help="print the configuration reference (JSON schema)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)

    if args.command == "reference":
        print(json.dumps(config_reference(), indent=2))
        return 0

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    stage = "config"
    try:
        config = load_config(args.config).with_overrides(seed=args.seed, output_dir=args.out)

        print(f"\n{'=' * 70}")
        print(f"  GICS  {args.command}")
        print(f"  Run    : {config.name}")
        print(f"  Seed   : {config.seed}")
        print(f"  Output : {config.output_dir}")
        print(f"{'=' * 70}")

        if args.command == "run":
            return run_pipeline(config)
        if args.command == "sweep":
            stage = "sweep"
            table = run_sweep(config, jobs=args.jobs, remote=args.remote)
            print(table.to_string(index=False))
            return 0
        stage = args.command
        return run_stage(config, args.command)
    except StageError as exc:
        print(f"error [{exc.stage}]: {exc.cause}", file=sys.stderr)
        return 2
    except GICSError as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
