"""Command line interface: one subcommand per pipeline stage.

Configuration comes from a TOML file; a handful of flags override it.
Exit codes: 0 success, 2 validation failure (bad input/config, missing
upstream artifact), 1 internal error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import traceback
from pathlib import Path

from .geom import GeometryError
from .ingest import IngestError
from .pipeline import (
    PipelineConfig,
    PipelineError,
    cmd_cluster,
    cmd_convert,
    cmd_pipeline,
    cmd_rsca,
    cmd_select,
    cmd_stats,
    cmd_tags,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("parkbeam")

STAGE_COMMANDS = {
    "select": cmd_select,
    "convert": cmd_convert,
    "rsca": cmd_rsca,
    "cluster": cmd_cluster,
    "stats": cmd_stats,
    "tags": cmd_tags,
    "pipeline": cmd_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parkbeam",
        description="Assign antenna-level mobile traffic to urban zones and profile them.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    synth_p = sub.add_parser("synth", help="generate a synthetic scenario with ground truth")
    synth_p.add_argument("--config", type=Path, help="TOML file with a [synth] table")
    synth_p.add_argument("--out", type=Path, help="output directory (overrides config)")
    synth_p.add_argument("--seed", type=int, help="override scenario seed")

    for name in STAGE_COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} stage")
        p.add_argument("--config", type=Path, required=True, help="pipeline TOML config")
        p.add_argument("--alpha", type=float, help="step-1 illumination threshold")
        p.add_argument("--beta", type=float, help="step-2 zone illumination threshold")
        p.add_argument("--gamma", type=float, help="step-3 coverage quality threshold")
        p.add_argument("--min-users", type=int, dest="min_users", help="eligibility user floor")
        p.add_argument("--seed", type=int, help="clustering seed")
        p.add_argument("--k", type=int, help="fixed cluster count (skips selection)")
        p.add_argument("--threads", type=int, help="worker threads (or PARKBEAM_THREADS)")
        p.add_argument("--output-dir", dest="output_dir", help="artifact directory override")
    return parser


def _resolve_threads(args) -> int | None:
    if getattr(args, "threads", None) is not None:
        return args.threads
    env = os.environ.get("PARKBEAM_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise PipelineError(f"PARKBEAM_THREADS must be an integer, got {env!r}")
    return None


def _run_synth(args) -> int:
    from . import synth

    doc = {}
    base_dir = Path.cwd()
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                doc = tomllib.load(fh)
        except FileNotFoundError:
            raise PipelineError(f"config file not found: {args.config}")
        base_dir = args.config.parent
    section = doc.get("synth", {})
    config = synth.config_from_dict(section)
    if args.seed is not None:
        config = synth.config_from_dict({**section, "seed": args.seed})
    out_dir = args.out or (base_dir / section.get("out_dir", "scenario"))
    bookkeeping = synth.generate(config, out_dir)
    print(
        f"scenario written to {out_dir}: {bookkeeping['n_antennas']} antennas, "
        f"{bookkeeping['n_zones']} zones, {bookkeeping['n_traffic_rows']} traffic rows"
    )
    print(f"run: parkbeam pipeline --config {Path(out_dir) / 'scenario.toml'}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            return _run_synth(args)
        overrides = {
            "alpha": args.alpha,
            "beta": args.beta,
            "gamma": args.gamma,
            "min_users": args.min_users,
            "seed": args.seed,
            "k": args.k,
            "threads": _resolve_threads(args),
            "output_dir": args.output_dir,
        }
        cfg = PipelineConfig.from_toml(args.config, overrides)
        STAGE_COMMANDS[args.command](cfg)
        print(f"{args.command}: artifacts in {cfg.output_dir}")
        return 0
    except (PipelineError, IngestError, GeometryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
