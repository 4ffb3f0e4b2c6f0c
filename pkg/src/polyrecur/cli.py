"""Command-line entry point."""

from __future__ import annotations

import argparse
import sys

from .pipeline import DATA_STAGES, load_config, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyrecur",
        description="Polyp-recurrence extraction and time-to-event pipeline")
    parser.add_argument("--config", required=True,
                        help="path to the JSON pipeline config")
    parser.add_argument("--out", default=None,
                        help="output directory (overrides the config)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker count for forest growth")
    parser.add_argument("--stage", choices=("synth",) + DATA_STAGES,
                        default=None,
                        help="run a single stage against existing artifacts")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the run seed")
    parser.add_argument("--render-svg", action="store_true",
                        help="render matplotlib SVG figures beside the CSVs")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = load_config(args.config, out_override=args.out,
                         seed_override=args.seed,
                         threads_override=args.threads,
                         render_svg=args.render_svg)
    return run(config, only_stage=args.stage)


if __name__ == "__main__":
    sys.exit(main())
