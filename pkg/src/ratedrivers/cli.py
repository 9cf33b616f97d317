"""Command-line entry point: staged pipeline verbs over a declarative config."""

from __future__ import annotations

import argparse
import json
import sys

from . import pipeline as pl


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratedrivers",
        description=(
            "Turn rated reviews into aspects, aspect-sentiment vectors, and an "
            "explained rating classifier."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    stage_help = {
        "ingest": "read and validate the raw reviews file",
        "preprocess": "segment sentences, clean tokens, build the vocabulary",
        "topics": "train the topic model (optionally after a TPE search)",
        "sentiment": "score sentence sentiment and log-odds values",
        "features": "assemble per-review aspect-sentiment vectors",
        "train": "cross-validate the classifiers and fit final models",
        "explain": "compute gain and Shapley attributions with figures",
        "report": "apply topic labels and assemble the report artifacts",
        "run": "run every stage in order",
    }
    for name in (*pl.STAGES, "run"):
        p = sub.add_parser(name, help=stage_help[name])
        p.add_argument("--config", required=True, help="pipeline config file (key = value sections)")
        p.add_argument("--seed", type=int, default=None, help="override the [run] seed")
        p.add_argument("--out", default=None, help="override the output directory")
        if name in ("topics", "run"):
            p.add_argument(
                "--hpo",
                action="store_true",
                help="search (K, alpha, eta) by TPE instead of using fixed values",
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = pl.load_config(args.config, seed_override=args.seed, out_override=args.out)
    except pl.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    force_hpo = bool(getattr(args, "hpo", False))
    try:
        if args.command == "run":
            manifest = pl.run_pipeline(cfg, force_hpo=force_hpo)
            print(json.dumps(manifest.output_digests(), indent=2, sort_keys=True))
        else:
            info = pl.run_stage(cfg, args.command, force_hpo=force_hpo)
            print(json.dumps({args.command: info}, indent=2, sort_keys=True, default=str))
    except pl.StageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
