"""
Demonstration Command

Usage:
- dynoplan gen-demos --config configs/assembly.json [--seed N] [--out DIR]

Writes demos.jsonl in the trajectory line format.
"""

import logging
from typing import Sequence

from ..db.artifacts import ArtifactStore
from .config import apply_overrides, load_config
from .pipeline import task_demonstrations

logger = logging.getLogger(__name__)


def register(subparsers, parents: Sequence = ()):
    parser = subparsers.add_parser("gen-demos", parents=list(parents), help="Generate expert demonstrations")
    parser.set_defaults(handler=cmd_gen_demos, config_required=False)
    return parser


def cmd_gen_demos(args) -> int:
    config = apply_overrides(load_config(args.config), args.seed, args.out)
    demos = task_demonstrations(config)
    store = ArtifactStore(config.output_dir)
    store.save_demonstrations("demos.jsonl", demos)
    logger.info(f"Wrote {len(demos)} {config.task} demonstrations "
                f"({demos.regenerated} regenerated) to {store.path('demos.jsonl')}")
    return 0
