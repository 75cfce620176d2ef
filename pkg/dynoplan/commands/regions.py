"""
Regions Command - envelope report for fitted option regions.

Usage:
- dynoplan regions --model results/regions.json --demos results/demos.jsonl [--out DIR]

Writes regions_report.json (per-option log-likelihood summary, confusion
counts, accuracy) and regions_overlap.csv.
"""

import logging
from typing import Dict, Sequence

import numpy as np

from ..core.errors import DemonstrationError, DimensionMismatchError
from ..data.models import DemonstrationSet
from ..db.artifacts import ArtifactStore, load_demonstrations, load_regions
from ..learning.regions import GaussianMixtureRegions, region_overlap
from .config import apply_overrides, load_config

logger = logging.getLogger(__name__)


def register(subparsers, parents: Sequence = ()):
    parser = subparsers.add_parser("regions", parents=list(parents), help="Report on fitted option regions")
    parser.add_argument("--model", required=True, help="regions file written by 'fit gmm' or 'run'")
    parser.add_argument("--demos", required=True, help="held-out trajectory line file")
    parser.set_defaults(handler=cmd_regions, config_required=False)
    return parser


def regions_report(regions: GaussianMixtureRegions, demos: DemonstrationSet, density_floor: float) -> Dict:
    """
    Likelihood summary, confusion counts, accuracy and overlap matrix for
    the labeled states of demos.
    """
    if len(demos) == 0:
        raise DemonstrationError("Regions report needs at least one demonstration")
    if demos.dimension != regions.dimension:
        raise DimensionMismatchError(
            f"Demonstrations have dimension {demos.dimension}, regions expect {regions.dimension}"
        )
    X = demos.states_array()
    labels = demos.option_labels()
    option_ids = regions.option_ids

    likelihood = {}
    for option_id in option_ids:
        own = X[labels == option_id]
        if len(own) == 0:
            continue
        logs = regions.log_option_likelihood(own, option_id)
        likelihood[str(option_id)] = {
            "states": int(len(own)),
            "min": float(np.min(logs)),
            "median": float(np.median(logs)),
            "max": float(np.max(logs)),
        }

    predicted = regions.classify(X)
    confusion = {
        str(actual): {str(guess): int(np.sum((labels == actual) & (predicted == guess))) for guess in option_ids}
        for actual in option_ids
    }
    overlap = [[region_overlap(a, b, regions, density_floor, X) for b in option_ids] for a in option_ids]

    return {
        "option_ids": option_ids,
        "states": int(len(X)),
        "accuracy": float(np.mean(predicted == labels)),
        "log_likelihood": likelihood,
        "confusion": confusion,
        "overlap": overlap,
        "density_floor": density_floor,
    }


def write_regions_report(store: ArtifactStore, regions: GaussianMixtureRegions,
                         demos: DemonstrationSet, density_floor: float) -> Dict:
    report = regions_report(regions, demos, density_floor)
    store.write_json("regions_report.json", report)
    option_ids = report["option_ids"]
    rows = [[a] + row for a, row in zip(option_ids, report["overlap"])]
    store.write_csv("regions_overlap.csv", ["option_id"] + [str(o) for o in option_ids], rows)
    logger.info(f"Regions classify {report['states']} held-out states with accuracy {report['accuracy']:.3f}")
    return report


def cmd_regions(args) -> int:
    config = apply_overrides(load_config(args.config), output_dir=args.out)
    regions = load_regions(args.model)
    demos = load_demonstrations(args.demos)
    write_regions_report(ArtifactStore(config.output_dir), regions, demos, config.regions.density_floor)
    return 0
