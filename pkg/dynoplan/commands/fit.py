"""
Fit Commands - goal heuristic and option regions from demonstrations.

Usage:
- dynoplan fit goal --demos demos.jsonl [--config FILE] [--out DIR]
- dynoplan fit gmm --demos demos.jsonl [--config FILE] [--out DIR]

fit goal writes goal_model.json and goal_fit_report.csv (monotonicity per
trajectory). fit gmm writes regions.json, gmm_fit_report.csv (mean
log-likelihood per EM iteration) and gmm_fit_summary.json.
"""

import logging
from typing import Sequence

from ..db.artifacts import ArtifactStore, load_demonstrations
from ..learning.goal import fit_goal_heuristic
from ..learning.regions import GaussianMixtureRegions, assign_components, fit_gmm
from .config import apply_overrides, load_config
from .pipeline import goal_report_rows

logger = logging.getLogger(__name__)


def register(subparsers, parents: Sequence = ()):
    parser = subparsers.add_parser("fit", help="Fit a model from demonstrations")
    models = parser.add_subparsers(dest="model", metavar="{goal,gmm}")
    models.required = True

    goal = models.add_parser("goal", parents=list(parents), help="Fit the goal heuristic")
    goal.add_argument("--demos", required=True, help="trajectory line file")
    goal.set_defaults(handler=cmd_fit_goal, config_required=False)

    gmm = models.add_parser("gmm", parents=list(parents), help="Fit Gaussian mixture option regions")
    gmm.add_argument("--demos", required=True, help="trajectory line file")
    gmm.set_defaults(handler=cmd_fit_gmm, config_required=False)
    return parser


def cmd_fit_goal(args) -> int:
    config = apply_overrides(load_config(args.config), output_dir=args.out)
    demos = load_demonstrations(args.demos)
    heuristic = fit_goal_heuristic(demos, config.goal_fit)

    store = ArtifactStore(config.output_dir)
    store.save_goal("goal_model.json", heuristic)
    rows = goal_report_rows(heuristic, demos)
    store.write_csv(
        "goal_fit_report.csv",
        ["trajectory_id", "steps", "monotonicity", "degenerate", "mean_abs_deviation"],
        rows,
    )
    worst = min(row[2] for row in rows)
    logger.info(f"Goal heuristic written to {store.path('goal_model.json')} (lowest monotonicity {worst:.4f})")
    return 0


def cmd_fit_gmm(args) -> int:
    config = apply_overrides(load_config(args.config), output_dir=args.out)
    demos = load_demonstrations(args.demos)
    labels = demos.option_labels()
    n_components = config.em.n_components or 3 * len(set(int(label) for label in labels))
    mixture, responsibilities = fit_gmm(demos.states_array(), config.em, n_components)
    regions = GaussianMixtureRegions.build(mixture, assign_components(responsibilities, labels))

    store = ArtifactStore(config.output_dir)
    store.save_regions("regions.json", regions)
    store.write_csv(
        "gmm_fit_report.csv",
        ["iteration", "mean_log_likelihood"],
        enumerate(mixture.log_likelihood_history),
    )
    store.write_json("gmm_fit_summary.json", {
        "components": mixture.n_components,
        "iterations": mixture.iterations,
        "converged": mixture.converged,
        "final_mean_log_likelihood": mixture.log_likelihood_history[-1],
        "repaired_components": mixture.repaired_components,
        "duplicated": {str(k): v for k, v in sorted(regions.duplicated.items())},
        "assignment": {str(o): c for o, c in sorted(regions.assignment.items())},
    })
    return 0
