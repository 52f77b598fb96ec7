"""simulate: Monte Carlo trials on a synthetic data-generating process"""
import argparse
import logging

from ...core.config import settings
from ...repositories.results_repository import write_results_csv
from ...services.datagen_service import parse_case
from ...services.experiment_service import build_config, run_experiment
from ..options import (
    OptionResolver,
    add_alpha_option,
    add_config_option,
    add_methods_option,
    add_optimizer_options,
)

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="run trials on a synthetic case")
    add_config_option(parser)
    parser.add_argument("--case", choices=["1", "2", "3", "individual"])
    add_alpha_option(parser)
    parser.add_argument("--n-train", type=int)
    parser.add_argument("--n-holdout", type=int)
    parser.add_argument("--n-test", type=int)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--split-seed", type=int)
    add_methods_option(parser)
    add_optimizer_options(parser)
    parser.add_argument("--ygrid-count", type=int)
    parser.add_argument("--target-ess", type=float)
    parser.add_argument("--n-scores", type=int, help="number of ridge submodels in case 3")
    parser.add_argument("--record-timing", action="store_true", help="write wall times instead of 0")
    parser.add_argument("--out", type=str)
    parser.set_defaults(handler=handle)


def experiment_values(options: OptionResolver) -> dict:
    """Values shared by simulate and conditional"""
    return dict(
        case=parse_case(options.require("case")),
        methods=options.methods(),
        alpha=options.get("alpha", settings.DEFAULT_ALPHA),
        n_train=options.get("n_train", 150),
        n_holdout=options.get("n_holdout", 300),
        n_test=options.get("n_test", 40),
        trials=options.get("trials", 1),
        seed=options.get("seed", 0),
        split_seed=options.get("split_seed"),
        ygrid_count=options.get("ygrid_count", settings.DEFAULT_YGRID_COUNT),
        target_ess=options.get("target_ess", settings.DEFAULT_TARGET_ESS),
        n_scores=options.get("n_scores", 4),
        record_timing=options.record_timing(),
        **options.optimizer_values(),
    )


def handle(args: argparse.Namespace) -> int:
    options = OptionResolver(args)
    out = options.require("out")
    config = build_config(**experiment_values(options))

    records = run_experiment(config)
    path = write_results_csv(records, out)
    logger.info("💾 Wrote %d records to %s", len(records), path)
    return 0
