"""run: fold-wise evaluation on an external score matrix"""
import argparse
import logging

from ...core.config import settings
from ...repositories.results_repository import write_results_csv
from ...services.experiment_service import build_config, run_experiment
from ..options import (
    OptionResolver,
    add_alpha_option,
    add_config_option,
    add_methods_option,
    add_optimizer_options,
)

logger = logging.getLogger(__name__)

EXTERNAL_METHODS = "cola-e,cola-s,efcp,vfcp,majority"


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "run",
        help="evaluate methods on an external score matrix by K-fold splitting",
        description=(
            "External scores cannot be refitted, so this reproduces the aggregation "
            "layer only: for each fold, methods are fitted on the remaining rows and "
            "coverage/size are measured on the held-back fold."
        ),
    )
    add_config_option(parser)
    parser.add_argument("--scores", type=str, help="CSV with columns s1..sK[,y][,c1..cK]")
    add_alpha_option(parser)
    parser.add_argument("--split-seed", type=int)
    parser.add_argument("--folds", type=int)
    add_methods_option(parser, default=EXTERNAL_METHODS)
    add_optimizer_options(parser)
    parser.add_argument("--record-timing", action="store_true")
    parser.add_argument("--out", type=str)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    options = OptionResolver(args)
    scores = options.require("scores")
    out = options.require("out")
    config = build_config(
        scores_path=scores,
        methods=options.methods(),
        alpha=options.get("alpha", settings.DEFAULT_ALPHA),
        split_seed=options.get("split_seed", 0),
        folds=options.get("folds", 5),
        record_timing=options.record_timing(),
        **options.optimizer_values(),
    )

    records = run_experiment(config)
    path = write_results_csv(records, out)
    logger.info("💾 Wrote %d records to %s", len(records), path)
    return 0
