"""conditional: coverage and size at fixed locations of the individualized case"""
import argparse
import logging

from ...repositories.results_repository import ConditionalResultsRepository
from ...services.experiment_service import (
    CONDITIONAL_DRAWS,
    CONDITIONAL_LOCATIONS,
    build_config,
    run_conditional_experiment,
)
from ..options import (
    OptionResolver,
    add_alpha_option,
    add_config_option,
    add_methods_option,
    add_optimizer_options,
)
from .simulate import experiment_values

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("conditional", help="conditional coverage on the individualized case")
    add_config_option(parser)
    parser.add_argument("--case", choices=["individual"], default=None)
    add_alpha_option(parser)
    parser.add_argument("--n-train", type=int)
    parser.add_argument("--n-holdout", type=int)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    add_methods_option(parser, default="cola-l,cola-e-local")
    add_optimizer_options(parser)
    parser.add_argument("--target-ess", type=float)
    parser.add_argument("--locations", type=int, help=f"evaluation points in [-1, 1] (default {CONDITIONAL_LOCATIONS})")
    parser.add_argument("--draws", type=int, help=f"fresh labels per location (default {CONDITIONAL_DRAWS})")
    parser.add_argument("--out", type=str)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    options = OptionResolver(args)
    if options.get("case") is None:
        args.case = "individual"
    out = options.require("out")
    config = build_config(**experiment_values(options))

    records = run_conditional_experiment(
        config,
        locations=options.get("locations", CONDITIONAL_LOCATIONS),
        draws=options.get("draws", CONDITIONAL_DRAWS),
    )
    path = ConditionalResultsRepository(out).write(records)
    logger.info("💾 Wrote %d conditional records to %s", len(records), path)
    return 0
