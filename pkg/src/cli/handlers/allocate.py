"""allocate: fit an allocation on an external score matrix and print it"""
import argparse
import sys

from ...core.config import settings
from ...core.exceptions import ConfigError
from ...models.allocation import OptimizerKind, OptimizerOptions, budget_units
from ...repositories.results_repository import ingest_scores_csv
from ...services.allocation_service import LossOracle
from ...services.cola_service import fit_allocation
from ...services.score_service import external_holdout
from ..options import OptionResolver, add_alpha_option, add_config_option, add_optimizer_options


def register(subparsers) -> None:
    parser = subparsers.add_parser("allocate", help="print the fitted allocation and its empirical loss")
    add_config_option(parser)
    parser.add_argument("--scores", type=str)
    add_alpha_option(parser)
    add_optimizer_options(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    options = OptionResolver(args)
    alpha = options.get("alpha", settings.DEFAULT_ALPHA)
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    ingested = ingest_scores_csv(options.require("scores"))
    values = options.optimizer_values()
    optimizer = OptimizerKind(values.pop("optimizer"))
    optimizer_options = OptimizerOptions(kind=optimizer, **values)

    holdout = external_holdout(
        ingested.matrix.values, ingested.centers, ingested.labels, ingested.matrix.names
    )
    budget = budget_units(alpha, holdout.n)
    result = fit_allocation(LossOracle.from_holdout(holdout, budget), budget, optimizer_options)

    sys.stdout.write("optimizer,budget,alloc,loss\n")
    sys.stdout.write(f"{optimizer.value},{budget},{result.allocation.label()},{result.loss:.6g}\n")
    return 0
