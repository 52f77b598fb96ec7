"""summarize: per-method means, standard errors and size ratios of a results file"""
import argparse
import sys

from ...repositories.results_repository import read_results_csv
from ...repositories.base import FLOAT_FORMAT
from ...services.summary_service import summarize


def register(subparsers) -> None:
    parser = subparsers.add_parser("summarize", help="summarize a results CSV")
    parser.add_argument("results", type=str, help="file written by simulate or run")
    parser.add_argument("--reference", default="cola-e", help="method the size ratios are relative to")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    summary = summarize(read_results_csv(args.results), reference=args.reference)
    summary.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return 0
