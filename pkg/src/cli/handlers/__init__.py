"""Subcommand handlers"""
from . import allocate, conditional, run, simulate, summarize


def setup_parsers(subparsers):
    """Register every subcommand"""
    simulate.register(subparsers)
    run.register(subparsers)
    allocate.register(subparsers)
    conditional.register(subparsers)
    summarize.register(subparsers)
