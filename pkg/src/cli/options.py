"""Shared command-line options and --config merging"""
import argparse
from pathlib import Path
from typing import Any, Optional, Tuple

from ..core.config import ExperimentFileSettings, settings
from ..core.exceptions import ConfigError
from ..models.predictor import Method

DEFAULT_METHODS = "cola-e,cola-s,efcp,vfcp,majority"


def add_config_option(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key=value file with option values; flags override it")


def add_alpha_option(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, help=f"total miscoverage level (default {settings.DEFAULT_ALPHA})")


def add_optimizer_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--optimizer", choices=["stepwise", "exhaustive", "smooth"])
    parser.add_argument("--k-max", type=int, help=f"support cap of the stepwise search (default {settings.DEFAULT_K_MAX})")
    parser.add_argument("--max-iter", type=int, help=f"stepwise iterations (default {settings.DEFAULT_MAX_ITER})")
    parser.add_argument("--tau1", type=float, help="log-sum-exp temperature of the smoothing optimizer")


def add_methods_option(parser: argparse.ArgumentParser, default: str = DEFAULT_METHODS) -> None:
    parser.add_argument("--methods", help=f"comma-separated methods (default {default})")
    parser.set_defaults(default_methods=default)


class OptionResolver:
    """Resolves option values: explicit flag, then --config file, then default"""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        path = getattr(args, "config", None)
        self.file = ExperimentFileSettings.from_file(path) if path else None

    def get(self, name: str, default: Any = None) -> Any:
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        if self.file is not None:
            value = getattr(self.file, name, None)
            if value is not None:
                return value
        return default

    def require(self, name: str) -> Any:
        value = self.get(name)
        if value is None:
            flag = "--" + name.replace("_", "-")
            raise ConfigError(f"{flag} is required (on the command line or in --config)")
        return value

    def methods(self) -> Tuple[Method, ...]:
        return parse_methods(self.get("methods", getattr(self.args, "default_methods", DEFAULT_METHODS)))

    def record_timing(self) -> bool:
        return bool(getattr(self.args, "record_timing", False)) or settings.RECORD_WALL_TIME

    def optimizer_values(self) -> dict:
        optimizer = self.get("optimizer", "stepwise")
        if optimizer not in {"stepwise", "exhaustive", "smooth"}:
            raise ConfigError(f"Unknown optimizer '{optimizer}'")
        values = {
            "optimizer": optimizer,
            "k_max": self.get("k_max", settings.DEFAULT_K_MAX),
            "max_iter": self.get("max_iter", settings.DEFAULT_MAX_ITER),
        }
        tau1 = self.get("tau1")
        if tau1 is not None:
            values["tau1"] = tau1
        return values


def parse_methods(text: Optional[str]) -> Tuple[Method, ...]:
    names = [name.strip() for name in (text or "").split(",") if name.strip()]
    if not names:
        raise ConfigError("At least one method is required")
    methods = []
    for name in names:
        try:
            methods.append(Method(name))
        except ValueError as e:
            valid = ", ".join(m.value for m in Method)
            raise ConfigError(f"Unknown method '{name}'; expected one of {valid}") from e
    return tuple(methods)
