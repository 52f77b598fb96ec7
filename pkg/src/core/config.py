"""
Configuration settings for the COLA toolkit
"""
from pathlib import Path
from typing import Literal, Optional

from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigError


class Settings(BaseSettings):
    """Process-wide settings loaded from COLA_* environment variables"""

    model_config = SettingsConfigDict(
        env_prefix="COLA_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    # Logging
    LOG_LEVEL: str = "INFO"

    # Trial execution
    TRIAL_BACKEND: Literal["local", "celery"] = "local"
    CELERY_BROKER_URL: str = "memory://"
    CELERY_RESULT_BACKEND: str = "cache+memory://"
    CELERY_ALWAYS_EAGER: bool = False
    RECORD_WALL_TIME: bool = False  # wall_ms stays 0 so result files are byte-stable

    # Experiment defaults
    DEFAULT_ALPHA: float = 0.1
    DEFAULT_K_MAX: int = 4
    DEFAULT_MAX_ITER: int = 10
    DEFAULT_YGRID_COUNT: int = 200
    DEFAULT_TARGET_ESS: float = 200.0


class ExperimentFileSettings(BaseSettings):
    """Experiment values read from a key=value file passed with --config.

    Keys are the long CLI flag names with dashes replaced by underscores,
    e.g. ``n_holdout=300``. Everything is optional; CLI flags win.
    """

    model_config = SettingsConfigDict(case_sensitive=False, extra="ignore")

    case: Optional[str] = None
    scores: Optional[Path] = None
    alpha: Optional[float] = None
    n_train: Optional[int] = None
    n_holdout: Optional[int] = None
    n_test: Optional[int] = None
    trials: Optional[int] = None
    seed: Optional[int] = None
    split_seed: Optional[int] = None
    methods: Optional[str] = None
    k_max: Optional[int] = None
    max_iter: Optional[int] = None
    optimizer: Optional[str] = None
    tau1: Optional[float] = None
    ygrid_count: Optional[int] = None
    target_ess: Optional[float] = None
    n_scores: Optional[int] = None
    folds: Optional[int] = None
    locations: Optional[int] = None
    draws: Optional[int] = None
    out: Optional[Path] = None

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls,
        init_settings,
        env_settings,
        dotenv_settings,
        file_secret_settings,
    ):
        # Only explicit values and the referenced file; the environment is ignored
        return (init_settings, dotenv_settings)

    @classmethod
    def from_file(cls, path: Path) -> "ExperimentFileSettings":
        """Load values from a key=value file"""
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        return cls(_env_file=path)


# Global settings instance
settings = Settings()
