"""
Logging configuration: stdlib handlers plus structlog for experiment events
"""
import logging

import structlog

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(level: str = "INFO") -> None:
    """Configure root logging once for the CLI process"""
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT)

    # Silence noisy third-party loggers
    logging.getLogger("celery").setLevel(logging.WARNING)
    logging.getLogger("kombu").setLevel(logging.WARNING)
    logging.getLogger("numexpr").setLevel(logging.WARNING)

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_log_level,
            structlog.processors.KeyValueRenderer(key_order=["event"], sort_keys=True),
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def get_event_logger(name: str) -> structlog.stdlib.BoundLogger:
    """Key=value logger for experiment events"""
    return structlog.get_logger(name)
