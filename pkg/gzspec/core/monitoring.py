import logging
import sys

import structlog

from gzspec.config import settings


def setup_monitoring(level: str | None = None) -> None:
    """Configure structured logging for the command line tools."""
    level_name = (level or settings.LOG_LEVEL).upper()
    numeric_level = getattr(logging, level_name)

    # Reports own stdout, logs go to stderr
    structlog.configure(
        processors=[
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.add_log_level,
            structlog.processors.JSONRenderer(),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )

    logging.basicConfig(level=numeric_level, stream=sys.stderr)

    logger = structlog.get_logger()
    logger.debug("Monitoring setup complete", level=level_name, profile=settings.GZSPEC_TOL_PROFILE)
