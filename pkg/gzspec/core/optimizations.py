import os

import structlog

from gzspec.config import settings

logger = structlog.get_logger()


class RunBudget:
    """Resource settings for a verification run"""

    @staticmethod
    def adjust_for_environment() -> dict:
        """Be conservative on single-core or CI machines"""
        cpus = os.cpu_count() or 1
        if cpus <= 1 or os.getenv("CI"):
            logger.info("Constrained environment detected, running suites serially", cpus=cpus)
            return {"max_workers": 1}
        return {"max_workers": max(1, min(settings.MAX_WORKERS, cpus))}


def worker_count() -> int:
    return RunBudget.adjust_for_environment()["max_workers"]
