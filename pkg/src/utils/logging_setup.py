"""Logging configuration shared by the CLI and long-running harness jobs."""

import logging
from typing import Optional

from src.utils.config import config

LOG_FORMAT = "%(asctime)s %(levelname)-8s %(name)s: %(message)s"

_configured = False


def configure_logging(level: Optional[str] = None) -> None:
    """Configure the root logger once.

    Args:
        level: Level name (e.g. 'DEBUG'); defaults to config.log_level
    """
    global _configured
    level_name = (level or config.log_level).upper()
    numeric = getattr(logging, level_name, logging.INFO)

    if _configured:
        logging.getLogger().setLevel(numeric)
        return

    logging.basicConfig(level=numeric, format=LOG_FORMAT)
    _configured = True
