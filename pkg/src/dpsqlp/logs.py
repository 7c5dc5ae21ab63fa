"""
Logging helpers shared by all sub-packages.
"""

import logging

_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def get_logger(name: str) -> logging.Logger:
    """Return the package logger for a module."""
    return logging.getLogger(name)


def configure_logging(verbosity: int = 0) -> None:
    """Configure root logging once for CLI use (0=WARNING, 1=INFO, 2+=DEBUG)."""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format=_FORMAT)
