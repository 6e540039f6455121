"""Logging configuration and utilities."""

import logging
import sys
from pathlib import Path
from typing import Optional, Union

PACKAGE_LOGGER = "civic_cred"
DEFAULT_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def setup_logger(
    name: str = PACKAGE_LOGGER,
    log_file: Optional[str] = None,
    level: Union[int, str] = logging.INFO,
    format_string: Optional[str] = None,
    console_output: bool = True,
) -> logging.Logger:
    """Set up a logger with file and/or console handlers.

    Console output goes to stderr: stdout is reserved for JSON reports.

    Args:
        name: Logger name (default: the package logger)
        log_file: Path to log file (optional)
        level: Logging level, as int or name (default: INFO)
        format_string: Custom format string (optional)
        console_output: Whether to output to console (default: True)

    Returns:
        logging.Logger: Configured logger instance

    Example:
        from civic_cred.utils.logger import setup_logger

        logger = setup_logger(log_file="run.log", level="DEBUG")
        logger.info("Starting transit scenario")
    """
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            raise ValueError(f"Unknown log level: {level}")

    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.propagate = False

    # Remove existing handlers to avoid duplicates
    for handler in logger.handlers[:]:
        handler.close()
        logger.removeHandler(handler)

    formatter = logging.Formatter(format_string or DEFAULT_FORMAT)

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    if console_output:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(level)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    if not logger.handlers:
        logger.addHandler(logging.NullHandler())

    return logger


def get_logger(name: str) -> logging.Logger:
    """Get a module logger under the package namespace.

    Library code never attaches handlers; until `setup_logger` runs, records
    are swallowed by a NullHandler on the package logger.

    Args:
        name: Logger name, usually ``__name__``

    Returns:
        logging.Logger: Logger instance

    Example:
        logger = get_logger(__name__)
        logger.info("Published key for %s", attribute)
    """
    if name != PACKAGE_LOGGER and not name.startswith(PACKAGE_LOGGER + "."):
        name = f"{PACKAGE_LOGGER}.{name}"
    root = logging.getLogger(PACKAGE_LOGGER)
    if not root.handlers:
        root.addHandler(logging.NullHandler())
    return logging.getLogger(name)
