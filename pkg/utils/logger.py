"""
Centralized logging configuration for the hypercorr lab.
"""
import logging
import os
import sys
from datetime import datetime

# Define log levels mapping for easier configuration
LOG_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
    "critical": logging.CRITICAL
}

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _env_flag(name, default=False):
    value = os.environ.get(name)
    if value is None:
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


def configure_logger(name, log_level="info", log_to_file=False):
    """
    Configure and return a logger with standardized settings.

    Console output goes to stderr so the CLI can keep stdout for JSON records.

    Parameters:
        name (str): The name of the logger, typically __name__
        log_level (str): Log level as string (debug, info, warning, error, critical)
        log_to_file (bool): Whether to log to logs/YYYY-MM-DD.log in addition to the console

    Returns:
        logging.Logger: Configured logger instance
    """
    level = LOG_LEVELS.get(log_level.lower(), logging.INFO)

    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.propagate = False

    # Remove existing handlers to avoid duplicates
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)

    formatter = logging.Formatter(LOG_FORMAT)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_to_file:
        logs_dir = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "logs")
        os.makedirs(logs_dir, exist_ok=True)

        date_str = datetime.now().strftime("%Y-%m-%d")
        log_file = os.path.join(logs_dir, f"{date_str}.log")
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def get_logger(name, log_level=None):
    """
    Get a configured logger. Uses the LOG_LEVEL environment variable if set,
    otherwise defaults to 'info'. LOG_TO_FILE=true adds the dated file handler.

    Parameters:
        name (str): The name of the logger, typically __name__
        log_level (str): Override the default or environment-specified log level

    Returns:
        logging.Logger: Configured logger instance
    """
    level = log_level or os.environ.get("LOG_LEVEL", "info")

    return configure_logger(name, level, log_to_file=_env_flag("LOG_TO_FILE"))
