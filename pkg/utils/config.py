import os
from pathlib import Path
from dotenv import load_dotenv
from .logger import get_logger

# Initialize logger
logger = get_logger(__name__)

DEFAULT_EXACT_CAP = 9
DEFAULT_ENUMERATION_CAP = 8
DEFAULT_HANSON_WRIGHT_CONSTANT = 1.0

_env_loaded = False


# Load environment variables from .env file
def load_env(force=False):
    """Load environment variables from .env files (once per process unless forced)"""
    global _env_loaded
    if _env_loaded and not force:
        return

    env_path = Path(".env")
    if env_path.exists():
        logger.debug(f"Loading environment from {env_path}")
        load_dotenv(env_path)
    else:
        # Try the experiments directory as fallback
        experiments_env_path = Path("experiments/.env")
        if experiments_env_path.exists():
            logger.debug(f"Loading environment from {experiments_env_path}")
            load_dotenv(experiments_env_path)
        else:
            logger.debug("No .env file found. Using defaults and system environment variables.")
    _env_loaded = True


def _read_int(name, default, minimum=1):
    load_env()
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"{name}={raw!r} is not an integer; using {default}")
        return default
    if value < minimum:
        logger.warning(f"{name}={value} is below {minimum}; using {default}")
        return default
    return value


def _read_float(name, default):
    load_env()
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = float(raw)
    except ValueError:
        logger.warning(f"{name}={raw!r} is not a number; using {default}")
        return default
    if value <= 0:
        logger.warning(f"{name}={value} must be positive; using {default}")
        return default
    return value


# Worker pool configuration
def get_worker_override():
    """Worker count from HYPERCORR_WORKERS, or None when unset"""
    value = _read_int("HYPERCORR_WORKERS", None)
    if value is not None:
        logger.debug(f"HYPERCORR_WORKERS override: {value}")
    return value


def resolve_workers(configured):
    """Apply the environment override to a configured worker count"""
    override = get_worker_override()
    return override if override is not None else max(1, int(configured))


# Enumeration caps
def get_exact_cap():
    """Largest n for which the exact permutation maximum is attempted"""
    return _read_int("HYPERCORR_EXACT_CAP", DEFAULT_EXACT_CAP)


def get_enumeration_cap():
    """Largest n for which S_n is enumerated in the second-moment evaluators"""
    return _read_int("HYPERCORR_ENUM_CAP", DEFAULT_ENUMERATION_CAP)


def get_hanson_wright_constant():
    """Constant C in the Hanson-Wright deviation expression"""
    return _read_float("HYPERCORR_HW_CONSTANT", DEFAULT_HANSON_WRIGHT_CONSTANT)
