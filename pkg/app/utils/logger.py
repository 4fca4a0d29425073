import sys
from pathlib import Path

from loguru import logger

from config.config import current_config


def setup_logging(level: str = None, log_file: str = None):
    """
    Configure loguru for a command-line run.

    Console output goes to stderr so solver progress never mixes with the
    summaries commands print on stdout.

    Args:
        level (str, optional): Minimum level. Defaults to LOG_LEVEL.
        log_file (str, optional): Extra file sink for this run. When omitted,
            LOG_TO_FILE enables a rotating file under LOG_DIR.
    """
    # Remove default loguru handler
    logger.remove()

    level = (level or current_config.LOG_LEVEL).upper()
    logger.add(sys.stderr, level=level, format=current_config.LOG_FORMAT)

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        logger.add(log_file, level="DEBUG", format=current_config.LOG_FORMAT, mode="w")
    elif current_config.LOG_TO_FILE:
        log_folder = Path(current_config.LOG_DIR)
        log_folder.mkdir(exist_ok=True)
        logger.add(
            log_folder / "opsp_{time}.log",
            rotation="100 MB",
            retention="30 days",
            level=level,
            format=current_config.LOG_FORMAT
        )

    logger.debug(f"Logging configured at {level}")
    return logger
