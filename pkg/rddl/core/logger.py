import logging
import os

_FORMAT = "[%(levelname)s] %(message)s"


def get_logger(name: str) -> logging.Logger:
    logger = logging.getLogger(name)
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_FORMAT))
        logger.addHandler(handler)
        level = os.environ.get("RDDL_LOG_LEVEL", "INFO").upper()
        logger.setLevel(getattr(logging, level, logging.INFO))
        logger.propagate = False
    return logger


def set_level(level: int) -> None:
    """Apply ``level`` to every logger created through :func:`get_logger`."""
    for name, logger in logging.root.manager.loggerDict.items():
        if name.startswith("rddl") and isinstance(logger, logging.Logger):
            logger.setLevel(level)
