"""
Logger utility for the buy-back lab.

Simple logging functions that can be imported and used from anywhere in the
package. Everything goes through the ``buyback_lab`` logger; an optional sink
also receives each message (the CLI uses it to keep a run log).
"""

import logging
import sys
import traceback

LOGGER_NAME = "buyback_lab"

_logger = logging.getLogger(LOGGER_NAME)

# Callable(level, message) receiving every message, or None
_global_log_sink = None


def configure(level="INFO", stream=None):
    """Attach a console handler to the package logger (idempotent)."""
    if not any(getattr(h, "_buyback_lab", False) for h in _logger.handlers):
        handler = logging.StreamHandler(stream or sys.stderr)
        handler.setFormatter(logging.Formatter("[%(levelname)s] %(message)s"))
        handler._buyback_lab = True
        _logger.addHandler(handler)
    _logger.setLevel(level.upper() if isinstance(level, str) else level)
    return _logger


def set_log_sink(sink):
    """Set the global sink for log messages; pass None to detach."""
    global _global_log_sink
    _global_log_sink = sink


def _emit(level, message):
    _logger.log(level, message)
    if _global_log_sink is not None and _logger.isEnabledFor(level):
        _global_log_sink(logging.getLevelName(level), message)


def log(message):
    """Log an INFO message."""
    _emit(logging.INFO, message)


def debug(message):
    """Log a DEBUG message."""
    _emit(logging.DEBUG, message)


def warning(message):
    """Log a WARNING message."""
    _emit(logging.WARNING, message)


def error(message):
    """Log an ERROR message."""
    _emit(logging.ERROR, message)


def exception(e, message="An exception occurred"):
    """Log an exception with traceback at DEBUG and the one-line summary at ERROR."""
    exc_type, exc_value, exc_tb = sys.exc_info()
    if exc_type is None:
        exc_type, exc_value, exc_tb = type(e), e, e.__traceback__
    tb_str = ''.join(traceback.format_exception(exc_type, exc_value, exc_tb))

    _emit(logging.ERROR, f"{message}: {e}")
    _emit(logging.DEBUG, f"Traceback: {tb_str}")
