"""Logging setup for the crlscore command line.

Library modules log through `logging.getLogger(__name__)` and never configure
handlers themselves; the CLI calls `configure_logging` once and wraps each
command in `collect_warnings` so that warnings also land in the report.
"""

import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager

ROOT_LOGGER = "crlscore"


class Color:
    """ANSI color codes for terminal output."""

    RED = "\033[91m"
    ORANGE = "\033[93m"
    YELLOW = "\033[33m"
    CYAN = "\033[36m"
    RESET = "\033[0m"


_LEVEL_COLORS = {
    logging.DEBUG: Color.CYAN,
    logging.INFO: "",
    logging.WARNING: Color.YELLOW,
    logging.ERROR: Color.RED,
    logging.CRITICAL: Color.RED,
}


class PrefixFormatter(logging.Formatter):
    """Format records as `[crlscore] level: message`, coloured on a terminal."""

    def __init__(self, color: bool):
        super().__init__()
        self.color = color

    def format(self, record: logging.LogRecord) -> str:
        text = f"[crlscore] {record.levelname.lower()}: {record.getMessage()}"
        if record.exc_info:
            text += "\n" + self.formatException(record.exc_info)
        color = _LEVEL_COLORS.get(record.levelno, "")
        if self.color and color:
            return f"{color}{text}{Color.RESET}"
        return text


def configure_logging(verbose: bool = False, stream=None) -> logging.Handler:
    """Install a single stderr handler on the package logger.

    Calling it again replaces the previous handler.
    """
    stream = stream if stream is not None else sys.stderr
    logger = logging.getLogger(ROOT_LOGGER)
    for handler in list(logger.handlers):
        if getattr(handler, "_crlscore_cli", False):
            logger.removeHandler(handler)
    handler = logging.StreamHandler(stream)
    handler._crlscore_cli = True
    isatty = getattr(stream, "isatty", None)
    handler.setFormatter(PrefixFormatter(color=bool(isatty and isatty())))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    logger.propagate = False
    return handler


class _ListHandler(logging.Handler):
    def __init__(self, sink: list[str]):
        super().__init__(level=logging.WARNING)
        self.sink = sink

    def emit(self, record: logging.LogRecord) -> None:
        self.sink.append(record.getMessage())


@contextmanager
def collect_warnings() -> Iterator[list[str]]:
    """Capture warning messages logged under the package logger.

    Yields the list that receives messages, in emission order.
    """
    messages: list[str] = []
    logger = logging.getLogger(ROOT_LOGGER)
    handler = _ListHandler(messages)
    logger.addHandler(handler)
    previous = logger.level
    if logger.level == logging.NOTSET or logger.level > logging.WARNING:
        logger.setLevel(logging.WARNING)
    try:
        yield messages
    finally:
        logger.removeHandler(handler)
        logger.setLevel(previous)
