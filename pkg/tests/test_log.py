"""Tests for logging setup."""

import io
import logging

import pytest

from crlscore.log import (
    ROOT_LOGGER,
    Color,
    PrefixFormatter,
    collect_warnings,
    configure_logging,
)


@pytest.fixture
def restore_logger():
    logger = logging.getLogger(ROOT_LOGGER)
    handlers = list(logger.handlers)
    level, propagate = logger.level, logger.propagate
    yield logger
    logger.handlers[:] = handlers
    logger.setLevel(level)
    logger.propagate = propagate


def _record(level: int, msg: str) -> logging.LogRecord:
    return logging.LogRecord("crlscore.test", level, __file__, 1, msg, None, None)


class TestFormatter:
    """Tests for the prefix formatter."""

    def test_plain_prefix(self):
        """Test the uncoloured prefix and level name."""
        text = PrefixFormatter(color=False).format(_record(logging.WARNING, "hi"))
        assert text == "[crlscore] warning: hi"

    def test_colour_on_terminal(self):
        """Test that warnings are wrapped in colour codes when enabled."""
        text = PrefixFormatter(color=True).format(_record(logging.WARNING, "hi"))
        assert text.startswith(Color.YELLOW)
        assert text.endswith(Color.RESET)

    def test_info_is_never_coloured(self):
        """Test that info records stay plain."""
        text = PrefixFormatter(color=True).format(_record(logging.INFO, "x"))
        assert text == "[crlscore] info: x"


class TestConfigureLogging:
    """Tests for handler installation."""

    def test_warnings_reach_stream(self, restore_logger):
        """Test that warnings are written with the prefix."""
        stream = io.StringIO()
        configure_logging(stream=stream)
        logging.getLogger("crlscore.graph").warning("edgeless")
        assert stream.getvalue() == "[crlscore] warning: edgeless\n"

    def test_debug_needs_verbose(self, restore_logger):
        """Test that debug output appears only in verbose mode."""
        quiet = io.StringIO()
        configure_logging(stream=quiet)
        logging.getLogger("crlscore.mic").debug("grid")
        assert quiet.getvalue() == ""

        loud = io.StringIO()
        configure_logging(verbose=True, stream=loud)
        logging.getLogger("crlscore.mic").debug("grid")
        assert "grid" in loud.getvalue()

    def test_reconfigure_replaces_handler(self, restore_logger):
        """Test that configuring twice leaves a single handler."""
        first, second = io.StringIO(), io.StringIO()
        configure_logging(stream=first)
        configure_logging(stream=second)
        logging.getLogger("crlscore").warning("once")
        assert first.getvalue() == ""
        assert second.getvalue().count("once") == 1


class TestCollectWarnings:
    """Tests for warning capture."""

    def test_collects_in_order(self):
        """Test that warnings are captured in emission order."""
        log = logging.getLogger("crlscore.scoring")
        with collect_warnings() as messages:
            log.warning("first")
            log.info("ignored")
            log.warning("second %d", 2)
        assert messages == ["first", "second 2"]

    def test_handler_removed_after_exit(self):
        """Test that nothing is captured after the block."""
        log = logging.getLogger("crlscore.scoring")
        with collect_warnings() as messages:
            pass
        log.warning("late")
        assert messages == []
