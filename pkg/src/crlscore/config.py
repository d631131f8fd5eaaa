"""Scorecard configuration, run defaults and the worker pool."""

import logging
import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, TypeVar

from crlscore import toml
from crlscore.model import ParseError, ValidationError

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

DEFAULT_ALPHA = 0.05
DEFAULT_MAX_CONDITIONING = 2
DEFAULT_BINS = 20
DEFAULT_SEED = 0
DEFAULT_H = 0.25
DEFAULT_STD = "population"
DEFAULT_CARD_PATH = "card.toml"
THREADS_ENV = "CRLSCORE_THREADS"


def default_card_config() -> dict[str, Any]:
    """The benchmark card: eight metrics in reconstruction, disentanglement,
    counterfactual order, with bounded metrics taken as-is and the
    distribution distances min-max normalized over the cohort."""
    return {
        "card": {
            "name": "pendulum-benchmark",
            "h": DEFAULT_H,
            "std": DEFAULT_STD,
            "degenerate_to_half": False,
        },
        "metric": [
            {"name": "reconstruction", "orientation": "upward", "bounded01": True},
            {"name": "irs", "orientation": "upward", "bounded01": True},
            {"name": "jemmig", "orientation": "upward", "bounded01": True},
            {"name": "mic", "orientation": "upward", "bounded01": True},
            {"name": "tic", "orientation": "upward", "bounded01": True},
            {"name": "fid", "orientation": "downward", "bounded01": False},
            {"name": "is", "orientation": "upward", "bounded01": False},
            {"name": "kid", "orientation": "downward", "bounded01": False},
        ],
        "model": [
            {"name": "beta-VAE"},
            {"name": "ConditionalVAE"},
            {"name": "CausalVAE"},
        ],
    }


def load_card_config(path: str | Path) -> dict[str, Any]:
    """Load a scorecard config, filling missing [card] keys from the defaults.

    Metrics and models are never taken from the default card; without
    [[model]] entries the models come from the values table. An unreadable
    file raises instead of falling back to defaults.

    Raises:
        FileNotFoundError: the file does not exist.
        ParseError: the file is not valid TOML.
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            config = toml.load(f) or {}
    except toml.TOMLError as e:
        raise ParseError(f"{path}: {e}") from None
    card = config.setdefault("card", {})
    if not isinstance(card, dict):
        raise ParseError(f"{path}: [card] must be a table")
    for key, value in default_card_config()["card"].items():
        card.setdefault(key, value)
    return config


def write_default_card(path: str | Path) -> Path:
    """Write the default card to `path`, refusing to overwrite."""
    path = Path(path)
    if path.exists():
        raise ValidationError(f"{path} already exists")
    with open(path, "w", encoding="utf-8") as f:
        toml.dump(default_card_config(), f)
    return path


def thread_count() -> int:
    """Worker threads allowed by CRLSCORE_THREADS (default: CPU count, max 8)."""
    raw = os.environ.get(THREADS_ENV)
    default = min(os.cpu_count() or 1, 8)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
        return default
    return max(value, 1)


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Map `fn` over `items` on the worker pool, results in input order."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
