"""Metric normalization, radar and origami areas, scorecards and run aggregation.

The radar area of N equally spaced axes depends on the axis order. The origami
construction inserts an auxiliary axis of constant radius h between every pair
of metric axes, which turns the area into sin(pi/N) * h * sum(r): a linear,
order-invariant function of the normalized values. Dividing by its all-ones
maximum gives the origami score, the mean normalized value.
"""

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pandas as pd

from crlscore import config
from crlscore.model import (
    DataTable,
    DegenerateError,
    ParseError,
    RunLog,
    SchemaError,
    ValidationError,
)

logger = logging.getLogger(__name__)

Orientation = Literal["upward", "downward"]
AggregationMode = Literal["all", "boundaries_out", "top_k"]
StdConvention = Literal["population", "sample"]


@dataclass(frozen=True)
class MetricDescriptor:
    name: str
    orientation: Orientation = "upward"
    bounded01: bool = True

    def __post_init__(self):
        if self.orientation not in ("upward", "downward"):
            raise ValidationError(
                f"{self.name}: orientation must be upward or downward"
            )


@dataclass(frozen=True)
class CardSpec:
    """A parsed scorecard config."""

    name: str
    axes: tuple[MetricDescriptor, ...]
    h: float = config.DEFAULT_H
    std: StdConvention = config.DEFAULT_STD
    degenerate_to_half: bool = False
    models: tuple[str, ...] = ()
    inline_values: Mapping[str, tuple[float, ...]] | None = None
    values_file: str | None = None


@dataclass(frozen=True, eq=False)
class ScoreCard:
    """Per-model raw values, normalized values and the three areas."""

    name: str
    axes: tuple[MetricDescriptor, ...]
    models: tuple[str, ...]
    raw: np.ndarray
    normalized: np.ndarray
    h: float
    radar_area: np.ndarray
    origami_area: np.ndarray
    origami_score: np.ndarray

    @property
    def max_origami_area(self) -> float:
        return origami_max_area(len(self.axes), self.h)

    def ranking(self) -> list[str]:
        """Models by origami score, best first, ties by name."""
        order = sorted(
            range(len(self.models)),
            key=lambda i: (-self.origami_score[i], self.models[i]),
        )
        return [self.models[i] for i in order]

    def row(self, model: str) -> int:
        try:
            return self.models.index(model)
        except ValueError:
            raise ValidationError(f"unknown model: {model}") from None


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    std: float
    runs: tuple[int, ...]


@dataclass(frozen=True)
class RunAggregate:
    mode: AggregationMode
    k: int | None
    std_convention: StdConvention
    metrics: dict[str, MetricSummary]


# =============================================================================
# Normalization and areas
# =============================================================================


def normalize(
    raw: np.ndarray,
    descriptors: Sequence[MetricDescriptor],
    degenerate_to_half: bool = False,
) -> np.ndarray:
    """Map every metric to [0, 1], higher is better.

    Bounded upward metrics pass through, bounded downward ones become 1 - v.
    Unbounded metrics are min-max scaled over the cohort (all rows) and then
    flipped when downward.

    Raises:
        ValidationError: shape mismatch, non-finite values, a bounded value
            outside [0, 1], or an unbounded metric with a single model.
        DegenerateError: an unbounded metric is constant across the cohort and
            degenerate_to_half is off.
    """
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    if raw.shape[1] != len(descriptors):
        raise ValidationError(
            f"{raw.shape[1]} values per model for {len(descriptors)} metrics"
        )
    if not np.all(np.isfinite(raw)):
        raise ValidationError("metric values must be finite")
    out = np.empty_like(raw)
    for j, d in enumerate(descriptors):
        col = raw[:, j]
        if d.bounded01:
            if col.min() < 0.0 or col.max() > 1.0:
                raise ValidationError(f"{d.name}: bounded metric outside [0, 1]")
            scaled = col
        else:
            if raw.shape[0] < 2:
                raise ValidationError(
                    f"{d.name}: unbounded metrics need at least 2 models to normalize"
                )
            lo, hi = col.min(), col.max()
            if hi == lo:
                if not degenerate_to_half:
                    raise DegenerateError(
                        f"{d.name}: all models share the value {lo:g}; "
                        "min-max range is empty"
                    )
                logger.warning("%s: constant across models, normalized to 0.5", d.name)
                out[:, j] = 0.5
                continue
            scaled = (col - lo) / (hi - lo)
        out[:, j] = 1.0 - scaled if d.orientation == "downward" else scaled
    return out


def _check_values(r: Sequence[float]) -> np.ndarray:
    r = np.asarray(r, dtype=float).ravel()
    if r.size < 3:
        raise ValidationError(f"need at least 3 axes, got {r.size}")
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValidationError("normalized values must be finite and non-negative")
    return r


def _check_h(h: float) -> None:
    if not 0.0 < h <= 1.0:
        raise ValidationError(f"h must lie in (0, 1], got {h}")


def radar_area(r: Sequence[float]) -> float:
    """Area of the radar polygon over N equally spaced axes, in axis order."""
    r = _check_values(r)
    n = r.size
    return math.sin(2.0 * math.pi / n) / 2.0 * float(np.sum(r * np.roll(r, -1)))


def origami_area(r: Sequence[float], h: float = config.DEFAULT_H) -> float:
    """Area with auxiliary axes of radius h between the metric axes."""
    r = _check_values(r)
    _check_h(h)
    return math.sin(math.pi / r.size) * h * float(np.sum(r))


def origami_max_area(n_axes: int, h: float = config.DEFAULT_H) -> float:
    _check_h(h)
    if n_axes < 3:
        raise ValidationError(f"need at least 3 axes, got {n_axes}")
    return math.sin(math.pi / n_axes) * h * float(n_axes)


def origami_score(r: Sequence[float], h: float = config.DEFAULT_H) -> float:
    """Origami area over its all-ones maximum; equals the mean of r."""
    r = _check_values(r)
    return origami_area(r, h) / origami_max_area(r.size, h)


# =============================================================================
# Scorecards
# =============================================================================


def _bool(value: Any, what: str) -> bool:
    if not isinstance(value, bool):
        raise SchemaError(f"{what} must be true or false")
    return value


def card_from_config(cfg: Mapping[str, Any]) -> CardSpec:
    """Validate a loaded scorecard config (see config.load_card_config)."""
    card = cfg.get("card", {})
    metrics = cfg.get("metric", [])
    if not isinstance(metrics, list) or not all(isinstance(m, dict) for m in metrics):
        raise SchemaError("[[metric]] entries must be tables")
    axes = []
    for entry in metrics:
        if "name" not in entry:
            raise SchemaError("every [[metric]] needs a name")
        axes.append(
            MetricDescriptor(
                name=str(entry["name"]),
                orientation=entry.get("orientation", "upward"),
                bounded01=_bool(
                    entry.get("bounded01", True), f"{entry['name']}.bounded01"
                ),
            )
        )
    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        raise SchemaError("metric names must be unique within a card")
    if len(axes) < 3:
        raise ValidationError(f"a scorecard needs at least 3 metrics, got {len(axes)}")

    models = []
    inline: dict[str, tuple[float, ...]] = {}
    for entry in cfg.get("model", []):
        if not isinstance(entry, dict) or "name" not in entry:
            raise SchemaError("every [[model]] needs a name")
        models.append(str(entry["name"]))
        if "values" in entry:
            values = entry["values"]
            if not isinstance(values, list) or len(values) != len(axes):
                raise SchemaError(
                    f"model {entry['name']}: inline values must list "
                    f"{len(axes)} numbers"
                )
            inline[str(entry["name"])] = tuple(float(v) for v in values)
    if len(set(models)) != len(models):
        raise SchemaError("model names must be unique within a card")

    std = card.get("std", config.DEFAULT_STD)
    if std not in ("population", "sample"):
        raise SchemaError(f"card std must be population or sample, got {std!r}")
    h = float(card.get("h", config.DEFAULT_H))
    _check_h(h)
    return CardSpec(
        name=str(card.get("name", "scorecard")),
        axes=tuple(axes),
        h=h,
        std=std,
        degenerate_to_half=_bool(
            card.get("degenerate_to_half", False), "card.degenerate_to_half"
        ),
        models=tuple(models),
        inline_values=inline or None,
        values_file=card.get("values"),
    )


def load_values(path: str | Path) -> tuple[tuple[str, ...] | None, DataTable]:
    """Read a raw values CSV: models as rows, metrics as columns.

    An optional leading `model` column names the rows.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"{path}: {e}") from None
    names = None
    if len(frame.columns) and frame.columns[0] == "model":
        names = tuple(frame.pop("model").str.strip())
        if len(set(names)) != len(names):
            raise SchemaError(f"{path}: duplicate model names")
    columns = {}
    for name in frame.columns:
        try:
            columns[name.strip()] = pd.to_numeric(frame[name].str.strip()).to_numpy(
                dtype=float
            )
        except ValueError:
            raise ParseError(f"{path}: column {name} is not numeric") from None
    if not columns:
        raise SchemaError(f"{path}: no metric columns")
    return names, DataTable.from_columns(columns)


def _resolve_raw(
    card: CardSpec, values: tuple[tuple[str, ...] | None, DataTable] | None
) -> tuple[tuple[str, ...], np.ndarray]:
    metric_names = [a.name for a in card.axes]
    table_rows: dict[str, np.ndarray] = {}
    table_names: tuple[str, ...] = ()
    if values is not None:
        row_names, table = values
        missing = [m for m in metric_names if m not in table.names]
        if missing:
            raise ValidationError(f"values table lacks metrics: {', '.join(missing)}")
        matrix = table.select(metric_names).values
        if row_names is None:
            row_names = tuple(
                card.models[i] if i < len(card.models) else f"model{i}"
                for i in range(matrix.shape[0])
            )
        table_names = tuple(row_names)
        table_rows = {name: matrix[i] for i, name in enumerate(table_names)}

    models = card.models or table_names
    if not models:
        raise ValidationError("scorecard has no models and no values table")
    rows = []
    for name in models:
        if card.inline_values and name in card.inline_values:
            rows.append(np.array(card.inline_values[name]))
        elif name in table_rows:
            rows.append(table_rows[name])
        else:
            raise ValidationError(f"no values for model {name}")
    return tuple(models), np.vstack(rows)


def build_scorecard(
    card: CardSpec,
    values: tuple[tuple[str, ...] | None, DataTable] | None = None,
) -> ScoreCard:
    """Normalize a card's raw values and compute all three areas per model."""
    models, raw = _resolve_raw(card, values)
    normalized = normalize(raw, card.axes, card.degenerate_to_half)
    radar = np.array([radar_area(r) for r in normalized])
    origami = np.array([origami_area(r, card.h) for r in normalized])
    scores = np.array([origami_score(r, card.h) for r in normalized])
    return ScoreCard(
        name=card.name,
        axes=card.axes,
        models=models,
        raw=raw,
        normalized=normalized,
        h=card.h,
        radar_area=radar,
        origami_area=origami,
        origami_score=scores,
    )


def reorder_axes(card: CardSpec, order: Sequence[str]) -> CardSpec:
    """The same card with its axes in another order."""
    by_name = {a.name: a for a in card.axes}
    if sorted(order) != sorted(by_name):
        raise ValidationError("axis order must name every metric exactly once")
    inline = None
    if card.inline_values:
        index = [list(by_name).index(n) for n in order]
        inline = {m: tuple(v[i] for i in index) for m, v in card.inline_values.items()}
    return CardSpec(
        name=card.name,
        axes=tuple(by_name[n] for n in order),
        h=card.h,
        std=card.std,
        degenerate_to_half=card.degenerate_to_half,
        models=card.models,
        inline_values=inline,
        values_file=card.values_file,
    )


# =============================================================================
# Run aggregation
# =============================================================================


def _select_runs(
    runs: list[tuple[int, float]], mode: AggregationMode, k: int | None, metric: str
) -> list[tuple[int, float]]:
    """Runs sorted by id; selection is per metric."""
    if mode == "all":
        return runs
    if mode == "boundaries_out":
        if len(runs) < 3:
            raise ValidationError(f"{metric}: boundaries_out needs >= 3 runs")
        values = [v for _, v in runs]
        lowest = values.index(min(values))
        rest = [i for i in range(len(runs)) if i != lowest]
        highest = max(rest, key=lambda i: (values[i], -i))
        return [runs[i] for i in rest if i != highest]
    if mode == "top_k":
        if k is None or k < 1:
            raise ValidationError("top_k needs k >= 1")
        if len(runs) < k:
            raise ValidationError(f"{metric}: top_k needs >= {k} runs, got {len(runs)}")
        ranked = sorted(runs, key=lambda rv: (-rv[1], rv[0]))
        return ranked[:k]
    raise ValidationError(f"unknown aggregation mode: {mode}")


def aggregate_runs(
    logs: Iterable[RunLog],
    mode: AggregationMode = "all",
    k: int | None = None,
    std: StdConvention = config.DEFAULT_STD,
) -> RunAggregate:
    """Mean and standard deviation per metric after the mode's run selection.

    boundaries_out drops one instance of the minimum and one of the maximum,
    lowest run id first; top_k keeps the k largest values of each metric.

    Raises:
        ValidationError: duplicate (run, metric) pairs or too few runs.
    """
    if std not in ("population", "sample"):
        raise ValidationError(f"std must be population or sample, got {std!r}")
    per_metric: dict[str, dict[int, float]] = {}
    for log in logs:
        runs = per_metric.setdefault(log.metric, {})
        if log.run in runs:
            raise ValidationError(f"duplicate value for run {log.run}, {log.metric}")
        runs[log.run] = float(log.value)
    if not per_metric:
        raise ValidationError("no run logs")

    ddof = 0 if std == "population" else 1
    summaries = {}
    for metric in sorted(per_metric):
        runs = sorted(per_metric[metric].items())
        chosen = _select_runs(runs, mode, k, metric)
        values = np.array([v for _, v in chosen])
        if ddof and values.size < 2:
            logger.warning("%s: sample std of a single run reported as 0", metric)
            spread = 0.0
        else:
            spread = float(np.std(values, ddof=ddof))
        summaries[metric] = MetricSummary(
            mean=float(np.mean(values)),
            std=spread,
            runs=tuple(sorted(r for r, _ in chosen)),
        )
    return RunAggregate(
        mode=mode,
        k=k if mode == "top_k" else None,
        std_convention=std,
        metrics=summaries,
    )
