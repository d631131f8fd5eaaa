"""Formatting utilities for report values."""

import math
from collections.abc import Mapping, Sequence
from typing import Any

SIGNIFICANT_DIGITS = 6
MAX_LABEL_LEN = 40


def round_sig(value: float) -> float:
    """Round to the report precision; integral floats stay floats."""
    if not math.isfinite(value) or value == 0:
        return value
    return float(f"{value:.{SIGNIFICANT_DIGITS}g}")


def format_number(value: float) -> str:
    return f"{value:.{SIGNIFICANT_DIGITS}g}"


def _truncate(s: str, max_len: int) -> str:
    """Truncate string with ellipsis if too long."""
    if len(s) > max_len:
        return s[: max_len - 3] + "..."
    return s


def format_edge(edge: Sequence[str]) -> str:
    return f"{edge[0]} -> {edge[1]}"


def format_triple(triple: Sequence[str]) -> str:
    """A junction or confounder triple, (a, b, c) -> "a, b, c"."""
    return ", ".join(triple)


def format_independence(x: str, y: str, given: Sequence[str]) -> str:
    if not given:
        return f"{x} _||_ {y}"
    return f"{x} _||_ {y} | {', '.join(given)}"


def format_value(value: Any) -> str:
    """Render one JSON-ready value as text."""
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_number(value)
    if isinstance(value, list):
        if not value:
            return "[]"
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    return str(value)


def jsonable(value: Any) -> Any:
    """Convert tuples, numpy scalars and floats into report-ready JSON values.

    Floats are rounded to the report precision so that text and JSON carry
    the same numbers.
    """
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "tolist"):
        return jsonable(value.tolist())
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        return round_sig(value)
    return str(value)


def format_block(data: Any, indent: int = 2) -> list[str]:
    """Indented key: value lines for a nested section.

    Lists of mappings become one "-" entry per item.
    """
    pad = " " * indent
    lines = []
    if isinstance(data, Mapping):
        for key, value in data.items():
            label = _truncate(str(key), MAX_LABEL_LEN)
            if isinstance(value, Mapping) or (
                isinstance(value, list) and value and isinstance(value[0], Mapping)
            ):
                lines.append(f"{pad}{label}:")
                lines.extend(format_block(value, indent + 2))
            else:
                lines.append(f"{pad}{label}: {format_value(value)}")
        return lines
    if isinstance(data, list):
        for item in data:
            if isinstance(item, Mapping):
                inner = format_block(item, indent + 2)
                if inner:
                    lines.append(f"{pad}- {inner[0].lstrip()}")
                    lines.extend(inner[1:])
                else:
                    lines.append(f"{pad}-")
            else:
                lines.append(f"{pad}- {format_value(item)}")
        return lines
    return [f"{pad}{format_value(data)}"]
