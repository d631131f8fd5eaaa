"""Minimal TOML reading and writing for crlscore scorecard files.

Runs on Python 3.10, which has no tomllib. Covers what scorecards use:
- String, boolean, integer and float values
- Arrays of scalars and of inline tables { key = value }
- [table] headers and [[array-of-tables]] headers (one level deep)
"""

import io
import math
import re

_KEY_RE = re.compile(r"[a-zA-Z_][a-zA-Z0-9_-]*")
_NUMBER_RE = re.compile(
    r"[+-]?(?:inf|nan|[0-9][0-9_]*(?:\.[0-9_]+)?(?:[eE][+-]?[0-9]+)?)"
)
_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"'}


class TOMLError(Exception):
    """Malformed scorecard TOML."""


def _parse_string(s: str, pos: int) -> tuple[str, int]:
    """Basic string at pos; returns (value, position after the closing quote)."""
    if s[pos] != '"':
        raise TOMLError(f"Expected '\"' at position {pos}")
    pos += 1
    chars = []
    while pos < len(s) and s[pos] != "\n":
        c = s[pos]
        if c == '"':
            return "".join(chars), pos + 1
        if c == "\\":
            esc = s[pos + 1 : pos + 2]
            if esc not in _ESCAPES:
                raise TOMLError(f"Unsupported escape '\\{esc}' at position {pos}")
            chars.append(_ESCAPES[esc])
            pos += 2
            continue
        chars.append(c)
        pos += 1
    raise TOMLError("Unterminated string")


def _skip_whitespace(s: str, pos: int) -> int:
    """Skip whitespace and comments."""
    while pos < len(s):
        if s[pos] in " \t\r":
            pos += 1
        elif s[pos] == "#":
            while pos < len(s) and s[pos] != "\n":
                pos += 1
        else:
            break
    return pos


def _skip_blank(s: str, pos: int) -> int:
    """Skip whitespace, comments and newlines (inside arrays)."""
    while True:
        pos = _skip_whitespace(s, pos)
        if pos < len(s) and s[pos] == "\n":
            pos += 1
            continue
        return pos


def _parse_number(s: str, pos: int) -> tuple[int | float, int]:
    match = _NUMBER_RE.match(s, pos)
    if not match:
        raise TOMLError(f"Unexpected value at position {pos}: {s[pos : pos + 20]}")
    text = match.group(0).replace("_", "")
    pos = match.end()
    if any(c in text for c in ".eE") or text.lstrip("+-") in ("inf", "nan"):
        return float(text), pos
    return int(text), pos


def _parse_value(s: str, pos: int):
    """Parse any supported value starting at pos."""
    if pos >= len(s):
        raise TOMLError("Expected value at end of input")
    if s[pos] == '"':
        return _parse_string(s, pos)
    if s[pos] == "[":
        return _parse_array(s, pos)
    if s[pos] == "{":
        return _parse_inline_table(s, pos)
    if s.startswith("true", pos):
        return True, pos + 4
    if s.startswith("false", pos):
        return False, pos + 5
    return _parse_number(s, pos)


def _parse_key(s: str, pos: int) -> tuple[str, int]:
    if pos < len(s) and s[pos] == '"':
        return _parse_string(s, pos)
    match = _KEY_RE.match(s, pos)
    if not match:
        raise TOMLError(f"Expected key at position {pos}: {s[pos : pos + 20]}")
    return match.group(0), match.end()


def _parse_inline_table(s: str, pos: int) -> tuple[dict, int]:
    """Parse inline table { key = value, ... }."""
    if s[pos] != "{":
        raise TOMLError(f"Expected '{{' at position {pos}")
    pos += 1
    result = {}
    while pos < len(s):
        pos = _skip_whitespace(s, pos)
        if pos < len(s) and s[pos] == "}":
            return result, pos + 1
        key, pos = _parse_key(s, pos)
        pos = _skip_whitespace(s, pos)
        if pos >= len(s) or s[pos] != "=":
            raise TOMLError(f"Expected '=' at position {pos}")
        pos = _skip_whitespace(s, pos + 1)
        if key in result:
            raise TOMLError(f"Duplicate key '{key}'")
        result[key], pos = _parse_value(s, pos)
        pos = _skip_whitespace(s, pos)
        if pos < len(s) and s[pos] == ",":
            pos += 1
        elif pos >= len(s) or s[pos] != "}":
            raise TOMLError(f"Expected ',' or '}}' at position {pos}")
    raise TOMLError("Unterminated inline table")


def _parse_array(s: str, pos: int) -> tuple[list, int]:
    """Parse array [ ... ]."""
    if s[pos] != "[":
        raise TOMLError(f"Expected '[' at position {pos}")
    pos += 1
    result = []
    while pos < len(s):
        pos = _skip_blank(s, pos)
        if pos >= len(s):
            break
        if s[pos] == "]":
            return result, pos + 1
        value, pos = _parse_value(s, pos)
        result.append(value)
        pos = _skip_blank(s, pos)
        if pos < len(s) and s[pos] == ",":
            pos += 1
        elif pos >= len(s) or s[pos] != "]":
            raise TOMLError(f"Expected ',' or ']' at position {pos}")
    raise TOMLError("Unterminated array")


def _parse_header(s: str, pos: int, result: dict) -> tuple[dict, int]:
    """Parse a [table] or [[array]] header and return the table it opens."""
    is_array = s.startswith("[[", pos)
    pos += 2 if is_array else 1
    pos = _skip_whitespace(s, pos)
    name, pos = _parse_key(s, pos)
    pos = _skip_whitespace(s, pos)
    close = "]]" if is_array else "]"
    if not s.startswith(close, pos):
        raise TOMLError(f"Expected '{close}' after table name '{name}'")
    pos += len(close)
    if is_array:
        tables = result.setdefault(name, [])
        if not isinstance(tables, list):
            raise TOMLError(f"'{name}' is not an array of tables")
        table: dict = {}
        tables.append(table)
        return table, pos
    if name in result:
        raise TOMLError(f"Table '{name}' defined twice")
    result[name] = {}
    return result[name], pos


def loads(s: str) -> dict:
    """Parse TOML string into dict."""
    result: dict = {}
    current = result
    pos = 0
    while pos < len(s):
        pos = _skip_whitespace(s, pos)
        if pos >= len(s):
            break
        if s[pos] == "\n":
            pos += 1
            continue
        if s[pos] == "[":
            current, pos = _parse_header(s, pos, result)
        else:
            key, pos = _parse_key(s, pos)
            pos = _skip_whitespace(s, pos)
            if pos >= len(s) or s[pos] != "=":
                raise TOMLError(f"Expected '=' after key '{key}'")
            pos = _skip_whitespace(s, pos + 1)
            if key in current:
                raise TOMLError(f"Duplicate key '{key}'")
            current[key], pos = _parse_value(s, pos)
        # Only a comment may follow on the same line
        pos = _skip_whitespace(s, pos)
        if pos < len(s) and s[pos] != "\n":
            raise TOMLError(f"Unexpected text at position {pos}: {s[pos : pos + 20]}")
    return result


def load(f) -> dict:
    """Load TOML from file object."""
    return loads(f.read())


def _escape_string(s: str) -> str:
    """Escape a string for TOML."""
    s = s.replace("\\", "\\\\").replace('"', '\\"')
    return s.replace("\n", "\\n").replace("\t", "\\t")


def _format_value(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, str):
        return f'"{_escape_string(value)}"'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, dict):
        pairs = ", ".join(f"{k} = {_format_value(v)}" for k, v in value.items())
        return f"{{ {pairs} }}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    raise TOMLError(f"Cannot serialize {type(value).__name__}")


def _is_table_array(value) -> bool:
    if not isinstance(value, list) or not value:
        return False
    return all(isinstance(v, dict) for v in value)


def _dump_pairs(table: dict, f, top: bool = False) -> None:
    for key, value in table.items():
        if top and (isinstance(value, dict) or _is_table_array(value)):
            continue
        f.write(f"{key} = {_format_value(value)}\n")


def dump(config: dict, f) -> None:
    """Write config dict as TOML to file object.

    Top-level scalars come first, then [table] sections, then [[array]] sections.
    """
    _dump_pairs(config, f, top=True)
    for key, value in config.items():
        if isinstance(value, dict):
            f.write(f"\n[{key}]\n")
            _dump_pairs(value, f)
    for key, value in config.items():
        if _is_table_array(value):
            for item in value:
                f.write(f"\n[[{key}]]\n")
                _dump_pairs(item, f)


def dumps(config: dict) -> str:
    """Write config dict as TOML string."""
    f = io.StringIO()
    dump(config, f)
    return f.getvalue()
