"""Core domain types, file ingestion and validation shared by every module.

Everything here is immutable after construction. Loaders are pure functions of
the file bytes, so any value may be shared freely between threads.
"""

from __future__ import annotations

import json
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any, Literal

import networkx as nx
import numpy as np
import pandas as pd

# Columns holding only non-negative integers with at most this many distinct
# values are inferred as categorical.
CATEGORICAL_MAX_LEVELS = 32

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")
_INT_RE = re.compile(r"^[0-9]+$")

Kind = Literal["numeric", "categorical"]


# =============================================================================
# Errors
# =============================================================================


class CrlScoreError(Exception):
    """Base class for every error raised by crlscore."""

    kind = "error"


class ParseError(CrlScoreError):
    """A file could not be parsed."""

    kind = "parse"


class SchemaError(CrlScoreError):
    """Parsed content violates a type invariant."""

    kind = "schema"


class CycleError(CrlScoreError):
    """A graph that must be acyclic contains a directed cycle."""

    kind = "cycle"

    def __init__(self, cycle: Sequence[str]):
        self.cycle = list(cycle)
        path = " -> ".join([*self.cycle, self.cycle[0]]) if self.cycle else "?"
        super().__init__(f"graph contains a cycle: {path}")


class ValidationError(CrlScoreError):
    """An operation precondition does not hold."""

    kind = "validation"


class DegenerateError(CrlScoreError):
    """The input carries no usable information for the requested statistic."""

    kind = "degenerate"


class InconsistentObservationError(CrlScoreError):
    """An observation cannot have been produced by the structural model."""

    kind = "inconsistent"


# =============================================================================
# Domain types
# =============================================================================


@dataclass(frozen=True)
class VariableSpec:
    """A named variable: numeric, or categorical with a fixed number of levels."""

    name: str
    kind: Kind = "numeric"
    cardinality: int | None = None
    observed: bool = True
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.name, str) or not _NAME_RE.match(self.name):
            raise SchemaError(f"invalid variable name: {self.name!r}")
        if self.kind not in ("numeric", "categorical"):
            raise SchemaError(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind == "categorical":
            if not isinstance(self.cardinality, int) or self.cardinality < 2:
                raise SchemaError(f"{self.name}: categorical cardinality must be >= 2")
            if self.labels is not None:
                object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
                if len(self.labels) != self.cardinality:
                    raise SchemaError(
                        f"{self.name}: {len(self.labels)} labels for "
                        f"cardinality {self.cardinality}"
                    )
        else:
            if self.cardinality is not None:
                raise SchemaError(f"{self.name}: numeric variables have no cardinality")
            if self.labels is not None:
                raise SchemaError(f"{self.name}: numeric variables carry no labels")

    @property
    def is_categorical(self) -> bool:
        return self.kind == "categorical"


def _check_unique(names: Sequence[str], what: str) -> None:
    seen: set[str] = set()
    for name in names:
        if name in seen:
            raise SchemaError(f"duplicate {what} name: {name}")
        seen.add(name)


@dataclass(frozen=True)
class CausalGraph:
    """A DAG over typed variables. Latent confounders are nodes with observed=False.

    Edges are ordered index pairs (cause, effect). Acyclicity is not enforced by
    the constructor; `load_graph` and `graph.validate_dag` check it.
    """

    variables: tuple[VariableSpec, ...]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(
            self, "edges", frozenset((int(a), int(b)) for a, b in self.edges)
        )
        _check_unique([v.name for v in self.variables], "variable")
        n = len(self.variables)
        for a, b in self.edges:
            if not (0 <= a < n and 0 <= b < n):
                raise SchemaError(f"edge endpoint out of range: ({a}, {b})")
            if a == b:
                raise SchemaError(f"self-loop on {self.variables[a].name}")

    @classmethod
    def from_names(
        cls,
        variables: Iterable[VariableSpec | str],
        edges: Iterable[tuple[str, str]],
    ) -> CausalGraph:
        """Build a graph from variable specs (or bare numeric names) and name pairs."""
        specs = tuple(
            v if isinstance(v, VariableSpec) else VariableSpec(v) for v in variables
        )
        _check_unique([v.name for v in specs], "variable")
        index = {v.name: i for i, v in enumerate(specs)}
        pairs: list[tuple[int, int]] = []
        for cause, effect in edges:
            for name in (cause, effect):
                if name not in index:
                    raise SchemaError(f"edge references unknown variable: {name}")
            pair = (index[cause], index[effect])
            if pair in pairs:
                raise SchemaError(f"duplicate edge: {cause} -> {effect}")
            pairs.append(pair)
        return cls(specs, frozenset(pairs))

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ValidationError(f"unknown variable: {name}") from None

    def spec(self, name: str) -> VariableSpec:
        return self.variables[self.index(name)]

    @cached_property
    def edge_names(self) -> tuple[tuple[str, str], ...]:
        """Edges as (cause, effect) names in lexicographic order."""
        return tuple(sorted((self.names[a], self.names[b]) for a, b in self.edges))

    def has_edge(self, cause: str, effect: str) -> bool:
        return (self.index(cause), self.index(effect)) in self.edges

    @cached_property
    def _parents(self) -> dict[str, tuple[str, ...]]:
        result: dict[str, list[str]] = {name: [] for name in self.names}
        for a, b in self.edges:
            result[self.names[b]].append(self.names[a])
        return {k: tuple(sorted(v)) for k, v in result.items()}

    @cached_property
    def _children(self) -> dict[str, tuple[str, ...]]:
        result: dict[str, list[str]] = {name: [] for name in self.names}
        for a, b in self.edges:
            result[self.names[a]].append(self.names[b])
        return {k: tuple(sorted(v)) for k, v in result.items()}

    def parents(self, name: str) -> tuple[str, ...]:
        self.index(name)
        return self._parents[name]

    def children(self, name: str) -> tuple[str, ...]:
        self.index(name)
        return self._children[name]

    @cached_property
    def observed_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.observed)

    @cached_property
    def digraph(self) -> nx.DiGraph:
        """The graph as a networkx DiGraph keyed by variable name. Do not mutate."""
        g = nx.DiGraph()
        g.add_nodes_from(self.names)
        g.add_edges_from(self.edge_names)
        return g

    def with_edges(self, edges: Iterable[tuple[str, str]]) -> CausalGraph:
        """Same variables, different edge set."""
        return CausalGraph.from_names(self.variables, edges)

    def same_structure(self, other: CausalGraph) -> bool:
        """Set equality on variables and edges, ignoring declaration order."""
        return set(self.variables) == set(other.variables) and set(
            self.edge_names
        ) == set(other.edge_names)


def find_cycle(g: CausalGraph) -> list[str] | None:
    """Return the nodes of one directed cycle, or None when the graph is a DAG."""
    try:
        cycle = nx.find_cycle(g.digraph, orientation="original")
    except nx.NetworkXNoCycle:
        return None
    return [edge[0] for edge in cycle]


@dataclass(frozen=True, eq=False)
class DataTable:
    """A rectangular sample matrix with typed columns.

    Values are stored as float64; categorical columns hold exact integer codes
    in [0, cardinality).
    """

    columns: tuple[VariableSpec, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2 or values.shape[1] != len(self.columns):
            raise SchemaError(
                f"table values of shape {values.shape} do not match "
                f"{len(self.columns)} columns"
            )
        if values.shape[0] < 1:
            raise SchemaError("table has no rows")
        _check_unique([c.name for c in self.columns], "column")
        for j, spec in enumerate(self.columns):
            col = values[:, j]
            if not np.all(np.isfinite(col)):
                raise SchemaError(f"column {spec.name}: non-finite value")
            if spec.is_categorical:
                if np.any(col != np.round(col)):
                    raise SchemaError(f"column {spec.name}: non-integer category code")
                if np.any(col < 0) or np.any(col >= spec.cardinality):
                    raise SchemaError(
                        f"column {spec.name}: category code out of range "
                        f"[0, {spec.cardinality})"
                    )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_columns(
        cls,
        columns: Mapping[str, Any],
        specs: Mapping[str, VariableSpec] | None = None,
    ) -> DataTable:
        """Build a table from named 1-D arrays.

        Columns without an explicit spec are categorical when their dtype is
        integer (cardinality max+1, at least 2) and numeric otherwise.
        """
        specs = dict(specs or {})
        out_specs = []
        arrays = []
        for name, data in columns.items():
            arr = np.asarray(data)
            spec = specs.get(name)
            if spec is None:
                if np.issubdtype(arr.dtype, np.integer):
                    card = max(int(arr.max()) + 1 if arr.size else 2, 2)
                    spec = VariableSpec(name, "categorical", card)
                else:
                    spec = VariableSpec(name)
            out_specs.append(spec)
            arrays.append(arr.astype(float))
        return cls(tuple(out_specs), np.column_stack(arrays))

    @classmethod
    def from_matrix(cls, matrix: Any, prefix: str = "x") -> DataTable:
        """An all-numeric table with columns named prefix0, prefix1, ..."""
        m = np.atleast_2d(np.asarray(matrix, dtype=float))
        specs = tuple(VariableSpec(f"{prefix}{j}") for j in range(m.shape[1]))
        return cls(specs, m)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown column: {name}") from None

    def spec(self, name: str) -> VariableSpec:
        return self.columns[self.index(name)]

    def column(self, name: str) -> np.ndarray:
        """Column values; int64 codes for categorical columns."""
        spec = self.spec(name)
        col = self.values[:, self.index(name)]
        return col.astype(np.int64) if spec.is_categorical else col

    def select(self, names: Sequence[str]) -> DataTable:
        idx = [self.index(n) for n in names]
        return DataTable(tuple(self.columns[i] for i in idx), self.values[:, idx])

    def take(self, rows: Sequence[int] | np.ndarray) -> DataTable:
        return DataTable(self.columns, self.values[np.asarray(rows, dtype=int)])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {name: self.column(name) for name in self.names}, columns=list(self.names)
        )


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """A rasterized binary image, row-major, `height` rows of `width` bits."""

    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise SchemaError("mask dimensions must be positive")
        bits = np.asarray(self.bits, dtype=bool)
        if bits.size != self.width * self.height:
            raise SchemaError(
                f"mask has {bits.size} bits, expected {self.width} x {self.height}"
            )
        bits = bits.reshape(self.height, self.width).copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_array(cls, array: Any) -> BinaryMask:
        arr = np.asarray(array, dtype=bool)
        if arr.ndim != 2:
            raise SchemaError("mask array must be 2-D")
        return cls(arr.shape[1], arr.shape[0], arr)

    def count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class RunLog:
    """One metric value measured in one independent run."""

    run: int
    metric: str
    value: float

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise SchemaError(f"run {self.run}, {self.metric}: non-finite value")


# =============================================================================
# Graph files
# =============================================================================


def _read_text(path: str | Path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _variable_from_dict(entry: Any) -> VariableSpec:
    if not isinstance(entry, dict) or "name" not in entry:
        raise ParseError(f"variable entry must be an object with a name: {entry!r}")
    unknown = set(entry) - {"name", "kind", "cardinality", "observed", "labels"}
    if unknown:
        raise ParseError(f"unknown variable fields: {sorted(unknown)}")
    labels = entry.get("labels")
    return VariableSpec(
        name=entry["name"],
        kind=entry.get("kind", "numeric"),
        cardinality=entry.get("cardinality"),
        observed=bool(entry.get("observed", True)),
        labels=tuple(labels) if labels is not None else None,
    )


def graph_from_dict(obj: Any) -> CausalGraph:
    """Build a structurally valid graph from the parsed graph schema object."""
    if not isinstance(obj, dict):
        raise ParseError("graph file must contain an object")
    variables = obj.get("variables")
    edges = obj.get("edges", [])
    if not isinstance(variables, list) or not isinstance(edges, list):
        raise ParseError("graph needs a 'variables' list and an 'edges' list")
    specs = [_variable_from_dict(v) for v in variables]
    pairs = []
    for edge in edges:
        if (
            not isinstance(edge, list)
            or len(edge) != 2
            or not all(isinstance(s, str) for s in edge)
        ):
            raise ParseError(f"edge must be a [cause, effect] name pair: {edge!r}")
        pairs.append((edge[0], edge[1]))
    return CausalGraph.from_names(specs, pairs)


def variable_to_dict(spec: VariableSpec) -> dict[str, Any]:
    entry: dict[str, Any] = {"name": spec.name, "kind": spec.kind}
    if spec.is_categorical:
        entry["cardinality"] = spec.cardinality
        if spec.labels is not None:
            entry["labels"] = list(spec.labels)
    if not spec.observed:
        entry["observed"] = False
    return entry


def graph_to_dict(g: CausalGraph) -> dict[str, Any]:
    return {
        "variables": [variable_to_dict(v) for v in g.variables],
        "edges": [list(e) for e in g.edge_names],
    }


def load_graph(path: str | Path) -> CausalGraph:
    """Load and validate a causal graph file.

    Raises:
        ParseError: malformed file.
        SchemaError: duplicate names or invalid variable typing.
        CycleError: the edges contain a directed cycle.
    """
    try:
        obj = json.loads(_read_text(path))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e}") from None
    g = graph_from_dict(obj)
    cycle = find_cycle(g)
    if cycle is not None:
        raise CycleError(cycle)
    return g


def write_graph(g: CausalGraph, path: str | Path) -> None:
    text = json.dumps(graph_to_dict(g), indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8")


# =============================================================================
# Tables
# =============================================================================


def _read_cells(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a headered CSV as raw strings, rejecting ragged rows."""
    try:
        frame = pd.read_csv(
            path,
            header=None,
            dtype=str,
            keep_default_na=False,
            na_filter=False,
            skip_blank_lines=True,
            encoding="utf-8",
        )
    except pd.errors.ParserError as e:
        raise ParseError(f"{path}: ragged rows ({e})") from None
    except pd.errors.EmptyDataError:
        raise ParseError(f"{path}: empty file") from None
    cells = frame.to_numpy(dtype=object)
    if any(not isinstance(c, str) for c in cells.ravel()):
        raise ParseError(f"{path}: ragged rows")
    header = [h.strip() for h in cells[0]]
    body = np.array([[c.strip() for c in row] for row in cells[1:]], dtype=object)
    if body.size == 0:
        raise SchemaError(f"{path}: table has no rows")
    return header, body.reshape(len(cells) - 1, len(header))


def _parse_numeric(name: str, cells: np.ndarray) -> np.ndarray:
    try:
        values = cells.astype(float)
    except ValueError:
        raise ParseError(f"column {name}: non-numeric cell") from None
    if not np.all(np.isfinite(values)):
        raise SchemaError(f"column {name}: non-finite value")
    return values


def infer_spec(name: str, cells: Sequence[str]) -> VariableSpec:
    """Categorical iff every cell is a non-negative integer and there are at
    most CATEGORICAL_MAX_LEVELS distinct values; numeric otherwise."""
    if all(_INT_RE.match(c) for c in cells):
        levels = {int(c) for c in cells}
        if len(levels) <= CATEGORICAL_MAX_LEVELS:
            return VariableSpec(name, "categorical", max(max(levels) + 1, 2))
    return VariableSpec(name)


def table_from_cells(
    header: Sequence[str],
    body: np.ndarray,
    schema: Sequence[VariableSpec] | Literal["infer"] = "infer",
) -> DataTable:
    _check_unique(header, "column")
    if schema == "infer":
        specs = [infer_spec(name, list(body[:, j])) for j, name in enumerate(header)]
        order = list(range(len(header)))
    else:
        by_name = {s.name: s for s in schema}
        missing = [s.name for s in schema if s.name not in header]
        extra = [h for h in header if h not in by_name]
        if missing or extra:
            raise SchemaError(f"schema mismatch: missing {missing}, unexpected {extra}")
        specs = list(schema)
        order = [list(header).index(s.name) for s in schema]
    columns = [_parse_numeric(s.name, body[:, j]) for s, j in zip(specs, order)]
    return DataTable(tuple(specs), np.column_stack(columns))


def load_table(
    path: str | Path,
    schema: Sequence[VariableSpec] | Literal["infer"] = "infer",
) -> DataTable:
    """Load a headered CSV file as a typed table.

    Raises:
        ParseError: ragged rows or unparseable cells.
        SchemaError: non-finite numeric cell, category code out of range, or a
            header that does not match the explicit schema.
    """
    header, body = _read_cells(path)
    return table_from_cells(header, body, schema)


def write_table(table: DataTable, path: str | Path) -> None:
    table.to_frame().to_csv(path, index=False, lineterminator="\n")


def quantile_bins(values: np.ndarray, bins: int) -> np.ndarray:
    """Equal-frequency bin codes in [0, bins). Ties always share a bin."""
    if bins < 2:
        raise ValidationError("bins must be >= 2")
    values = np.asarray(values, dtype=float)
    edges = np.quantile(values, np.linspace(0.0, 1.0, bins + 1)[1:-1])
    return np.searchsorted(edges, values, side="right").astype(np.int64)


def discretize(
    table: DataTable, bins: int, columns: Sequence[str] | None = None
) -> DataTable:
    """Replace numeric columns (all, or those named) by equal-frequency bin codes."""
    targets = set(table.names if columns is None else columns)
    specs = []
    arrays = []
    for spec in table.columns:
        if spec.name in targets and not spec.is_categorical:
            specs.append(VariableSpec(spec.name, "categorical", bins, spec.observed))
            arrays.append(quantile_bins(table.column(spec.name), bins))
        else:
            specs.append(spec)
            arrays.append(table.values[:, table.index(spec.name)])
    return DataTable(tuple(specs), np.column_stack(arrays))


# =============================================================================
# Masks and run logs
# =============================================================================


def mask_from_pbm(text: str) -> BinaryMask:
    """Parse a plain PBM (P1) document."""
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    if not tokens or tokens[0] != "P1":
        raise ParseError("not a plain PBM (P1) file")
    try:
        width, height = int(tokens[1]), int(tokens[2])
    except (IndexError, ValueError):
        raise ParseError("PBM header lacks width and height") from None
    # P1 allows pixels without separating whitespace
    pixels = "".join(tokens[3:])
    if set(pixels) - {"0", "1"}:
        raise ParseError("PBM pixels must be 0 or 1")
    if len(pixels) != width * height:
        raise ParseError(f"PBM has {len(pixels)} pixels, expected {width * height}")
    bits = np.frombuffer(pixels.encode("ascii"), dtype=np.uint8) == ord("1")
    return BinaryMask(width, height, bits)


def mask_to_pbm(mask: BinaryMask) -> str:
    rows = [" ".join("1" if b else "0" for b in row) for row in mask.bits]
    return "P1\n{} {}\n{}\n".format(mask.width, mask.height, "\n".join(rows))


def load_mask(path: str | Path) -> BinaryMask:
    return mask_from_pbm(_read_text(path))


def write_mask(mask: BinaryMask, path: str | Path) -> None:
    Path(path).write_text(mask_to_pbm(mask), encoding="ascii")


def load_run_logs(path: str | Path) -> list[RunLog]:
    """Load a long-format run log CSV with columns run, metric, value."""
    header, body = _read_cells(path)
    if sorted(header) != ["metric", "run", "value"]:
        raise SchemaError(f"{path}: run logs need columns run, metric, value")
    col = {name: body[:, header.index(name)] for name in header}
    logs = []
    seen: set[tuple[int, str]] = set()
    for run, metric, value in zip(col["run"], col["metric"], col["value"]):
        if not _INT_RE.match(run):
            raise ParseError(f"{path}: run id must be a non-negative integer: {run!r}")
        try:
            v = float(value)
        except ValueError:
            raise ParseError(f"{path}: non-numeric value {value!r}") from None
        key = (int(run), metric)
        if key in seen:
            raise SchemaError(f"{path}: duplicate entry for run {run}, {metric}")
        seen.add(key)
        logs.append(RunLog(int(run), metric, v))
    return logs


# =============================================================================
# Bundled fixtures
# =============================================================================


def fixture_path(name: str) -> Path:
    """Path of a bundled fixture file.

    Graphs: pendulum.json, flow_noise.json, shadow_sunlight.json,
    shadow_pointlight.json, celeba_smile.json, celeba_beard.json,
    morphomnist.json, desiderata_toy.json. The two Shadow graphs are
    reconstructions matching the published junction and confounder claims;
    celeba_beard.json omits the disputed gender -> beard edge.
    Scorecard: vae_benchmark.csv (models in rows beta-VAE, ConditionalVAE, CausalVAE)
    and vae_benchmark_card.toml. Structural model: chain_scm.json.
    """
    path = resources.files("crlscore") / "fixtures" / name
    if not path.is_file():
        raise ValidationError(f"unknown fixture: {name}")
    return Path(str(path))
