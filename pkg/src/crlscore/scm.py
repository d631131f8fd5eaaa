"""Structural causal model simulator and the pendulum scene oracle.

Every node draws its exogenous uniforms from a Philox counter stream keyed by
(seed, node index); row i always consumes counter i, so a sample of n rows is
a prefix of any larger sample with the same seed, whatever the evaluation
order.
"""

import json
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import networkx as nx
import numpy as np
from scipy.special import ndtri, softmax

from crlscore.generation import CounterfactualCase
from crlscore.model import (
    BinaryMask,
    CausalGraph,
    CycleError,
    DataTable,
    InconsistentObservationError,
    ParseError,
    SchemaError,
    ValidationError,
    VariableSpec,
    find_cycle,
    graph_from_dict,
    graph_to_dict,
)

logger = logging.getLogger(__name__)

DEFAULT_SIGMA = 0.1
# Uniforms are kept strictly inside (0, 1) before the normal quantile
_UNIFORM_EPS = 2.0**-53
# Residual tolerance for noise-free nodes, relative to the observed magnitude
RESIDUAL_TOL = 1e-9

NoiseKind = Literal["gaussian", "uniform", "none"]
MechanismKind = Literal["linear", "tanh", "square", "sin", "categorical", "constant"]
_NONLINEAR = {"tanh": np.tanh, "square": np.square, "sin": np.sin}


@dataclass(frozen=True)
class Noise:
    kind: NoiseKind = "gaussian"
    sigma: float = DEFAULT_SIGMA
    low: float = -0.5
    high: float = 0.5

    def __post_init__(self):
        if self.kind == "gaussian" and not self.sigma > 0:
            raise SchemaError(f"gaussian noise needs sigma > 0, got {self.sigma}")
        if self.kind == "uniform" and not self.low < self.high:
            raise SchemaError("uniform noise needs low < high")
        if self.kind not in ("gaussian", "uniform", "none"):
            raise SchemaError(f"unknown noise type: {self.kind}")

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        if self.kind == "gaussian":
            return self.sigma * ndtri(np.clip(u, _UNIFORM_EPS, 1.0 - _UNIFORM_EPS))
        if self.kind == "uniform":
            return self.low + (self.high - self.low) * u
        return np.zeros_like(u)


@dataclass(frozen=True)
class Mechanism:
    """Structural equation of one node.

    Numeric kinds compute bias + sum(w * parent), optionally through a named
    nonlinearity, plus additive noise. Categorical nodes hold one logit row
    per level, [bias, w_parent...] with parents in name order, and sample the
    softmax by inverse CDF.
    """

    kind: MechanismKind = "linear"
    weights: tuple[tuple[str, float], ...] = ()
    bias: float = 0.0
    logits: tuple[tuple[float, ...], ...] = ()
    value: float = 0.0
    noise: Noise = field(default_factory=Noise)

    @property
    def parents(self) -> tuple[str, ...]:
        return tuple(sorted(name for name, _ in self.weights))

    @classmethod
    def constant(cls, value: float) -> "Mechanism":
        return cls(kind="constant", value=float(value), noise=Noise("none"))

    def linear_part(self, parents: Mapping[str, np.ndarray], n: int) -> np.ndarray:
        out = np.full(n, self.bias, dtype=float)
        for name, w in self.weights:
            out = out + w * parents[name]
        return out

    def deterministic(self, parents: Mapping[str, np.ndarray], n: int) -> np.ndarray:
        """f(parents) for numeric kinds, before noise."""
        if self.kind == "constant":
            return np.full(n, self.value)
        linear = self.linear_part(parents, n)
        if self.kind == "linear":
            return linear
        return _NONLINEAR[self.kind](linear)


@dataclass(frozen=True)
class Scm:
    """A causal graph with one mechanism per node."""

    graph: CausalGraph
    mechanisms: Mapping[str, Mechanism]

    def __post_init__(self):
        object.__setattr__(self, "mechanisms", dict(self.mechanisms))
        cycle = find_cycle(self.graph)
        if cycle is not None:
            raise CycleError(cycle)
        unknown = set(self.mechanisms) - set(self.graph.names)
        if unknown:
            raise ValidationError(f"mechanisms for unknown nodes: {sorted(unknown)}")
        for spec in self.graph.variables:
            _check_mechanism(self.graph, spec, self.mechanism(spec.name))

    def mechanism(self, name: str) -> Mechanism:
        """A node's mechanism; roots without one draw default gaussian noise."""
        return self.mechanisms.get(name, Mechanism())

    @property
    def order(self) -> list[str]:
        return list(nx.lexicographical_topological_sort(self.graph.digraph))


def _check_mechanism(g: CausalGraph, spec: VariableSpec, mech: Mechanism) -> None:
    parents = g.parents(spec.name)
    if mech.kind == "constant":
        if parents:
            raise SchemaError(f"{spec.name}: constant mechanism on a node with parents")
        if spec.is_categorical and (
            mech.value != round(mech.value) or not 0 <= mech.value < spec.cardinality
        ):
            raise ValidationError(f"{spec.name}: {mech.value:g} is not a valid level")
        return
    if mech.kind == "categorical":
        if not spec.is_categorical:
            raise SchemaError(f"{spec.name}: categorical mechanism on a numeric node")
        if len(mech.logits) != spec.cardinality:
            raise SchemaError(
                f"{spec.name}: {len(mech.logits)} logit rows for "
                f"cardinality {spec.cardinality}"
            )
        if any(len(row) != 1 + len(parents) for row in mech.logits):
            raise SchemaError(
                f"{spec.name}: logit rows need a bias and one weight per parent"
            )
        return
    if spec.is_categorical:
        if parents:
            raise SchemaError(
                f"{spec.name}: categorical node needs a categorical mechanism"
            )
        return
    if mech.kind not in ("linear", *_NONLINEAR):
        raise SchemaError(f"{spec.name}: unknown mechanism type {mech.kind!r}")
    if mech.parents != parents:
        raise SchemaError(
            f"{spec.name}: mechanism parents {list(mech.parents)} do not match "
            f"graph parents {list(parents)}"
        )


def _uniforms(seed: int, node_index: int, n: int) -> np.ndarray:
    if seed < 0:
        raise ValidationError(f"seed must be non-negative, got {seed}")
    bitgen = np.random.Philox(key=seed * 2**64 + node_index)
    return np.random.Generator(bitgen).random(n)


def _categorical_draw(
    mech: Mechanism, parents: Sequence[np.ndarray], u: np.ndarray
) -> np.ndarray:
    logits = np.asarray(mech.logits, dtype=float)
    design = np.column_stack([np.ones(u.size), *parents])
    probs = softmax(design @ logits.T, axis=1)
    cdf = np.cumsum(probs, axis=1)
    codes = (u[:, None] >= cdf).sum(axis=1)
    return np.minimum(codes, logits.shape[0] - 1)


def sample(scm: Scm, n: int, seed: int = 0) -> DataTable:
    """Ancestral sampling of n rows.

    Latent nodes are included; their column specs keep observed=False.
    Categorical roots without a mechanism are uniform over their levels.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    g = scm.graph
    values: dict[str, np.ndarray] = {}
    for name in scm.order:
        spec = g.spec(name)
        mech = scm.mechanism(name)
        u = _uniforms(seed, g.index(name), n)
        parents = g.parents(name)
        if mech.kind == "constant":
            values[name] = np.full(n, mech.value)
        elif spec.is_categorical:
            if mech.kind == "categorical":
                values[name] = _categorical_draw(
                    mech, [values[p] for p in parents], u
                ).astype(float)
            else:
                values[name] = np.floor(u * spec.cardinality)
        else:
            base = mech.deterministic(values, n)
            values[name] = base + mech.noise.from_uniform(u)
    columns = {name: values[name] for name in g.names}
    return DataTable.from_columns(columns, {v.name: v for v in g.variables})


def intervene(scm: Scm, assignments: Mapping[str, float]) -> Scm:
    """do(): replace each assigned node by a constant and cut its incoming edges."""
    for name in assignments:
        scm.graph.index(name)
    edges = [(a, b) for a, b in scm.graph.edge_names if b not in assignments]
    mechanisms = dict(scm.mechanisms)
    for name, value in assignments.items():
        mechanisms[name] = Mechanism.constant(value)
    return Scm(scm.graph.with_edges(edges), mechanisms)


def _residual_bound(observed: float) -> float:
    return RESIDUAL_TOL * (1.0 + abs(observed))


def abduct(scm: Scm, observation: Mapping[str, float]) -> dict[str, float]:
    """Recover each node's additive noise from a full observation.

    Raises:
        ValidationError: a categorical node, or a missing variable.
        InconsistentObservationError: a noise-free node whose observed value
            its parents do not produce, or a residual outside uniform support.
    """
    g = scm.graph
    categorical = [v.name for v in g.variables if v.is_categorical]
    if categorical:
        raise ValidationError(
            "counterfactuals are defined for additive-noise numeric models only; "
            f"categorical: {', '.join(categorical)}"
        )
    missing = [v for v in g.names if v not in observation]
    if missing:
        raise ValidationError(f"observation lacks {', '.join(missing)}")
    obs = {k: np.array([float(v)]) for k, v in observation.items()}
    noise = {}
    for name in scm.order:
        mech = scm.mechanism(name)
        observed = float(observation[name])
        residual = observed - float(mech.deterministic(obs, 1)[0])
        if mech.kind == "constant" or mech.noise.kind == "none":
            if abs(residual) > _residual_bound(observed):
                raise InconsistentObservationError(
                    f"{name}={observed:g} is off its noise-free mechanism "
                    f"by {residual:.3g}"
                )
        elif mech.noise.kind == "uniform":
            lo, hi = mech.noise.low, mech.noise.high
            slack = _residual_bound(observed)
            if not lo - slack <= residual <= hi + slack:
                raise InconsistentObservationError(
                    f"{name}: residual {residual:.6g} outside noise support "
                    f"[{lo:g}, {hi:g}]"
                )
        noise[name] = residual
    return noise


def counterfactual(
    scm: Scm, observation: Mapping[str, float], assignments: Mapping[str, float]
) -> dict[str, float]:
    """Abduction, action, prediction for one observed row.

    Nodes that are not descendants of a changed assignment keep their
    observed value exactly.
    """
    for name in assignments:
        scm.graph.index(name)
    noise = abduct(scm, observation)
    changed = {
        k: float(v)
        for k, v in assignments.items()
        if float(v) != float(observation[k])
    }
    if not changed:
        return {name: float(observation[name]) for name in scm.graph.names}

    after = intervene(scm, assignments)
    affected = set(changed)
    for name in changed:
        affected |= nx.descendants(after.graph.digraph, name)
    result = {name: float(observation[name]) for name in scm.graph.names}
    for name in after.order:
        if name not in affected:
            continue
        if name in assignments:
            result[name] = float(assignments[name])
            continue
        mech = after.mechanism(name)
        current = {k: np.array([v]) for k, v in result.items()}
        result[name] = float(mech.deterministic(current, 1)[0]) + noise[name]
    return result


# =============================================================================
# SCM files
# =============================================================================


def _noise_from_dict(name: str, obj: Any) -> Noise:
    if obj is None:
        return Noise()
    if not isinstance(obj, dict):
        raise ParseError(f"{name}: noise must be an object")
    kind = obj.get("type", "gaussian")
    return Noise(
        kind=kind,
        sigma=float(obj.get("sigma", DEFAULT_SIGMA)),
        low=float(obj.get("low", -0.5)),
        high=float(obj.get("high", 0.5)),
    )


def _mechanism_from_dict(name: str, obj: Any) -> Mechanism:
    if not isinstance(obj, dict):
        raise ParseError(f"mechanism for {name} must be an object")
    kind = obj.get("type", "linear")
    weights = obj.get("weights", {})
    if not isinstance(weights, dict):
        raise ParseError(f"{name}: weights must map parent names to numbers")
    return Mechanism(
        kind=kind,
        weights=tuple(sorted((str(p), float(w)) for p, w in weights.items())),
        bias=float(obj.get("bias", 0.0)),
        logits=tuple(tuple(float(x) for x in row) for row in obj.get("logits", [])),
        value=float(obj.get("value", 0.0)),
        noise=_noise_from_dict(name, obj.get("noise")),
    )


def scm_from_dict(obj: Any) -> Scm:
    g = graph_from_dict(obj)
    mechanisms = obj.get("mechanisms", {})
    if not isinstance(mechanisms, dict):
        raise ParseError("'mechanisms' must map node names to objects")
    return Scm(g, {k: _mechanism_from_dict(k, v) for k, v in mechanisms.items()})


def scm_to_dict(scm: Scm) -> dict[str, Any]:
    out = graph_to_dict(scm.graph)
    mechanisms = {}
    for name, mech in sorted(scm.mechanisms.items()):
        entry: dict[str, Any] = {"type": mech.kind}
        if mech.kind == "constant":
            entry["value"] = mech.value
        elif mech.kind == "categorical":
            entry["logits"] = [list(row) for row in mech.logits]
        else:
            entry["weights"] = dict(mech.weights)
            entry["bias"] = mech.bias
            noise: dict[str, Any] = {"type": mech.noise.kind}
            if mech.noise.kind == "gaussian":
                noise["sigma"] = mech.noise.sigma
            elif mech.noise.kind == "uniform":
                noise.update(low=mech.noise.low, high=mech.noise.high)
            entry["noise"] = noise
        mechanisms[name] = entry
    out["mechanisms"] = mechanisms
    return out


def load_scm(path: str | Path) -> Scm:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e}") from None
    return scm_from_dict(obj)


def write_scm(scm: Scm, path: str | Path) -> None:
    text = json.dumps(scm_to_dict(scm), indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def parse_assignments(items: Sequence[str]) -> dict[str, float]:
    """NAME=VALUE strings from the command line."""
    out = {}
    for item in items:
        name, sep, raw = item.partition("=")
        if not sep or not name:
            raise ValidationError(f"assignment must look like NAME=VALUE: {item!r}")
        try:
            out[name.strip()] = float(raw)
        except ValueError:
            raise ValidationError(f"{name}: {raw!r} is not a number") from None
    return out


# =============================================================================
# Pendulum scene
# =============================================================================

# Scene units: x in [0, 1] left to right, floor at y = 0.
PIVOT = (0.5, 0.75)
ROD_LENGTH = 0.4
ROD_WIDTH = 0.02
LIGHT_HEIGHT = 2.5
LIGHT_REACH = 1.0
RASTER_SIZE = 96
SHADOW_ROWS = 3
PENDULUM_RANGE = (-45.0, 45.0)
LIGHT_RANGE = (60.0, 120.0)


@dataclass(frozen=True)
class PendulumScene:
    pendulum_angle: float
    light_angle: float
    shadow_length: float
    shadow_position: float
    raster: BinaryMask

    def as_row(self) -> dict[str, float]:
        return {
            "pendulum_angle": self.pendulum_angle,
            "light_angle": self.light_angle,
            "shadow_length": self.shadow_length,
            "shadow_position": self.shadow_position,
        }


def _check_range(name: str, value: float, bounds: tuple[float, float]) -> None:
    lo, hi = bounds
    if not lo <= value <= hi:
        raise ValidationError(f"{name} {value:g} outside [{lo:g}, {hi:g}] degrees")


def _floor_projection(px: float, py: float, lx: float) -> float:
    """Where the ray from the light through (px, py) meets the floor."""
    return lx + (px - lx) * LIGHT_HEIGHT / (LIGHT_HEIGHT - py)


def _to_pixel(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    last = RASTER_SIZE - 1
    cols = np.clip(np.rint(x * last), 0, last).astype(int)
    rows = np.clip(np.rint((1.0 - y) * last), 0, last).astype(int)
    return rows, cols


def render_pendulum(pendulum_angle: float, light_angle: float) -> PendulumScene:
    """Project the rod onto the floor from a point light and rasterize both.

    The light sits at height LIGHT_HEIGHT, displaced horizontally from the
    pivot by LIGHT_REACH * cos(light_angle); 90 degrees is straight overhead.
    A shadow never measures less than the rod width.
    """
    _check_range("pendulum_angle", pendulum_angle, PENDULUM_RANGE)
    _check_range("light_angle", light_angle, LIGHT_RANGE)
    theta = math.radians(pendulum_angle)
    light_x = PIVOT[0] + LIGHT_REACH * math.cos(math.radians(light_angle))
    bob = (
        PIVOT[0] + ROD_LENGTH * math.sin(theta),
        PIVOT[1] - ROD_LENGTH * math.cos(theta),
    )
    ends = sorted(_floor_projection(x, y, light_x) for x, y in (PIVOT, bob))
    position = (ends[0] + ends[1]) / 2.0
    length = max(ends[1] - ends[0], ROD_WIDTH)

    canvas = np.zeros((RASTER_SIZE, RASTER_SIZE), dtype=bool)
    t = np.linspace(0.0, 1.0, 4 * RASTER_SIZE)
    rod_x = PIVOT[0] + t * (bob[0] - PIVOT[0])
    rod_y = PIVOT[1] + t * (bob[1] - PIVOT[1])
    rows, cols = _to_pixel(rod_x, rod_y)
    canvas[rows, cols] = True
    lo, hi = position - length / 2.0, position + length / 2.0
    _, shadow_cols = _to_pixel(np.array([lo, hi]), np.zeros(2))
    canvas[-SHADOW_ROWS:, shadow_cols[0] : shadow_cols[1] + 1] = True
    return PendulumScene(
        pendulum_angle=float(pendulum_angle),
        light_angle=float(light_angle),
        shadow_length=float(length),
        shadow_position=float(position),
        raster=BinaryMask.from_array(canvas),
    )


def sample_pendulum(n: int, seed: int = 0) -> list[PendulumScene]:
    """n scenes with both causes drawn uniformly from their ranges."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    angles = PENDULUM_RANGE[0] + np.diff(PENDULUM_RANGE) * _uniforms(seed, 0, n)
    lights = LIGHT_RANGE[0] + np.diff(LIGHT_RANGE) * _uniforms(seed, 1, n)
    return [render_pendulum(float(a), float(b)) for a, b in zip(angles, lights)]


def pendulum_table(scenes: Sequence[PendulumScene]) -> DataTable:
    rows = [s.as_row() for s in scenes]
    return DataTable.from_columns(
        {name: np.array([r[name] for r in rows]) for name in rows[0]}
    )


def pendulum_counterfactual_pairs(
    n: int, seed: int = 0, intervention: tuple[str, float] | None = None
) -> list[CounterfactualCase]:
    """Factual rasters paired with ground-truth counterfactual renderings.

    `intervention` is (pendulum_angle | light_angle, degrees); None renders
    every oracle identical to its factual scene.
    """
    if intervention is not None and intervention[0] not in (
        "pendulum_angle",
        "light_angle",
    ):
        raise ValidationError(f"cannot intervene on {intervention[0]} in the pendulum")
    cases = []
    for scene in sample_pendulum(n, seed):
        if intervention is None:
            oracle = scene
            label = ("pendulum_angle", scene.pendulum_angle)
        else:
            causes = {
                "pendulum_angle": scene.pendulum_angle,
                "light_angle": scene.light_angle,
            }
            causes[intervention[0]] = float(intervention[1])
            oracle = render_pendulum(causes["pendulum_angle"], causes["light_angle"])
            label = (intervention[0], float(intervention[1]))
        cases.append(CounterfactualCase(scene.raster, oracle.raster, label))
    logger.debug("rendered %d counterfactual pairs", len(cases))
    return cases


def pendulum_graph() -> CausalGraph:
    return CausalGraph.from_names(
        [
            VariableSpec("pendulum_angle"),
            VariableSpec("light_angle"),
            VariableSpec("shadow_length"),
            VariableSpec("shadow_position"),
        ],
        [
            ("pendulum_angle", "shadow_length"),
            ("pendulum_angle", "shadow_position"),
            ("light_angle", "shadow_length"),
            ("light_angle", "shadow_position"),
        ],
    )

