"""Structural analysis of causal graphs.

DAG checks, the junction census behind the dataset desiderata, d-separation,
confounder listing and predicted-versus-true graph scoring.
"""

import logging
from collections import deque
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import networkx as nx
import numpy as np
import pandas as pd
from sklearn.metrics import roc_auc_score

from crlscore.model import (
    CausalGraph,
    CycleError,
    ParseError,
    SchemaError,
    ValidationError,
    find_cycle,
)

logger = logging.getLogger(__name__)

Triple = tuple[str, str, str]
Edge = tuple[str, str]


@dataclass(frozen=True)
class JunctionCensus:
    """Every chain, fork and collider triple of a graph.

    Chains (A, B, C) read A -> B -> C. Forks (A, B, C) read A <- B -> C and
    colliders A -> B <- C; both are listed once with A < C.
    """

    chains: list[Triple] = field(default_factory=list)
    forks: list[Triple] = field(default_factory=list)
    colliders: list[Triple] = field(default_factory=list)

    @property
    def has_chain(self) -> bool:
        return bool(self.chains)

    @property
    def has_fork(self) -> bool:
        return bool(self.forks)

    @property
    def has_collider(self) -> bool:
        return bool(self.colliders)


@dataclass(frozen=True)
class DesiderataReport:
    census: JunctionCensus
    variable_count: int
    has_numeric: bool
    has_categorical: bool
    confounded_edges: list[Triple]

    @property
    def has_chain(self) -> bool:
        return self.census.has_chain

    @property
    def has_fork(self) -> bool:
        return self.census.has_fork

    @property
    def has_collider(self) -> bool:
        return self.census.has_collider

    @property
    def satisfied(self) -> bool:
        return (
            self.has_chain
            and self.has_fork
            and self.has_collider
            and bool(self.confounded_edges)
        )


@dataclass(frozen=True)
class GraphComparison:
    missing: list[Edge]
    extra: list[Edge]
    reversed: list[Edge]
    tpr: float
    auc: float | None = None

    @property
    def shd(self) -> int:
        return len(self.missing) + len(self.extra) + len(self.reversed)


def validate_dag(g: CausalGraph) -> list[str]:
    """Return a topological order, ties broken by name.

    Raises:
        CycleError: the graph has a directed cycle; the error names it.
    """
    cycle = find_cycle(g)
    if cycle is not None:
        raise CycleError(cycle)
    return list(nx.lexicographical_topological_sort(g.digraph))


def junction_census(g: CausalGraph) -> JunctionCensus:
    chains: list[Triple] = []
    forks: list[Triple] = []
    colliders: list[Triple] = []
    for b in g.names:
        parents = g.parents(b)
        children = g.children(b)
        for a in parents:
            for c in children:
                chains.append((a, b, c))
        for a, c in combinations(children, 2):
            forks.append((a, b, c))
        for a, c in combinations(parents, 2):
            colliders.append((a, b, c))
    return JunctionCensus(sorted(chains), sorted(forks), sorted(colliders))


def _check_query(g: CausalGraph, x: str, y: str, given: Sequence[str]) -> None:
    for name in (x, y, *given):
        g.index(name)
    if x == y:
        raise ValidationError(f"d-separation query needs two distinct variables: {x}")
    if x in given or y in given:
        raise ValidationError("queried variables must not be in the conditioning set")


def d_separated(g: CausalGraph, x: str, y: str, given: Sequence[str] = ()) -> bool:
    """Bayes-ball reachability from `x`; True iff `y` cannot be reached.

    A pass through a non-collider is blocked by conditioning on it; a collider
    passes only when it or one of its descendants is conditioned on.
    """
    given = tuple(given)
    _check_query(g, x, y, given)
    z = set(given)
    # Conditioned nodes and their ancestors: the colliders that are open
    opened = set(z)
    for name in z:
        opened |= nx.ancestors(g.digraph, name)

    # "up": arrived from a child, "down": arrived from a parent
    queue: deque[tuple[str, str]] = deque([(x, "up")])
    visited: set[tuple[str, str]] = set()
    while queue:
        node, direction = queue.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node == y:
            return False
        if direction == "up":
            if node in z:
                continue
            queue.extend((p, "up") for p in g.parents(node))
            queue.extend((c, "down") for c in g.children(node))
        else:
            if node not in z:
                queue.extend((c, "down") for c in g.children(node))
            if node in opened:
                queue.extend((p, "up") for p in g.parents(node))
    return True


def implied_independencies(
    g: CausalGraph, max_conditioning: int
) -> list[tuple[str, str, tuple[str, ...]]]:
    """All d-separations among observed variables with small conditioning sets.

    Ordered by pair, then by conditioning-set size, then lexicographically.
    """
    if max_conditioning < 0:
        raise ValidationError("max_conditioning must be >= 0")
    observed = sorted(g.observed_names)
    result = []
    for x, y in combinations(observed, 2):
        others = [v for v in observed if v not in (x, y)]
        for size in range(min(max_conditioning, len(others)) + 1):
            for given in combinations(others, size):
                if d_separated(g, x, y, given):
                    result.append((x, y, given))
    return result


def find_confounders(g: CausalGraph) -> list[Triple]:
    """(z, x, y) for every edge x -> y and every z with directed paths to x and
    to y, the latter avoiding x. Latent nodes are included."""
    dg = g.digraph
    result: list[Triple] = []
    for x, y in g.edge_names:
        without_x = dg.subgraph([n for n in dg if n != x])
        for z in sorted(nx.ancestors(dg, x)):
            if z != y and y in nx.descendants(without_x, z):
                result.append((z, x, y))
    return sorted(result)


def desiderata_report(g: CausalGraph) -> DesiderataReport:
    validate_dag(g)
    return DesiderataReport(
        census=junction_census(g),
        variable_count=len(g.variables),
        has_numeric=any(not v.is_categorical for v in g.variables),
        has_categorical=any(v.is_categorical for v in g.variables),
        confounded_edges=find_confounders(g),
    )


def mediated_ancestors(g: CausalGraph, target: str) -> list[str]:
    """Ancestors of `target` that are not its parents.

    Each one is d-separated from `target` given the parents, so it can be
    pruned when reducing the variable set toward `target`.
    """
    g.index(target)
    parents = set(g.parents(target))
    return sorted(nx.ancestors(g.digraph, target) - parents)


def load_edge_scores(path: str | Path) -> dict[Edge, float]:
    """Read a cause,effect,score CSV into a mapping."""
    try:
        frame = pd.read_csv(path, dtype={"cause": str, "effect": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"{path}: {e}") from None
    if sorted(frame.columns) != ["cause", "effect", "score"]:
        raise SchemaError(f"{path}: edge scores need columns cause, effect, score")
    scores: dict[Edge, float] = {}
    for cause, effect, score in frame.itertuples(index=False, name=None):
        try:
            value = float(score)
        except ValueError:
            raise ParseError(f"{path}: non-numeric score {score!r}") from None
        if not np.isfinite(value):
            raise SchemaError(f"{path}: non-finite score for {cause} -> {effect}")
        if (cause, effect) in scores:
            raise SchemaError(f"{path}: duplicate score for {cause} -> {effect}")
        scores[(cause, effect)] = value
    return scores


def _edge_auc(
    names: Sequence[str], truth: set[Edge], edge_scores: Mapping[Edge, float]
) -> float | None:
    pairs = [(a, b) for a in names for b in names if a != b]
    unknown = set(edge_scores) - set(pairs)
    if unknown:
        raise ValidationError(f"edge scores for unknown pairs: {sorted(unknown)[:3]}")
    labels = [1 if p in truth else 0 for p in pairs]
    if not any(labels):
        logger.warning("AUC undefined: the true graph has no edges")
        return None
    scores = [edge_scores.get(p, 0.0) for p in pairs]
    return float(roc_auc_score(labels, scores))


def compare_graphs(
    truth: CausalGraph,
    predicted: CausalGraph,
    edge_scores: Mapping[Edge, float] | None = None,
) -> GraphComparison:
    """Score a predicted graph against the truth.

    A reversed edge counts once. The AUC ranks the scores of true ordered
    edges against all other ordered pairs, ties counting one half. Pairs
    missing from edge_scores score 0.

    Raises:
        ValidationError: different variable sets, or scores for unknown pairs.
    """
    if set(truth.names) != set(predicted.names):
        raise ValidationError("graphs are over different variable sets")
    true_edges = set(truth.edge_names)
    pred_edges = set(predicted.edge_names)

    def flipped(e: Edge) -> Edge:
        return (e[1], e[0])

    missing = sorted(
        e for e in true_edges if e not in pred_edges and flipped(e) not in pred_edges
    )
    reversed_ = sorted(
        e for e in true_edges if e not in pred_edges and flipped(e) in pred_edges
    )
    extra = sorted(
        e for e in pred_edges if e not in true_edges and flipped(e) not in true_edges
    )
    if true_edges:
        tpr = len(true_edges & pred_edges) / len(true_edges)
    else:
        logger.warning("TPR of an edgeless true graph is defined as 1.0")
        tpr = 1.0
    auc = None
    if edge_scores is not None:
        auc = _edge_auc(sorted(truth.names), true_edges, edge_scores)
    return GraphComparison(
        missing=missing, extra=extra, reversed=reversed_, tpr=tpr, auc=auc
    )
