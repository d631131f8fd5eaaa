"""Chi-square (conditional) independence tests and graph-data audits."""

import logging
from dataclasses import dataclass
from itertools import product
from typing import Literal

import numpy as np
from scipy.special import gammaincc
from scipy.stats.contingency import crosstab, expected_freq

from crlscore import config
from crlscore.graph import implied_independencies
from crlscore.model import (
    CausalGraph,
    DataTable,
    DegenerateError,
    ValidationError,
)

logger = logging.getLogger(__name__)

# Expected counts below this make the asymptotic test unreliable
LOW_EXPECTED_COUNT = 5.0


@dataclass(frozen=True)
class Chi2Result:
    statistic: float
    dof: int
    p_value: float
    alpha: float
    low_expected_cells: int

    @property
    def dependent(self) -> bool:
        return self.p_value < self.alpha


@dataclass(frozen=True)
class AuditEntry:
    x: str
    y: str
    given: tuple[str, ...]
    expected: Literal["independent", "dependent"]
    result: Chi2Result

    @property
    def consistent(self) -> bool:
        if self.expected == "independent":
            return not self.result.dependent
        return self.result.dependent


@dataclass(frozen=True)
class AuditReport:
    entries: list[AuditEntry]

    @property
    def violation_rate(self) -> float:
        if not self.entries:
            return 0.0
        return 1.0 - float(np.mean([e.consistent for e in self.entries]))

    @property
    def violations(self) -> list[AuditEntry]:
        return [e for e in self.entries if not e.consistent]


def _require_categorical(data: DataTable, names) -> None:
    for name in names:
        if not data.spec(name).is_categorical:
            raise ValidationError(
                f"column {name} is numeric; discretize it first (--bins)"
            )


def chi2_p_value(statistic: float, dof: int) -> float:
    """Upper tail of the chi-square distribution."""
    return float(gammaincc(dof / 2.0, statistic / 2.0))


def chi2_independence(
    data: DataTable,
    x: str,
    y: str,
    given=(),
    alpha: float = config.DEFAULT_ALPHA,
) -> Chi2Result:
    """Pearson chi-square test of x independent of y given `given`.

    The conditional statistic sums per-stratum statistics and degrees of
    freedom over the joint levels of `given` that occur in the data. A stratum
    in which x or y takes a single value contributes nothing. No continuity
    correction is applied.

    Raises:
        ValidationError: a numeric column, a bad alpha, or overlapping variables.
        DegenerateError: the total degrees of freedom are zero.
    """
    given = tuple(given)
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if x == y or x in given or y in given:
        raise ValidationError("x, y and the conditioning set must be disjoint")
    _require_categorical(data, (x, y, *given))
    xs = data.column(x)
    ys = data.column(y)
    for name, col in ((x, xs), (y, ys)):
        if np.unique(col).size < 2:
            raise DegenerateError(f"{name} takes a single value; nothing to test")

    if given:
        keys = np.column_stack([data.column(v) for v in given])
        _, strata = np.unique(keys, axis=0, return_inverse=True)
        strata = strata.ravel()
    else:
        strata = np.zeros(data.n_rows, dtype=np.int64)

    statistic = 0.0
    dof = 0
    low = 0
    for s in np.unique(strata):
        mask = strata == s
        observed = crosstab(xs[mask], ys[mask]).count
        rows, cols = observed.shape
        if rows < 2 or cols < 2:
            continue
        expected = expected_freq(observed)
        statistic += float(((observed - expected) ** 2 / expected).sum())
        dof += (rows - 1) * (cols - 1)
        low += int((expected < LOW_EXPECTED_COUNT).sum())

    if dof == 0:
        raise DegenerateError(
            f"no stratum has variation in both {x} and {y}; zero degrees of freedom"
        )
    if low:
        logger.warning(
            "chi2 %s vs %s | %s: %d expected cells below %g",
            x,
            y,
            ",".join(given) or "{}",
            low,
            LOW_EXPECTED_COUNT,
        )
    return Chi2Result(
        statistic=statistic,
        dof=dof,
        p_value=chi2_p_value(statistic, dof),
        alpha=alpha,
        low_expected_cells=low,
    )


def audit_graph_against_data(
    g: CausalGraph,
    data: DataTable,
    max_conditioning: int = config.DEFAULT_MAX_CONDITIONING,
    alpha: float = config.DEFAULT_ALPHA,
) -> AuditReport:
    """Test every independence the graph implies and every direct dependence.

    Raises:
        ValidationError: an observed variable has no column, or is numeric.
    """
    observed = g.observed_names
    missing = [v for v in observed if v not in data.names]
    if missing:
        raise ValidationError(f"data has no column for {', '.join(missing)}")
    _require_categorical(data, observed)

    checks: list[tuple[str, str, tuple[str, ...], str]] = [
        (a, b, given, "independent")
        for a, b, given in implied_independencies(g, max_conditioning)
    ]
    for cause, effect in g.edge_names:
        if cause in observed and effect in observed:
            a, b = sorted((cause, effect))
            checks.append((a, b, (), "dependent"))
    checks.sort(key=lambda c: (c[0], c[1], len(c[2]), c[2]))

    def run(check):
        a, b, given, _ = check
        return chi2_independence(data, a, b, given, alpha)

    results = config.parallel_map(run, checks)
    entries = [
        AuditEntry(a, b, given, expected, result)
        for (a, b, given, expected), result in zip(checks, results)
    ]
    if not entries:
        logger.warning("graph implies nothing testable; audit is empty")
    return AuditReport(entries)


def independent_rows(data: DataTable, x: str, y: str, seed: int) -> np.ndarray:
    """Sorted indices of the largest subsample where x and y are independent.

    The kept (x, y) joint is exactly the product of its marginals.

    Target cell counts are n * p(x) * p(y) scaled up to the largest factor
    every observed cell can still supply, rounded down; each cell is then
    subsampled uniformly.

    Raises:
        DegenerateError: some combination of observed levels never occurs.
    """
    _require_categorical(data, (x, y))
    xs = data.column(x)
    ys = data.column(y)
    table = crosstab(xs, ys)
    x_levels, y_levels = table.elements
    counts = table.count.astype(float)
    if np.any(counts == 0):
        i, j = np.argwhere(counts == 0)[0]
        raise DegenerateError(
            f"no rows with {x}={x_levels[i]} and {y}={y_levels[j]}; "
            "no independent subsample exists"
        )
    n = counts.sum()
    px = counts.sum(axis=1) / n
    py = counts.sum(axis=0) / n
    product_margins = np.outer(px, py)
    scale = float(np.min(counts / product_margins))
    targets = np.floor(scale * product_margins + 1e-9).astype(int)

    rng = np.random.default_rng(seed)
    keep = []
    for i, j in product(range(len(x_levels)), range(len(y_levels))):
        rows = np.flatnonzero((xs == x_levels[i]) & (ys == y_levels[j]))
        keep.append(rng.choice(rows, size=targets[i, j], replace=False))
    selected = np.sort(np.concatenate(keep))
    logger.debug("kept %d of %d rows", selected.size, data.n_rows)
    return selected


def enforce_independence(data: DataTable, x: str, y: str, seed: int) -> DataTable:
    """The rows of data chosen by independent_rows, in their original order."""
    return data.take(independent_rows(data, x, y, seed))
