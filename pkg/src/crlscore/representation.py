"""Disentanglement metrics over a factors table and a latents table.

MIC and TIC association matrices with Hungarian matching, exhaustive
permutation sweeps, the interventional robustness score, normalized JEMMIG
and the DCI triple.
"""

import logging
from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import entropy
from sklearn.linear_model import Lasso
from sklearn.metrics import mutual_info_score
from sklearn.model_selection import train_test_split

from crlscore import config
from crlscore.mic import mic_tic
from crlscore.model import DataTable, ValidationError, quantile_bins

logger = logging.getLogger(__name__)

SWEEP_MAX_COLUMNS = 8
LASSO_ALPHA_FRACTION = 0.01
LASSO_MAX_ITER = 1000
LASSO_TOL = 1e-6
HOLDOUT_FRACTION = 0.2


@dataclass(frozen=True, eq=False)
class AssociationMatrix:
    """Factor-by-latent association scores in [0, 1]."""

    factors: tuple[str, ...]
    latents: tuple[str, ...]
    values: np.ndarray
    metric: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.factors), len(self.latents)):
            raise ValidationError(
                f"association values of shape {values.shape} do not match "
                f"{len(self.factors)} factors x {len(self.latents)} latents"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("association entries must be finite")
        values = np.clip(values, 0.0, 1.0)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values, metric: str = "custom") -> "AssociationMatrix":
        values = np.asarray(values, dtype=float)
        rows, cols = values.shape
        return cls(
            tuple(f"f{i}" for i in range(rows)),
            tuple(f"z{j}" for j in range(cols)),
            values,
            metric,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class Matching:
    """Injective factor -> latent assignment."""

    assignment: tuple[int, ...]
    per_pair: tuple[float, ...]

    @property
    def total(self) -> float:
        return float(sum(self.per_pair))

    @property
    def mean(self) -> float:
        return self.total / len(self.per_pair) if self.per_pair else 0.0


@dataclass(frozen=True)
class PermutationSweep:
    min: float
    max: float
    argmin: tuple[int, ...]
    argmax: tuple[int, ...]
    count: int


@dataclass(frozen=True)
class DisentanglementScores:
    mic: float
    tic: float
    irs: float
    jemmig: float
    dci_d: float
    dci_c: float
    dci_i: float

    def as_dict(self) -> dict[str, float]:
        return {
            "mic": self.mic,
            "tic": self.tic,
            "irs": self.irs,
            "jemmig": self.jemmig,
            "dci_d": self.dci_d,
            "dci_c": self.dci_c,
            "dci_i": self.dci_i,
        }


# =============================================================================
# Association and matching
# =============================================================================


def _check_rows(factors: DataTable, latents: DataTable) -> None:
    if factors.n_rows != latents.n_rows:
        raise ValidationError(
            f"factors have {factors.n_rows} rows, latents {latents.n_rows}"
        )


def association_matrices(
    factors: DataTable, latents: DataTable
) -> tuple[AssociationMatrix, AssociationMatrix]:
    """MIC and TIC matrices from one characteristic matrix per pair."""
    _check_rows(factors, latents)
    pairs = [(f, z) for f in factors.names for z in latents.names]
    results = config.parallel_map(
        lambda p: mic_tic(factors.column(p[0]), latents.column(p[1])), pairs
    )
    shape = (len(factors.names), len(latents.names))
    mic = np.array([r[0] for r in results]).reshape(shape)
    tic = np.array([r[1] for r in results]).reshape(shape)
    return (
        AssociationMatrix(factors.names, latents.names, mic, "mic"),
        AssociationMatrix(factors.names, latents.names, tic, "tic"),
    )


def association_matrix(
    factors: DataTable, latents: DataTable, metric: str = "mic"
) -> AssociationMatrix:
    """Entry (i, j) is `metric` on factor i and latent j.

    Categorical factors enter through their integer codes.
    """
    if metric not in ("mic", "tic"):
        raise ValidationError(f"unknown association metric: {metric}")
    mic, tic = association_matrices(factors, latents)
    return mic if metric == "mic" else tic


def _assignment_total(values: np.ndarray, assignment) -> float:
    total = 0.0
    for i, j in enumerate(assignment):
        total += float(values[i, j])
    return total


def hungarian_match(m: AssociationMatrix) -> Matching:
    """Maximum-total injective assignment of factors to latents.

    Among optimal assignments the lexicographically smallest one is returned:
    rows are fixed in order to the smallest column that still admits an
    optimal completion.

    Raises:
        ValidationError: more factors than latents.
    """
    values = m.values
    rows, cols = values.shape
    if rows > cols:
        raise ValidationError(f"cannot match {rows} factors into {cols} latents")
    r_idx, c_idx = linear_sum_assignment(values, maximize=True)
    best = float(values[r_idx, c_idx].sum())
    tol = 1e-9 * max(1.0, abs(best))

    assignment: list[int] = []
    fixed_total = 0.0
    for i in range(rows):
        used = set(assignment)
        for j in range(cols):
            if j in used:
                continue
            rest_rows = list(range(i + 1, rows))
            rest_cols = [c for c in range(cols) if c not in used and c != j]
            rest = 0.0
            if rest_rows:
                sub = values[np.ix_(rest_rows, rest_cols)]
                sr, sc = linear_sum_assignment(sub, maximize=True)
                rest = float(sub[sr, sc].sum())
            if fixed_total + values[i, j] + rest >= best - tol:
                assignment.append(j)
                fixed_total += float(values[i, j])
                break
    per_pair = tuple(float(values[i, j]) for i, j in enumerate(assignment))
    return Matching(tuple(assignment), per_pair)


def permutation_sweep(m: AssociationMatrix) -> PermutationSweep:
    """Evaluate every injective assignment; first encountered wins ties.

    Raises:
        ValidationError: more factors than latents, or more than 8 latents.
    """
    values = m.values
    rows, cols = values.shape
    if rows > cols:
        raise ValidationError(f"cannot match {rows} factors into {cols} latents")
    if cols > SWEEP_MAX_COLUMNS:
        raise ValidationError(
            f"permutation sweep limited to {SWEEP_MAX_COLUMNS} latents, got {cols}"
        )
    lo = hi = None
    argmin = argmax = ()
    count = 0
    for assignment in permutations(range(cols), rows):
        total = _assignment_total(values, assignment)
        count += 1
        if lo is None or total < lo:
            lo, argmin = total, assignment
        if hi is None or total > hi:
            hi, argmax = total, assignment
    return PermutationSweep(float(lo), float(hi), argmin, argmax, count)


# =============================================================================
# Information-based scores
# =============================================================================


def _factor_codes(factors: DataTable, bins: int) -> np.ndarray:
    """Categorical factors keep their codes; numeric ones are quantile-binned."""
    columns = []
    for spec in factors.columns:
        col = factors.column(spec.name)
        columns.append(col if spec.is_categorical else quantile_bins(col, bins))
    return np.column_stack(columns)


def _latent_codes(latents: np.ndarray, bins: int) -> np.ndarray:
    return np.column_stack(
        [quantile_bins(latents[:, j], bins) for j in range(latents.shape[1])]
    )


def _mi_bits(a: np.ndarray, b: np.ndarray) -> float:
    return float(mutual_info_score(a, b)) / np.log(2.0)


def _entropy_bits(codes: np.ndarray) -> float:
    _, counts = np.unique(codes, return_counts=True)
    return float(entropy(counts, base=2))


def _joint_codes(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _, inverse = np.unique(np.column_stack([a, b]), axis=0, return_inverse=True)
    return inverse.ravel()


def _check_information_inputs(factors: DataTable, latents: DataTable, bins: int):
    _check_rows(factors, latents)
    if bins < 2:
        raise ValidationError("bins must be >= 2")
    if factors.n_rows < 10 * bins:
        raise ValidationError(
            f"need at least {10 * bins} rows for {bins} bins, got {factors.n_rows}"
        )


def irs(
    factors: DataTable, latents: DataTable, bins: int = config.DEFAULT_BINS
) -> float:
    """Interventional robustness score.

    Each latent is attached to the factor it shares most binned information
    with. Within each realization of that factor the other factors vary
    freely; the largest deviation of the latent from its within-realization
    mean, averaged over realizations, is compared with the largest deviation
    from the global mean. Scores are weighted by the attaching information.
    """
    _check_information_inputs(factors, latents, bins)
    z = latents.values
    active = z.var(axis=0) > 0
    if not np.any(active):
        logger.warning("latent space has zero variance; IRS defined as 1")
        return 1.0
    if not np.all(active):
        dropped = [n for n, a in zip(latents.names, active) if not a]
        logger.warning("ignoring constant latents: %s", ", ".join(dropped))
    z = z[:, active]
    y = _factor_codes(factors, bins)
    z_codes = _latent_codes(z, bins)

    scores = []
    weights = []
    for j in range(z.shape[1]):
        mi = [_mi_bits(y[:, k], z_codes[:, j]) for k in range(y.shape[1])]
        k = int(np.argmax(mi))
        zj = z[:, j]
        global_dev = float(np.max(np.abs(zj - zj.mean())))
        deviations = []
        for level in np.unique(y[:, k]):
            group = zj[y[:, k] == level]
            deviations.append(float(np.max(np.abs(group - group.mean()))))
        scores.append(1.0 - float(np.mean(deviations)) / global_dev)
        weights.append(mi[k])
    scores = np.clip(scores, 0.0, 1.0)
    if sum(weights) <= 0:
        return float(np.mean(scores))
    return float(np.average(scores, weights=weights))


def jemmig(
    factors: DataTable, latents: DataTable, bins: int = config.DEFAULT_BINS
) -> float:
    """Normalized joint-entropy-minus-MI-gap, higher is better.

    For each factor with best latent z* and runner-up z':
    raw = H(y, z*) - I(y; z*) + I(y; z'), scored as
    (H(y) + log2 bins - raw) / (H(y) + log2 bins) and clamped to [0, 1].
    """
    _check_information_inputs(factors, latents, bins)
    if len(latents.names) < 2:
        raise ValidationError("JEMMIG needs at least 2 latent dimensions")
    y = _factor_codes(factors, bins)
    z_codes = _latent_codes(latents.values, bins)
    ceiling = np.log2(bins)
    scores = []
    for k in range(y.shape[1]):
        mi = np.array(
            [_mi_bits(y[:, k], z_codes[:, j]) for j in range(z_codes.shape[1])]
        )
        order = np.argsort(-mi, kind="stable")
        best, second = order[0], order[1]
        joint = _entropy_bits(_joint_codes(y[:, k], z_codes[:, best]))
        raw = joint - mi[best] + mi[second]
        h_y = _entropy_bits(y[:, k])
        scores.append((h_y + ceiling - raw) / (h_y + ceiling))
    return float(np.clip(np.mean(scores), 0.0, 1.0))


# =============================================================================
# DCI
# =============================================================================


def _standardize(train: np.ndarray, test: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    std[std == 0] = 1.0
    return (train - mean) / std, (test - mean) / std


def _factor_targets(factors: DataTable, name: str) -> np.ndarray:
    """One column per numeric factor, one-hot columns per categorical factor."""
    spec = factors.spec(name)
    col = factors.column(name)
    if not spec.is_categorical:
        return col[:, None].astype(float)
    levels = np.unique(col)
    return (col[:, None] == levels[None, :]).astype(float)


def _fit_lasso(x: np.ndarray, y: np.ndarray) -> Lasso:
    scale = float(np.max(np.abs(x.T @ y))) / x.shape[0]
    alpha = max(LASSO_ALPHA_FRACTION * scale, 1e-12)
    model = Lasso(alpha=alpha, max_iter=LASSO_MAX_ITER, tol=LASSO_TOL)
    return model.fit(x, y)


def _normalized_entropy(weights: np.ndarray) -> float:
    if weights.size < 2:
        return 0.0
    return float(entropy(weights, base=weights.size))


def importance_matrix(
    factors: DataTable, latents: DataTable, seed: int = config.DEFAULT_SEED
) -> tuple[np.ndarray, np.ndarray]:
    """Lasso importances R (latents x factors) and per-factor informativeness."""
    _check_rows(factors, latents)
    n, dim = latents.shape
    if n < 10 * dim:
        raise ValidationError(f"need at least {10 * dim} rows for {dim} latents")
    train_idx, test_idx = train_test_split(
        np.arange(n), test_size=HOLDOUT_FRACTION, random_state=seed
    )
    z_train, z_test = _standardize(latents.values[train_idx], latents.values[test_idx])

    importance = np.zeros((dim, len(factors.names)))
    informativeness = []
    for i, name in enumerate(factors.names):
        targets = _factor_targets(factors, name)
        y_train, y_test = _standardize(targets[train_idx], targets[test_idx])
        error = 0.0
        spread = 0.0
        for t in range(targets.shape[1]):
            model = _fit_lasso(z_train, y_train[:, t])
            importance[:, i] += np.abs(model.coef_)
            residual = y_test[:, t] - model.predict(z_test)
            error += float(np.mean(residual**2))
            spread += float(np.var(y_test[:, t]))
        informativeness.append(max(0.0, 1.0 - error / spread) if spread > 0 else 0.0)
    return importance, np.array(informativeness)


def dci(
    factors: DataTable, latents: DataTable, seed: int = config.DEFAULT_SEED
) -> tuple[float, float, float]:
    """Disentanglement, completeness and informativeness.

    Disentanglement weighs each latent's 1 - normalized entropy over factors by
    the latent's share of total importance; completeness does the same per
    factor over latents.
    """
    importance, informativeness = importance_matrix(factors, latents, seed)
    dci_i = float(np.mean(informativeness))
    total = importance.sum()
    if total <= 0:
        logger.warning("importance matrix is all zero; DCI-D and DCI-C are 0")
        return 0.0, 0.0, dci_i

    def weighted(matrix: np.ndarray) -> float:
        mass = matrix.sum(axis=1)
        score = 0.0
        for row, m in zip(matrix, mass):
            if m > 0:
                score += (m / total) * (1.0 - _normalized_entropy(row / m))
        return score

    return float(weighted(importance)), float(weighted(importance.T)), dci_i


def disentanglement_suite(
    factors: DataTable,
    latents: DataTable,
    bins: int = config.DEFAULT_BINS,
    seed: int = config.DEFAULT_SEED,
) -> DisentanglementScores:
    """All five recommended metrics.

    MIC and TIC are the means of the Hungarian-matched association entries.
    """
    mic_m, tic_m = association_matrices(factors, latents)
    d, c, i = dci(factors, latents, seed)
    return DisentanglementScores(
        mic=hungarian_match(mic_m).mean,
        tic=hungarian_match(tic_m).mean,
        irs=irs(factors, latents, bins),
        jemmig=jemmig(factors, latents, bins),
        dci_d=d,
        dci_c=c,
        dci_i=i,
    )
