"""Reconstruction and counterfactual generation metrics from file artifacts.

Distribution distances consume precomputed embeddings and class
probabilities; no feature network is bundled.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from scipy import linalg
from scipy.special import rel_entr
from sklearn.metrics import f1_score, mean_absolute_error

from crlscore.model import BinaryMask, DataTable, ValidationError, load_table

logger = logging.getLogger(__name__)

STOCHASTIC_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """One feature vector per sample, n x d."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim == 1:
            m = m[:, None]
        if m.ndim != 2 or m.shape[0] < 2 or m.shape[1] < 1:
            raise ValidationError(f"embeddings need n >= 2 rows, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("embeddings must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True, eq=False)
class ProbTable:
    """Row-stochastic class probabilities, n x K."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] < 1:
            raise ValidationError(f"probabilities need a 2-D matrix, got {m.shape}")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ValidationError("probabilities must be finite and non-negative")
        sums = m.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > STOCHASTIC_TOL)
        if bad.size:
            raise ValidationError(f"row {bad[0]} sums to {sums[bad[0]]:.6g}, not 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class CounterfactualCase:
    """A generated counterfactual next to its ground-truth rendering."""

    generated: BinaryMask
    oracle: BinaryMask
    intervention: tuple[str, float]

    def __post_init__(self):
        _check_same_size(self.generated, self.oracle)


@dataclass(frozen=True)
class CounterfactualAccuracy:
    mean_iou: float
    mean_l1: float
    cases: int


def load_embeddings(path: str | Path) -> EmbeddingSet:
    return EmbeddingSet(load_table(path).values)


def load_probabilities(path: str | Path) -> ProbTable:
    return ProbTable(load_table(path).values)


def _check_same_shape(a: DataTable, b: DataTable) -> None:
    if a.shape != b.shape:
        raise ValidationError(f"table shapes differ: {a.shape} vs {b.shape}")


def _check_same_size(a: BinaryMask, b: BinaryMask) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise ValidationError(
            f"mask sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def reconstruction_score(
    original: DataTable,
    reconstructed: DataTable,
    mode: Literal["mae", "mse"] = "mae",
) -> float:
    """1 - MAE or 1 - MSE over every cell; values must already lie in [0, 1]."""
    _check_same_shape(original, reconstructed)
    a, b = original.values, reconstructed.values
    for name, values in (("original", a), ("reconstruction", b)):
        if values.min() < 0.0 or values.max() > 1.0:
            raise ValidationError(f"{name} values must be scaled to [0, 1]")
    diff = a - b
    if mode == "mae":
        error = float(np.mean(np.abs(diff)))
    elif mode == "mse":
        error = float(np.mean(diff**2))
    else:
        raise ValidationError(f"unknown reconstruction mode: {mode}")
    return 1.0 - error


def composition_l1(original: DataTable, null_intervention_output: DataTable) -> float:
    """Mean absolute difference after an intervention that changes nothing."""
    _check_same_shape(original, null_intervention_output)
    return float(np.mean(np.abs(original.values - null_intervention_output.values)))


def _sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    eigvals, eigvecs = linalg.eigh(matrix)
    return (eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.T


def fid(a: EmbeddingSet, b: EmbeddingSet) -> float:
    """Frechet distance between Gaussians fitted to two embedding sets.

    Covariances use the n - 1 divisor. The trace of the matrix square root of
    the covariance product comes from the eigenvalues of
    sqrt(S_a) S_b sqrt(S_a), clamped at 0.
    """
    if a.dim != b.dim:
        raise ValidationError(f"embedding dimensions differ: {a.dim} vs {b.dim}")
    mu_a, mu_b = a.matrix.mean(axis=0), b.matrix.mean(axis=0)
    sigma_a = np.atleast_2d(np.cov(a.matrix, rowvar=False, ddof=1))
    sigma_b = np.atleast_2d(np.cov(b.matrix, rowvar=False, ddof=1))
    root_a = _sqrt_psd(sigma_a)
    product = root_a @ sigma_b @ root_a
    eigvals = linalg.eigvalsh((product + product.T) / 2.0)
    trace_sqrt = float(np.sqrt(np.clip(eigvals, 0.0, None)).sum())
    diff = mu_a - mu_b
    spread = np.trace(sigma_a) + np.trace(sigma_b) - 2.0 * trace_sqrt
    value = float(diff @ diff + spread)
    return max(value, 0.0)


def _polynomial_kernel(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return (x @ y.T / x.shape[1] + 1.0) ** 3


def kid(a: EmbeddingSet, b: EmbeddingSet) -> float:
    """Unbiased squared MMD with the cubic polynomial kernel, full-set estimator.

    Negative values are legal.
    """
    if a.dim != b.dim:
        raise ValidationError(f"embedding dimensions differ: {a.dim} vs {b.dim}")
    x, y = a.matrix, b.matrix
    m, n = x.shape[0], y.shape[0]
    k_xx = _polynomial_kernel(x, x)
    k_yy = _polynomial_kernel(y, y)
    k_xy = _polynomial_kernel(x, y)
    within_x = (k_xx.sum() - np.trace(k_xx)) / (m * (m - 1))
    within_y = (k_yy.sum() - np.trace(k_yy)) / (n * (n - 1))
    return float(within_x + within_y - 2.0 * k_xy.mean())


def inception_score(p: ProbTable) -> float:
    """exp of the mean KL divergence (nats) of each row from the marginal."""
    marginal = p.matrix.mean(axis=0)
    kl = rel_entr(p.matrix, marginal[None, :]).sum(axis=1)
    return float(np.exp(kl.mean()))


def iou(a: BinaryMask, b: BinaryMask) -> float:
    """Jaccard index of two masks; two empty masks score 1 with a warning."""
    _check_same_size(a, b)
    union = int(np.logical_or(a.bits, b.bits).sum())
    if union == 0:
        logger.warning("IoU of two empty masks defined as 1")
        return 1.0
    return int(np.logical_and(a.bits, b.bits).sum()) / union


def pixel_l1(a: BinaryMask, b: BinaryMask) -> float:
    """Fraction of pixels that differ."""
    _check_same_size(a, b)
    return float(np.mean(a.bits != b.bits))


def effectiveness(
    target: Sequence | np.ndarray,
    predicted: Sequence | np.ndarray,
    kind: Literal["classification", "regression"],
) -> float:
    """Macro F1 over the union of observed classes, or mean absolute error.

    Raises:
        ValidationError: length mismatch, unknown kind, or non-integer classes.
    """
    target = np.asarray(target)
    predicted = np.asarray(predicted)
    if target.shape != predicted.shape or target.ndim != 1:
        raise ValidationError("target and predicted must be equal-length columns")
    if kind == "classification":
        for name, col in (("target", target), ("predicted", predicted)):
            if not np.all(np.asarray(col, dtype=float) % 1 == 0):
                raise ValidationError(f"classification {name} must hold class codes")
        t = target.astype(np.int64)
        p = predicted.astype(np.int64)
        labels = np.union1d(t, p)
        return float(f1_score(t, p, labels=labels, average="macro", zero_division=0))
    if kind == "regression":
        return float(mean_absolute_error(target.astype(float), predicted.astype(float)))
    raise ValidationError(f"unknown effectiveness kind: {kind}")


def counterfactual_accuracy(
    cases: Sequence[CounterfactualCase],
) -> CounterfactualAccuracy:
    """Mean IoU and mean pixel L1 of generated masks against their oracles."""
    if not cases:
        raise ValidationError("no counterfactual cases")
    ious = [iou(c.generated, c.oracle) for c in cases]
    l1s = [pixel_l1(c.generated, c.oracle) for c in cases]
    return CounterfactualAccuracy(float(np.mean(ious)), float(np.mean(l1s)), len(cases))
