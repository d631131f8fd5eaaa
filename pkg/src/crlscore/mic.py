"""Maximal and total information coefficients.

Scores come from minepy's approximate estimator with the grid budget pinned
to B(n) = ceil(n ** 0.6) cells and a clump factor of 15. minepy searches both
axis orientations, so the result is symmetric in its arguments.
"""

import logging
import math

import numpy as np
from minepy import MINE

from crlscore.model import ValidationError

logger = logging.getLogger(__name__)

GRID_EXPONENT = 0.6
CLUMP_FACTOR = 15
MIN_SAMPLES = 25


def grid_bound(n: int) -> int:
    """Largest admissible number of grid cells, ceil(n ** 0.6)."""
    return math.ceil(n**GRID_EXPONENT)


def _check_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    y = np.ascontiguousarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValidationError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < MIN_SAMPLES:
        raise ValidationError(f"need at least {MIN_SAMPLES} samples, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValidationError("non-finite values")
    return x, y


def _mine(x: np.ndarray, y: np.ndarray) -> MINE | None:
    """A scored estimator, or None when either column is constant."""
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        logger.warning("constant column; information coefficients are 0")
        return None
    # alpha >= 4 is taken by minepy as the cell budget B itself
    mine = MINE(alpha=float(grid_bound(x.size)), c=CLUMP_FACTOR, est="mic_approx")
    mine.compute_score(x, y)
    return mine


def characteristic_matrix(x, y) -> dict[tuple[int, int], float]:
    """Normalized grid scores keyed by (columns of x, rows of y), k * r <= B(n).

    A constant column gives an all-zero matrix with a warning.

    Raises:
        ValidationError: length mismatch, too few samples, or non-finite values.
    """
    x, y = _check_pair(x, y)
    mine = _mine(x, y)
    if mine is None:
        bound = grid_bound(x.size)
        return {
            (k, r): 0.0
            for k in range(2, bound // 2 + 1)
            for r in range(2, bound // k + 1)
        }
    return {
        (i + 2, j + 2): float(score)
        for i, row in enumerate(mine.get_score())
        for j, score in enumerate(row)
    }


def mic_tic(x, y) -> tuple[float, float]:
    """Both coefficients from one estimator run."""
    x, y = _check_pair(x, y)
    mine = _mine(x, y)
    if mine is None:
        return 0.0, 0.0
    return float(mine.mic()), float(mine.tic(norm=True))


def mic_pair(x, y) -> float:
    return mic_tic(x, y)[0]


def tic_pair(x, y) -> float:
    """Mean of the characteristic matrix over every admissible grid."""
    return mic_tic(x, y)[1]
