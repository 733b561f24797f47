"""Representational dissimilarity matrices (1 - Pearson correlation)."""
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateRowError, InvalidDataError


@dataclass
class Rdm:
    matrix: np.ndarray
    block_labels: np.ndarray
    within_block_mean: float
    between_block_mean: float

    @property
    def ratio(self):
        """within / between mean dissimilarity; < 1 means block structure."""
        return self.within_block_mean / self.between_block_mean


def block_means(matrix, labels):
    labels = np.asarray(labels)
    same = labels[:, None] == labels[None, :]
    off_diag = ~np.eye(len(labels), dtype=bool)
    within = matrix[same & off_diag]
    between = matrix[~same]
    w = float(within.mean()) if within.size else float("nan")
    b = float(between.mean()) if between.size else float("nan")
    return w, b


def rdm(scores, block_labels):
    """Pairwise ``1 - pearson(row_i, row_j)`` over the rows of ``scores``."""
    X = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(block_labels)
    if X.ndim != 2 or X.shape[1] < 2:
        raise InvalidDataError("scores must be n x k with k >= 2", shape=list(X.shape))
    if labels.shape != (X.shape[0],):
        raise InvalidDataError("one block label per row required")
    Z = X - X.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.sum(Z * Z, axis=1))
    scale = np.abs(X).max(axis=1)
    bad = np.flatnonzero(norms <= 1e-12 * np.maximum(scale, 1e-300))
    if bad.size:
        raise DegenerateRowError(f"row {int(bad[0])} has zero variance", rows=bad)
    Z /= norms[:, None]
    D = 1.0 - Z @ Z.T
    D = 0.5 * (D + D.T)
    np.clip(D, 0.0, 2.0, out=D)
    np.fill_diagonal(D, 0.0)
    w, b = block_means(D, labels)
    return Rdm(matrix=D, block_labels=labels, within_block_mean=w, between_block_mean=b)
