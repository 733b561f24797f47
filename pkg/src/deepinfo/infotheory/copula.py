"""Copula normalisation: ranks -> empirical CDF -> standard-normal quantiles."""
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

from .._jit import njit, pick
from ..errors import InsufficientSamplesError, InvalidDataError


@dataclass(frozen=True)
class CopulaMatrix:
    """Samples (rows) x dimensions (columns) with standard-normal marginals."""

    data: np.ndarray

    @property
    def n_samples(self):
        return self.data.shape[0]

    @property
    def n_dims(self):
        return self.data.shape[1]


def _average_ranks_numpy(x):
    return rankdata(x, method="average", axis=0).astype(np.float64)


@njit
def _average_ranks_numba(x):
    n, d = x.shape
    out = np.empty((n, d))
    for j in range(d):
        col = x[:, j].copy()
        order = np.argsort(col, kind="mergesort")
        i = 0
        while i < n:
            k = i
            v = col[order[i]]
            while k + 1 < n and col[order[k + 1]] == v:
                k += 1
            # positions i..k (0-based) share ranks i+1..k+1
            r = 0.5 * (i + k) + 1.0
            for t in range(i, k + 1):
                out[order[t], j] = r
            i = k + 1
    return out


average_ranks = pick(_average_ranks_numba, _average_ranks_numpy)


def copula_transform(samples):
    """Column-wise Gaussian copula normalisation.

    Ties share their average rank; ranks ``r`` map to ``ndtri(r / (n + 1))``
    so the extremes stay finite.

    Parameters
    ----------
    samples : array, shape (n,) or (n, d)

    Returns
    -------
    CopulaMatrix
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InvalidDataError("samples must be a vector or an n x d matrix", shape=list(x.shape))
    n, d = x.shape
    if n < 3:
        raise InsufficientSamplesError(f"need at least 3 samples, got {n}", n_samples=n)
    if d < 1:
        raise InvalidDataError("samples must have at least one column")
    if not np.all(np.isfinite(x)):
        raise InvalidDataError("samples contain NaN or Inf")
    ranks = average_ranks(np.ascontiguousarray(x))
    return CopulaMatrix(ndtri(ranks / (n + 1.0)))
