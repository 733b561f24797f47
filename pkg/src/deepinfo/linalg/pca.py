"""Randomized PCA (Gaussian range finder with power iterations)."""
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidDataError, InvalidRankError


@dataclass
class PcaModel:
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance: np.ndarray  # (k,), descending
    scores: np.ndarray  # (n, k)
    mean: np.ndarray  # (d,)
    singular_values: np.ndarray  # (k,)
    total_variance: float
    oversampling: int
    power_iterations: int
    seed: int

    @property
    def explained_variance_ratio(self):
        if self.total_variance <= 0:
            return np.zeros_like(self.explained_variance)
        return self.explained_variance / self.total_variance

    def transform(self, data):
        return (np.asarray(data, dtype=np.float64) - self.mean) @ self.components.T


def _orthonormal(Y):
    Q, _ = np.linalg.qr(Y)
    return Q


def _fix_signs(components):
    # largest-magnitude loading of each component is made positive
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(len(components)), idx])
    signs[signs == 0] = 1.0
    return signs


def randomized_pca(data, k, oversampling=10, power_iterations=2, seed=0):
    """Top-``k`` principal components of ``data`` by randomized SVD.

    Columns are centred, a Gaussian sketch of width ``k + oversampling`` is
    pushed through ``power_iterations`` rounds of ``(A A^T)`` with QR
    re-orthonormalisation in between, and the small projected matrix is
    decomposed exactly.
    """
    A = np.asarray(data, dtype=np.float64)
    if A.ndim != 2:
        raise InvalidDataError("data must be a 2-D matrix", shape=list(A.shape))
    if not np.all(np.isfinite(A)):
        raise InvalidDataError("data contains non-finite values")
    n, d = A.shape
    if k < 1 or oversampling < 0 or power_iterations < 0 or k + oversampling > min(n, d):
        raise InvalidRankError(
            f"k + oversampling must lie in [1, min(n, d)] (k={k}, oversampling={oversampling}, n={n}, d={d})",
            k=k, oversampling=oversampling, n=n, d=d,
        )

    mean = A.mean(axis=0)
    Ac = A - mean
    rng = np.random.default_rng(seed)
    omega = rng.standard_normal((d, k + oversampling))
    Q = _orthonormal(Ac @ omega)
    for _ in range(power_iterations):
        Z = _orthonormal(Ac.T @ Q)
        Q = _orthonormal(Ac @ Z)
    B = Q.T @ Ac
    _, s, Vt = np.linalg.svd(B, full_matrices=False)
    components = Vt[:k]
    signs = _fix_signs(components)
    components = components * signs[:, None]
    scores = Ac @ components.T
    denom = max(n - 1, 1)
    return PcaModel(
        components=components,
        explained_variance=s[:k] ** 2 / denom,
        scores=scores,
        mean=mean,
        singular_values=s[:k].copy(),
        total_variance=float(np.sum(Ac * Ac) / denom),
        oversampling=oversampling,
        power_iterations=power_iterations,
        seed=seed,
    )
