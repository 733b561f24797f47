"""Max-statistic permutation thresholds for per-feature MI maps."""
from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientPermutationsError, InvalidDataError
from .copula import CopulaMatrix, copula_transform
from .gaussian import feature_blocks, mi_from_covariance

MIN_PERMUTATIONS = 100


@dataclass(frozen=True)
class PermutationNull:
    n_permutations: int
    null_max_distribution: np.ndarray  # sorted ascending, bits
    percentile_95: float
    seed: int

    def percentile(self, q):
        return float(np.percentile(self.null_max_distribution, q))


def _copula(x):
    if isinstance(x, CopulaMatrix):
        return x.data
    return copula_transform(x).data


def permutation_null(s, response, n_perm=1000, seed=0, feature_dims=1, bias_correct=True):
    """Null distribution of the maximum per-feature MI under shuffled responses.

    Raw inputs are copula-normalised once; each permutation reorders the
    response rows with a generator seeded by ``seed`` and records the largest
    MI across features. Degenerate features are ignored.
    """
    if n_perm < MIN_PERMUTATIONS:
        raise InsufficientPermutationsError(
            f"need at least {MIN_PERMUTATIONS} permutations, got {n_perm}", n_perm=n_perm
        )
    S = _copula(s)
    Y = _copula(response)
    X = feature_blocks(S, feature_dims)
    n, f, dx = X.shape
    if Y.shape[0] != n:
        raise InvalidDataError("feature and response row counts differ", n_x=n, n_y=Y.shape[0])
    Xc = X - X.mean(axis=0)
    Yc = Y - Y.mean(axis=0)
    Cxx = np.einsum("nfi,nfj->fij", Xc, Xc) / (n - 1)
    Cyy = Yc.T @ Yc / (n - 1)
    Xflat_t = Xc.reshape(n, f * dx).T.copy()

    rng = np.random.default_rng(seed)
    maxima = np.empty(n_perm)
    for i in range(n_perm):
        perm = rng.permutation(n)
        Cxy = (Xflat_t @ Yc[perm]).reshape(f, dx, Y.shape[1]) / (n - 1)
        bits, ok = mi_from_covariance(Cxx, Cxy, Cyy, n, bias_correct)
        maxima[i] = np.max(bits[ok]) if ok.any() else -np.inf
    maxima.sort()
    return PermutationNull(
        n_permutations=int(n_perm),
        null_max_distribution=maxima,
        percentile_95=float(np.percentile(maxima, 95)),
        seed=int(seed),
    )
