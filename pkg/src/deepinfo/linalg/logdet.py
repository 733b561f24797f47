"""Cholesky log-determinants, single and batched."""
import numpy as np

from .._jit import njit, pick
from ..errors import NotPositiveDefiniteError


def _batched_log_pivots_numpy(C, floor):
    m, d, _ = C.shape
    L = np.zeros_like(C)
    logpiv = np.zeros((m, d))
    ok = np.ones(m, dtype=np.bool_)
    for j in range(d):
        s = C[:, j, j] - np.sum(L[:, j, :j] ** 2, axis=1)
        ok &= s > floor
        s = np.where(ok, s, 1.0)
        root = np.sqrt(s)
        L[:, j, j] = root
        logpiv[:, j] = np.log(s)
        for i in range(j + 1, d):
            L[:, i, j] = (C[:, i, j] - np.sum(L[:, i, :j] * L[:, j, :j], axis=1)) / root
    return logpiv, ok


@njit
def _batched_log_pivots_numba(C, floor):
    m, d, _ = C.shape
    logpiv = np.zeros((m, d))
    ok = np.ones(m, dtype=np.bool_)
    L = np.zeros((d, d))
    for k in range(m):
        L[:, :] = 0.0
        for j in range(d):
            s = C[k, j, j]
            for p in range(j):
                s -= L[j, p] * L[j, p]
            if not (s > floor[k]):
                ok[k] = False
                break
            root = np.sqrt(s)
            L[j, j] = root
            logpiv[k, j] = np.log(s)
            for i in range(j + 1, d):
                acc = C[k, i, j]
                for p in range(j):
                    acc -= L[i, p] * L[j, p]
                L[i, j] = acc / root
    return logpiv, ok


_batched_log_pivots = pick(_batched_log_pivots_numba, _batched_log_pivots_numpy)


def batched_log_pivots(C, floor=None):
    """Log of the squared Cholesky pivots for a stack of symmetric matrices.

    Parameters
    ----------
    C : array, shape (m, d, d)
    floor : array, shape (m,), optional
        A matrix is flagged as failed when any pivot is ``<= floor``.
        Defaults to zero, i.e. plain positive-definiteness.

    Returns
    -------
    logpiv : array, shape (m, d)
        ``logpiv[:, :j].sum(1)`` is the natural log-determinant of the leading
        j x j block. Rows of failed matrices are meaningless.
    ok : bool array, shape (m,)
    """
    C = np.ascontiguousarray(C, dtype=np.float64)
    if floor is None:
        floor = np.zeros(C.shape[0])
    floor = np.ascontiguousarray(np.broadcast_to(floor, (C.shape[0],)), dtype=np.float64)
    return _batched_log_pivots(C, floor)


def chol_logdet(A):
    """Natural log-determinant of a symmetric positive-definite matrix."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotPositiveDefiniteError("expected a square matrix", shape=list(A.shape))
    if A.shape[0] == 0:
        return 0.0
    logpiv, ok = batched_log_pivots(A[None])
    if not ok[0]:
        raise NotPositiveDefiniteError("matrix is not positive definite")
    return float(logpiv[0].sum())
