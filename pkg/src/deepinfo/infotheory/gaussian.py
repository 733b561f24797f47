"""Parametric Gaussian MI and co-information on copula-normalised data.

All quantities are in bits. Entropies come from Cholesky log-determinants of
sample covariances (``n - 1`` normalisation) after a ridge of
``1e-12 * trace / dim`` on the joint covariance; sub-blocks reuse the ridged
joint so estimates computed together stay mutually consistent.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import psi

from ..errors import DegenerateVariablesError, InvalidDataError
from ..linalg.logdet import batched_log_pivots
from .copula import CopulaMatrix, copula_transform

RIDGE = 1e-12
# a pivot this close to the ridge itself means the joint covariance was singular
DEGENERATE_FACTOR = 10.0
LN2 = np.log(2.0)


@dataclass(frozen=True)
class MiEstimate:
    bits: float
    n_samples: int
    dims_x: int
    dims_y: int
    bias_corrected: bool

    def __float__(self):
        return self.bits


@dataclass(frozen=True)
class RedEstimate:
    bits: float
    mi_sl: float
    mi_sr: float
    mi_slr: float

    @property
    def component_mi(self):
        return {"MI(S;L)": self.mi_sl, "MI(S;R)": self.mi_sr, "MI(S;L,R)": self.mi_slr}

    def __float__(self):
        return self.bits


def _as_data(x):
    if isinstance(x, CopulaMatrix):
        return x.data
    x = np.asarray(x, dtype=np.float64)
    return x[:, None] if x.ndim == 1 else x


def entropy_bias(n, d):
    """Analytic bias of the Gaussian entropy estimate (nats) for ``d`` dims."""
    if d == 0:
        return 0.0
    dterm = (np.log(2.0) - np.log(n - 1.0)) / 2.0
    return d * dterm + float(np.sum(psi((n - np.arange(1, d + 1)) / 2.0))) / 2.0


def feature_blocks(s, dims):
    """View an n x (f*dims) matrix as (n, f, dims)."""
    s = _as_data(s)
    n, cols = s.shape
    if dims < 1 or cols % dims:
        raise InvalidDataError(f"{cols} columns do not split into features of {dims} dims")
    return s.reshape(n, cols // dims, dims)


def _centered(a):
    return a - a.mean(axis=0)


def mi_from_covariance(Cxx, Cxy, Cyy, n, bias_correct):
    """MI in bits for a stack of joint covariances given as blocks.

    Parameters
    ----------
    Cxx : (f, dx, dx)
    Cxy : (f, dx, dy)
    Cyy : (dy, dy) or (f, dy, dy)

    Returns
    -------
    bits : (f,) array, NaN where degenerate
    ok : (f,) bool array
    """
    f, dx, _ = Cxx.shape
    dy = Cxy.shape[2]
    D = dx + dy
    J = np.empty((f, D, D))
    J[:, :dx, :dx] = Cxx
    J[:, :dx, dx:] = Cxy
    J[:, dx:, :dx] = np.swapaxes(Cxy, 1, 2)
    J[:, dx:, dx:] = Cyy
    eps = RIDGE * np.trace(J, axis1=1, axis2=2) / D
    J[:, np.arange(D), np.arange(D)] += eps[:, None]
    floor = DEGENERATE_FACTOR * eps
    piv_xy, ok = batched_log_pivots(J, floor)
    piv_y, ok_y = batched_log_pivots(J[:, dx:, dx:], floor)
    ok &= ok_y
    hx = 0.5 * piv_xy[:, :dx].sum(axis=1)
    hxy = 0.5 * piv_xy.sum(axis=1)
    hy = 0.5 * piv_y.sum(axis=1)
    if bias_correct:
        hx = hx - entropy_bias(n, dx)
        hy = hy - entropy_bias(n, dy)
        hxy = hxy - entropy_bias(n, D)
    bits = (hx + hy - hxy) / LN2
    bits[~ok] = np.nan
    return bits, ok


def feature_mi(s, response, feature_dims=1, bias_correct=True):
    """MI between each feature of ``s`` and a shared ``response``.

    Both inputs are assumed copula-normalised already (pass the ``.data`` of a
    :class:`CopulaMatrix` or a CopulaMatrix itself).

    Returns
    -------
    bits : (f,) array, NaN for degenerate features
    ok : (f,) bool array
    """
    X = feature_blocks(s, feature_dims)
    Y = _as_data(response)
    n = X.shape[0]
    if Y.shape[0] != n:
        raise InvalidDataError("feature and response row counts differ", n_x=n, n_y=Y.shape[0])
    Xc = _centered(X)
    Yc = _centered(Y)
    f, dx = X.shape[1], X.shape[2]
    Cxx = np.einsum("nfi,nfj->fij", Xc, Xc) / (n - 1)
    Cxy = (Xc.reshape(n, f * dx).T @ Yc).reshape(f, dx, Y.shape[1]) / (n - 1)
    Cyy = Yc.T @ Yc / (n - 1)
    return mi_from_covariance(Cxx, Cxy, Cyy, n, bias_correct)


def gaussian_mi(x, y, bias_correct=True):
    """Gaussian MI in bits between copula-normalised ``x`` and ``y``."""
    X = _as_data(x)
    Y = _as_data(y)
    if X.shape[0] != Y.shape[0]:
        raise InvalidDataError("x and y must have the same number of samples", n_x=X.shape[0], n_y=Y.shape[0])
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise InvalidDataError("x or y contain non-finite values")
    bits, ok = feature_mi(X, Y, feature_dims=X.shape[1], bias_correct=bias_correct)
    if not ok[0]:
        raise DegenerateVariablesError("joint covariance is singular after ridge")
    return MiEstimate(float(bits[0]), X.shape[0], X.shape[1], Y.shape[1], bool(bias_correct))


def co_information(s, l, r, bias_correct=True):
    """Redundancy ``MI(s;l) + MI(s;r) - MI(s;[l r])`` in bits."""
    S, L, R = _as_data(s), _as_data(l), _as_data(r)
    if not (S.shape[0] == L.shape[0] == R.shape[0]):
        raise InvalidDataError("s, l and r must have the same number of samples")
    terms = {}
    for name, other in (("MI(S;L)", L), ("MI(S;R)", R), ("MI(S;L,R)", np.hstack([L, R]))):
        try:
            terms[name] = gaussian_mi(S, other, bias_correct).bits
        except DegenerateVariablesError as exc:
            raise DegenerateVariablesError(f"{name}: {exc}", term=name) from exc
    sl, sr, slr = terms["MI(S;L)"], terms["MI(S;R)"], terms["MI(S;L,R)"]
    return RedEstimate(bits=sl + sr - slr, mi_sl=sl, mi_sr=sr, mi_slr=slr)


def feature_co_information(s, l, r, feature_dims=1, bias_correct=True):
    """Per-feature redundancy with shared ``l`` and ``r`` (all copula data).

    Returns
    -------
    red, mi_sl, mi_sr, mi_slr : (f,) arrays
    ok : (f,) bool array
    """
    L, R = _as_data(l), _as_data(r)
    mi_sl, ok1 = feature_mi(s, L, feature_dims, bias_correct)
    mi_sr, ok2 = feature_mi(s, R, feature_dims, bias_correct)
    mi_slr, ok3 = feature_mi(s, np.hstack([L, R]), feature_dims, bias_correct)
    ok = ok1 & ok2 & ok3
    return mi_sl + mi_sr - mi_slr, mi_sl, mi_sr, mi_slr, ok


def gcmi(x, y, bias_correct=True):
    """Copula-normalise raw ``x`` and ``y`` and return their MI in bits."""
    return gaussian_mi(copula_transform(x), copula_transform(y), bias_correct)
