"""GLM over categorical factors plus PCA of the identity residuals."""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from ..errors import InvalidDataError, InvalidRankError, RankDeficientDesignError
from .design import FactorSpec, balanced_levels, build_design_matrix

SHAPE_GRID = 6  # control points per side
N_REGIONS = 16  # 4 x 4 texture regions
SHAPE_DIMS = SHAPE_GRID * SHAPE_GRID * 2
TEXTURE_DIMS = N_REGIONS
CHANNELS = ("shape", "texture")


def fit_glm(coeff_database, design):
    """Least-squares GLM fit by QR.

    Returns
    -------
    B : (p, d) coefficients
    residuals : (n, d), orthogonal to the design columns
    """
    X = np.asarray(coeff_database, dtype=np.float64)
    D = np.asarray(design, dtype=np.float64)
    if X.ndim != 2 or D.ndim != 2 or X.shape[0] != D.shape[0]:
        raise InvalidDataError("database and design must be matrices with matching rows")
    n, p = D.shape
    if n < p:
        raise RankDeficientDesignError(f"{n} rows cannot identify {p} columns", n=n, p=p)
    Q, R = np.linalg.qr(D)
    diag = np.abs(np.diag(R))
    tol = max(n, p) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    deficient = np.flatnonzero(diag <= tol)
    if deficient.size:
        raise RankDeficientDesignError("design matrix is rank deficient", columns=deficient)
    B = solve_triangular(R, Q.T @ X)
    return B, X - D @ B


def _sign_convention(components):
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(len(components)), idx])
    signs[signs == 0] = 1.0
    return signs


def residual_pca(residuals, n_pcs):
    """Thin SVD of the centred residuals.

    Returns ``(components, singular_values, scores)`` with components as
    orthonormal rows and ``scores = centred @ components.T``.
    """
    E = np.asarray(residuals, dtype=np.float64)
    n, d = E.shape
    if not 1 <= n_pcs <= min(n, d):
        raise InvalidRankError(f"n_pcs must be in [1, {min(n, d)}], got {n_pcs}", n_pcs=n_pcs)
    Ec = E - E.mean(axis=0)
    _, s, Vt = np.linalg.svd(Ec, full_matrices=False)
    comps = Vt[:n_pcs]
    comps = comps * _sign_convention(comps)[:, None]
    return comps, s[:n_pcs].copy(), Ec @ comps.T


@dataclass
class GlmIdentityModel:
    channel: str
    factor_spec: FactorSpec
    coefficients: np.ndarray  # B, (p, d)
    residual_components: np.ndarray  # (n_pcs, d)
    residual_singular_values: np.ndarray  # (n_pcs,)
    n_rows: int
    residual_mean: np.ndarray  # (d,)

    @property
    def n_pcs(self):
        return self.residual_components.shape[0]

    @property
    def n_dims(self):
        return self.residual_components.shape[1]

    @property
    def residual_std(self):
        """Per-PC standard deviation of the database residual scores."""
        return self.residual_singular_values / np.sqrt(self.n_rows)

    def categorical_mean(self, factor_levels):
        row = build_design_matrix([factor_levels], self.factor_spec)[0]
        return row @ self.coefficients + self.residual_mean

    def coefficients_for(self, factor_levels, residual_coeffs):
        rc = np.asarray(residual_coeffs, dtype=np.float64)
        return self.categorical_mean(factor_levels) + rc @ self.residual_components


@dataclass
class GenerativeModel:
    """The shape and texture GLM identity models used together."""

    shape: GlmIdentityModel
    texture: GlmIdentityModel

    def __getitem__(self, channel):
        if channel not in CHANNELS:
            raise KeyError(channel)
        return getattr(self, channel)

    @property
    def factor_spec(self):
        return self.shape.factor_spec


def fit_identity_model(coeff_database, factor_levels_per_row, spec, channel, n_pcs=None):
    D = build_design_matrix(factor_levels_per_row, spec)
    B, resid = fit_glm(coeff_database, D)
    if n_pcs is None:
        n_pcs = min(resid.shape)
    comps, s, _ = residual_pca(resid, n_pcs)
    return GlmIdentityModel(
        channel=channel,
        factor_spec=spec,
        coefficients=B,
        residual_components=comps,
        residual_singular_values=s,
        n_rows=resid.shape[0],
        residual_mean=resid.mean(axis=0),
    )


def synthetic_database(spec, channel, n_per_cell, seed):
    """A stand-in for a scanned-face coefficient database.

    Rows follow a balanced factor layout. Factor effects are planted as random
    smooth offsets; residuals are independent per coefficient with a fixed
    spread of scales, so identity variation is local in both channels.

    Returns ``(database, levels, planted_B)``.
    """
    rng = np.random.default_rng(seed)
    levels = balanced_levels(spec, n_per_cell)
    D = build_design_matrix(levels, spec)
    if channel == "shape":
        d, effect, base = SHAPE_DIMS, 0.02, 0.035
    elif channel == "texture":
        d, effect, base = TEXTURE_DIMS, 0.04, 0.08
    else:
        raise InvalidDataError(f"unknown channel {channel!r}")
    B0 = rng.normal(0.0, effect, size=(D.shape[1], d))
    B0[0] = 0.0  # intercept: the template itself
    scales = base * np.linspace(0.8, 1.2, d)[rng.permutation(d)]
    resid = rng.standard_normal((len(levels), d)) * scales
    return D @ B0 + resid, levels, B0


def build_generative_model(spec, n_per_cell=50, seed=0):
    """Fit shape and texture identity models on synthetic databases."""
    ss = np.random.SeedSequence(seed)
    seeds = [int(s.generate_state(1)[0]) for s in ss.spawn(2)]
    models = {}
    for channel, s in zip(CHANNELS, seeds):
        db, levels, _ = synthetic_database(spec, channel, n_per_cell, s)
        models[channel] = fit_identity_model(db, levels, spec, channel)
    return GenerativeModel(**models)
