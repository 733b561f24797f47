"""Per-feature information maps over a trial set."""
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateMapError, DegenerateVariablesError, InvalidConfigError, InvalidDataError
from ..infotheory import CopulaMatrix, copula_transform, feature_co_information, feature_mi, permutation_null
from ..linalg import randomized_pca

MAP_KINDS = ("diagnostic", "layer_pc", "redundancy")
RECOMMENDED_TRIALS = 500


@dataclass
class FeatureMap:
    """Per-feature values in bits laid out on ``grid_shape``.

    ``values`` is unthresholded; :meth:`thresholded` zeroes everything at or
    below ``threshold``. Degenerate features (constant over the trials, such as
    background pixels) hold 0 and are flagged in ``degenerate``.
    """

    values: np.ndarray
    kind: str
    grid_shape: tuple
    threshold: float = None
    feature_dims: int = 1
    pc_index: int = None
    viewpoint: int = None
    degenerate: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise InvalidConfigError(f"unknown map kind {self.kind!r}")
        self.values = np.asarray(self.values, dtype=np.float64)
        self.grid_shape = tuple(int(g) for g in self.grid_shape)
        if self.degenerate is None:
            self.degenerate = np.zeros(self.values.shape, dtype=bool)
        if int(np.prod(self.grid_shape)) != self.values.size:
            raise InvalidDataError(f"grid {self.grid_shape} does not hold {self.values.size} features")

    @property
    def n_features(self):
        return self.values.size

    def supra_threshold(self):
        if self.threshold is None:
            return ~self.degenerate
        return (self.values > self.threshold) & ~self.degenerate

    def thresholded(self):
        return np.where(self.supra_threshold(), self.values, 0.0)

    def grid(self, thresholded=False):
        return (self.thresholded() if thresholded else self.values).reshape(self.grid_shape)

    def label(self):
        parts = [self.kind]
        if self.pc_index is not None:
            parts.append(f"pc{self.pc_index + 1}")
        if self.viewpoint is not None:
            parts.append(f"view{self.viewpoint:+d}")
        return "_".join(parts)


def _finish(bits, ok, strict):
    if strict and not ok.all():
        bad = np.flatnonzero(~ok)
        raise DegenerateVariablesError(f"{bad.size} degenerate features", features=bad)
    return np.where(ok, bits, 0.0), ~ok


def _rows_by_viewpoint(trialset, per_viewpoint):
    if not per_viewpoint:
        return [(None, np.arange(trialset.n_trials))]
    return [(v, np.flatnonzero(trialset.viewpoint == v)) for v in trialset.viewpoints()]


def _null_threshold(S, response, feature_dims, n_perm, seed, bias_correct):
    if not n_perm:
        return None
    null = permutation_null(CopulaMatrix(S), CopulaMatrix(response), n_perm, seed, feature_dims, bias_correct)
    return null.percentile_95


def _warn_small(n):
    if n < RECOMMENDED_TRIALS:
        warnings.warn(f"only {n} trials; at least {RECOMMENDED_TRIALS} are recommended for stable maps",
                      stacklevel=3)


def diagnostic_map(trialset, feature_dims=None, n_perm=1000, seed=0, bias_correct=True,
                   per_viewpoint=False, strict=False):
    """MI between each stimulus feature and the decision variable ``R``.

    With ``n_perm`` > 0 the map carries a max-statistic permutation threshold.
    Returns one map, or one map per viewpoint when ``per_viewpoint`` is set.
    """
    if trialset.R is None:
        raise InvalidDataError("trial set has no response R")
    dims = feature_dims or trialset.feature_dims
    maps = []
    for v, rows in _rows_by_viewpoint(trialset, per_viewpoint):
        _warn_small(len(rows))
        S = copula_transform(trialset.S[rows]).data
        R = copula_transform(trialset.R[rows]).data
        bits, ok = feature_mi(S, R, dims, bias_correct)
        values, degenerate = _finish(bits, ok, strict)
        threshold = _null_threshold(S, R, dims, n_perm, seed, bias_correct)
        maps.append(FeatureMap(values, "diagnostic", trialset.grid_shape, threshold, dims,
                               viewpoint=v, degenerate=degenerate))
    return maps if per_viewpoint else maps[0]


def layer_pca(trialset, layer="pool", n_pcs=6, seed=0):
    """Randomized PCA of a captured layer, rows aligned with the trial set."""
    if layer not in trialset.L:
        raise InvalidDataError(f"trial set has no capture for layer {layer!r}")
    acts = trialset.L[layer]
    oversampling = max(0, min(10, min(acts.shape) - n_pcs))
    return randomized_pca(acts, n_pcs, oversampling=oversampling, seed=seed)


def _pc_maps(trialset, pca, n_pcs, per_viewpoint, n_perm, seed, bias_correct, strict, kinds):
    scores = pca.scores if hasattr(pca, "scores") else np.asarray(pca)
    if scores.shape[0] != trialset.n_trials:
        raise InvalidDataError("PCA scores are not aligned with the trial set",
                               n_scores=scores.shape[0], n_trials=trialset.n_trials)
    if n_pcs > scores.shape[1]:
        raise InvalidConfigError(f"requested {n_pcs} PCs but only {scores.shape[1]} are available")
    if "redundancy" in kinds and trialset.R is None:
        raise InvalidDataError("trial set has no response R")
    dims = trialset.feature_dims
    out = {kind: [] for kind in kinds}
    for v, rows in _rows_by_viewpoint(trialset, per_viewpoint):
        _warn_small(len(rows))
        S = copula_transform(trialset.S[rows]).data
        R = copula_transform(trialset.R[rows]).data if "redundancy" in kinds else None
        for k in range(n_pcs):
            pc = copula_transform(scores[rows, k]).data
            # redundancy maps share the PC's MI null: a feature must carry at
            # least as much overlapping information as a significant MI value
            threshold = _null_threshold(S, pc, dims, n_perm, seed + k, bias_correct)
            if "redundancy" in kinds:
                red, mi_pc, _, _, ok = feature_co_information(S, pc, R, dims, bias_correct)
                computed = {"layer_pc": (mi_pc, ok), "redundancy": (red, ok)}
            else:
                computed = {"layer_pc": feature_mi(S, pc, dims, bias_correct)}
            for kind in kinds:
                values, degenerate = _finish(*computed[kind], strict)
                out[kind].append(FeatureMap(values, kind, trialset.grid_shape, threshold, dims,
                                            pc_index=k, viewpoint=v, degenerate=degenerate))
    return out


def layer_pc_maps(trialset, pca, n_pcs=6, per_viewpoint=False, n_perm=1000, seed=0, bias_correct=True,
                  strict=False):
    """MI between each stimulus feature and each of the first ``n_pcs`` PC scores.

    ``pca`` is a PcaModel or an ``(n_trials, >= n_pcs)`` score matrix. Maps are
    ordered by viewpoint (when ``per_viewpoint``), then PC.
    """
    return _pc_maps(trialset, pca, n_pcs, per_viewpoint, n_perm, seed, bias_correct, strict,
                    ("layer_pc",))["layer_pc"]


def decision_redundancy_maps(trialset, pca, n_pcs=6, per_viewpoint=False, n_perm=1000, seed=0,
                             bias_correct=True, strict=False):
    """Redundancy between each feature, each PC score and ``R``.

    Negative values (synergy) are kept; only rendering clamps them.
    """
    return _pc_maps(trialset, pca, n_pcs, per_viewpoint, n_perm, seed, bias_correct, strict,
                    ("redundancy",))["redundancy"]


def layer_and_redundancy_maps(trialset, pca, n_pcs=6, per_viewpoint=False, n_perm=1000, seed=0,
                              bias_correct=True, strict=False):
    """Both map families in one pass, sharing copula transforms and nulls.

    Identical to calling :func:`layer_pc_maps` and
    :func:`decision_redundancy_maps` with the same arguments.
    """
    out = _pc_maps(trialset, pca, n_pcs, per_viewpoint, n_perm, seed, bias_correct, strict,
                   ("layer_pc", "redundancy"))
    return out["layer_pc"], out["redundancy"]


def viewpoint_consistency(maps_by_viewpoint):
    """Pairwise Pearson correlation of unthresholded map vectors.

    Accepts a dict ``{viewpoint: FeatureMap or array}`` or a list. Returns
    ``(matrix, minimum off-diagonal correlation)``.
    """
    items = list(maps_by_viewpoint.values()) if isinstance(maps_by_viewpoint, dict) else list(maps_by_viewpoint)
    if len(items) < 2:
        raise InvalidConfigError("need maps for at least two viewpoints")
    vectors = np.stack([np.asarray(m.values if isinstance(m, FeatureMap) else m, dtype=np.float64).ravel()
                        for m in items])
    centred = vectors - vectors.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centred, axis=1)
    scale = np.sqrt(vectors.shape[1]) * np.maximum(np.abs(vectors).max(axis=1), 1e-300)
    flat = np.flatnonzero(norms <= 1e-12 * scale)
    if flat.size:
        raise DegenerateMapError(f"map {int(flat[0])} is constant", maps=flat)
    unit = centred / norms[:, None]
    corr = np.clip(unit @ unit.T, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    off = corr[~np.eye(len(items), dtype=bool)]
    return corr, float(off.min())
