"""Noisy trial generation around fixed identities."""
import numpy as np

from ..errors import InvalidConfigError
from ..trialset import TrialSet
from .glm import SHAPE_GRID
from .identity import noise_std
from .render import IMAGE_SIZE, VIEWPOINTS, render_coefficients


def noisy_coefficients(identity, noise, population_std, model, n, stream=()):
    """``n`` noisy full coefficient vectors for one identity.

    The generator is seeded with ``[noise.seed, *stream]`` so separate cells
    of a trial set draw independent, reproducible noise.

    Returns ``{channel: (n, d) array}``.
    """
    stds = noise_std(noise, population_std, identity.residual_coeffs) if noise is not None else {}
    rng = np.random.default_rng([int(noise.seed if noise else 0), *[int(s) for s in stream]])
    out = {}
    for ch in ("shape", "texture"):
        m = model[ch]
        rc = np.broadcast_to(identity.residual_coeffs[ch], (n, m.n_pcs)).copy()
        if ch in stds:
            z = rng.standard_normal((n, m.n_pcs))
            if noise.proportion > 0:
                rc += z * stds[ch]
        out[ch] = m.categorical_mean(identity.factor_levels) + rc @ m.residual_components
    return out


def _coefficient_features(coeffs, channels):
    parts, dims, grid = [], 1, None
    for ch in channels:
        parts.append(coeffs[ch])
    if channels == ("shape",):
        dims, grid = 2, (SHAPE_GRID, SHAPE_GRID)
    elif channels == ("texture",):
        dims, grid = 1, (4, 4)
    else:
        dims, grid = 1, (1, coeffs["shape"].shape[1] + coeffs["texture"].shape[1])
    return np.hstack(parts), dims, grid


def generate_trialset(identities, viewpoints, n_noisy_per_cell, noise, model, population_std=None,
                      feature_space="pixel", illumination=0, keep_images=None, size=IMAGE_SIZE):
    """Trial set skeleton (``S`` and labels; ``L`` and ``R`` are filled later).

    Rows are ordered by identity, then viewpoint, then replicate. In pixel
    space ``S`` is the flattened image; in coefficient space it is the noisy
    channel's coefficient vector (shape control points as 2-D features).
    """
    identities = list(identities)
    if not identities:
        raise InvalidConfigError("identity list is empty")
    if n_noisy_per_cell < 1 or not len(viewpoints):
        raise InvalidConfigError("need at least one viewpoint and one replicate per cell")
    for v in viewpoints:
        if v not in VIEWPOINTS:
            raise InvalidConfigError(f"viewpoint {v} not in {VIEWPOINTS}")
    if feature_space not in ("pixel", "coefficient"):
        raise InvalidConfigError(f"unknown feature space {feature_space!r}")
    if population_std is None:
        population_std = {ch: model[ch].residual_std for ch in ("shape", "texture")}
    if keep_images is None:
        keep_images = feature_space == "pixel"
    channels = noise.channels if noise is not None else ("texture",)
    channel_label = noise.channel if noise is not None else "none"

    n_cell = n_noisy_per_cell
    blocks_S, blocks_img = [], []
    ident_col, view_col, rep_col = [], [], []
    dims, grid = 1, (size, size)
    for ident in identities:
        for vi, v in enumerate(viewpoints):
            coeffs = noisy_coefficients(ident, noise, population_std, model, n_cell,
                                        stream=(ident.id_label, vi))
            imgs = None
            if feature_space == "pixel" or keep_images:
                imgs = render_coefficients(coeffs["shape"], coeffs["texture"], v, illumination, size=size)
            if feature_space == "pixel":
                blocks_S.append(imgs.reshape(n_cell, -1))
            else:
                feats, dims, grid = _coefficient_features(coeffs, channels)
                blocks_S.append(feats)
            if keep_images:
                blocks_img.append(imgs)
            ident_col.append(np.full(n_cell, ident.id_label))
            view_col.append(np.full(n_cell, v))
            rep_col.append(np.arange(n_cell))
    S = np.concatenate(blocks_S)
    images = None
    if keep_images:
        images = S.reshape(-1, size, size) if feature_space == "pixel" else np.concatenate(blocks_img)
    n = S.shape[0]
    return TrialSet(
        S=S,
        identity=np.concatenate(ident_col),
        viewpoint=np.concatenate(view_col),
        replicate=np.concatenate(rep_col),
        channel=np.full(n, channel_label),
        feature_dims=dims,
        grid_shape=tuple(grid),
        feature_space=feature_space,
        images=images,
    )
