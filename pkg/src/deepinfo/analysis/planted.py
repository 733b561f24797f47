"""Planted-dependence task: a network whose decision provably rests on known regions.

Identities differ only in the texture of the decision regions, coded on a
well-separated lattice. During training every other texture region and the
whole shape are redrawn from the population for each render, so nothing else
predicts the label, and the unused region is held constant so the network never
learns to be invariant to it. Noise trials around one identity then vary every
texture region, which gives each map a ground truth: the diagnostic map should
sit on the decision regions, and the unused region should appear in the
layer maps but not in the decision-redundancy maps.
"""
import itertools
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InvalidConfigError
from ..genmodel import (
    DESK_FACTORS,
    PAPER_FACTORS,
    VIEWPOINTS,
    NoiseSpec,
    build_generative_model,
    generate_trialset,
    render_coefficients,
    sample_population,
)
from ..genmodel.glm import N_REGIONS
from ..linalg import randomized_pca
from ..network import TrainConfig, desk_netspec, train
from .capture import capture_trialset
from .maps import diagnostic_map, layer_and_redundancy_maps, viewpoint_consistency

PLANTED_TRAIN = TrainConfig(epochs=20, learning_rate=0.02, clip_norm=5.0)
FACTOR_PRESETS = {"desk": DESK_FACTORS, "paper": PAPER_FACTORS}
STAGES = ("model", "identities", "renders", "train", "trials", "pca", "null", "robustness")


@dataclass(frozen=True)
class PlantedConfig:
    n_identities: int = 20
    renders_per_identity: int = 200
    viewpoints: tuple = VIEWPOINTS
    decision_regions: tuple = (5, 6, 9, 10)
    unused_region: int = 13
    unused_in_training: str = "constant"  # or "nuisance": redrawn like the other regions
    code_amplitude: float = 0.2
    target: int = None  # None picks the first identity with a non-constant code
    map_proportion: float = 0.8
    trials_per_viewpoint: int = 2000
    n_pcs: int = 6
    n_perm: int = 200
    width: int = 8
    factors: str = "desk"
    database_rows_per_cell: int = 50
    train: TrainConfig = PLANTED_TRAIN
    # acceptance thresholds for the map checks
    min_accuracy: float = 0.95
    top_fraction: float = 0.1
    min_in_mask: float = 0.8
    max_unused_share: float = 0.1  # unused-region redundancy relative to the decision regions' peak

    def __post_init__(self):
        regions = set(self.decision_regions)
        if not regions or not regions <= set(range(N_REGIONS)) or self.unused_region in regions:
            raise InvalidConfigError("decision regions must be distinct texture regions excluding the unused one")
        if not 0 <= self.unused_region < N_REGIONS:
            raise InvalidConfigError(f"unused_region must lie in [0, {N_REGIONS})")
        if self.factors not in FACTOR_PRESETS:
            raise InvalidConfigError(f"factors must be one of {sorted(FACTOR_PRESETS)}")
        if self.unused_in_training not in ("constant", "nuisance"):
            raise InvalidConfigError("unused_in_training must be 'constant' or 'nuisance'")
        if self.target is not None and not 0 <= self.target < self.n_identities:
            raise InvalidConfigError("target must index one of the identities")
        if self.renders_per_identity % len(self.viewpoints):
            raise InvalidConfigError("renders_per_identity must be a multiple of the number of viewpoints")
        if self.n_identities > 3 ** len(self.decision_regions):
            raise InvalidConfigError("too many identities for the decision-region code lattice")

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "train"}
        d = {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}
        d["train"] = self.train.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "train" in d:
            d["train"] = TrainConfig.from_dict(d["train"])
        for key in ("viewpoints", "decision_regions"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def stage_seeds(seed):
    """Independent integer seeds per pipeline stage from one global seed."""
    children = np.random.SeedSequence(seed).spawn(len(STAGES))
    return {name: int(c.generate_state(1)[0]) for name, c in zip(STAGES, children)}


def lattice_codes(n_codes, n_regions, amplitude):
    """``n_codes`` points of ``{-1, 0, 1}^n_regions`` chosen by farthest-point order, scaled."""
    candidates = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=n_regions)))
    chosen = [0]
    nearest = np.linalg.norm(candidates - candidates[0], axis=1)
    while len(chosen) < n_codes:
        nxt = int(np.argmax(nearest))  # first maximiser, so the order is deterministic
        chosen.append(nxt)
        nearest = np.minimum(nearest, np.linalg.norm(candidates - candidates[nxt], axis=1))
    return candidates[chosen] * amplitude


def _with_texture(identity, model, texture):
    m = model.texture
    residual = texture - m.categorical_mean(identity.factor_levels)
    rc = np.linalg.lstsq(m.residual_components.T, residual, rcond=None)[0]
    coeffs = dict(identity.residual_coeffs)
    coeffs["texture"] = rc
    return replace(identity, residual_coeffs=coeffs)


def planted_identities(model, config, seed):
    """Identities whose decision-region texture carries a lattice code and whose unused region is 0.

    Returns ``(identities, codes)``.
    """
    base = sample_population(model, config.n_identities, 1.0, seed)
    codes = lattice_codes(config.n_identities, len(config.decision_regions), config.code_amplitude)
    out = []
    for ident, code in zip(base, codes):
        tex = ident.coefficients(model)["texture"].copy()
        tex[list(config.decision_regions)] = code
        tex[config.unused_region] = 0.0
        out.append(_with_texture(ident, model, tex))
    return out, codes


def _population_draw(model, channel, cells, rng, n):
    m = model[channel]
    means = np.stack([m.categorical_mean(cells[i]) for i in rng.integers(0, len(cells), n)])
    return means + (rng.standard_normal((n, m.n_pcs)) * m.residual_std) @ m.residual_components


def planted_renders(model, identities, config, seed):
    """Training images: only the decision regions follow the identity.

    Returns ``(images, labels, viewpoints)`` with rows ordered by identity,
    then viewpoint, then replicate.
    """
    rng = np.random.default_rng(seed)
    per_view = config.renders_per_identity // len(config.viewpoints)
    n = config.n_identities * config.renders_per_identity
    labels = np.repeat(np.arange(config.n_identities), config.renders_per_identity)
    views = np.tile(np.repeat(np.asarray(config.viewpoints), per_view), config.n_identities)
    cells = model.factor_spec.cells()
    texture = _population_draw(model, "texture", cells, rng, n)
    shape = _population_draw(model, "shape", cells, rng, n)
    decision = list(config.decision_regions)
    codes = np.stack([ident.coefficients(model)["texture"][decision] for ident in identities])
    texture[:, decision] = codes[labels]
    if config.unused_in_training == "constant":
        texture[:, config.unused_region] = 0.0
    return render_coefficients(shape, texture, views), labels, views


def region_mask(model, identity, regions, viewpoint, delta=0.05):
    """Pixels whose value changes when any of ``regions`` is perturbed (flattened, bool)."""
    coeffs = identity.coefficients(model)
    shape, texture = coeffs["shape"], coeffs["texture"]
    regions = list(np.atleast_1d(regions))
    batch = np.repeat(texture[None], 1 + 2 * len(regions), axis=0)
    for i, r in enumerate(regions):
        batch[1 + 2 * i, r] += delta
        batch[2 + 2 * i, r] -= delta
    imgs = render_coefficients(np.repeat(shape[None], len(batch), axis=0), batch, viewpoint)
    changed = np.abs(imgs[1:] - imgs[0]) > 1e-12
    return changed.any(axis=0).ravel()


def per_viewpoint_pca(trialset, layer, n_pcs, seed):
    """Scores of a separate randomized PCA per viewpoint, aligned with the trial rows."""
    acts = trialset.L[layer]
    scores = np.zeros((trialset.n_trials, n_pcs))
    models = {}
    for v in trialset.viewpoints():
        rows = np.flatnonzero(trialset.viewpoint == v)
        oversampling = max(0, min(10, min(len(rows), acts.shape[1]) - n_pcs))
        pca = randomized_pca(acts[rows], n_pcs, oversampling=oversampling, seed=seed)
        scores[rows] = pca.scores
        models[v] = pca
    return scores, models


def top_fraction_in_mask(feature_map, mask, fraction=0.1):
    """Share of the top ``fraction`` of non-degenerate features that fall inside ``mask``."""
    valid = np.flatnonzero(~feature_map.degenerate)
    n_top = max(1, int(fraction * valid.size))
    order = valid[np.argsort(-feature_map.values[valid], kind="stable")][:n_top]
    return float(mask[order].mean())


def region_peaks(maps, regions):
    """Largest value over ``maps`` for each coefficient-space region, and the largest threshold."""
    values = np.stack([m.values for m in maps])[:, list(regions)]
    thresholds = [m.threshold for m in maps if m.threshold is not None]
    return values.max(axis=0), (max(thresholds) if thresholds else 0.0)


def default_target(codes):
    """First identity whose code is not the same in every decision region.

    A constant code only says "brighter" or "darker" than average, which a
    network can read off by contrasting the decision regions with their
    neighbours, so it does not pin the decision to the planted regions.
    """
    varied = np.flatnonzero(np.ptp(codes, axis=1) > 1e-9 * np.abs(codes).max())
    return int(varied[0]) if varied.size else 0


@dataclass
class PlantedResult:
    config: PlantedConfig
    seeds: dict
    target: int
    params: object = field(repr=False)
    history: dict = field(repr=False)
    identities: list = field(repr=False)
    trialset: object = field(repr=False)
    coefficient_trialset: object = field(repr=False)
    diagnostic: dict = field(repr=False)  # viewpoint -> pixel FeatureMap
    layer_maps: dict = field(repr=False)  # viewpoint -> list of pixel FeatureMap (one per PC)
    redundancy_maps: dict = field(repr=False)
    coefficient_layer_maps: list = field(repr=False)  # one per PC, pooled over viewpoints
    coefficient_redundancy_maps: list = field(repr=False)
    decision_masks: dict = field(repr=False)
    held_out_accuracy: float = 0.0
    top_decile_in_mask: dict = field(default_factory=dict)
    unused_layer_peak: float = 0.0
    unused_redundancy_peak: float = 0.0
    decision_redundancy_peak: float = 0.0
    layer_threshold: float = 0.0
    coefficient_consistency: float = float("nan")
    seconds: float = 0.0

    def checks(self):
        c = self.config
        return {
            "held_out_accuracy": self.held_out_accuracy >= c.min_accuracy,
            "diagnostic_in_mask": min(self.top_decile_in_mask.values()) >= c.min_in_mask,
            "unused_present_in_layer_maps": self.unused_layer_peak > self.layer_threshold,
            "decision_retained_in_redundancy": self.decision_redundancy_peak > self.layer_threshold,
            "unused_dropped_from_redundancy":
                max(self.unused_redundancy_peak, 0.0) <= c.max_unused_share * self.decision_redundancy_peak,
        }

    def summary(self):
        return {
            "target": self.target,
            "held_out_accuracy": self.held_out_accuracy,
            "top_decile_in_mask": {str(k): v for k, v in self.top_decile_in_mask.items()},
            "unused_layer_peak": self.unused_layer_peak,
            "unused_redundancy_peak": self.unused_redundancy_peak,
            "decision_redundancy_peak": self.decision_redundancy_peak,
            "layer_threshold": self.layer_threshold,
            "coefficient_consistency": self.coefficient_consistency,
            "seconds": self.seconds,
            "checks": self.checks(),
        }


def train_planted(config=PlantedConfig(), seed=0, model=None):
    """Build the generator and identities and train the network.

    Returns ``(model, identities, params, history, seeds)``.
    """
    seeds = stage_seeds(seed)
    if model is None:
        model = build_generative_model(FACTOR_PRESETS[config.factors], config.database_rows_per_cell, seeds["model"])
    identities, _ = planted_identities(model, config, seeds["identities"])
    images, labels, _ = planted_renders(model, identities, config, seeds["renders"])
    netspec = desk_netspec(config.n_identities, config.width)
    params, history = train(netspec, images, labels, replace(config.train, seed=seeds["train"]))
    return model, identities, params, history, seeds


def target_index(config):
    """The configured target, or the first identity with a non-constant code."""
    if config.target is not None:
        return config.target
    return default_target(lattice_codes(config.n_identities, len(config.decision_regions), config.code_amplitude))


def planted_trialsets(model, identity, config, seed):
    """Texture-noise trials around one identity, without captures.

    Returns ``(pixel_trialset, coefficient_trialset)`` built from the same
    renders, so their rows correspond one to one.
    """
    noise = NoiseSpec("texture", config.map_proportion, seed)
    coef = generate_trialset([identity], config.viewpoints, config.trials_per_viewpoint, noise, model,
                             feature_space="coefficient", keep_images=True)
    n, size = coef.n_trials, coef.images.shape[1]
    pixel = replace(coef, S=coef.images.reshape(n, size * size), feature_dims=1, grid_shape=(size, size),
                    feature_space="pixel")
    return pixel, coef


def planted_trials(model, identity, params, config, seed):
    """:func:`planted_trialsets` with the network's captures and target logit filled in."""
    pixel, coef = planted_trialsets(model, identity, config, seed)
    coef = capture_trialset(params, coef, identity.id_label, layers=("pool",))
    return replace(pixel, L=coef.L, R=coef.R, target=coef.target), coef


def run_planted(config=PlantedConfig(), seed=0, trained=None):
    """Train (unless ``trained`` is given), generate trials and compute every map.

    Pixel maps are per viewpoint. The region-level redundancy checks use
    coefficient-space maps pooled over viewpoints, with each trial's PC scores
    taken from its own viewpoint's PCA.
    """
    start = time.perf_counter()
    if trained is None:
        trained = train_planted(config, seed)
    model, identities, params, history, seeds = trained
    target = identities[target_index(config)]
    trialset, coef = planted_trials(model, target, params, config, seeds["trials"])
    views = trialset.viewpoints()

    diag = dict(zip(views, diagnostic_map(trialset, n_perm=config.n_perm, seed=seeds["null"], per_viewpoint=True)))
    scores, _ = per_viewpoint_pca(trialset, "pool", config.n_pcs, seeds["pca"])
    layer, red = layer_and_redundancy_maps(trialset, scores, config.n_pcs, per_viewpoint=True,
                                           n_perm=config.n_perm, seed=seeds["null"])
    coef_layer, coef_red = layer_and_redundancy_maps(coef, scores, config.n_pcs, per_viewpoint=False,
                                                     n_perm=config.n_perm, seed=seeds["null"])
    unused_layer, threshold = region_peaks(coef_layer, [config.unused_region])
    red_peaks, _ = region_peaks(coef_red, [config.unused_region, *config.decision_regions])

    result = PlantedResult(
        config=config, seeds=seeds, target=target.id_label, params=params, history=history,
        identities=identities, trialset=trialset, coefficient_trialset=coef, diagnostic=diag,
        layer_maps={v: [m for m in layer if m.viewpoint == v] for v in views},
        redundancy_maps={v: [m for m in red if m.viewpoint == v] for v in views},
        coefficient_layer_maps=coef_layer, coefficient_redundancy_maps=coef_red, decision_masks={},
        held_out_accuracy=float(history["test_acc"][-1]) if history["test_acc"] else float("nan"),
        unused_layer_peak=float(unused_layer[0]), unused_redundancy_peak=float(red_peaks[0]),
        decision_redundancy_peak=float(red_peaks[1:].max()), layer_threshold=float(threshold),
    )
    for v in views:
        mask = region_mask(model, target, config.decision_regions, v)
        result.decision_masks[v] = mask
        result.top_decile_in_mask[v] = top_fraction_in_mask(diag[v], mask, config.top_fraction)

    result.coefficient_consistency = viewpoint_consistency(diagnostic_map(coef, n_perm=0, per_viewpoint=True))[1]
    result.seconds = time.perf_counter() - start
    return result
