import warnings
from dataclasses import replace

import numpy as np
import pytest

from deepinfo.analysis import (
    FeatureMap,
    TrialSet,
    capture_trialset,
    decision_redundancy_maps,
    diagnostic_map,
    layer_and_redundancy_maps,
    layer_pc_maps,
    layer_pca,
    noise_robustness_test,
    rdm_pipeline,
    stage_seeds,
    viewpoint_consistency,
)
from deepinfo.analysis.planted import (
    PlantedConfig,
    default_target,
    lattice_codes,
    per_viewpoint_pca,
    region_mask,
    region_peaks,
    target_index,
    top_fraction_in_mask,
)
from deepinfo.errors import DegenerateMapError, DegenerateVariablesError, InvalidConfigError, InvalidDataError
from deepinfo.genmodel import DESK_FACTORS, VIEWPOINTS, build_generative_model, render_coefficients, sample_population
from deepinfo.network import desk_netspec, forward, init_params

import oracles


def synthetic(n_per_view=400, views=(0, 15), f=16, dims=1, seed=0):
    """Trial set with ``R`` driven by feature 3 and a second variable driven by feature 7."""
    rng = np.random.default_rng(seed)
    n = n_per_view * len(views)
    S = rng.standard_normal((n, f * dims))
    R = S[:, 3 * dims] + 0.5 * rng.standard_normal(n)
    side = int(np.sqrt(f))
    ts = TrialSet(S=S, identity=np.zeros(n, dtype=int), viewpoint=np.repeat(views, n_per_view),
                  replicate=np.tile(np.arange(n_per_view), len(views)), channel=np.full(n, "texture"),
                  feature_dims=dims, grid_shape=(side, side), feature_space="coefficient", R=R)
    hidden = np.column_stack([S[:, 7 * dims] + 0.5 * rng.standard_normal(n), R + 0.5 * rng.standard_normal(n)])
    return ts, hidden


# ---------------------------------------------------------------- FeatureMap

def test_feature_map_thresholding_and_labels():
    m = FeatureMap(np.array([0.1, 0.5, 0.0, 0.9]), "layer_pc", (2, 2), threshold=0.4, pc_index=1, viewpoint=-15,
                   degenerate=np.array([False, False, True, False]))
    np.testing.assert_array_equal(m.thresholded(), [0, 0.5, 0, 0.9])
    assert m.grid().shape == (2, 2)
    assert m.label() == "layer_pc_pc2_view-15"
    with pytest.raises(InvalidDataError):
        FeatureMap(np.zeros(5), "diagnostic", (2, 2))
    with pytest.raises(InvalidConfigError):
        FeatureMap(np.zeros(4), "cyan", (2, 2))


# ---------------------------------------------------------------- diagnostic maps

def test_diagnostic_map_finds_the_driving_feature():
    ts, _ = synthetic()
    m = diagnostic_map(ts, n_perm=100, seed=1)
    assert np.argmax(m.values) == 3
    assert np.flatnonzero(m.supra_threshold()).tolist() == [3]
    again = diagnostic_map(ts, n_perm=100, seed=1)
    assert again.values.tobytes() == m.values.tobytes() and again.threshold == m.threshold


def test_diagnostic_map_matches_oracle_for_feature_triplets():
    ts, _ = synthetic(n_per_view=300, f=9, dims=3)
    m = diagnostic_map(ts, n_perm=0, bias_correct=False)
    S = oracles.copula(ts.S)
    R = oracles.copula(ts.R)
    expected = [oracles.gaussian_mi_bits(S[:, 3 * i:3 * i + 3], R) for i in range(9)]
    np.testing.assert_allclose(m.values, expected, atol=1e-9)
    assert m.threshold is None


def test_independent_response_is_rarely_significant():
    hits = 0
    for seed in range(20):
        ts, _ = synthetic(n_per_view=300, seed=seed)
        ts = replace(ts, R=np.random.default_rng(1000 + seed).standard_normal(ts.n_trials))
        hits += diagnostic_map(ts, n_perm=100, seed=seed).supra_threshold().any()
    assert hits <= 3


def test_per_viewpoint_maps_and_warning():
    ts, _ = synthetic(n_per_view=200, views=(-15, 0, 15))
    with pytest.warns(UserWarning, match="recommended"):
        maps = diagnostic_map(ts, n_perm=0, per_viewpoint=True)
    assert [m.viewpoint for m in maps] == [-15, 0, 15]
    assert all(np.argmax(m.values) == 3 for m in maps)


def test_degenerate_features():
    ts, _ = synthetic()
    S = ts.S.copy()
    S[:, 5] = 1.0
    ts = replace(ts, S=S)
    m = diagnostic_map(ts, n_perm=0)
    assert m.degenerate.tolist() == [i == 5 for i in range(16)] and m.values[5] == 0
    with pytest.raises(DegenerateVariablesError):
        diagnostic_map(ts, n_perm=0, strict=True)
    with pytest.raises(InvalidDataError):
        diagnostic_map(replace(ts, R=None))


# ---------------------------------------------------------------- layer and redundancy maps

def test_layer_maps_follow_each_pc():
    ts, hidden = synthetic()
    maps = layer_pc_maps(ts, hidden, n_pcs=2, n_perm=100)
    assert np.argmax(maps[0].values) == 7 and np.argmax(maps[1].values) == 3
    assert maps[0].supra_threshold()[7] and maps[1].supra_threshold()[3]


def test_per_viewpoint_map_count():
    ts, _ = synthetic(n_per_view=100, views=VIEWPOINTS)
    scores = np.random.default_rng(0).standard_normal((ts.n_trials, 6))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        maps = layer_pc_maps(ts, scores, per_viewpoint=True, n_perm=0)
    assert len(maps) == 30
    assert [(m.viewpoint, m.pc_index) for m in maps[:7]] == [(-30, k) for k in range(6)] + [(-15, 0)]


def test_shuffled_scores_fall_below_threshold():
    ts, hidden = synthetic(n_per_view=500)
    rng = np.random.default_rng(3)
    shuffled = hidden.copy()
    for v in ts.viewpoints():
        rows = np.flatnonzero(ts.viewpoint == v)
        shuffled[rows] = hidden[rng.permutation(rows)]
    maps = layer_pc_maps(ts, shuffled, n_pcs=2, n_perm=100, per_viewpoint=True)
    assert sum(m.supra_threshold().sum() for m in maps) <= 1


def test_redundancy_bounded_by_both_informations():
    ts, hidden = synthetic()
    layer, red = layer_and_redundancy_maps(ts, hidden, n_pcs=2, n_perm=0, bias_correct=False)
    diag = diagnostic_map(ts, n_perm=0, bias_correct=False)
    for lm, rm in zip(layer, red):
        assert np.all(rm.values <= np.minimum(lm.values, diag.values) + 1e-6)
    # the second "PC" carries the decision, so feature 3 stays redundant there
    assert np.argmax(red[1].values) == 3
    separate = decision_redundancy_maps(ts, hidden, n_pcs=2, n_perm=0, bias_correct=False)
    assert all(a.values.tobytes() == b.values.tobytes() for a, b in zip(separate, red))


def test_pc_without_decision_information_has_no_redundancy():
    ts, hidden = synthetic(n_per_view=1000)
    # feature 7 drives the first PC but carries nothing about R
    red = decision_redundancy_maps(ts, hidden[:, :1], n_pcs=1, n_perm=0)[0]
    assert np.abs(red.values).max() < 0.01


def test_pc_map_errors():
    ts, hidden = synthetic()
    with pytest.raises(InvalidDataError):
        layer_pc_maps(ts, hidden[:10], n_pcs=1)
    with pytest.raises(InvalidConfigError):
        layer_pc_maps(ts, hidden, n_pcs=3)
    with pytest.raises(InvalidDataError):
        decision_redundancy_maps(replace(ts, R=None), hidden, n_pcs=1)
    with pytest.raises(InvalidDataError):
        layer_pca(ts, "pool")


# ---------------------------------------------------------------- viewpoint consistency

def test_viewpoint_consistency():
    rng = np.random.default_rng(0)
    base = rng.random(500)
    corr, low = viewpoint_consistency({v: base for v in (-15, 0, 15)})
    np.testing.assert_allclose(corr, 1.0)
    assert low == pytest.approx(1.0)
    corr, _ = viewpoint_consistency([rng.random(5000) for _ in range(4)])
    assert np.abs(corr[~np.eye(4, dtype=bool)]).max() < 0.1
    maps = [FeatureMap(base, "diagnostic", (20, 25)), FeatureMap(2 * base + 1, "diagnostic", (20, 25))]
    assert viewpoint_consistency(maps)[1] == pytest.approx(1.0)
    with pytest.raises(DegenerateMapError):
        viewpoint_consistency([base, np.full(500, 0.3)])
    with pytest.raises(InvalidConfigError):
        viewpoint_consistency([base])


# ---------------------------------------------------------------- RDM pipeline

def activations(view_coded, seed=0, n_per_view=40):
    rng = np.random.default_rng(seed)
    n = n_per_view * 5
    views = np.repeat(VIEWPOINTS, n_per_view)
    centres = rng.standard_normal((5, 30)) * 3
    acts = rng.standard_normal((n, 30)) + (centres[views // 15 + 2] if view_coded else 0)
    # shuffled row order: the pipeline must sort by viewpoint, then replicate
    order = rng.permutation(n)
    ts = TrialSet(S=np.zeros((n, 1)), identity=np.zeros(n, dtype=int), viewpoint=views[order],
                  replicate=np.tile(np.arange(n_per_view), 5)[order], channel=np.full(n, "shape"),
                  grid_shape=(1, 1), L={"pool": acts[order]})
    return ts


def test_viewpoint_coded_activations_give_block_structure():
    (pca, r, rows), = rdm_pipeline(activations(True), k=6, rows_per_block=None).values()
    assert r.within_block_mean < r.between_block_mean
    assert r.ratio < 0.5
    assert pca.scores.shape == (200, 6)


def test_viewpoint_constant_activations_are_exchangeable():
    (_, r, _), = rdm_pipeline(activations(False), k=6, rows_per_block=None).values()
    assert 0.9 <= r.ratio <= 1.1


def test_rdm_row_order_and_subsampling():
    ts = activations(True)
    (_, r, rows), = rdm_pipeline(ts, rows_per_block=None).values()
    keys = list(zip(ts.viewpoint[rows], ts.replicate[rows]))
    assert keys == sorted(keys)
    (_, small, rows), = rdm_pipeline(ts, rows_per_block=10, seed=2).values()
    assert small.matrix.shape == (50, 50)
    assert np.bincount(ts.viewpoint[rows] // 15 + 2).tolist() == [10] * 5
    assert np.all(np.diff(ts.viewpoint[rows]) >= 0)


def test_rdm_groups_by_identity_and_channel():
    ts = activations(True)
    ts = replace(ts, identity=np.arange(ts.n_trials) % 2)
    assert sorted(rdm_pipeline(ts, rows_per_block=None)) == [(0, "shape"), (1, "shape")]
    with pytest.raises(InvalidDataError):
        rdm_pipeline(ts, layer="block1")


# ---------------------------------------------------------------- network-dependent analyses

@pytest.fixture(scope="module")
def small_world():
    model = build_generative_model(DESK_FACTORS, n_per_cell=10, seed=0)
    identities = sample_population(model, 3, seed=1)
    params = init_params(desk_netspec(n_classes=3, width=4), 0)
    return model, identities, params


def test_capture_fills_layers_and_target_logit(small_world):
    model, identities, params = small_world
    coeffs = identities[0].coefficients(model)
    images = render_coefficients(np.repeat(coeffs["shape"][None], 6, 0), np.repeat(coeffs["texture"][None], 6, 0))
    ts = TrialSet(S=images.reshape(6, -1), identity=np.zeros(6, dtype=int), viewpoint=np.zeros(6, dtype=int),
                  replicate=np.arange(6), channel=np.full(6, "none"), images=images)
    out = capture_trialset(params, ts, 2, layers=("pool",))
    logits, caps = forward(params, images, capture=True)
    np.testing.assert_array_equal(out.R, logits[:, 2])
    np.testing.assert_array_equal(out.L["pool"], caps["pool"])
    assert out.target == 2 and ts.R is None
    with pytest.raises(InvalidDataError):
        capture_trialset(params, ts, 0, layers=("layer9",))
    with pytest.raises(InvalidDataError):
        capture_trialset(params, replace(ts, images=None), 0)


def test_robustness_zero_noise_matches_clean_accuracy(small_world):
    model, identities, params = small_world
    ident = identities[1]
    coeffs = ident.coefficients(model)
    clean = forward(params, render_coefficients(coeffs["shape"][None], coeffs["texture"][None]))[0]
    report = noise_robustness_test(params, model, ident, "texture", [0.0, 0.8, 4.0], 30, seed=5)
    assert report.accuracy[0] == float(clean.argmax() == 1)
    assert len(report.accepted) == 3 and all(len(a) == 30 for a in report.accepted)
    assert all(0 <= a <= 1 for a in report.accuracy)
    np.testing.assert_allclose(report.target_logits[0], clean[0, 1], atol=1e-12)
    assert report.to_dict()["proportions"] == [0.0, 0.8, 4.0]
    again = noise_robustness_test(params, model, ident, "texture", [0.0, 0.8, 4.0], 30, seed=5)
    assert again.accuracy == report.accuracy
    with pytest.raises(InvalidConfigError):
        noise_robustness_test(params, model, ident, "shape", [-0.5], 10, seed=0)


# ---------------------------------------------------------------- planted-task helpers

def test_lattice_codes_are_well_separated():
    codes = lattice_codes(20, 4, 0.2)
    assert codes.shape == (20, 4) and len({tuple(c) for c in codes}) == 20
    d = np.linalg.norm(codes[:, None] - codes[None], axis=2)
    assert d[~np.eye(20, dtype=bool)].min() >= 0.2 - 1e-12
    np.testing.assert_array_equal(codes, lattice_codes(20, 4, 0.2))


def test_default_target_skips_constant_codes():
    codes = lattice_codes(20, 4, 0.2)
    target = default_target(codes)
    assert np.ptp(codes[target]) > 0 and np.all(np.ptp(codes[:target], axis=1) == 0)
    assert target_index(PlantedConfig()) == target == 2
    assert target_index(PlantedConfig(target=7)) == 7


def test_region_mask_is_local(small_world):
    model, identities, _ = small_world
    mask = region_mask(model, identities[0], [5], 0)
    assert 0 < mask.sum() < 1024 / 8
    both = region_mask(model, identities[0], [5, 6], 0)
    assert np.all(both >= mask) and both.sum() > mask.sum()


def test_ranking_and_peak_helpers():
    m = FeatureMap(np.arange(20, dtype=float), "diagnostic", (4, 5), threshold=3.0)
    mask = np.zeros(20, dtype=bool)
    mask[-2:] = True
    assert top_fraction_in_mask(m, mask, 0.1) == 1.0
    assert top_fraction_in_mask(m, mask, 0.2) == 0.5
    other = FeatureMap(np.arange(20, dtype=float)[::-1], "layer_pc", (4, 5), threshold=5.0)
    peaks, threshold = region_peaks([m, other], [0, 10])
    np.testing.assert_array_equal(peaks, [19, 10])
    assert threshold == 5.0


def test_per_viewpoint_pca_aligns_rows():
    ts = activations(True)
    scores, models = per_viewpoint_pca(ts, "pool", 3, seed=0)
    assert sorted(models) == list(VIEWPOINTS)
    for v, pca in models.items():
        np.testing.assert_allclose(scores[ts.viewpoint == v], pca.scores)


def test_stage_seeds_and_config():
    a, b = stage_seeds(3), stage_seeds(3)
    assert a == b and len(set(a.values())) == len(a)
    assert stage_seeds(4) != a
    config = PlantedConfig(n_identities=8, trials_per_viewpoint=50)
    assert PlantedConfig.from_dict(config.to_dict()) == config
    for bad in ({"unused_region": 5}, {"decision_regions": (16,)}, {"factors": "faces"},
                {"renders_per_identity": 201}, {"target": 20}, {"n_identities": 82}):
        with pytest.raises(InvalidConfigError):
            PlantedConfig(**bad)
