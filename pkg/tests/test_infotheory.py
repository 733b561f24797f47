import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from deepinfo.errors import (
    DegenerateVariablesError,
    InsufficientPermutationsError,
    InsufficientSamplesError,
    InvalidDataError,
)
from deepinfo.infotheory import (
    CopulaMatrix,
    co_information,
    copula_transform,
    feature_co_information,
    feature_mi,
    gaussian_mi,
    gcmi,
    permutation_null,
)
from deepinfo.infotheory.copula import _average_ranks_numba, _average_ranks_numpy

import oracles


def correlated(rho, n, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    y = rho * x + np.sqrt(1 - rho ** 2) * rng.standard_normal(n)
    return x, y


# ---------------------------------------------------------------- copula transform

def test_copula_three_values_map_to_quartiles():
    # norm.ppf(0.75) = 0.6744897501960817
    out = copula_transform([3.2, -1.0, 0.5]).data[:, 0]
    np.testing.assert_allclose(out, [0.6744897501960817, -0.6744897501960817, 0.0], atol=1e-12)


def test_constant_column_maps_to_zero():
    np.testing.assert_array_equal(copula_transform([5.0, 5.0, 5.0]).data, np.zeros((3, 1)))


def test_sorted_column_is_increasing_and_symmetric():
    out = copula_transform(np.arange(9.0)).data[:, 0]
    assert np.all(np.diff(out) > 0)
    np.testing.assert_allclose(out, -out[::-1], atol=1e-12)


def test_copula_matches_rank_oracle_with_ties():
    rng = np.random.default_rng(3)
    x = np.round(rng.standard_normal((200, 4)), 1)
    np.testing.assert_allclose(copula_transform(x).data, oracles.copula(x), atol=1e-12)


def test_copula_errors():
    with pytest.raises(InsufficientSamplesError):
        copula_transform([1.0, 2.0])
    with pytest.raises(InvalidDataError):
        copula_transform([1.0, np.nan, 2.0])


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(3, 60), st.integers(1, 3)),
              elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_copula_columns_are_fixed_quantiles(x):
    out = copula_transform(x).data
    n = x.shape[0]
    assert np.all(np.isfinite(out))
    for j in range(x.shape[1]):
        if len(np.unique(x[:, j])) == n:
            expected = oracles.copula(np.arange(n))[:, 0]
            np.testing.assert_allclose(np.sort(out[:, j]), expected, atol=1e-12)
            assert abs(out[:, j].mean()) < 1e-9


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(3, 80), st.integers(1, 3)),
              elements=st.floats(-100, 100, allow_nan=False).map(lambda v: round(v, 1))))
def test_rank_kernels_agree(x):
    np.testing.assert_array_equal(_average_ranks_numba(np.ascontiguousarray(x)), _average_ranks_numpy(x))


# ---------------------------------------------------------------- Gaussian MI

@pytest.mark.parametrize("bias_correct", [False, True])
def test_gaussian_mi_matches_slogdet_oracle(bias_correct):
    rng = np.random.default_rng(1)
    x = rng.standard_normal((400, 3))
    y = x[:, :2] @ rng.standard_normal((2, 2)) + rng.standard_normal((400, 2))
    got = gaussian_mi(x, y, bias_correct).bits
    assert got == pytest.approx(oracles.gaussian_mi_bits(x, y, bias_correct), abs=1e-9)


def test_independent_samples_have_near_zero_mi():
    rng = np.random.default_rng(2)
    assert abs(gcmi(rng.standard_normal(10_000), rng.standard_normal(10_000)).bits) < 0.01


def test_correlated_gaussian_matches_analytic_value():
    x, y = correlated(0.8, 10_000, 0)
    assert gcmi(x, y).bits == pytest.approx(oracles.analytic_mi_bits(0.8), abs=0.02)


def test_identical_variables_are_degenerate():
    x = np.random.default_rng(0).standard_normal(100)
    c = copula_transform(x)
    with pytest.raises(DegenerateVariablesError):
        gaussian_mi(c, c)


def test_length_mismatch():
    with pytest.raises(InvalidDataError):
        gaussian_mi(np.zeros((10, 1)), np.zeros((11, 1)))


def test_estimate_fields():
    x, y = correlated(0.5, 300, 4)
    est = gcmi(np.column_stack([x, x ** 3 + y]), y)
    assert (est.n_samples, est.dims_x, est.dims_y, est.bias_corrected) == (300, 2, 1, True)
    assert float(est) == est.bits


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(-0.95, 0.95))
def test_mi_is_symmetric(seed, rho):
    x, y = correlated(rho, 200, seed)
    cx, cy = copula_transform(x), copula_transform(y)
    assert abs(gaussian_mi(cx, cy, False).bits - gaussian_mi(cy, cx, False).bits) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([np.exp, np.arctan, lambda v: v ** 3 + v, np.sinh]))
def test_mi_invariant_to_monotone_maps(seed, monotone):
    x, y = correlated(0.6, 300, seed)
    assert abs(gcmi(monotone(x), y, False).bits - gcmi(x, y, False).bits) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_uncorrected_mi_is_nonnegative(seed):
    rng = np.random.default_rng(seed)
    assert gcmi(rng.standard_normal((50, 2)), rng.standard_normal(50), False).bits >= 0.0


def test_error_shrinks_with_sample_size():
    target = oracles.analytic_mi_bits(0.5)
    medians = []
    for n in (500, 5_000, 50_000):
        errors = [abs(gcmi(*correlated(0.5, n, seed)).bits - target) for seed in range(20)]
        medians.append(np.median(errors))
    assert medians[0] >= medians[1] >= medians[2]


def test_feature_mi_matches_per_feature_oracle():
    rng = np.random.default_rng(5)
    s = copula_transform(rng.standard_normal((300, 6))).data
    r = copula_transform(s[:, 2] + rng.standard_normal(300)).data
    bits, ok = feature_mi(s, r, feature_dims=2, bias_correct=False)
    assert ok.all()
    for k in range(3):
        assert bits[k] == pytest.approx(oracles.gaussian_mi_bits(s[:, 2 * k:2 * k + 2], r), abs=1e-9)


def test_feature_mi_flags_constant_features():
    rng = np.random.default_rng(6)
    s = copula_transform(np.column_stack([rng.standard_normal(100), np.ones(100)])).data
    bits, ok = feature_mi(s, copula_transform(rng.standard_normal(100)).data)
    assert ok.tolist() == [True, False]
    assert np.isnan(bits[1])


# ---------------------------------------------------------------- co-information

def _noisy_copies(n, seed, jitter=None):
    rng = np.random.default_rng(seed)
    s = rng.standard_normal(n)
    r = s + rng.standard_normal(n)
    l = r + jitter * rng.standard_normal(n) if jitter else s + rng.standard_normal(n)
    return s, l, r


def test_two_noisy_copies_give_analytic_redundancy():
    # 1 - log2(3)/2 from the covariance determinants
    s, l, r = _noisy_copies(20_000, 0)
    red = co_information(copula_transform(s), copula_transform(l), copula_transform(r))
    assert red.bits == pytest.approx(1 - 0.5 * np.log2(3), abs=0.03)


def test_redundancy_of_independent_source_is_zero():
    rng = np.random.default_rng(1)
    s = rng.standard_normal(20_000)
    _, l, r = _noisy_copies(20_000, 2)
    assert abs(co_information(*(copula_transform(v) for v in (s, l, r))).bits) < 0.02


def test_duplicated_channel_redundancy_equals_mi():
    s, l, r = _noisy_copies(20_000, 3, jitter=1e-3)
    red = co_information(*(copula_transform(v) for v in (s, l, r)))
    assert red.bits == pytest.approx(0.5, abs=0.03)
    assert red.bits == pytest.approx(red.mi_sr, abs=0.03)


def test_redundancy_is_sum_of_components():
    s, l, r = _noisy_copies(500, 4)
    red = co_information(*(copula_transform(v) for v in (s, l, r)))
    c = red.component_mi
    assert red.bits == c["MI(S;L)"] + c["MI(S;R)"] - c["MI(S;L,R)"]


def test_co_information_names_degenerate_term():
    s, l, _ = _noisy_copies(200, 5)
    cl = copula_transform(l)
    with pytest.raises(DegenerateVariablesError) as err:
        co_information(cl, cl, copula_transform(s))
    assert err.value.details["term"] == "MI(S;L)"


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_chain_and_redundancy_bounds(seed):
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((200, 3)) @ rng.standard_normal((3, 3))
    s, l, r = (copula_transform(raw[:, i]) for i in range(3))
    red = co_information(s, l, r, bias_correct=False)
    assert red.mi_slr >= max(red.mi_sl, red.mi_sr) - 1e-6
    assert red.bits <= min(red.mi_sl, red.mi_sr) + 1e-6


def test_feature_co_information_matches_scalar_version():
    rng = np.random.default_rng(7)
    s = copula_transform(rng.standard_normal((400, 3))).data
    l = copula_transform(s[:, 0] + rng.standard_normal(400)).data
    r = copula_transform(s[:, 0] + s[:, 1] + rng.standard_normal(400)).data
    red, *_, ok = feature_co_information(s, l, r)
    assert ok.all()
    for k in range(3):
        assert red[k] == pytest.approx(co_information(s[:, k], l, r).bits, abs=1e-12)


# ---------------------------------------------------------------- permutation null

def test_null_is_deterministic_and_sorted():
    rng = np.random.default_rng(0)
    s, y = rng.standard_normal((300, 8)), rng.standard_normal(300)
    a = permutation_null(s, y, 100, seed=11)
    b = permutation_null(s, y, 100, seed=11)
    np.testing.assert_array_equal(a.null_max_distribution, b.null_max_distribution)
    assert np.all(np.diff(a.null_max_distribution) >= 0)
    assert a.percentile_95 == pytest.approx(np.percentile(a.null_max_distribution, 95))
    assert a.percentile(95) == a.percentile_95


def test_null_requires_enough_permutations():
    with pytest.raises(InsufficientPermutationsError):
        permutation_null(np.zeros((10, 2)), np.zeros(10), 99)


def test_null_maximum_matches_brute_force():
    rng = np.random.default_rng(1)
    s, y = rng.standard_normal((120, 5)), rng.standard_normal(120)
    null = permutation_null(s, y, 100, seed=4)
    cs, cy = oracles.copula(s), oracles.copula(y)
    perm_rng = np.random.default_rng(4)
    maxima = []
    for _ in range(100):
        yp = cy[perm_rng.permutation(120)]
        maxima.append(max(oracles.gaussian_mi_bits(cs[:, k], yp, True) for k in range(5)))
    np.testing.assert_allclose(null.null_max_distribution, np.sort(maxima), atol=1e-9)


def test_planted_signal_exceeds_threshold():
    rng = np.random.default_rng(2)
    s = rng.standard_normal((500, 16))
    y = s[:, 0].copy()
    null = permutation_null(s, y, 200, seed=0)
    bits, _ = feature_mi(copula_transform(s).data, copula_transform(y + 0.5 * rng.standard_normal(500)).data)
    assert bits[0] > 10 * null.percentile_95


def test_copula_matrix_inputs_are_used_as_is():
    rng = np.random.default_rng(3)
    c = copula_transform(rng.standard_normal((100, 2)))
    y = copula_transform(rng.standard_normal(100))
    assert isinstance(c, CopulaMatrix)
    a = permutation_null(c, y, 100, seed=1).null_max_distribution
    b = permutation_null(c.data, y.data, 100, seed=1).null_max_distribution
    np.testing.assert_allclose(a, b, atol=1e-12)
