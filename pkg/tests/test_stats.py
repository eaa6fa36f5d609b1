"""Order-statistics and Wasserstein kernel tests.

Expected distances come from the quadrature oracle in oracles.py,
written from the inverse-CDF definition before any value was frozen.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import grid_wasserstein
from todprune import stats


def mc_sliced_oracle(a, b, num_projections, seed):
    """Monte-Carlo sliced estimate with its own RNG and the equal-length
    sorted-difference identity (valid because |a| = |b| here)."""
    assert a.shape[0] == b.shape[0]
    rng = np.random.default_rng(seed)
    total = 0.0
    chunk = 10_000
    remaining = num_projections
    while remaining > 0:
        take = min(chunk, remaining)
        theta = rng.standard_normal((take, a.shape[1]))
        theta /= np.linalg.norm(theta, axis=1, keepdims=True)
        ap = np.sort(a @ theta.T, axis=0)
        bp = np.sort(b @ theta.T, axis=0)
        total += float(np.abs(ap - bp).mean(axis=0).sum())
        remaining -= take
    return total / num_projections


# ---------------------------------------------------------------- quantile


def test_quantile_known_values():
    assert stats.quantile([3, 1, 2], 2) == 2
    assert stats.quantile([3, 1, 2], 3) == 3
    assert stats.quantile([3, 1, 2], 0) == float("-inf")


def test_quantile_enumerates_sorted_values():
    rng = np.random.default_rng(11)
    for _ in range(50):
        values = rng.normal(size=rng.integers(1, 30))
        ordered = np.sort(values)
        for m in range(1, values.size + 1):
            assert stats.quantile(values, m) == ordered[m - 1]


def test_quantile_keeps_duplicates():
    assert stats.quantile([5.0, 5.0, 1.0], 2) == 5.0


def test_quantile_rank_out_of_range():
    with pytest.raises(ValueError):
        stats.quantile([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        stats.quantile([1.0, 2.0], -1)


def test_quantile_rejects_empty_and_nonfinite():
    with pytest.raises(ValueError):
        stats.quantile([], 0)
    with pytest.raises(ValueError):
        stats.quantile([1.0, float("nan")], 1)


# ---------------------------------------------------------- wasserstein_1d


def test_identical_multisets_are_zero():
    assert stats.wasserstein_1d([5, 1, 5, 1], [1, 5, 1, 5]) == 0.0


def test_two_point_masses():
    assert stats.wasserstein_1d([0, 0, 0], [2, 2]) == 2.0


def test_unit_shift_pair():
    # oracle value computed by grid quadrature, then asserted exactly
    assert grid_wasserstein([0, 1], [1, 2]) == pytest.approx(1.0, abs=1e-9)
    assert stats.wasserstein_1d([0, 1], [1, 2]) == pytest.approx(1.0, abs=1e-12)


def test_singleton_against_pair():
    assert grid_wasserstein([0], [0, 2]) == pytest.approx(1.0, abs=1e-9)
    assert stats.wasserstein_1d([0], [0, 2]) == pytest.approx(1.0, abs=1e-12)


def test_matches_grid_oracle_on_random_pairs():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a = rng.uniform(-10, 10, size=rng.integers(1, 51))
        b = rng.uniform(-10, 10, size=rng.integers(1, 51))
        assert stats.wasserstein_1d(a, b) == pytest.approx(
            grid_wasserstein(a, b), abs=1e-6
        )


def test_symmetry_and_nonnegativity():
    rng = np.random.default_rng(3)
    for _ in range(100):
        a = rng.normal(size=rng.integers(1, 40))
        b = rng.normal(size=rng.integers(1, 40))
        d_ab = stats.wasserstein_1d(a, b)
        assert d_ab >= 0.0
        assert d_ab == stats.wasserstein_1d(b, a)


def test_identity_of_indiscernibles():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a = rng.normal(size=rng.integers(2, 30))
        shuffled = rng.permutation(a)
        assert stats.wasserstein_1d(a, shuffled) == 0.0
        # perturb one element; the distance must become strictly positive
        bumped = a.copy()
        bumped[0] += 0.5
        assert stats.wasserstein_1d(a, bumped) > 0.0


def test_triangle_inequality():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(1, 30))
        a = rng.normal(size=n)
        b = rng.normal(size=n)
        c = rng.normal(size=n)
        lhs = stats.wasserstein_1d(a, c)
        rhs = stats.wasserstein_1d(a, b) + stats.wasserstein_1d(b, c)
        assert lhs <= rhs + 1e-12


def test_translation_invariance():
    rng = np.random.default_rng(6)
    for _ in range(50):
        a = rng.normal(size=rng.integers(1, 30))
        b = rng.normal(size=rng.integers(1, 30))
        shift = float(rng.normal() * 10)
        assert stats.wasserstein_1d(a + shift, b + shift) == pytest.approx(
            stats.wasserstein_1d(a, b), abs=1e-12
        )


def test_positive_scaling():
    rng = np.random.default_rng(8)
    for _ in range(50):
        a = rng.normal(size=rng.integers(1, 30))
        b = rng.normal(size=rng.integers(1, 30))
        s = float(rng.uniform(0.1, 20))
        assert stats.wasserstein_1d(s * a, s * b) == pytest.approx(
            s * stats.wasserstein_1d(a, b), rel=1e-12
        )


def test_equal_length_sorted_difference_identity():
    rng = np.random.default_rng(9)
    for _ in range(50):
        n = int(rng.integers(1, 40))
        a = rng.normal(size=n)
        b = rng.normal(size=n)
        shortcut = float(np.abs(np.sort(a) - np.sort(b)).mean())
        assert stats.wasserstein_1d(a, b) == pytest.approx(shortcut, abs=1e-12)


def test_rejects_empty_and_nonfinite_samples():
    with pytest.raises(ValueError):
        stats.wasserstein_1d([], [1.0])
    with pytest.raises(ValueError):
        stats.wasserstein_1d([1.0], [])
    with pytest.raises(ValueError):
        stats.wasserstein_1d([float("inf")], [1.0])


@settings(max_examples=200, deadline=None)
@given(
    a=st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=20),
    b=st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=20),
)
def test_property_symmetric_nonnegative_oracle(a, b):
    d = stats.wasserstein_1d(a, b)
    assert d >= 0.0
    assert d == stats.wasserstein_1d(b, a)
    assert d == pytest.approx(grid_wasserstein(a, b, max_cells=100_000), abs=1e-4)


@settings(max_examples=100, deadline=None)
@given(
    base=st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=20),
)
def test_property_self_distance_zero(base):
    assert stats.wasserstein_1d(base, list(reversed(base))) == 0.0


# ------------------------------------------------------ sliced_wasserstein


def test_sliced_identical_sets_zero():
    rng = np.random.default_rng(12)
    a = rng.normal(size=(30, 4))
    for seed in (0, 1, 99):
        assert stats.sliced_wasserstein(a, a.copy(), seed=seed) == 0.0


def test_sliced_reduces_to_1d():
    rng = np.random.default_rng(13)
    a = rng.normal(size=(25, 1))
    b = rng.normal(size=(17, 1))
    expected = stats.wasserstein_1d(a[:, 0], b[:, 0])
    for seed in (0, 5, 123):
        assert stats.sliced_wasserstein(a, b, seed=seed) == pytest.approx(
            expected, rel=1e-12
        )


def test_sliced_seed_reproducible():
    rng = np.random.default_rng(14)
    a = rng.normal(size=(40, 3))
    b = rng.normal(size=(35, 3)) + 1.0
    first = stats.sliced_wasserstein(a, b, num_projections=16, seed=42)
    second = stats.sliced_wasserstein(a, b, num_projections=16, seed=42)
    assert first == second
    assert first != stats.sliced_wasserstein(a, b, num_projections=16, seed=43)


def test_sliced_dimension_mismatch():
    with pytest.raises(ValueError):
        stats.sliced_wasserstein(np.zeros((3, 2)), np.zeros((3, 3)))


def test_sliced_offset_gaussians_match_mc_oracle():
    rng = np.random.default_rng(15)
    a = rng.standard_normal((200, 2))
    b = rng.standard_normal((200, 2)) + np.array([3.0, 0.0])
    oracle = mc_sliced_oracle(a, b, num_projections=100_000, seed=777)
    estimate = stats.sliced_wasserstein(a, b, num_projections=4096, seed=0)
    assert estimate == pytest.approx(oracle, rel=0.05)


def test_projection_directions_are_unit_norm():
    theta = stats.projection_directions(5, 64, seed=2)
    assert theta.shape == (64, 5)
    norms = np.linalg.norm(theta, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-12)
    # same seed, same directions
    assert np.array_equal(theta, stats.projection_directions(5, 64, seed=2))
