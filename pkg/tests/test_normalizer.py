"""Tests for normalizer.py: running moments, clamping and output preservation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtpopart.normalizer import (
    SIGMA_HI,
    SIGMA_LO,
    NormStats,
    StatsPoisoningError,
    TaskStatsVector,
    denormalize,
    normalize,
    preserve_heads,
    preserve_outputs,
    update_stats,
    update_stats_from_rollout,
)

ZERO = NormStats(mu=0.0, nu=0.0, beta=0.5)

# --- update_stats ---


def test_update_stats_hand_example():
    s = update_stats(ZERO, 2.0)

    assert (s.mu, s.nu) == (1.0, 2.0)
    assert s.sigma == 1.0


def test_zero_target_clamps_sigma_to_lower_bound():
    s = update_stats(NormStats(mu=0.0, nu=0.0, beta=0.1), 0.0)

    assert (s.mu, s.nu) == (0.0, 0.0)
    assert s.sigma == SIGMA_LO


def test_huge_target_clamps_sigma_to_upper_bound():
    s = update_stats(ZERO, 1e9)

    assert s.sigma == SIGMA_HI


def test_initial_stats_are_identity():
    s = NormStats()

    assert (s.mu, s.sigma) == (0.0, 1.0)


def test_non_finite_target_rejected():
    with pytest.raises(StatsPoisoningError):
        update_stats(NormStats(), float("nan"))
    with pytest.raises(StatsPoisoningError):
        update_stats(NormStats(), float("inf"))


def test_sigma_never_nan_when_nu_rounds_below_mu_squared():
    s = NormStats(mu=3.0, nu=9.0 - 1e-15)

    assert s.sigma == SIGMA_LO


def test_constant_target_converges_geometrically():
    beta, c = 0.25, 4.0
    s = NormStats(mu=0.0, nu=0.0, beta=beta)
    for t in range(1, 30):
        s = update_stats(s, c)
        assert s.mu == pytest.approx(c * (1 - (1 - beta) ** t), rel=1e-12)
        assert s.nu == pytest.approx(c * c * (1 - (1 - beta) ** t), rel=1e-12)


@given(
    st.floats(min_value=1e-4, max_value=0.99),
    st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=1, max_size=20),
)
def test_sigma_always_within_bounds(beta, targets):
    s = NormStats(beta=beta)
    for g in targets:
        s = update_stats(s, g)
        assert SIGMA_LO <= s.sigma <= SIGMA_HI


# --- update_stats_from_rollout ---


def test_rollout_update_uses_mean_and_mean_square():
    s = update_stats_from_rollout(ZERO, [1.0, 3.0])

    assert s.mu == 1.0
    assert s.nu == 2.5
    assert s.sigma == pytest.approx(math.sqrt(1.5))


@pytest.mark.parametrize("c", [3.0, 0.1, -0.7, 1e5])
def test_constant_rollout_matches_single_update(c):
    stats = NormStats(mu=0.2, nu=0.5, beta=0.5)

    assert update_stats_from_rollout(stats, [c, c, c]) == update_stats(stats, c)


def test_zero_rollout_leaves_zero_moments():
    s = update_stats_from_rollout(ZERO, [0.0])

    assert (s.mu, s.nu) == (0.0, 0.0)


def test_empty_rollout_rejected():
    with pytest.raises(ValueError, match="empty"):
        update_stats_from_rollout(NormStats(), [])


def test_rollout_with_nan_names_position():
    with pytest.raises(StatsPoisoningError, match="position 2"):
        update_stats_from_rollout(NormStats(), [1.0, 2.0, float("nan")])


# --- normalize / denormalize ---


def test_normalize_hand_example():
    s = NormStats(mu=1.0, nu=5.0)  # sigma = 2

    assert normalize(5.0, s) == 2.0


def test_identity_stats_normalize_is_identity():
    assert normalize(-7.25, NormStats()) == -7.25


@given(st.floats(min_value=-1e6, max_value=1e6), st.floats(min_value=-100, max_value=100))
def test_denormalize_inverts_normalize(g, mu):
    s = NormStats(mu=mu, nu=mu * mu + 4.0)

    assert denormalize(normalize(g, s), s) == pytest.approx(g, rel=1e-9, abs=1e-9)


# --- preserve_outputs ---


def test_preserve_outputs_hand_example():
    old = NormStats(mu=1.0, nu=5.0)  # sigma 2
    new = NormStats(mu=2.0, nu=20.0)  # sigma 4

    w, b = preserve_outputs(np.array([1.0]), 0.5, old, new)

    assert w.tolist() == [0.5]
    assert b == 0.0
    for x in (-3.0, 0.0, 2.5):
        assert new.sigma * (w[0] * x + b) + new.mu == pytest.approx(2 * x + 2)


def test_preserve_outputs_identity_when_unchanged():
    s = NormStats(mu=3.0, nu=25.0)
    w = np.array([0.3, -0.2])

    w2, b2 = preserve_outputs(w, 0.7, s, s)

    assert w2 is w
    assert b2 == 0.7


def test_preserve_outputs_zero_head_stays_zero():
    w, b = preserve_outputs(np.zeros(3), 0.0, NormStats(nu=4.0), NormStats(nu=9.0))

    assert not w.any()
    assert b == 0.0


@settings(max_examples=1000)
@given(
    st.integers(min_value=0, max_value=2**32 - 1),
    st.floats(min_value=-1e3, max_value=1e3),
    st.floats(min_value=1e-2, max_value=1e3),
    st.floats(min_value=-1e3, max_value=1e3),
    st.floats(min_value=1e-2, max_value=1e3),
)
def test_preserve_outputs_keeps_unnormalized_values(seed, mu, sigma, mu2, sigma2):
    rng = np.random.default_rng(seed)
    old = NormStats(mu=mu, nu=mu * mu + sigma * sigma)
    new = NormStats(mu=mu2, nu=mu2 * mu2 + sigma2 * sigma2)
    w = rng.normal(size=5)
    b = float(rng.normal())
    features = rng.normal(size=(4, 5))

    w2, b2 = preserve_outputs(w, b, old, new)

    before = old.sigma * (features @ w + b) + old.mu
    after = new.sigma * (features @ w2 + b2) + new.mu
    scale = np.maximum(np.abs(before), 1.0)
    assert np.all(np.abs(before - after) / scale < 1e-9)


# --- TaskStatsVector / preserve_heads ---


def test_task_stats_vector_initial_and_replace():
    vec = TaskStatsVector.initial(3, beta=0.1)
    moved = vec.replace(1, NormStats(mu=2.0, nu=8.0, beta=0.1))

    assert len(moved) == 3
    assert moved[0] == vec[0]
    assert moved.mus().tolist() == [0.0, 2.0, 0.0]
    assert moved.sigmas().tolist() == [1.0, 2.0, 1.0]


def test_task_stats_vector_unknown_task():
    with pytest.raises(IndexError):
        TaskStatsVector.initial(2)[2]


def test_preserve_heads_touches_only_changed_rows():
    old = TaskStatsVector.initial(3)
    new = old.replace(2, NormStats(mu=1.0, nu=5.0))
    w = np.arange(6, dtype=float).reshape(3, 2)
    b = np.array([0.1, 0.2, 0.3])

    w2, b2 = preserve_heads(w, b, old, new)

    assert np.array_equal(w2[:2], w[:2])
    assert np.array_equal(b2[:2], b[:2])
    assert np.allclose(w2[2], w[2] / 2.0)
    assert b2[2] == pytest.approx((0.3 + 0.0 - 1.0) / 2.0)
    assert np.array_equal(w, np.arange(6, dtype=float).reshape(3, 2))


def test_preserve_heads_rejects_mismatched_head_count():
    with pytest.raises(ValueError, match="head count"):
        preserve_heads(np.zeros((2, 3)), np.zeros(2), TaskStatsVector.initial(3), TaskStatsVector.initial(3))
