"""
Tests for the feedback simulator
"""
import math

import numpy as np
import pytest
from scipy.stats import norm

from src.errors import InvalidInputError
from src.models import SubsetAction
from src.simulator import best_arm, mnl_probs, sample_rum_winner, sample_winner
from tests.conftest import random_arms


def test_mnl_probs_lie_on_the_simplex(rng):
    for _ in range(50):
        arms = random_arms(rng, 6, 4)
        theta = 5.0 * rng.standard_normal(4)
        action = SubsetAction.of(rng.choice(6, size=4, replace=False))
        probs = mnl_probs(arms, theta, action)
        assert np.all(probs > 0)
        assert abs(probs.sum() - 1.0) <= 1e-12


def test_mnl_probs_match_softmax_of_utilities():
    arms = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    theta = np.array([1.0, -1.0])
    probs = mnl_probs(arms, theta, SubsetAction.of([0, 1, 2]))
    weights = np.exp([1.0, -1.0, 0.0])
    np.testing.assert_allclose(probs, weights / weights.sum(), rtol=1e-14)


def test_repeated_arms_share_probability():
    arms = np.array([[1.0, 0.0], [0.0, 1.0]])
    probs = mnl_probs(arms, np.array([0.3, 0.1]), SubsetAction.of([0, 1, 0]))
    assert probs[0] == pytest.approx(probs[2], abs=1e-15)


def test_mnl_probs_survive_large_utilities():
    arms = np.array([[1.0, 0.0], [0.0, 1.0]])
    probs = mnl_probs(arms, np.array([800.0, 0.0]), SubsetAction.of([0, 1]))
    assert np.all(np.isfinite(probs))
    assert probs[0] == pytest.approx(1.0)
    assert probs[1] > 0
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_mnl_probs_reject_non_finite_theta():
    arms = np.eye(2)
    with pytest.raises(InvalidInputError):
        mnl_probs(arms, np.array([np.nan, 0.0]), SubsetAction.of([0, 1]))


def test_mnl_probs_reject_out_of_range_action():
    with pytest.raises(InvalidInputError):
        mnl_probs(np.eye(2), np.zeros(2), SubsetAction.of([0, 3]))


def test_sample_winner_frequencies_within_three_sigma(rng):
    probs = np.array([0.5, 0.3, 0.15, 0.05])
    n = 100_000
    counts = np.bincount([sample_winner(probs, rng) for _ in range(n)], minlength=4)
    sigma = np.sqrt(n * probs * (1 - probs))
    assert np.all(np.abs(counts - n * probs) <= 3 * sigma)


def test_sample_winner_degenerate_distribution(rng):
    assert all(sample_winner(np.array([0.0, 1.0, 0.0]), rng) == 1 for _ in range(100))


@pytest.mark.parametrize("probs", [[0.5, 0.4], [1.2, -0.2], []])
def test_sample_winner_rejects_invalid_probs(probs, rng):
    with pytest.raises(InvalidInputError):
        sample_winner(np.array(probs), rng)


def test_rum_winner_with_tiny_noise_is_the_argmax(rng):
    arms = np.array([[1.0, 0.0], [0.0, 1.0], [0.6, 0.6]])
    theta = np.array([1.0, 0.2])
    action = SubsetAction.of([1, 2, 0])
    winners = {sample_rum_winner(arms, theta, 1e-9, action, rng) for _ in range(50)}
    assert winners == {2}


def test_rum_winner_rejects_bad_sigma(rng):
    with pytest.raises(InvalidInputError):
        sample_rum_winner(np.eye(2), np.zeros(2), 0.0, SubsetAction.of([0, 1]), rng)


def test_best_arm(easy_instance):
    assert best_arm(easy_instance) == 0
    assert best_arm(easy_instance, candidates=[1, 2]) == 1


def test_mnl_probs_ignore_a_shared_utility_offset(rng):
    plane = random_arms(rng, 4, 2)
    theta = np.array([1.5, -0.7])
    action = SubsetAction.of([0, 1, 2, 3])
    for offset in (0.0, 3.0, 700.0):
        lifted = np.column_stack([plane, np.full(4, offset)])
        shifted = mnl_probs(lifted, np.append(theta, 1.0), action)
        np.testing.assert_allclose(shifted, mnl_probs(plane, theta, action), atol=1e-12)


@pytest.mark.parametrize("theta, expected", [([2.0, 0.0], norm.cdf(math.sqrt(2.0))), ([0.0, 0.0], 0.5)])
def test_rum_winner_frequency_matches_gaussian_difference(theta, expected, rng):
    arms = np.eye(2)
    action = SubsetAction.of([0, 1])
    n = 100_000
    wins = sum(sample_rum_winner(arms, np.array(theta), 1.0, action, rng) == 0 for _ in range(n))
    sigma = math.sqrt(expected * (1 - expected) / n)
    assert abs(wins / n - expected) <= 3 * sigma
