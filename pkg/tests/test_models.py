"""
Tests for the data models and their invariants
"""
import numpy as np
import pytest
from pydantic import ValidationError

from src.errors import InvalidInputError
from src.models import (
    Estimate,
    ExperimentSpec,
    FeedbackSample,
    GapSet,
    Instance,
    RunConfig,
    RunResult,
    SubsetAction,
)


def test_instance_exposes_shape_and_utilities(easy_instance):
    assert easy_instance.N == 3
    assert easy_instance.d == 2
    np.testing.assert_allclose(easy_instance.utilities, [2.0, 0.0, -2.0])


def test_instance_arrays_are_read_only(easy_instance):
    with pytest.raises(ValueError):
        easy_instance.arms[0, 0] = 0.5


def test_instance_rejects_long_arm():
    with pytest.raises(ValidationError, match="norm"):
        Instance(arms=[[1.1, 0.0], [0.0, 1.0]], theta_star=[1.0, 0.0], K=2, delta=0.05)


def test_instance_rejects_tied_best_arm():
    with pytest.raises(ValidationError, match="unique"):
        Instance(arms=[[1.0, 0.0], [1.0, 0.0]], theta_star=[1.0, 0.0], K=2, delta=0.05)


def test_instance_rejects_dimension_mismatch():
    with pytest.raises(ValidationError):
        Instance(arms=[[1.0, 0.0], [0.0, 1.0]], theta_star=[1.0, 0.0, 0.0], K=2, delta=0.05)


@pytest.mark.parametrize("delta", [0.0, 1.0])
def test_instance_rejects_delta_outside_unit_interval(delta):
    with pytest.raises(ValidationError):
        Instance(arms=[[1.0, 0.0], [0.0, 1.0]], theta_star=[1.0, 0.0], K=2, delta=delta)


def test_instance_json_keeps_values(easy_instance):
    restored = Instance.model_validate_json(easy_instance.model_dump_json())
    np.testing.assert_array_equal(restored.arms, easy_instance.arms)
    np.testing.assert_array_equal(restored.theta_star, easy_instance.theta_star)
    assert restored.K == easy_instance.K


def test_subset_action_rejects_identical_slots():
    with pytest.raises(ValidationError):
        SubsetAction.of([2, 2, 2])


def test_subset_action_allows_repeats():
    action = SubsetAction.of(np.array([0, 0, 1]))
    assert action.indices == (0, 0, 1)
    assert action.K == 3


def test_subset_action_checks_range():
    with pytest.raises(InvalidInputError):
        SubsetAction.of([0, 5]).check_against(3)
    with pytest.raises(InvalidInputError):
        SubsetAction.of([0, 1]).check_against(3, K=3)


def test_feedback_sample_winner_must_be_a_slot():
    with pytest.raises(ValidationError):
        FeedbackSample(action=SubsetAction.of([0, 1]), winner=2)


def test_gap_set_over_builds_all_pairs():
    gaps = GapSet.over([3, 0, 1])
    assert gaps.active == (0, 1, 3)
    assert gaps.pairs == ((0, 1), (0, 3), (1, 3))


def test_gap_set_vectors(easy_instance):
    vectors = GapSet.over([0, 2]).vectors(easy_instance.arms)
    np.testing.assert_allclose(vectors, [[2.0, 0.0]])


@pytest.mark.parametrize(
    "pairs",
    [((0, 0),), ((0, 4),), ((0, 1), (1, 0))],
)
def test_gap_set_rejects_bad_pairs(pairs):
    with pytest.raises(ValidationError):
        GapSet(active=(0, 1, 2), pairs=pairs)


def test_estimate_converged_requires_small_gradient():
    with pytest.raises(ValidationError):
        Estimate(theta_hat=[0.0], grad_norm=1.0, iterations=3, converged=True, tol=1e-8)


def test_run_config_budget_must_cover_exploration():
    with pytest.raises(ValidationError):
        RunConfig(explore_steps=10, max_steps=5)


def test_run_config_forbids_unknown_fields():
    with pytest.raises(ValidationError):
        RunConfig(explore=5)


def test_run_result_checks_pull_budget():
    with pytest.raises(ValidationError, match="K\\*tau"):
        RunResult(strategy="static", returned_arm=0, tau=2, K=2, pull_counts=[1, 1], correct=True)


def test_run_result_trajectory_length():
    with pytest.raises(ValidationError):
        RunResult(
            strategy="static", returned_arm=0, tau=1, K=2, pull_counts=[1, 1],
            correct=True, trajectory=[0, 0],
        )


def test_experiment_spec_defaults_and_validation():
    spec = ExperimentSpec(kind="sweep-d")
    assert spec.d_values == [4, 6, 8]
    assert spec.strategies == ["random", "static", "adaptive"]
    with pytest.raises(ValidationError):
        ExperimentSpec(kind="sweep-d", d_values=[])
    with pytest.raises(ValidationError):
        ExperimentSpec(kind="sweep-d", n_seeds=0)
    with pytest.raises(ValidationError):
        ExperimentSpec(kind="sweep-K", k_values=[1, 2])


def test_experiment_spec_run_config_merges_overrides():
    spec = ExperimentSpec(kind="single", run_overrides={"max_steps": 100})
    cfg = spec.run_config(record_trajectory=True)
    assert cfg.max_steps == 100
    assert cfg.record_trajectory
