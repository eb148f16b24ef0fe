"""
Tests for the lower-bound construction, divergences, bound values and the kappa diagnostic
"""
import math

import numpy as np
import pytest
from scipy.linalg import eigh

from src.errors import InvalidInputError
from src.history import History
from src.models import Instance, SubsetAction
from src.simulator import best_arm, mnl_probs
from src.theory import (
    empirical_kappa,
    f_alpha,
    f_alpha_maximizer,
    kl_categorical,
    kl_mnl_subset,
    lower_bound_value,
    make_perturbation,
    upper_bound_fixed_point,
    upper_bound_value,
)
from src.utils import make_rng
from tests.conftest import random_arms, simulate_history


# f_alpha

def test_f_alpha_vanishes_at_zero():
    for alpha in (0.01, 0.5, 3.0):
        assert f_alpha(alpha, 0.0) == 0.0


@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
def test_f_alpha_derivative_vanishes_at_maximizer(alpha):
    x_star = f_alpha_maximizer(alpha)
    h = 1e-6
    derivative = (f_alpha(alpha, x_star + h) - f_alpha(alpha, x_star - h)) / (2 * h)
    assert abs(derivative) <= 1e-6


@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
def test_f_alpha_rises_then_falls(alpha):
    x_star = f_alpha_maximizer(alpha)
    grid = np.linspace(0.0, 1.0, 1001)
    values = np.array([f_alpha(alpha, x) for x in grid])
    rising = values[grid <= x_star]
    falling = values[grid >= x_star]
    assert np.all(np.diff(rising) >= -1e-15)
    assert np.all(np.diff(falling) <= 1e-15)


@pytest.mark.parametrize("alpha, x", [(0.0, 0.5), (-1.0, 0.5), (1.0, -0.1), (1.0, 1.5)])
def test_f_alpha_domain(alpha, x):
    with pytest.raises(InvalidInputError):
        f_alpha(alpha, x)


# KL divergences

def test_kl_of_identical_distributions_is_zero():
    p = np.array([0.2, 0.3, 0.5])
    assert kl_categorical(p, p) == 0.0


def test_kl_point_mass_against_uniform():
    assert kl_categorical([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)


def test_kl_matches_extended_precision_sum(rng):
    for _ in range(200):
        p = rng.dirichlet(np.ones(5))
        q = rng.dirichlet(np.ones(5))
        p_long, q_long = p.astype(np.longdouble), q.astype(np.longdouble)
        oracle = float(np.sum(p_long * np.log(p_long / q_long)))
        assert abs(kl_categorical(p, q) - oracle) <= 1e-12
        assert kl_categorical(p, q) >= 0.0


def test_kl_rejects_support_violation():
    with pytest.raises(InvalidInputError):
        kl_categorical([0.5, 0.5], [1.0, 0.0])
    with pytest.raises(InvalidInputError):
        kl_categorical([0.5, 0.5], [0.2, 0.3, 0.5])


def test_kl_mnl_subset_of_equal_parameters_is_zero(easy_instance):
    action = SubsetAction.of([0, 1])
    assert kl_mnl_subset(easy_instance.arms, action, easy_instance.theta_star, easy_instance.theta_star) == 0.0


def _random_full_rank_instance(rng):
    d = int(rng.integers(2, 6))
    K = int(rng.integers(2, 5))
    arms = random_arms(rng, d, d)
    while np.linalg.cond(arms) > 100:
        arms = random_arms(rng, d, d)
    return Instance(arms=arms, theta_star=rng.standard_normal(d), K=K, delta=0.05)


def test_kl_closed_form_when_the_promoted_arm_is_played(rng):
    for _ in range(100):
        instance = _random_full_rank_instance(rng)
        best = best_arm(instance)
        j = int(rng.choice([i for i in range(instance.N) if i != best]))
        report = make_perturbation(instance, j, float(rng.uniform(0.01, 0.5)))

        # one slot holds j and one holds some other arm; the rest are free
        other = int(rng.choice([i for i in range(instance.N) if i != j]))
        indices = [j, other] + rng.integers(0, instance.N, size=instance.K - 2).tolist()
        rng.shuffle(indices)
        action = SubsetAction.of(indices)
        probs = mnl_probs(instance.arms, instance.theta_star, action)
        mass = float(probs[np.array(action.indices) == j].sum())

        kl = kl_mnl_subset(instance.arms, action, instance.theta_star, report.theta_j)
        assert abs(kl - f_alpha(report.gap + report.epsilon, mass)) <= 1e-10


def test_kl_vanishes_when_the_promoted_arm_is_absent(rng):
    checked = 0
    while checked < 100:
        instance = _random_full_rank_instance(rng)
        if instance.N < 3:
            continue
        best = best_arm(instance)
        j = int(rng.choice([i for i in range(instance.N) if i != best]))
        report = make_perturbation(instance, j, 0.2)
        others = [i for i in range(instance.N) if i != j]
        indices = rng.choice(others, size=instance.K)
        if len(set(indices.tolist())) < 2:
            continue
        kl = kl_mnl_subset(instance.arms, SubsetAction.of(indices), instance.theta_star, report.theta_j)
        assert abs(kl) <= 1e-10
        checked += 1


# Perturbations

def test_perturbation_of_orthonormal_arms(orthonormal_instance):
    instance = orthonormal_instance(d=3, theta=[0.6, 0.4, 0.1])
    report = make_perturbation(instance, 2, 0.1)
    assert report.best == 0
    assert report.gap == pytest.approx(0.5)
    np.testing.assert_allclose(report.delta_j, [0.0, 0.0, -0.6], atol=1e-10)
    np.testing.assert_allclose(report.theta_j, [0.6, 0.4, 0.7], atol=1e-10)


def test_perturbation_constraints_hold(rng):
    for _ in range(50):
        instance = _random_full_rank_instance(rng)
        best = best_arm(instance)
        for j in range(instance.N):
            if j == best:
                continue
            report = make_perturbation(instance, j, 0.05)
            assert abs(report.orthogonality_residual) <= 1e-8
            assert abs(report.gap_residual) <= 1e-8
            for i in range(instance.N):
                if i != j:
                    assert abs(instance.arms[i] @ (report.theta_j - instance.theta_star)) <= 1e-10
            lead = instance.arms[j] @ report.theta_j - instance.arms[best] @ report.theta_j
            assert abs(lead - 0.05) <= 1e-8


def test_perturbation_preconditions(easy_instance, orthonormal_instance):
    with pytest.raises(InvalidInputError):
        make_perturbation(easy_instance, 1, 0.1)  # N != d
    dependent = Instance(
        arms=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5, 0.5, 0.0]],
        theta_star=[1.0, 0.5, 0.0],
        K=2,
        delta=0.05,
    )
    with pytest.raises(InvalidInputError):
        make_perturbation(dependent, 1, 0.1)
    instance = orthonormal_instance(d=3)
    with pytest.raises(InvalidInputError):
        make_perturbation(instance, 0, 0.1)  # the best arm itself
    with pytest.raises(InvalidInputError):
        make_perturbation(instance, 1, 0.0)


# Bound values

def test_lower_bound_matches_hand_computation():
    instance = Instance(arms=np.eye(2), theta_star=[0.5, 0.0], K=2, delta=0.05)
    report = lower_bound_value(instance, epsilon=0.5, delta=0.05)
    assert report.total == pytest.approx(0.39001, abs=1e-4)
    assert report.per_j_terms == pytest.approx([1.0])
    assert report.arms == [1]
    assert any("K=2" in w for w in report.warnings)


def test_lower_bound_scales_with_inverse_square_gap(orthonormal_instance):
    wide = lower_bound_value(orthonormal_instance(d=3, theta=[0.8, 0.4, 0.2]), epsilon=0.2)
    narrow = lower_bound_value(orthonormal_instance(d=3, theta=[0.4, 0.2, 0.1]), epsilon=0.1)
    assert narrow.total == pytest.approx(4 * wide.total, rel=1e-12)


def test_lower_bound_grows_with_k(orthonormal_instance):
    totals = [
        lower_bound_value(orthonormal_instance(d=3, K=K), epsilon=0.1).total for K in range(2, 21)
    ]
    assert all(b > a for a, b in zip(totals, totals[1:]))


def test_lower_bound_flags_violated_hypotheses(orthonormal_instance):
    report = lower_bound_value(orthonormal_instance(d=3, K=12, theta=[2.0, 0.0, 0.5]), epsilon=0.1)
    assert not any("K=" in w for w in report.warnings)
    assert any("exceeds 1" in w for w in report.warnings)


def test_lower_bound_requires_square_full_rank(easy_instance):
    with pytest.raises(InvalidInputError):
        lower_bound_value(easy_instance, epsilon=0.1)


UPPER = dict(d=4, K=3, N=5, delta=0.05, kappa_alpha=0.5, delta_min=0.1, tau_guess=1000.0)


def test_upper_bound_dimension_ratio():
    ratio = upper_bound_value(**{**UPPER, "d": 8}) / upper_bound_value(**UPPER)
    assert 2.0 < ratio < 4.0


def test_upper_bound_halves_when_k_doubles():
    assert upper_bound_value(**{**UPPER, "K": 6}) == pytest.approx(upper_bound_value(**UPPER) / 2, rel=1e-14)


def test_upper_bound_quadruples_when_kappa_halves():
    assert upper_bound_value(**{**UPPER, "kappa_alpha": 0.25}) == pytest.approx(
        4 * upper_bound_value(**UPPER), rel=1e-14
    )


def test_upper_bound_rejects_non_positive_inputs():
    with pytest.raises(InvalidInputError):
        upper_bound_value(**{**UPPER, "delta_min": 0.0})


def test_upper_bound_fixed_point_is_self_consistent():
    report = upper_bound_fixed_point(**UPPER)
    assert report.converged
    assert report.iterations <= 100
    rebound = upper_bound_value(**{**UPPER, "tau_guess": report.value})
    assert rebound == pytest.approx(report.value, rel=1e-5)


# Kappa diagnostic

def test_kappa_is_positive_near_zero_utilities(rng):
    # a third arm off the diagonal so that pair differences span the plane
    arms = [[1.0, 0.0], [0.0, 1.0], [0.6, 0.6]]
    instance = Instance(arms=arms, theta_star=[1e-9, 0.0], K=2, delta=0.05)
    history = History()
    for _ in range(10):
        for pair in ([0, 1], [1, 0], [0, 2], [2, 0], [1, 2], [2, 1]):
            history.record(SubsetAction.of(pair), 0)
    kappa = empirical_kappa(instance, history, alpha_ball=0.5, n_theta_samples=10, rng=rng)
    assert 0.0 < kappa <= 1.0 + 1e-8


def test_kappa_at_theta_star_matches_direct_computation(rng):
    arms = random_arms(rng, 4, 3)
    instance = Instance(arms=arms, theta_star=[0.5, -0.3, 0.2], K=3, delta=0.05)
    history, _ = simulate_history(instance, 30, rng)

    ridge = 1e-4
    F = np.zeros((3, 3))
    V = ridge * np.eye(3)
    for sample in history.samples:
        X = arms[list(sample.action.indices)].T
        mu = mnl_probs(arms, instance.theta_star, sample.action)
        F += X @ (np.diag(mu) - np.outer(mu, mu)) @ X.T
        V += X @ X.T
    expected = eigh(F, V, eigvals_only=True)[0]

    kappa = empirical_kappa(instance, history, alpha_ball=0.0, n_theta_samples=3, ridge=ridge, rng=rng)
    assert kappa == pytest.approx(expected, abs=1e-8)


def test_kappa_never_exceeds_one():
    rng = make_rng(99)
    for _ in range(10):
        arms = random_arms(rng, 4, 2)
        instance = Instance(arms=arms, theta_star=rng.standard_normal(2), K=2, delta=0.05)
        history, _ = simulate_history(instance, 15, rng)
        kappa = empirical_kappa(instance, history, alpha_ball=1.0, n_theta_samples=5, rng=rng)
        assert kappa <= 1.0 + 1e-8


def test_kappa_needs_data(easy_instance):
    with pytest.raises(InvalidInputError):
        empirical_kappa(easy_instance, History(), alpha_ball=0.1, n_theta_samples=2)
