"""
Shared fixtures for the test suite
"""
import numpy as np
import pytest

from src.design import add_action, random_action, ridge_init
from src.history import History
from src.models import Instance, RunConfig
from src.simulator import mnl_probs, sample_winner
from src.utils import make_rng


def random_arms(rng, n, d):
    """n random arms inside the unit ball"""
    arms = rng.standard_normal((n, d))
    arms /= np.linalg.norm(arms, axis=1, keepdims=True)
    return arms * rng.uniform(0.3, 1.0, size=(n, 1))


def simulate_history(instance, n_steps, rng):
    """History and design state from uniformly random actions"""
    history = History()
    state = ridge_init(instance.d)
    for _ in range(n_steps):
        action = random_action(instance.N, instance.K, rng)
        winner = sample_winner(mnl_probs(instance.arms, instance.theta_star, action), rng)
        history.record(action, winner)
        add_action(state, instance.arms, action)
    return history, state


@pytest.fixture
def rng():
    return make_rng(1234)


@pytest.fixture
def easy_instance():
    """Three arms in the plane with a utility gap of 2 between the best two"""
    return Instance(
        arms=[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]],
        theta_star=[2.0, 0.0],
        K=2,
        delta=0.05,
    )


@pytest.fixture
def fast_config():
    """Run tuning that lets the easy instance stop within a few thousand steps"""
    return RunConfig(kappa_alpha=1.0, max_steps=50_000)


@pytest.fixture
def orthonormal_instance():
    def build(d=3, K=3, theta=None):
        theta = np.linspace(0.6, 0.1, d) if theta is None else theta
        return Instance(arms=np.eye(d), theta_star=theta, K=K, delta=0.05)

    return build
