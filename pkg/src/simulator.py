"""
Feedback simulator: MNL winner probabilities and random-utility sampling
"""
import logging
from typing import Optional, Sequence

import numpy as np

from src.errors import InvalidInputError
from src.models import Instance, SubsetAction

logger = logging.getLogger(__name__)

SIMPLEX_TOL = 1e-9
TINY = np.finfo(float).tiny


def mnl_probs(arms: np.ndarray, theta: np.ndarray, action: SubsetAction) -> np.ndarray:
    """Winner distribution over the K slots of ``action`` under the MNL model.

    Entry i is exp<theta, x_i> / sum_j exp<theta, x_j>, evaluated after
    subtracting the largest utility. Weights that underflow are raised to the
    smallest positive float before normalizing, so every entry stays positive.
    """
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise InvalidInputError("theta contains non-finite entries")
    action.check_against(arms.shape[0])

    utilities = arms[list(action.indices)] @ theta
    if not np.all(np.isfinite(utilities)):
        raise InvalidInputError("utilities are not finite")
    weights = np.maximum(np.exp(utilities - utilities.max()), TINY)
    return weights / weights.sum()


def sample_winner(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Draw a local winner index; one uniform draw per call"""
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or probs.size == 0 or np.any(probs < 0):
        raise InvalidInputError("probs must be a non-negative vector")
    if abs(probs.sum() - 1.0) > SIMPLEX_TOL:
        raise InvalidInputError(f"probs sum to {probs.sum():.12g}, not 1")

    cumulative = np.cumsum(probs)
    index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    return min(index, probs.size - 1)


def sample_rum_winner(
    arms: np.ndarray,
    theta: np.ndarray,
    sigma: float,
    action: SubsetAction,
    rng: np.random.Generator,
) -> int:
    """Winner under a Gaussian random-utility model.

    The winner maximizes <theta, x_i> + eta_i with eta_i ~ N(0, sigma^2) i.i.d.;
    ties go to the lowest local index.
    """
    if not sigma > 0:
        raise InvalidInputError("sigma must be positive")
    action.check_against(arms.shape[0])
    utilities = arms[list(action.indices)] @ np.asarray(theta, dtype=float)
    noisy = utilities + sigma * rng.standard_normal(len(action.indices))
    return int(np.argmax(noisy))


def best_arm(instance: Instance, candidates: Optional[Sequence[int]] = None) -> int:
    """Global index of the arm with the largest true utility (lowest index on ties)"""
    utilities = instance.utilities
    if candidates is None:
        return int(np.argmax(utilities))
    candidates = list(candidates)
    return int(candidates[int(np.argmax(utilities[candidates]))])
