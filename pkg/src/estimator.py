"""
Regularized maximum-likelihood estimation from winner-only MNL feedback
"""
import logging
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.special import softmax

from config import Config
from src.errors import InvalidInputError
from src.history import History
from src.models import Estimate

logger = logging.getLogger(__name__)

ARMIJO_C = 1e-4
BACKTRACK = 0.5
MIN_STEP = 1e-12
# relative slack for accepting a Newton step whose gain is below float resolution
FP_SLACK = 1e-14
# predicted gains below this fraction of |value| cannot be resolved by the Armijo test
FLAT_GAIN = 1e-10


class _Objective:
    """Regularized log-likelihood on grouped statistics"""

    def __init__(self, history: History, arms: np.ndarray, reg_lambda: float):
        if len(history) == 0:
            raise InvalidInputError("history is empty")
        if reg_lambda < 0:
            raise InvalidInputError("regularization must be non-negative")
        slots, wins, plays = history.stats.arrays()
        if slots.max() >= arms.shape[0]:
            raise InvalidInputError("history refers to arms outside the arm set")
        self.features = arms[slots]  # (G, K, d)
        self.wins = wins
        self.plays = plays
        self.reg_lambda = reg_lambda
        self.d = arms.shape[1]

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.d,):
            raise InvalidInputError(f"theta must have shape ({self.d},), got {theta.shape}")
        if not np.all(np.isfinite(theta)):
            raise InvalidInputError("theta contains non-finite entries")
        return theta

    def value(self, theta) -> float:
        theta = self._check(theta)
        utilities = self.features @ theta
        top = utilities.max(axis=1)
        log_partition = top + np.log(np.exp(utilities - top[:, None]).sum(axis=1))
        fit = np.sum(self.wins * utilities) - np.dot(self.plays, log_partition)
        return float(fit - 0.5 * self.reg_lambda * theta @ theta)

    def score(self, theta) -> np.ndarray:
        theta = self._check(theta)
        probs = softmax(self.features @ theta, axis=1)
        residual = self.wins - self.plays[:, None] * probs
        return np.einsum("gk,gkd->d", residual, self.features) - self.reg_lambda * theta

    def hessian(self, theta) -> np.ndarray:
        theta = self._check(theta)
        probs = softmax(self.features @ theta, axis=1)
        centre = np.einsum("gk,gkd->gd", probs, self.features)
        centred = self.features - centre[:, None, :]
        # X (diag(mu) - mu mu') X' written as a weighted covariance of the slots
        info = np.einsum("g,gk,gkd,gke->de", self.plays, probs, centred, centred)
        hess = -info - self.reg_lambda * np.eye(self.d)
        return 0.5 * (hess + hess.T)


def log_likelihood(history: History, arms: np.ndarray, theta, reg_lambda: float) -> float:
    """Sum of log winner probabilities minus (lambda/2)||theta||^2"""
    return _Objective(history, arms, reg_lambda).value(theta)


def score(history: History, arms: np.ndarray, theta, reg_lambda: float) -> np.ndarray:
    """Gradient of the regularized log-likelihood: sum X(y - mu) - lambda theta"""
    return _Objective(history, arms, reg_lambda).score(theta)


def hessian(history: History, arms: np.ndarray, theta, reg_lambda: float) -> np.ndarray:
    """Hessian: -sum X [diag(mu) - mu mu'] X' - lambda I"""
    return _Objective(history, arms, reg_lambda).hessian(theta)


def _ascent_direction(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    try:
        step = cho_solve(cho_factor(-hess), grad)
        if np.all(np.isfinite(step)) and grad @ step > 0:
            return step
    except LinAlgError:
        pass
    logger.debug("Newton system singular, taking a gradient step")
    scale = np.trace(-hess)
    return grad / scale if scale > 0 else grad


def _armijo(objective: _Objective, theta, step, value: float, slope: float):
    size = 1.0
    while size >= MIN_STEP:
        candidate = theta + size * step
        candidate_value = objective.value(candidate)
        if candidate_value >= value + ARMIJO_C * size * slope:
            return candidate, candidate_value, objective.score(candidate)
        size *= BACKTRACK
    return None


def _full_step_if_score_drops(objective: _Objective, theta, step, value: float, grad):
    """Take the Newton step when its gain is below float resolution but the score shrinks"""
    candidate = theta + step
    candidate_value = objective.value(candidate)
    candidate_grad = objective.score(candidate)
    flat = candidate_value >= value - FP_SLACK * max(1.0, abs(value))
    if flat and np.linalg.norm(candidate_grad) < np.linalg.norm(grad):
        return candidate, candidate_value, candidate_grad
    return None


def fit_mle(
    history: History,
    arms: np.ndarray,
    reg_lambda: float = Config.REG_LAMBDA,
    tol: float = Config.MLE_TOL,
    max_iter: int = Config.MLE_MAX_ITER,
    init: Optional[np.ndarray] = None,
) -> Estimate:
    """
    Maximize the regularized log-likelihood by damped Newton iterations

    Args:
        history: Observed samples (only the grouped statistics are read)
        arms: N x d arm matrix
        reg_lambda: Ridge penalty; positive values make the problem strictly concave
        tol: Convergence threshold on the Euclidean norm of the score
        max_iter: Iteration cap; exhausting it yields converged=False
        init: Warm start (defaults to the zero vector)

    Returns:
        Estimate with the log-likelihood of every accepted iterate in ll_trace
    """
    objective = _Objective(history, arms, reg_lambda)
    theta = np.zeros(objective.d) if init is None else objective._check(init).copy()

    value = objective.value(theta)
    grad = objective.score(theta)
    trace = [value]
    iterations = 0

    while iterations < max_iter and np.linalg.norm(grad) > tol:
        step = _ascent_direction(objective.hessian(theta), grad)
        slope = float(grad @ step)

        moved = None
        if slope > FLAT_GAIN * max(1.0, abs(value)):
            moved = _armijo(objective, theta, step, value, slope)
        if moved is None:
            moved = _full_step_if_score_drops(objective, theta, step, value, grad)
        if moved is None:
            logger.debug(f"line search stalled at iteration {iterations}")
            break

        theta, value, grad = moved
        trace.append(value)
        iterations += 1

    grad_norm = float(np.linalg.norm(grad))
    converged = grad_norm <= tol
    if not converged:
        logger.debug(f"MLE not converged after {iterations} iterations (|score|={grad_norm:.3g})")

    return Estimate(
        theta_hat=theta,
        grad_norm=grad_norm,
        iterations=iterations,
        converged=converged,
        tol=tol,
        ll_trace=trace,
    )
