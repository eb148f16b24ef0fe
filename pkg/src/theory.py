"""
Lower-bound construction, MNL divergences, the upper-bound value and a kappa diagnostic
"""
import logging
import math
from typing import List, Optional

import numpy as np
from scipy.linalg import eigh
from scipy.special import rel_entr, softmax

from config import Config
from src.errors import DegenerateDirectionError, InvalidInputError
from src.history import History
from src.models import (
    Instance,
    LowerBoundReport,
    PerturbationReport,
    SubsetAction,
    UpperBoundReport,
)
from src.simulator import best_arm, mnl_probs
from src.utils import make_rng

logger = logging.getLogger(__name__)

DEGENERATE_NORM = 1e-12
RANK_TOL = 1e-10
# Smallest K with e/(K-1) <= 1/4; below it the large-K step of the bound is not justified
LARGE_K = 12
FIXED_POINT_RTOL = 1e-6
FIXED_POINT_MAX_ITER = 100


def f_alpha(alpha: float, x: float) -> float:
    """log(1 + x(e^alpha - 1)) - alpha*x, the KL of a j-containing subset after an alpha shift"""
    if not alpha > 0:
        raise InvalidInputError(f"alpha must be positive, got {alpha}")
    if not 0.0 <= x <= 1.0:
        raise InvalidInputError(f"x must lie in [0, 1], got {x}")
    return math.log1p(x * math.expm1(alpha)) - alpha * x


def f_alpha_maximizer(alpha: float) -> float:
    """Argmax of f_alpha on [0, 1]: 1/alpha - 1/(e^alpha - 1)"""
    if not alpha > 0:
        raise InvalidInputError(f"alpha must be positive, got {alpha}")
    return 1.0 / alpha - 1.0 / math.expm1(alpha)


def kl_categorical(p, q) -> float:
    """KL(p || q) = sum p_i log(p_i / q_i) with 0 log 0 = 0"""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise InvalidInputError(f"p and q must be vectors of equal length, got {p.shape} and {q.shape}")
    if np.any(p < 0) or np.any(q < 0):
        raise InvalidInputError("probabilities must be non-negative")
    if np.any((p > 0) & (q <= 0)):
        raise InvalidInputError("q must be positive wherever p is positive")
    return max(math.fsum(rel_entr(p, q)), 0.0)


def kl_mnl_subset(arms: np.ndarray, action: SubsetAction, theta1, theta2) -> float:
    """KL between the winner distributions of one action under two parameters"""
    return kl_categorical(mnl_probs(arms, theta1, action), mnl_probs(arms, theta2, action))


def _check_full_rank_regime(instance: Instance) -> None:
    if instance.N != instance.d:
        raise InvalidInputError(
            f"the lower-bound construction needs N = d, got N={instance.N}, d={instance.d}"
        )
    singular = np.linalg.svd(instance.arms, compute_uv=False)
    if singular.min() <= RANK_TOL * max(singular.max(), 1.0):
        raise InvalidInputError("arms are not linearly independent")


def make_perturbation(instance: Instance, j: int, epsilon: float) -> PerturbationReport:
    """
    Perturb theta* so that arm j beats the best arm by exactly epsilon

    Every arm other than j keeps its utility: the perturbation lives in the
    orthogonal complement of the span of those arms and is scaled so the
    best-minus-j gap moves by epsilon + Delta.

    Args:
        instance: Problem with N = d linearly independent arms
        j: Arm to promote (must differ from the best arm)
        epsilon: Margin by which arm j wins under the perturbed parameter

    Returns:
        PerturbationReport with the constraint residuals
    """
    _check_full_rank_regime(instance)
    if not epsilon > 0:
        raise InvalidInputError("epsilon must be positive")
    best = best_arm(instance)
    if not 0 <= j < instance.N or j == best:
        raise InvalidInputError(f"j must be a non-best arm index, got {j} (best is {best})")

    arms = instance.arms
    others = arms[[i for i in range(instance.N) if i != j]].T  # d x (N-1), columns are arms
    gram = others.T @ others
    projector = np.eye(instance.d) - others @ np.linalg.solve(gram, others.T)

    direction = arms[best] - arms[j]
    projected = projector @ direction
    norm_sq = float(direction @ projected)
    if math.sqrt(max(norm_sq, 0.0)) < DEGENERATE_NORM:
        raise DegenerateDirectionError(f"a_best - a_{j} has no component outside the other arms")

    gap = float(instance.utilities[best] - instance.utilities[j])
    delta_j = (epsilon + gap) / norm_sq * projected
    theta_j = instance.theta_star - delta_j

    orthogonality = float(np.abs(others.T @ delta_j).max())
    gap_residual = float(direction @ delta_j - (epsilon + gap))

    return PerturbationReport(
        j=j,
        best=best,
        delta_j=delta_j,
        theta_j=theta_j,
        epsilon=epsilon,
        gap=gap,
        orthogonality_residual=orthogonality,
        gap_residual=gap_residual,
    )


def lower_bound_value(instance: Instance, epsilon: float, delta: Optional[float] = None) -> LowerBoundReport:
    """
    Lower bound on the expected stopping time of any delta-correct strategy

    total = (1 - 1/K)/e * sum_j (Delta_j + epsilon)^-2 * log(1/(2.4 delta)), the
    sum running over the arms other than the best one.

    Args:
        instance: Problem with N = d linearly independent arms
        epsilon: Slack of the perturbed instances
        delta: Confidence level (defaults to the instance's)

    Returns:
        LowerBoundReport; hypothesis violations are attached as warnings
    """
    _check_full_rank_regime(instance)
    if not epsilon > 0:
        raise InvalidInputError("epsilon must be positive")
    delta = instance.delta if delta is None else delta
    if not 0 < delta < 1 / 2.4:
        raise InvalidInputError(f"delta must lie in (0, 1/2.4), got {delta}")

    K = instance.K
    best = best_arm(instance)
    others = [j for j in range(instance.N) if j != best]
    shifts = [float(instance.utilities[best] - instance.utilities[j]) + epsilon for j in others]

    warnings: List[str] = []
    if K < LARGE_K:
        warnings.append(f"K={K} is below {LARGE_K}; the bound assumes K large enough that e/(K-1) <= 1/4")
    if any(shift > 1.0 for shift in shifts):
        warnings.append("Delta + epsilon exceeds 1 for some arm; the bound's hypothesis is violated")
    for message in warnings:
        logger.warning(message)

    cap_mass = min(math.e / (K - 1), 1.0)
    per_j_terms = [1.0 / shift ** 2 for shift in shifts]
    kl_caps = [f_alpha(shift, cap_mass) for shift in shifts]
    total = (1.0 - 1.0 / K) / math.e * math.fsum(per_j_terms) * math.log(1.0 / (2.4 * delta))

    return LowerBoundReport(
        arms=others,
        per_j_terms=per_j_terms,
        kl_caps=kl_caps,
        total=total,
        epsilon=epsilon,
        delta=delta,
        K=K,
        warnings=warnings,
    )


def upper_bound_value(
    d: int,
    K: int,
    N: int,
    delta: float,
    kappa_alpha: float,
    delta_min: float,
    beta: float = 0.0,
    tau_guess: float = 1.0,
) -> float:
    """512(1+beta)/(kappa^2 Delta_min^2) * (d + log(3 N^2 tau^2 / delta)) * d/K at tau = tau_guess"""
    for name, value in (("d", d), ("K", K), ("N", N), ("delta", delta),
                        ("kappa_alpha", kappa_alpha), ("delta_min", delta_min), ("tau_guess", tau_guess)):
        if not value > 0:
            raise InvalidInputError(f"{name} must be positive, got {value}")
    if beta < 0:
        raise InvalidInputError("beta must be non-negative")
    log_term = math.log(3.0 * N ** 2 * tau_guess ** 2 / delta)
    return 512.0 * (1.0 + beta) / (kappa_alpha ** 2 * delta_min ** 2) * (d + log_term) * d / K


def upper_bound_fixed_point(
    d: int,
    K: int,
    N: int,
    delta: float,
    kappa_alpha: float,
    delta_min: float,
    beta: float = 0.0,
    tau_guess: float = 1.0,
) -> UpperBoundReport:
    """Iterate tau <- bound(tau) until the relative change drops below 1e-6 or 100 iterations"""
    tau = tau_guess
    value = upper_bound_value(d, K, N, delta, kappa_alpha, delta_min, beta, tau)
    iterations = 1
    converged = False
    while iterations < FIXED_POINT_MAX_ITER:
        tau = value
        value = upper_bound_value(d, K, N, delta, kappa_alpha, delta_min, beta, tau)
        iterations += 1
        if abs(value - tau) <= FIXED_POINT_RTOL * abs(tau):
            converged = True
            break
    if not converged:
        logger.warning(f"upper-bound fixed point not reached after {iterations} iterations")
    return UpperBoundReport(value=value, tau=tau, iterations=iterations, converged=converged)


def _ball_samples(center: np.ndarray, radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points uniform in the Euclidean ball around ``center``"""
    d = center.shape[0]
    directions = rng.standard_normal((n, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.random(n) ** (1.0 / d)
    return center + radii[:, None] * directions


def _softmax_jacobian_integral(features, plays, theta, theta_star, nodes, weights) -> np.ndarray:
    """F(theta, theta*) = sum_s X M X' with M averaged along the segment by quadrature"""
    d = features.shape[2]
    total = np.zeros((d, d))
    for node, weight in zip(nodes, weights):
        point = node * theta + (1.0 - node) * theta_star
        probs = softmax(features @ point, axis=1)
        centre = np.einsum("gk,gkd->gd", probs, features)
        centred = features - centre[:, None, :]
        total += weight * np.einsum("g,gk,gkd,gke->de", plays, probs, centred, centred)
    return 0.5 * (total + total.T)


def empirical_kappa(
    instance: Instance,
    history: History,
    alpha_ball: float,
    n_theta_samples: int,
    quadrature_nodes: int = 32,
    ridge: float = Config.RIDGE,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    Sampled lower estimate of the curvature constant kappa over a ball around theta*

    Draws parameters uniformly in the ball, integrates the softmax Jacobian
    along the segment to theta* with Gauss-Legendre quadrature and returns the
    smallest generalized eigenvalue of F against the ridged design V. This is a
    diagnostic, not a certificate.
    """
    if len(history) == 0:
        raise InvalidInputError("history is empty")
    if alpha_ball < 0:
        raise InvalidInputError("alpha_ball must be non-negative")
    if n_theta_samples < 1 or quadrature_nodes < 1:
        raise InvalidInputError("need at least one sample and one quadrature node")
    rng = rng if rng is not None else make_rng(0)

    slots, _, plays = history.stats.arrays()
    if slots.max() >= instance.N:
        raise InvalidInputError("history refers to arms outside the instance")
    features = instance.arms[slots]
    design = np.einsum("g,gkd,gke->de", plays, features, features) + ridge * np.eye(instance.d)

    # Gauss-Legendre on [-1, 1] mapped to [0, 1]
    raw_nodes, raw_weights = np.polynomial.legendre.leggauss(quadrature_nodes)
    nodes, weights = 0.5 * (raw_nodes + 1.0), 0.5 * raw_weights

    theta_star = np.asarray(instance.theta_star, dtype=float)
    samples = _ball_samples(theta_star, alpha_ball, n_theta_samples, rng)
    kappa = math.inf
    for theta in samples:
        jacobian = _softmax_jacobian_integral(features, plays, theta, theta_star, nodes, weights)
        smallest = float(eigh(jacobian, design, eigvals_only=True, subset_by_index=[0, 0])[0])
        kappa = min(kappa, smallest)

    logger.debug(f"empirical kappa over {n_theta_samples} samples: {kappa:.4g}")
    return kappa
