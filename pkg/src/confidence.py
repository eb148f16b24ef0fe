"""
Confidence widths, stopping rule and arm elimination
"""
import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from src.design import DesignState, mahalanobis
from src.errors import InvalidInputError
from src.models import ConfidenceConfig

logger = logging.getLogger(__name__)


def confidence_radius(cfg: ConfidenceConfig, t: int) -> float:
    """(8 / kappa) * sqrt(d + log(3 N^2 t^2 / delta))"""
    if t < 1:
        raise InvalidInputError("t must be at least 1")
    log_term = math.log(3.0 * cfg.N ** 2 * float(t) ** 2 / cfg.delta)
    return 8.0 / cfg.kappa_alpha * math.sqrt(cfg.d + log_term)


def width(cfg: ConfidenceConfig, t: int, state: DesignState, g: np.ndarray) -> float:
    """Confidence width of the gap direction g after t steps"""
    return confidence_radius(cfg, t) * math.sqrt(mahalanobis(state, g))


def _pairwise(cfg, t, state, theta_hat, members, arms):
    """Widths W[i, j] of a_i - a_j and estimated gaps D[i, j] over ``members``"""
    points = arms[members]
    diffs = points[:, None, :] - points[None, :, :]
    quad = np.einsum("ijd,de,ije->ij", diffs, state.V_inv, diffs)
    widths = confidence_radius(cfg, t) * np.sqrt(np.maximum(quad, 0.0))
    utilities = points @ np.asarray(theta_hat, dtype=float)
    gaps = utilities[:, None] - utilities[None, :]
    return widths, gaps


def stopping_check(
    cfg: ConfidenceConfig,
    t: int,
    state: DesignState,
    theta_hat: np.ndarray,
    active_arms: Sequence[int],
    arms: np.ndarray,
) -> Optional[int]:
    """Lowest active arm i with width(a_i - a_j) <= <theta_hat, a_i - a_j> for every other active j"""
    members = sorted(int(i) for i in active_arms)
    if len(members) == 1:
        return members[0]
    widths, gaps = _pairwise(cfg, t, state, theta_hat, members, arms)
    certified = widths <= gaps
    np.fill_diagonal(certified, True)
    for row, arm in enumerate(members):
        if certified[row].all():
            return arm
    return None


def dominated(
    cfg: ConfidenceConfig,
    t: int,
    state: DesignState,
    theta_hat: np.ndarray,
    i: int,
    active_arms: Sequence[int],
    arms: np.ndarray,
) -> bool:
    """True when some other active arm k certifies i as sub-optimal"""
    members = sorted(int(a) for a in active_arms)
    if i not in members:
        raise InvalidInputError(f"arm {i} is not active")
    widths, gaps = _pairwise(cfg, t, state, theta_hat, members, arms)
    column = members.index(i)
    beats = widths[:, column] <= gaps[:, column]
    beats[column] = False
    return bool(beats.any())


def eliminate(
    cfg: ConfidenceConfig,
    t: int,
    state: DesignState,
    theta_hat: np.ndarray,
    active_arms: Sequence[int],
    arms: np.ndarray,
) -> List[int]:
    """Active arms that no other active arm dominates"""
    members = sorted(int(a) for a in active_arms)
    survivors = [
        i for i in members
        if not dominated(cfg, t, state, theta_hat, i, members, arms)
    ]
    logger.debug(f"elimination at t={t}: {len(members)} -> {len(survivors)} arms")
    return survivors
