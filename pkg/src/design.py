"""
Information-matrix bookkeeping and greedy subset selection
"""
import logging
from typing import List, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from config import Config
from src.errors import InternalInvariantError, InvalidInputError
from src.models import GapSet, SubsetAction

logger = logging.getLogger(__name__)

DRIFT_TOL = 1e-8
TIE_RTOL = 1e-12


def _sherman_morrison(inverse: np.ndarray, x: np.ndarray) -> np.ndarray:
    """(V + x x')^-1 from V^-1"""
    wx = inverse @ x
    updated = inverse - np.outer(wx, wx) / (1.0 + x @ wx)
    return 0.5 * (updated + updated.T)


class DesignState:
    """Accumulated information matrix V = ridge*I + sum x x' and its inverse

    The inverse is maintained by rank-one Sherman-Morrison updates and
    recomputed from a Cholesky factorization every ``refresh_every`` updates.
    """

    def __init__(
        self,
        d: int,
        ridge: float,
        refresh_every: int = Config.REFRESH_EVERY,
        debug_checks: bool = Config.DEBUG_CHECKS,
    ):
        self.ridge = ridge
        self.V = ridge * np.eye(d)
        self.V_inv = np.eye(d) / ridge
        self.t = 0
        self.refresh_every = refresh_every
        self.debug_checks = debug_checks
        self.updates_since_refresh = 0

    @property
    def d(self) -> int:
        return self.V.shape[0]

    def dense_inverse(self) -> np.ndarray:
        inverse = cho_solve(cho_factor(self.V), np.eye(self.d))
        return 0.5 * (inverse + inverse.T)

    def drift(self) -> float:
        """Relative Frobenius distance between V_inv and a dense inverse of V"""
        dense = self.dense_inverse()
        return float(np.linalg.norm(self.V_inv - dense) / np.linalg.norm(dense))

    def refresh(self) -> float:
        dense = self.dense_inverse()
        drift = float(np.linalg.norm(self.V_inv - dense) / np.linalg.norm(dense))
        if drift > DRIFT_TOL:
            logger.warning(f"Sherman-Morrison drift {drift:.3g} exceeded {DRIFT_TOL:g} before refresh")
        else:
            logger.debug(f"refreshed V_inv at t={self.t} (drift {drift:.3g})")
        self.V_inv = dense
        self.updates_since_refresh = 0
        return drift

    def rank_one_update(self, x: np.ndarray) -> None:
        before = self.V_inv if self.debug_checks else None

        self.V += np.outer(x, x)
        self.V = 0.5 * (self.V + self.V.T)
        self.V_inv = _sherman_morrison(self.V_inv, x)
        self.updates_since_refresh += 1

        if self.debug_checks:
            self._check_invariants(before)
        if self.updates_since_refresh >= self.refresh_every:
            self.refresh()

    def _check_invariants(self, previous_inverse: np.ndarray) -> None:
        drift = self.drift()
        if drift > DRIFT_TOL:
            raise InternalInvariantError(f"V_inv drifted from V by {drift:.3g}")
        # V grows in Loewner order, so V_inv may only shrink
        shrink = np.linalg.eigvalsh(previous_inverse - self.V_inv)
        if shrink.min() < -DRIFT_TOL * max(1.0, np.abs(previous_inverse).max()):
            raise InternalInvariantError("V_inv increased after an update")


def ridge_init(d: int, ridge: float = Config.RIDGE) -> DesignState:
    """Fresh design state V = ridge*I"""
    if d < 1:
        raise InvalidInputError("dimension must be positive")
    if not ridge > 0:
        raise InvalidInputError("ridge must be positive")
    return DesignState(d, ridge)


def add_action(state: DesignState, arms: np.ndarray, action: SubsetAction) -> DesignState:
    """Add X X' of a played action (K rank-one updates) and advance t"""
    action.check_against(arms.shape[0])
    for index in action.indices:
        state.rank_one_update(arms[index])
    state.t += 1
    return state


def mahalanobis(state: DesignState, g: np.ndarray) -> float:
    """Squared norm g' V^-1 g"""
    g = np.asarray(g, dtype=float)
    return max(float(g @ state.V_inv @ g), 0.0)


def mahalanobis_rows(state: DesignState, rows: np.ndarray) -> np.ndarray:
    """Squared V^-1 norm of every row"""
    values = np.einsum("md,de,me->m", rows, state.V_inv, rows)
    return np.maximum(values, 0.0)


def rho(state: DesignState, gaps: GapSet, arms: np.ndarray) -> float:
    """Design objective: the largest g' V^-1 g over the gap set"""
    vectors = gaps.vectors(arms)
    if vectors.shape[0] == 0:
        raise InvalidInputError("gap set is empty")
    return float(mahalanobis_rows(state, vectors).max())


def slot_objectives(inverse: np.ndarray, arms: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """max_g g'(V + a a')^-1 g for every candidate arm a.

    Uses g'(V + aa')^-1 g = g'V^-1 g - (g'V^-1 a)^2 / (1 + a'V^-1 a), so the
    trial inverse is never formed.
    """
    gw = vectors @ inverse
    base = np.einsum("md,md->m", gw, vectors)
    leverage = 1.0 + np.einsum("nd,de,ne->n", arms, inverse, arms)
    cross = gw @ arms.T
    return (base[:, None] - cross ** 2 / leverage[None, :]).max(axis=0)


def _lowest_argmin(values: np.ndarray, exclude: Optional[int] = None) -> int:
    values = np.asarray(values, dtype=float).copy()
    if exclude is not None:
        values[exclude] = np.inf
    best = values.min()
    tied = np.flatnonzero(values <= best + TIE_RTOL * max(abs(best), 1e-300))
    return int(tied[0])


def _greedy(state: DesignState, arms: np.ndarray, vectors: np.ndarray, K: int) -> SubsetAction:
    if arms.shape[0] < 2:
        raise InvalidInputError("need at least two arms to build an informative subset")
    if vectors.shape[0] == 0:
        raise InvalidInputError("gap set is empty")

    inverse = state.V_inv.copy()
    chosen: List[int] = []
    for slot in range(K):
        objectives = slot_objectives(inverse, arms, vectors)
        pick = _lowest_argmin(objectives)
        if slot == K - 1 and chosen and all(c == pick for c in chosen):
            # all-identical subsets are uninformative: take the runner-up
            pick = _lowest_argmin(objectives, exclude=pick)
        chosen.append(pick)
        inverse = _sherman_morrison(inverse, arms[pick])
    return SubsetAction.of(chosen)


def greedy_select_subset(state: DesignState, arms: np.ndarray, gaps: GapSet, K: int) -> SubsetAction:
    """Greedy G-optimal subset: fill K slots one at a time, each minimizing the post-update max over gaps"""
    return _greedy(state, arms, gaps.vectors(arms), K)


def greedy_select_subset_alt(state: DesignState, arms: np.ndarray, K: int) -> SubsetAction:
    """Greedy selection against the arms themselves instead of their differences"""
    return _greedy(state, arms, np.asarray(arms, dtype=float), K)


def random_action(N: int, K: int, rng: np.random.Generator) -> SubsetAction:
    """K uniform draws from [0, N), redrawn as a whole while all identical"""
    if N < 2:
        raise InvalidInputError("need at least two arms to build an informative subset")
    while True:
        indices = rng.integers(0, N, size=K)
        if np.any(indices != indices[0]):
            return SubsetAction.of(indices)
