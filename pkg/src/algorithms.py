"""
Allocation strategies: static greedy, batch-adaptive, random, and the K=2 pairwise reduction
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.confidence import eliminate, stopping_check
from src.design import (
    DesignState,
    add_action,
    greedy_select_subset,
    greedy_select_subset_alt,
    random_action,
    rho,
    ridge_init,
)
from src.errors import InternalInvariantError, InvalidInputError
from src.estimator import fit_mle
from src.history import History
from src.models import (
    BatchRecord,
    ConfidenceConfig,
    FeedbackModel,
    GapSet,
    Instance,
    RunConfig,
    RunResult,
    SelectionRule,
    Strategy,
    SubsetAction,
)
from src.simulator import best_arm, mnl_probs, sample_rum_winner, sample_winner

logger = logging.getLogger(__name__)


class _Session:
    """Mutable state of one run: environment draws, design, data, counters"""

    def __init__(self, instance: Instance, cfg: RunConfig, rng: np.random.Generator):
        self.instance = instance
        self.cfg = cfg
        self.rng = rng
        self.arms = instance.arms
        self.confidence = ConfidenceConfig(
            kappa_alpha=cfg.kappa_alpha, delta=instance.delta, N=instance.N, d=instance.d
        )
        self.pull_counts = np.zeros(instance.N, dtype=int)
        self.tau = 0
        self.trajectory: Optional[List[int]] = [] if cfg.record_trajectory else None
        self.theta_hat = np.zeros(instance.d)
        self.reset_batch()

    def reset_batch(self) -> None:
        self.state: DesignState = ridge_init(self.instance.d, self.cfg.ridge)
        self.history = History(keep_samples=False)

    @property
    def exhausted(self) -> bool:
        return self.tau >= self.cfg.max_steps

    def observe(self, action: SubsetAction) -> int:
        if self.cfg.feedback == FeedbackModel.GAUSSIAN_RUM:
            return sample_rum_winner(
                self.arms, self.instance.theta_star, self.cfg.rum_sigma, action, self.rng
            )
        return sample_winner(mnl_probs(self.arms, self.instance.theta_star, action), self.rng)

    def play(self, action: SubsetAction) -> None:
        winner = self.observe(action)
        add_action(self.state, self.arms, action)
        self.history.record(action, winner)
        np.add.at(self.pull_counts, list(action.indices), 1)
        self.tau += 1

    def refit(self) -> np.ndarray:
        estimate = fit_mle(
            self.history,
            self.arms,
            reg_lambda=self.cfg.reg_lambda,
            tol=self.cfg.mle_tol,
            max_iter=self.cfg.mle_max_iter,
            init=self.theta_hat,
        )
        self.theta_hat = np.array(estimate.theta_hat)
        return self.theta_hat

    def incumbent(self, active: Sequence[int]) -> int:
        active = list(active)
        return int(active[int(np.argmax(self.arms[active] @ self.theta_hat))])

    def record_incumbent(self, active: Sequence[int]) -> None:
        if self.trajectory is not None:
            self.trajectory.append(self.incumbent(active))

    def select(self, rule: SelectionRule, gaps: GapSet) -> SubsetAction:
        if rule == SelectionRule.RANDOM:
            return random_action(self.instance.N, self.instance.K, self.rng)
        if rule == SelectionRule.ARM_GREEDY:
            return greedy_select_subset_alt(self.state, self.arms, self.instance.K)
        return greedy_select_subset(self.state, self.arms, gaps, self.instance.K)

    def result(self, strategy: str, returned_arm: int, truncated: bool,
               batches: Optional[List[BatchRecord]] = None) -> RunResult:
        return RunResult(
            strategy=strategy,
            returned_arm=returned_arm,
            tau=self.tau,
            K=self.instance.K,
            pull_counts=self.pull_counts.tolist(),
            correct=returned_arm == best_arm(self.instance),
            truncated=truncated,
            batches=batches or [],
            trajectory=self.trajectory,
        )


def _run_single_phase(
    instance: Instance, cfg: RunConfig, rng: np.random.Generator, rule: SelectionRule, strategy: str
) -> RunResult:
    """Explore for t' steps, then select / observe / refit / check until the rule fires"""
    session = _Session(instance, cfg, rng)
    everyone = list(range(instance.N))
    gaps = GapSet.over(everyone)

    winner = None
    while not session.exhausted:
        if session.tau < cfg.explore_steps:
            action = random_action(instance.N, instance.K, rng)
        else:
            action = session.select(rule, gaps)
        session.play(action)

        if session.tau < cfg.explore_steps and session.trajectory is None:
            continue
        session.refit()
        session.record_incumbent(everyone)
        if session.tau >= cfg.explore_steps:
            winner = stopping_check(
                session.confidence, session.tau, session.state, session.theta_hat, everyone, session.arms
            )
            if winner is not None:
                break

    truncated = winner is None
    if truncated:
        if len(session.history):
            session.refit()
        winner = session.incumbent(everyone)
        logger.warning(f"{strategy} run truncated at max_steps={cfg.max_steps}; returning incumbent {winner}")

    logger.info(f"✓ {strategy} run finished: tau={session.tau} arm={winner}")
    return session.result(strategy, winner, truncated)


def run_static(instance: Instance, cfg: RunConfig, rng: np.random.Generator) -> RunResult:
    """
    Static allocation: greedy G-optimal subsets over all pairwise gaps

    Args:
        instance: Problem to solve
        cfg: Run tuning (selection_rule picks gap-greedy or arm-greedy slots)
        rng: Random source for exploration and environment draws

    Returns:
        RunResult; truncated runs return the current incumbent
    """
    rule = cfg.selection_rule
    strategy = Strategy.RANDOM.value if rule == SelectionRule.RANDOM else Strategy.STATIC.value
    return _run_single_phase(instance, cfg, rng, rule, strategy)


def run_random(instance: Instance, cfg: RunConfig, rng: np.random.Generator) -> RunResult:
    """Uniformly random subsets with the same estimator and stopping rule as the static run"""
    return _run_single_phase(instance, cfg, rng, SelectionRule.RANDOM, Strategy.RANDOM.value)


def run_adaptive(instance: Instance, cfg: RunConfig, rng: np.random.Generator) -> RunResult:
    """
    Batch-adaptive allocation with arm elimination between batches

    Each batch starts from a fresh design and empty data, explores for t'
    steps, then selects greedily against the gaps of the surviving arms until
    rho_j / t drops below alpha * rho_{j-1} / n_{j-1}. The batch data gives
    theta_hat, and dominated arms are dropped. The run stops when one arm is
    left.
    """
    session = _Session(instance, cfg, rng)
    d = instance.d
    active = list(range(instance.N))
    rho_prev, n_prev = 1.0, d * (d + 1) + 1
    batches: List[BatchRecord] = []
    truncated = False
    j = 1

    while len(active) > 1:
        if session.exhausted:
            truncated = True
            break
        session.reset_batch()
        gaps = GapSet.over(active)
        t = 0
        rho_j = float("nan")
        batch_done = False

        while not session.exhausted:
            if t < cfg.explore_steps:
                action = random_action(instance.N, instance.K, rng)
            else:
                action = session.select(cfg.selection_rule, gaps)
            session.play(action)
            t += 1
            if session.trajectory is not None:
                session.refit()
                session.record_incumbent(active)
            if t > cfg.explore_steps:
                rho_j = rho(session.state, gaps, session.arms)
                if rho_j / t < cfg.alpha * rho_prev / n_prev:
                    batch_done = True
                    break

        session.refit()
        if not batch_done:
            truncated = True
            break

        survivors = eliminate(session.confidence, t, session.state, session.theta_hat, active, session.arms)
        if not survivors:
            raise InternalInvariantError(f"batch {j} eliminated every arm")
        batches.append(BatchRecord(j=j, n_j=t, rho_j=rho_j, survivors=survivors))
        logger.debug(f"batch {j}: n_j={t} rho_j={rho_j:.4g} survivors={survivors}")

        active = survivors
        rho_prev, n_prev = rho_j, t
        j += 1

    if truncated:
        winner = session.incumbent(active)
        logger.warning(f"adaptive run truncated at max_steps={cfg.max_steps}; returning incumbent {winner}")
    else:
        winner = active[0]

    logger.info(f"✓ adaptive run finished: tau={session.tau} arm={winner} batches={len(batches)}")
    return session.result(Strategy.ADAPTIVE.value, winner, truncated, batches)


class GLMPairProblem:
    """Binary-outcome pair arms b_ij = a_i - a_j simulated through K=2 MNL queries

    Querying pair (i, j) plays the subset {a_i, a_j}; the outcome is 1 when
    a_i wins, which happens with probability sigmoid(<theta*, b_ij>).
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        self.pairs: List[Tuple[int, int]] = [
            (i, j) for i in range(instance.N) for j in range(instance.N) if i != j
        ]
        self.features = np.array([instance.arms[i] - instance.arms[j] for i, j in self.pairs])

    def __len__(self) -> int:
        return len(self.pairs)

    def action_for(self, pair_index: int) -> SubsetAction:
        return SubsetAction.of(self.pairs[pair_index])

    def success_probability(self, pair_index: int) -> float:
        return float(mnl_probs(self.instance.arms, self.instance.theta_star, self.action_for(pair_index))[0])

    def query(self, pair_index: int, rng: np.random.Generator) -> int:
        action = self.action_for(pair_index)
        winner = sample_winner(mnl_probs(self.instance.arms, self.instance.theta_star, action), rng)
        return int(winner == 0)


def glm_pair_reduction(instance: Instance) -> GLMPairProblem:
    """Describe a K=2 instance as a generalized linear problem over pair arms"""
    if instance.K != 2:
        raise InvalidInputError(f"the pairwise reduction needs K=2, got K={instance.K}")
    return GLMPairProblem(instance)


def run_pairwise_uniform(instance: Instance, cfg: RunConfig, rng: np.random.Generator) -> RunResult:
    """Baseline over the pair reduction: uniformly random pair arms, same estimator and stopping rule

    Outcomes come from the run's feedback model, so Gaussian random-utility
    runs stay comparable with the other strategies.
    """
    problem = glm_pair_reduction(instance)
    session = _Session(instance, cfg, rng)
    everyone = list(range(instance.N))

    winner = None
    while not session.exhausted:
        pair_index = int(rng.integers(0, len(problem)))
        session.play(problem.action_for(pair_index))

        if session.tau < cfg.explore_steps and session.trajectory is None:
            continue
        session.refit()
        session.record_incumbent(everyone)
        if session.tau >= cfg.explore_steps:
            winner = stopping_check(
                session.confidence, session.tau, session.state, session.theta_hat, everyone, session.arms
            )
            if winner is not None:
                break

    truncated = winner is None
    if truncated:
        session.refit()
        winner = session.incumbent(everyone)
        logger.warning(f"pairwise baseline truncated at max_steps={cfg.max_steps}")

    logger.info(f"✓ pairwise-uniform run finished: tau={session.tau} arm={winner}")
    return session.result(Strategy.PAIRWISE_UNIFORM.value, winner, truncated)
