"""
Data models for the MNL best-arm identification toolkit
"""
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)

from config import Config
from src.errors import InvalidInputError

# Arms must satisfy ||a||^2 <= 1; allow for rounding in generated instances
ARM_NORM_SLACK = 1e-12
RESIDUAL_TOL = 1e-8


def as_readonly_array(value: Any, ndim: int, name: str) -> np.ndarray:
    """Copy ``value`` into a finite, read-only float64 array of the given rank"""
    arr = np.array(value, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.flags.writeable = False
    return arr


class FeedbackModel(str, Enum):
    MNL = "mnl"
    GAUSSIAN_RUM = "gaussian-rum"


class SelectionRule(str, Enum):
    GAP_GREEDY = "gap-greedy"
    ARM_GREEDY = "arm-greedy"
    RANDOM = "random"


class Strategy(str, Enum):
    RANDOM = "random"
    STATIC = "static"
    ADAPTIVE = "adaptive"
    PAIRWISE_UNIFORM = "pairwise-uniform"


class ExperimentKind(str, Enum):
    SWEEP_D = "sweep-d"
    SWEEP_K = "sweep-K"
    PROFILE = "profile"
    ROBUSTNESS = "robustness"
    TRAJECTORY = "trajectory"
    SINGLE = "single"


class Instance(BaseModel):
    """A linear-MNL best-arm problem: arms, hidden parameter, subset size, confidence"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    arms: np.ndarray
    theta_star: np.ndarray
    K: int = Field(ge=2)
    delta: float = Field(gt=0, lt=1)

    @field_validator("arms", mode="before")
    @classmethod
    def _coerce_arms(cls, value):
        return as_readonly_array(value, 2, "arms")

    @field_validator("theta_star", mode="before")
    @classmethod
    def _coerce_theta(cls, value):
        return as_readonly_array(value, 1, "theta_star")

    @model_validator(mode="after")
    def _check_invariants(self):
        n_arms, dim = self.arms.shape
        if self.theta_star.shape != (dim,):
            raise ValueError(
                f"theta_star has shape {self.theta_star.shape}, arms have dimension {dim}"
            )
        if n_arms < 2:
            raise ValueError("an instance needs at least two arms")
        norms = np.linalg.norm(self.arms, axis=1)
        if np.any(norms > 1.0 + ARM_NORM_SLACK):
            worst = int(np.argmax(norms))
            raise ValueError(f"arm {worst} has norm {norms[worst]:.6g} > 1")
        top_two = np.sort(self.arms @ self.theta_star)[-2:]
        if not top_two[1] - top_two[0] > 0:
            raise ValueError("the best arm under theta_star is not unique")
        return self

    @field_serializer("arms", "theta_star")
    def _serialize_array(self, value: np.ndarray):
        return value.tolist()

    @property
    def N(self) -> int:
        return self.arms.shape[0]

    @property
    def d(self) -> int:
        return self.arms.shape[1]

    @property
    def utilities(self) -> np.ndarray:
        return self.arms @ self.theta_star


class SubsetAction(BaseModel):
    """K arm indices played at one step (repeats allowed, all-identical rejected)"""
    model_config = ConfigDict(frozen=True)

    indices: Tuple[int, ...]

    @field_validator("indices")
    @classmethod
    def _check_informative(cls, value):
        if len(value) < 2:
            raise ValueError("a subset action needs at least two slots")
        if min(value) < 0:
            raise ValueError("arm indices must be non-negative")
        if len(set(value)) == 1:
            raise ValueError("all-identical subsets carry no information under MNL")
        return value

    @classmethod
    def of(cls, indices: Sequence[int]) -> "SubsetAction":
        return cls(indices=tuple(int(i) for i in indices))

    @property
    def K(self) -> int:
        return len(self.indices)

    def check_against(self, n_arms: int, K: Optional[int] = None) -> None:
        """Raise InvalidInputError unless the action fits an arm set of size ``n_arms``"""
        if max(self.indices) >= n_arms:
            raise InvalidInputError(f"action {self.indices} refers to arms beyond N={n_arms}")
        if K is not None and self.K != K:
            raise InvalidInputError(f"action has {self.K} slots, expected K={K}")


class GapSet(BaseModel):
    """Pairs of arms whose difference vectors the design has to shrink"""
    model_config = ConfigDict(frozen=True)

    active: Tuple[int, ...]
    pairs: Tuple[Tuple[int, int], ...]

    @model_validator(mode="after")
    def _check_pairs(self):
        members = set(self.active)
        seen = set()
        for i, j in self.pairs:
            if i == j:
                raise ValueError(f"pair ({i}, {j}) compares an arm with itself")
            if i not in members or j not in members:
                raise ValueError(f"pair ({i}, {j}) leaves the active set")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"pair ({i}, {j}) appears twice")
            seen.add(key)
        return self

    @classmethod
    def over(cls, active: Sequence[int]) -> "GapSet":
        """All unordered pairs of an active arm set"""
        members = tuple(sorted(int(i) for i in active))
        pairs = tuple(
            (members[a], members[b])
            for a in range(len(members))
            for b in range(a + 1, len(members))
        )
        return cls(active=members, pairs=pairs)

    def vectors(self, arms: np.ndarray) -> np.ndarray:
        """Difference vectors a_i - a_j, one row per pair"""
        if not self.pairs:
            return np.zeros((0, arms.shape[1]))
        left, right = zip(*self.pairs)
        return arms[list(left)] - arms[list(right)]


class FeedbackSample(BaseModel):
    """An action paired with the local index of its winner"""
    model_config = ConfigDict(frozen=True)

    action: SubsetAction
    winner: int = Field(ge=0)

    @model_validator(mode="after")
    def _check_winner(self):
        if self.winner >= self.action.K:
            raise ValueError(f"winner {self.winner} outside an action of size {self.action.K}")
        return self


class Estimate(BaseModel):
    """Fitted parameter with optimizer diagnostics"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    theta_hat: np.ndarray
    grad_norm: float = Field(ge=0)
    iterations: int = Field(ge=0)
    converged: bool
    tol: float = Field(gt=0)
    ll_trace: List[float] = Field(default_factory=list)

    @field_validator("theta_hat", mode="before")
    @classmethod
    def _coerce_theta(cls, value):
        return as_readonly_array(value, 1, "theta_hat")

    @model_validator(mode="after")
    def _check_convergence(self):
        if self.converged and self.grad_norm > self.tol:
            raise ValueError("converged estimate must have grad_norm <= tol")
        return self

    @field_serializer("theta_hat")
    def _serialize_theta(self, value: np.ndarray):
        return value.tolist()


class ConfidenceConfig(BaseModel):
    """Constants of the confidence width"""
    model_config = ConfigDict(frozen=True)

    kappa_alpha: float = Field(default=Config.KAPPA_ALPHA, gt=0, le=1)
    delta: float = Field(default=Config.DELTA, gt=0, lt=1)
    N: int = Field(ge=1)
    d: int = Field(ge=1)


class RunConfig(BaseModel):
    """Tuning of a single run"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    explore_steps: int = Field(default=Config.EXPLORE_STEPS, ge=1)
    reg_lambda: float = Field(default=Config.REG_LAMBDA, ge=0)
    ridge: float = Field(default=Config.RIDGE, gt=0)
    kappa_alpha: float = Field(default=Config.KAPPA_ALPHA, gt=0, le=1)
    alpha: float = Field(default=Config.BATCH_ALPHA, gt=0, lt=1)
    max_steps: int = Field(default=Config.MAX_STEPS, ge=1)
    selection_rule: SelectionRule = SelectionRule.GAP_GREEDY
    record_trajectory: bool = False
    feedback: FeedbackModel = FeedbackModel.MNL
    rum_sigma: float = Field(default=1.0, gt=0)
    mle_tol: float = Field(default=Config.MLE_TOL, gt=0)
    mle_max_iter: int = Field(default=Config.MLE_MAX_ITER, ge=1)

    @model_validator(mode="after")
    def _check_budget(self):
        if self.max_steps < self.explore_steps:
            raise ValueError("max_steps must be at least explore_steps")
        return self


class BatchRecord(BaseModel):
    """One batch of the adaptive strategy"""
    model_config = ConfigDict(frozen=True)

    j: int = Field(ge=1)
    n_j: int = Field(ge=1)
    rho_j: float
    survivors: List[int]


class RunResult(BaseModel):
    """Outcome of one run of an allocation strategy"""
    model_config = ConfigDict(frozen=True)

    strategy: str
    returned_arm: int = Field(ge=0)
    tau: int = Field(ge=0)
    K: int = Field(ge=2)
    pull_counts: List[int]
    correct: bool
    truncated: bool = False
    batches: List[BatchRecord] = Field(default_factory=list)
    trajectory: Optional[List[int]] = None

    @model_validator(mode="after")
    def _check_budget(self):
        if sum(self.pull_counts) != self.K * self.tau:
            raise ValueError(
                f"pull counts sum to {sum(self.pull_counts)}, expected K*tau={self.K * self.tau}"
            )
        if self.trajectory is not None and len(self.trajectory) != self.tau:
            raise ValueError("trajectory must hold one incumbent per step")
        return self


class RunRecord(RunResult):
    """A run tagged with its place in an experiment grid"""
    grid_axis: str
    grid_value: float
    seed_index: int = Field(ge=0)


class PerturbationReport(BaseModel):
    """Perturbed parameter under which arm j beats the best arm"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    j: int
    best: int
    delta_j: np.ndarray
    theta_j: np.ndarray
    epsilon: float = Field(gt=0)
    gap: float
    orthogonality_residual: float
    gap_residual: float

    @field_validator("delta_j", "theta_j", mode="before")
    @classmethod
    def _coerce_vectors(cls, value):
        return as_readonly_array(value, 1, "perturbation vector")

    @model_validator(mode="after")
    def _check_residuals(self):
        if abs(self.orthogonality_residual) > RESIDUAL_TOL or abs(self.gap_residual) > RESIDUAL_TOL:
            raise ValueError(
                f"perturbation residuals too large: {self.orthogonality_residual:.3g}, "
                f"{self.gap_residual:.3g}"
            )
        return self

    @field_serializer("delta_j", "theta_j")
    def _serialize_vectors(self, value: np.ndarray):
        return value.tolist()


class LowerBoundReport(BaseModel):
    """Value of the change-of-measure lower bound on the expected stopping time"""
    model_config = ConfigDict(frozen=True)

    arms: List[int]
    per_j_terms: List[float]
    kl_caps: List[float]
    total: float
    epsilon: float
    delta: float
    K: int
    warnings: List[str] = Field(default_factory=list)


class UpperBoundReport(BaseModel):
    """Fixed point of the high-probability upper bound on the stopping time"""
    model_config = ConfigDict(frozen=True)

    value: float
    tau: float
    iterations: int
    converged: bool


class ExperimentSpec(BaseModel):
    """What to run: a grid, strategies and seeds"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ExperimentKind
    d_values: List[int] = Field(default_factory=lambda: [4, 6, 8], min_length=1)
    k_values: List[int] = Field(default_factory=lambda: [3], min_length=1)
    omega: float = Field(default=0.01, gt=0)
    sigma: float = Field(default=1.0, gt=0)
    delta: float = Field(default=Config.DELTA, gt=0, lt=1)
    n_seeds: int = Field(default=10, ge=1)
    base_seed: int = Field(default=0, ge=0)
    strategies: List[str] = Field(
        default_factory=lambda: [s.value for s in (Strategy.RANDOM, Strategy.STATIC, Strategy.ADAPTIVE)],
        min_length=1,
    )
    run_overrides: Dict[str, Any] = Field(default_factory=dict)
    out_dir: Optional[str] = None
    keep_trajectories: bool = False

    @field_validator("d_values")
    @classmethod
    def _check_dims(cls, value):
        if min(value) < 2:
            raise ValueError("every d must be at least 2")
        return value

    @field_validator("k_values")
    @classmethod
    def _check_subset_sizes(cls, value):
        if min(value) < 2:
            raise ValueError("every K must be at least 2")
        return value

    def run_config(self, **extra) -> RunConfig:
        return RunConfig(**{**self.run_overrides, **extra})


class AggregateRow(BaseModel):
    """Summary of one (strategy, grid point) cell"""
    model_config = ConfigDict(frozen=True)

    strategy: str
    grid_axis: str
    grid_value: float
    n_seeds: int = Field(ge=1)
    mean_tau: float
    stderr_tau: float = Field(ge=0)
    frac_correct: float = Field(ge=0, le=1)
    pull_fracs: List[float]
