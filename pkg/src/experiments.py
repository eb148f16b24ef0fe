"""
Experiment harness: instance generators, seeded replication, aggregation and output files
"""
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import Config
from src.algorithms import run_adaptive, run_pairwise_uniform, run_random, run_static
from src.errors import InvalidInputError, OutputError
from src.models import (
    AggregateRow,
    ExperimentKind,
    ExperimentSpec,
    FeedbackModel,
    Instance,
    RunConfig,
    RunRecord,
    RunResult,
    Strategy,
)
from src.plotting import emit_svg, emit_trajectory_svg
from src.simulator import best_arm
from src.utils import calculate_processing_time, spawn_rng

logger = logging.getLogger(__name__)

Runner = Callable[[Instance, RunConfig, np.random.Generator], RunResult]

CSV_COLUMNS = [
    "strategy",
    "grid_axis",
    "grid_value",
    "n_seeds",
    "mean_tau",
    "stderr_tau",
    "frac_correct",
    "pull_fracs",
]
TRAJECTORY_POINTS = 60

FULL_SCALE_D = list(range(3, 11))
FULL_SCALE_K = list(range(2, 8))
FULL_SCALE_SEEDS = 10
FULL_SCALE_TRAJECTORY_SEEDS = 100

_RUNNERS: Dict[str, Runner] = {
    Strategy.RANDOM.value: run_random,
    Strategy.STATIC.value: run_static,
    Strategy.ADAPTIVE.value: run_adaptive,
    Strategy.PAIRWISE_UNIFORM.value: run_pairwise_uniform,
}


def register_baseline(name: str, runner: Runner) -> None:
    """Make ``runner`` available as a strategy name in experiment specs"""
    if name in _RUNNERS:
        raise InvalidInputError(f"strategy '{name}' is already registered")
    _RUNNERS[name] = runner
    logger.info(f"✓ registered baseline '{name}'")


def available_strategies() -> List[str]:
    return sorted(_RUNNERS)


def standard_instance(d: int, omega: float = 0.01, K: int = 3, delta: float = Config.DELTA) -> Instance:
    """
    Basis arms plus a near-copy of the first one at angle omega

    arms = e_1..e_d and [cos omega, sin omega, 0, ...]; theta* = 2 e_1. The best
    arm is index 0 and the runner-up, index d, trails it by 2(1 - cos omega).
    """
    if d < 2:
        raise InvalidInputError(f"d must be at least 2, got {d}")
    close = np.zeros(d)
    close[0], close[1] = math.cos(omega), math.sin(omega)
    arms = np.vstack([np.eye(d), close])
    theta_star = np.zeros(d)
    theta_star[0] = 2.0
    return Instance(arms=arms, theta_star=theta_star, K=K, delta=delta)


class _Task(NamedTuple):
    grid_index: int
    grid_axis: str
    grid_value: float
    seed_index: int
    strategy: str
    instance: Instance
    run_config: RunConfig
    base_seed: int


def _execute(task: _Task) -> RunRecord:
    # Paired seeds: every strategy at a grid point sees the same stream key
    rng = spawn_rng(task.base_seed, (task.grid_index, task.seed_index))
    result = _RUNNERS[task.strategy](task.instance, task.run_config, rng)
    return RunRecord(
        **{**result.model_dump(), "strategy": task.strategy},
        grid_axis=task.grid_axis,
        grid_value=task.grid_value,
        seed_index=task.seed_index,
    )


def scale_spec(spec: ExperimentSpec) -> ExperimentSpec:
    """Replace the desk-scale grids with the full-scale ones"""
    update = {"omega": 0.01, "n_seeds": FULL_SCALE_SEEDS}
    if spec.kind == ExperimentKind.SWEEP_D:
        update["d_values"] = FULL_SCALE_D
    elif spec.kind == ExperimentKind.SWEEP_K:
        update["k_values"] = FULL_SCALE_K
    elif spec.kind == ExperimentKind.TRAJECTORY:
        update["n_seeds"] = FULL_SCALE_TRAJECTORY_SEEDS
    return spec.model_copy(update=update)


def _grid(spec: ExperimentSpec) -> Tuple[str, List[Tuple[int, int]]]:
    """Grid axis name and the (d, K) pair of every grid point"""
    if spec.kind == ExperimentKind.SWEEP_D:
        return "d", [(d, spec.k_values[0]) for d in spec.d_values]
    if spec.kind == ExperimentKind.SWEEP_K:
        return "K", [(spec.d_values[0], K) for K in spec.k_values]
    return "d", [(spec.d_values[0], spec.k_values[0])]


def _run_config(spec: ExperimentSpec) -> RunConfig:
    extra = {}
    if spec.kind == ExperimentKind.ROBUSTNESS:
        extra.update(feedback=FeedbackModel.GAUSSIAN_RUM, rum_sigma=spec.sigma)
    if spec.kind == ExperimentKind.TRAJECTORY:
        extra["record_trajectory"] = True
    return spec.run_config(**extra)


def build_tasks(spec: ExperimentSpec) -> List[_Task]:
    unknown = [s for s in spec.strategies if s not in _RUNNERS]
    if unknown:
        raise InvalidInputError(f"unknown strategies {unknown}; available: {available_strategies()}")
    axis, points = _grid(spec)
    run_config = _run_config(spec)

    tasks = []
    for grid_index, (d, K) in enumerate(points):
        instance = standard_instance(d, spec.omega, K, spec.delta)
        value = float(d if axis == "d" else K)
        for strategy in spec.strategies:
            for seed_index in range(spec.n_seeds):
                tasks.append(
                    _Task(grid_index, axis, value, seed_index, strategy, instance, run_config, spec.base_seed)
                )
    return tasks


def execute_tasks(tasks: Sequence[_Task], jobs: int = 1) -> List[RunRecord]:
    """Run every task, serially or on a process pool, and merge by (grid point, strategy, seed)"""
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_execute, tasks, chunksize=1))
    else:
        records = [_execute(task) for task in tasks]

    order = {}
    for task in tasks:
        order.setdefault(task.strategy, len(order))
    return sorted(records, key=lambda r: (r.grid_value, order[r.strategy], r.seed_index))


def aggregate(records: Sequence[RunRecord]) -> List[AggregateRow]:
    """Mean and standard error of tau, fraction correct and pull fractions per (strategy, grid point)"""
    groups: Dict[Tuple[str, str, float], List[RunRecord]] = {}
    for record in records:
        groups.setdefault((record.strategy, record.grid_axis, record.grid_value), []).append(record)

    rows = []
    for (strategy, axis, value), members in groups.items():
        taus = np.array([m.tau for m in members], dtype=float)
        n = len(members)
        stderr = float(np.std(taus, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        fractions = np.array([np.asarray(m.pull_counts) / max(m.K * m.tau, 1) for m in members])
        rows.append(
            AggregateRow(
                strategy=strategy,
                grid_axis=axis,
                grid_value=value,
                n_seeds=n,
                mean_tau=float(taus.mean()),
                stderr_tau=stderr,
                frac_correct=float(np.mean([m.correct for m in members])),
                pull_fracs=fractions.mean(axis=0).tolist(),
            )
        )
    return rows


def fit_scaling_exponent(rows: Sequence[AggregateRow], axis: str) -> float:
    """
    Least-squares slope of log(mean tau) against log(grid value)

    Args:
        rows: Aggregate rows of one strategy over a one-dimensional grid
        axis: "d" or "K"; every row must be on this axis

    Returns:
        The fitted exponent
    """
    if axis not in ("d", "K"):
        raise InvalidInputError(f"axis must be 'd' or 'K', got {axis!r}")
    if len({r.strategy for r in rows}) > 1:
        raise InvalidInputError("rows mix several strategies")
    if any(r.grid_axis != axis for r in rows):
        raise InvalidInputError(f"rows are not all on the {axis} axis")
    values = np.array([r.grid_value for r in rows], dtype=float)
    taus = np.array([r.mean_tau for r in rows], dtype=float)
    if len(np.unique(values)) < 3:
        raise InvalidInputError("need at least three distinct grid points")
    if np.any(values <= 0) or np.any(taus <= 0):
        raise InvalidInputError("grid values and mean stopping times must be positive")
    slope, _ = np.polyfit(np.log(values), np.log(taus), 1)
    return float(slope)


def trajectory_curves(records: Sequence[RunRecord], instance_best: int = 0) -> Dict[str, List[Tuple[int, float]]]:
    """Fraction of runs whose incumbent is the best arm on a log-spaced step grid

    A run that already stopped keeps its returned arm for the remaining steps.
    """
    by_strategy: Dict[str, List[RunRecord]] = {}
    for record in records:
        if record.trajectory is None:
            raise InvalidInputError("trajectory curves need runs recorded with record_trajectory")
        by_strategy.setdefault(record.strategy, []).append(record)

    curves = {}
    for strategy, members in by_strategy.items():
        horizon = max(m.tau for m in members)
        steps = np.unique(np.geomspace(1, max(horizon, 1), TRAJECTORY_POINTS).astype(int))
        points = []
        for step in steps:
            hits = [
                (m.trajectory[step - 1] if step <= m.tau else m.returned_arm) == instance_best
                for m in members
            ]
            points.append((int(step), float(np.mean(hits))))
        curves[strategy] = points
    return curves


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e


def write_raw(records: Sequence[RunRecord], path: Path, keep_trajectories: bool = False) -> None:
    exclude = None if keep_trajectories else {"trajectory"}
    lines = [record.model_dump_json(exclude=exclude) for record in records]
    _write_text(path, "\n".join(lines) + "\n")


def aggregate_frame(rows: Sequence[AggregateRow]) -> pd.DataFrame:
    """Aggregate rows as a DataFrame with the fixed CSV column order"""
    data = [
        {**row.model_dump(), "pull_fracs": ";".join(repr(float(f)) for f in row.pull_fracs)}
        for row in rows
    ]
    return pd.DataFrame(data, columns=CSV_COLUMNS)


def write_aggregate(rows: Sequence[AggregateRow], path: Path) -> None:
    _write_text(path, aggregate_frame(rows).to_csv(index=False, lineterminator="\n"))


def write_trajectory(curves: Dict[str, List[Tuple[int, float]]], path: Path) -> None:
    data = [
        {"strategy": strategy, "step": step, "frac_correct": fraction}
        for strategy in sorted(curves)
        for step, fraction in curves[strategy]
    ]
    frame = pd.DataFrame(data, columns=["strategy", "step", "frac_correct"])
    _write_text(path, frame.to_csv(index=False, lineterminator="\n"))


def run_experiment(
    spec: ExperimentSpec,
    out_dir: Optional[Path] = None,
    jobs: int = Config.JOBS,
    full_scale: bool = False,
) -> Tuple[List[AggregateRow], List[RunRecord]]:
    """
    Run every (grid point, strategy, seed) of a spec and write its outputs

    Args:
        spec: What to run
        out_dir: Output directory (falls back to spec.out_dir, then no files)
        jobs: Worker processes; results do not depend on it
        full_scale: Swap in the full-scale grids and seed counts

    Returns:
        (aggregate rows, raw per-run records)
    """
    start_time = time.time()
    if full_scale:
        spec = scale_spec(spec)
    tasks = build_tasks(spec)
    logger.info(f"Running {spec.kind.value} experiment: {len(tasks)} runs on {jobs} worker(s)")

    records = execute_tasks(tasks, jobs)
    rows = aggregate(records)
    truncated = sum(r.truncated for r in records)
    if truncated:
        logger.warning(f"{truncated} of {len(records)} runs hit max_steps")

    target = out_dir if out_dir is not None else spec.out_dir
    if target is not None:
        target = Path(target)
        write_raw(records, target / "raw.jsonl", keep_trajectories=spec.keep_trajectories)
        write_aggregate(rows, target / "aggregate.csv")
        if spec.kind == ExperimentKind.TRAJECTORY:
            best = best_arm(tasks[0].instance)
            curves = trajectory_curves(records, best)
            write_trajectory(curves, target / "trajectory.csv")
            emit_trajectory_svg(curves, target / "trajectory.svg")
        elif spec.kind != ExperimentKind.SINGLE:
            emit_svg(rows, _grid(spec)[0], target / "stopping_time.svg")

    elapsed = calculate_processing_time(start_time, time.time())
    logger.info(f"✓ experiment finished: {len(rows)} aggregate rows in {elapsed}ms")
    return rows, records


def load_spec(path) -> ExperimentSpec:
    """Read an ExperimentSpec JSON file"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise OutputError(f"cannot read spec {path}: {e}") from e
    return ExperimentSpec.model_validate_json(text)


def load_instance(path) -> Instance:
    """Read an Instance JSON file (arms, theta_star, K, delta)"""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise OutputError(f"cannot read instance {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"{path} is not valid JSON: {e}") from e
    payload.setdefault("delta", Config.DELTA)
    return Instance(**payload)
