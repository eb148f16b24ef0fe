"""
SVG figures for experiment outputs
"""
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from src.errors import InvalidInputError, OutputError  # noqa: E402
from src.models import AggregateRow  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed salt and no date stamp so identical inputs give identical bytes
SVG_PARAMS = {
    "svg.hashsalt": "mnl-bai",
    "svg.fonttype": "none",
    "figure.figsize": (5.0, 3.5),
    "font.size": 9,
}


def _save(fig, path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise OutputError(f"cannot write figure {path}: {e}") from e
    finally:
        plt.close(fig)
    logger.info(f"✓ figure written to {path}")


def _series(rows: Sequence[AggregateRow]) -> Dict[str, List[AggregateRow]]:
    series: Dict[str, List[AggregateRow]] = {}
    for row in rows:
        series.setdefault(row.strategy, []).append(row)
    return {name: sorted(points, key=lambda r: r.grid_value) for name, points in series.items()}


def emit_svg(rows: Sequence[AggregateRow], axis: str, path) -> Path:
    """
    Log-log line chart of mean stopping time against a grid axis

    Args:
        rows: Aggregate rows; one line with standard-error bars per strategy
        axis: Label of the x axis ("d" or "K")
        path: Output file

    Returns:
        Path of the written SVG
    """
    if not rows:
        raise InvalidInputError("no rows to plot")
    path = Path(path)

    with plt.rc_context(SVG_PARAMS):
        fig, ax = plt.subplots()
        for strategy, points in _series(rows).items():
            container = ax.errorbar(
                [p.grid_value for p in points],
                [p.mean_tau for p in points],
                yerr=[p.stderr_tau for p in points],
                marker="o",
                capsize=3,
                label=strategy,
            )
            container.lines[0].set_gid(f"series-{strategy}")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(axis)
        ax.set_ylabel("mean stopping time")
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)
    return path


def emit_trajectory_svg(curves: Dict[str, List[Tuple[int, float]]], path) -> Path:
    """Fraction of runs whose incumbent is the best arm, against the step (log x axis)"""
    if not curves or not any(curves.values()):
        raise InvalidInputError("no trajectory curves to plot")
    path = Path(path)

    with plt.rc_context(SVG_PARAMS):
        fig, ax = plt.subplots()
        for strategy in sorted(curves):
            points = curves[strategy]
            (line,) = ax.plot([s for s, _ in points], [f for _, f in points], label=strategy)
            line.set_gid(f"series-{strategy}")
        ax.set_xscale("log")
        ax.set_ylim(0.0, 1.02)
        ax.set_xlabel("step")
        ax.set_ylabel("fraction correct")
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)
    return path
