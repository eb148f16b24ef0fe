"""
Observation history with grouped sufficient statistics
"""
from typing import Dict, List, Tuple

import numpy as np

from src.models import FeedbackSample, SubsetAction


class ChoiceStats:
    """Winner counts grouped by distinct action.

    Actions are keyed by their sorted index tuple. A win is credited to the
    first slot holding the winning arm; slots holding the same arm have the
    same MNL probability, so the likelihood only depends on these counts.
    """

    def __init__(self):
        self._wins: Dict[Tuple[int, ...], np.ndarray] = {}
        self._total = 0
        self._arrays = None

    def __len__(self) -> int:
        return self._total

    @property
    def n_groups(self) -> int:
        return len(self._wins)

    def add(self, indices: Tuple[int, ...], winner_arm: int, count: int = 1) -> None:
        key = tuple(sorted(indices))
        wins = self._wins.get(key)
        if wins is None:
            wins = np.zeros(len(key))
            self._wins[key] = wins
        wins[key.index(winner_arm)] += count
        self._total += count
        self._arrays = None

    def clear(self) -> None:
        self._wins.clear()
        self._total = 0
        self._arrays = None

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(slots, wins, plays)`` stacked per action size.

        ``slots`` is (G, K) arm indices, ``wins`` (G, K) counts, ``plays`` (G,)
        totals; groups are sorted by key so the result does not depend on the
        order the samples arrived in.
        """
        if self._arrays is None:
            keys = sorted(self._wins)
            if not keys:
                self._arrays = (np.zeros((0, 0), dtype=int), np.zeros((0, 0)), np.zeros(0))
            else:
                sizes = {len(k) for k in keys}
                if len(sizes) != 1:
                    raise ValueError("all actions in a history must have the same size")
                slots = np.array(keys, dtype=int)
                wins = np.stack([self._wins[k] for k in keys])
                self._arrays = (slots, wins, wins.sum(axis=1))
        return self._arrays


class History:
    """Ordered feedback samples of one run (or one adaptive batch)

    Raw samples are kept only when ``keep_samples`` is set; the grouped
    statistics are always maintained and are what the estimator reads.
    """

    def __init__(self, keep_samples: bool = True):
        self.keep_samples = keep_samples
        self.samples: List[FeedbackSample] = []
        self.stats = ChoiceStats()

    def __len__(self) -> int:
        return len(self.stats)

    def append(self, sample: FeedbackSample) -> None:
        if self.keep_samples:
            self.samples.append(sample)
        indices = sample.action.indices
        self.stats.add(indices, indices[sample.winner])

    def record(self, action: SubsetAction, winner: int) -> None:
        """Append without building a FeedbackSample unless samples are kept"""
        if self.keep_samples:
            self.append(FeedbackSample(action=action, winner=winner))
        else:
            indices = action.indices
            self.stats.add(indices, indices[winner])

    def clear(self) -> None:
        self.samples.clear()
        self.stats.clear()

    @classmethod
    def from_samples(cls, samples) -> "History":
        history = cls()
        for sample in samples:
            history.append(sample)
        return history
