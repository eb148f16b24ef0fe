"""
Utility functions for the MNL best-arm identification toolkit
"""
import logging
import sys
from typing import Optional, Sequence

import numpy as np
from pythonjsonlogger import jsonlogger

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(log_level: str = "INFO", json_format: bool = False) -> logging.Logger:
    """Setup application logging

    Args:
        log_level: Name of the root log level
        json_format: Emit one JSON object per record instead of plain text
    """
    handler = logging.StreamHandler(sys.stderr)
    if json_format:
        handler.setFormatter(jsonlogger.JsonFormatter(LOG_FORMAT))
    else:
        handler.setFormatter(logging.Formatter(LOG_FORMAT))

    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(getattr(logging, log_level.upper()))

    # matplotlib is chatty at DEBUG
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    return logging.getLogger(__name__)


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    """Create a PCG64 generator; the bit stream is identical on every platform"""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn_rng(base_seed: int, key: Sequence[int]) -> np.random.Generator:
    """Child stream for one replication.

    Streams are addressed by ``key`` (e.g. ``(grid_index, seed_index)``) through
    the SeedSequence spawn key, so a replication draws the same numbers no
    matter which worker runs it or in which order.
    """
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def calculate_processing_time(start_time: float, end_time: float) -> int:
    """Calculate processing time in milliseconds"""
    return int((end_time - start_time) * 1000)
