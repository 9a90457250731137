"""Replica fan-out with a fixed reduction order.

``mapper`` is any ordered map (``map``, ``ThreadPoolExecutor.map``, ...).
Replica ``r`` always receives stream ``r`` of the master seed, and results are
reduced in replica order, so the aggregate does not depend on the mapper.
"""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from .ensembles import Seed, derive_seed

Mapper = Callable[[Callable, Iterable], Iterable]


def replica_seeds(seed: Seed | int, replicas: int) -> list[Seed]:
    if replicas < 1:
        raise ValueError(f"replicas must be >= 1, got {replicas}")
    return [derive_seed(seed, r) for r in range(replicas)]


def run_replicas(fn: Callable[[Seed], object], seed: Seed | int, replicas: int,
                 mapper: Mapper | None = None) -> np.ndarray:
    seeds = replica_seeds(seed, replicas)
    values = list((mapper or map)(fn, seeds))
    return np.asarray(values)


def mean_stderr(values: np.ndarray):
    """Sample mean and standard error along the replica axis."""
    values = np.asarray(values)
    mean = values.mean(axis=0)
    if values.shape[0] < 2:
        return mean, np.zeros_like(np.abs(mean))
    stderr = values.std(axis=0, ddof=1) / np.sqrt(values.shape[0])
    return mean, stderr
