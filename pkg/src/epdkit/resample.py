"""Artificial-trajectory construction by per-time uniform resampling.

Each artificial trajectory picks one pooled observation vector per time
point, independently and uniformly, so a specific full trajectory in a
dataset with constant pool size J over T times has selection probability
(1/J)^T.  Trajectory k of a batch draws from substream k of the master
seed, which keeps batches reproducible and order-independent under
parallel generation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigurationError

if TYPE_CHECKING:  # pragma: no cover
    from .rcs_data import RcsDataset

__all__ = ["ArtificialTrajectory", "sample_trajectory", "sample_trajectories"]

#: source index marking values that were computed (e.g. pool means), not picked
SYNTHETIC_SOURCE = -1


@dataclass(frozen=True)
class ArtificialTrajectory:
    """One resampled time course.

    ``values[i]`` is the pooled observation vector chosen at ``times[i]``;
    ``source_indices[i]`` is its row in the pool, or ``SYNTHETIC_SOURCE``
    for values that are not a single pool member.
    """

    times: np.ndarray
    values: np.ndarray
    source_indices: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        idx = np.asarray(self.source_indices, dtype=int)
        if not (times.shape[0] == values.shape[0] == idx.shape[0]):
            raise ConfigurationError("trajectory times, values and source indices must align")
        for arr in (times, values, idx):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "source_indices", idx)

    @property
    def n_times(self) -> int:
        return self.times.shape[0]


def _substream(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))


def sample_trajectory(data: "RcsDataset", rng) -> ArtificialTrajectory:
    """Draw one artificial trajectory.

    ``rng`` may be a ``numpy.random.Generator`` or an integer seed; an
    integer uses substream 0 of that seed, so
    ``sample_trajectory(data, seed)`` equals ``sample_trajectories(data, 1, seed)[0]``.
    """
    if not isinstance(rng, np.random.Generator):
        rng = _substream(int(rng), 0)
    idx = np.empty(data.n_times, dtype=int)
    values = np.empty((data.n_times, data.n_components))
    for i, pool in enumerate(data.pools):
        j = int(rng.integers(0, pool.shape[0]))
        idx[i] = j
        values[i] = pool[j]
    return ArtificialTrajectory(times=data.times, values=values, source_indices=idx)


def sample_trajectories(data: "RcsDataset", n: int, seed: int) -> list[ArtificialTrajectory]:
    """Draw ``n`` independent artificial trajectories.

    Sampling is with replacement across trajectories: the same combination
    may recur.  Trajectory k depends only on (seed, k).
    """
    if n < 1:
        raise ConfigurationError(f"number of trajectories must be positive, got {n}")
    return [sample_trajectory(data, _substream(seed, k)) for k in range(n)]
