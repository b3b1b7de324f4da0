"""Recovery-quality metrics: marginal distances and KDE mode counting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import MetricsError

__all__ = [
    "MarginalSummary",
    "wasserstein1",
    "ks_statistic",
    "count_modes",
    "silverman_bandwidth",
    "summarize",
    "summarize_samples",
]


@dataclass(frozen=True)
class MarginalSummary:
    """Per-parameter comparison of accepted samples against the truth."""

    param_name: str
    wasserstein1: float
    ks_stat: float
    mode_count: int
    mode_locations: tuple[float, ...]


def _check_sample(x, name) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise MetricsError(f"{name} sample is empty")
    return x


def wasserstein1(a, b) -> float:
    """1-D earth-mover distance between two empirical distributions."""
    a = _check_sample(a, "first")
    b = _check_sample(b, "second")
    return float(stats.wasserstein_distance(a, b))


def ks_statistic(a, b) -> float:
    """Sup-norm distance between the two empirical CDFs."""
    a = np.sort(_check_sample(a, "first"))
    b = np.sort(_check_sample(b, "second"))
    support = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, support, side="right") / a.size
    cdf_b = np.searchsorted(b, support, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def silverman_bandwidth(x) -> float:
    """Silverman's rule of thumb, robust variant: 0.9*min(std, IQR/1.34)*n^(-1/5)."""
    x = np.asarray(x, dtype=float)
    s = float(np.std(x))
    q75, q25 = np.percentile(x, [75, 25])
    iqr = float(q75 - q25)
    a = min(s, iqr / 1.34) if iqr > 0 else s
    return 0.9 * a * x.size ** (-1 / 5)


def count_modes(sample, bandwidth=None) -> tuple[int, tuple[float, ...]]:
    """Count modes of a sample via a Gaussian KDE on a 512-point grid.

    Modes are strict interior local maxima whose height reaches at least 5%
    of the global maximum; the grid spans [min - 3h, max + 3h].  With
    ``bandwidth=None`` Silverman's rule is used.  A degenerate sample (all
    values equal) reports a single mode at the common value.
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 5:
        raise MetricsError(f"mode counting needs at least 5 samples, got {x.size}")
    if np.all(x == x[0]):
        return 1, (float(x[0]),)
    h = float(bandwidth) if bandwidth is not None else silverman_bandwidth(x)
    if h <= 0:
        return 1, (float(np.median(x)),)
    grid = np.linspace(x.min() - 3 * h, x.max() + 3 * h, 512)
    density = np.exp(-0.5 * ((grid[:, None] - x[None, :]) / h) ** 2).sum(axis=1)
    floor = 0.05 * density.max()
    interior = density[1:-1]
    is_peak = (interior > density[:-2]) & (interior > density[2:]) & (interior >= floor)
    locations = tuple(float(g) for g in grid[1:-1][is_peak])
    return len(locations), locations


def summarize_samples(accepted, truth, param_names, bandwidth=None) -> list[MarginalSummary]:
    """Per-parameter marginal metrics for aligned sample matrices."""
    accepted = np.asarray(accepted, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if accepted.size == 0:
        raise MetricsError("no accepted parameters")
    accepted = accepted.reshape(accepted.shape[0], -1)
    truth = truth.reshape(truth.shape[0], -1)
    names = tuple(param_names)
    if accepted.shape[1] != len(names) or truth.shape[1] != len(names):
        raise MetricsError(
            f"parameter count mismatch: accepted has {accepted.shape[1]} columns, "
            f"truth has {truth.shape[1]}, names are {list(names)}"
        )
    out = []
    for j, name in enumerate(names):
        n_modes, locations = count_modes(accepted[:, j], bandwidth)
        out.append(
            MarginalSummary(
                param_name=name,
                wasserstein1=wasserstein1(accepted[:, j], truth[:, j]),
                ks_stat=ks_statistic(accepted[:, j], truth[:, j]),
                mode_count=n_modes,
                mode_locations=locations,
            )
        )
    return out


def summarize(estimate, truth) -> list[MarginalSummary]:
    """Compare a :class:`DistributionEstimate` against its :class:`TruthRecord`."""
    if tuple(estimate.param_names) != tuple(truth.param_names):
        raise MetricsError(
            f"parameter sets differ: estimate has {list(estimate.param_names)}, "
            f"truth has {list(truth.param_names)}"
        )
    return summarize_samples(estimate.accepted_params, truth.params, estimate.param_names)
