"""Delimited and structured outputs for estimates and metric summaries."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import yaml

from .accept import DistributionEstimate
from .metrics import MarginalSummary

__all__ = [
    "write_accepted_csv",
    "write_records_csv",
    "write_run_summary",
    "write_marginal_summary_csv",
    "loss_quantiles",
]

_FLOAT_FMT = "%.17g"


def write_accepted_csv(estimate: DistributionEstimate, path) -> None:
    """Accepted parameter vectors, header = parameter names, 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(estimate.param_names)
        for row in estimate.accepted_params:
            writer.writerow([_FLOAT_FMT % v for v in row])


def write_records_csv(estimate: DistributionEstimate, path) -> None:
    """Full audit trail: one row per fitted trajectory, fitted params included."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["trajectory_index", "loss", "accept_prob", "u", "accepted", "converged", "n_evals"]
            + list(estimate.param_names)
        )
        for rec, fit in zip(estimate.records, estimate.fits):
            writer.writerow(
                [
                    rec.trajectory_index,
                    _FLOAT_FMT % rec.loss,
                    _FLOAT_FMT % rec.accept_prob,
                    _FLOAT_FMT % rec.u,
                    int(rec.accepted),
                    int(fit.converged),
                    fit.n_evals,
                ]
                + [_FLOAT_FMT % v for v in fit.params]
            )


def loss_quantiles(estimate: DistributionEstimate) -> dict:
    losses = estimate.losses
    finite = losses[np.isfinite(losses)]
    if finite.size == 0:
        return {"finite_losses": 0}
    qs = np.percentile(finite, [0, 25, 50, 75, 100])
    return {
        "finite_losses": int(finite.size),
        "min": float(qs[0]),
        "q25": float(qs[1]),
        "median": float(qs[2]),
        "q75": float(qs[3]),
        "max": float(qs[4]),
    }


def write_run_summary(estimate: DistributionEstimate, path) -> dict:
    """Counts, scaling factor, seeds and loss quantiles as a YAML document."""
    n_total = len(estimate.records)
    n_converged = sum(1 for f in estimate.fits if f.converged)
    doc = {
        "config": estimate.config,
        "n_trajectories": n_total,
        "n_converged": n_converged,
        "n_accepted": estimate.n_accepted,
        "loss_quantiles": loss_quantiles(estimate),
    }
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
    return doc


def write_marginal_summary_csv(summaries: list[MarginalSummary], path) -> None:
    """One record per parameter; mode locations are ';'-joined in one field."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["param_name", "wasserstein1", "ks_stat", "mode_count", "mode_locations"])
        for s in summaries:
            writer.writerow(
                [
                    s.param_name,
                    _FLOAT_FMT % s.wasserstein1,
                    _FLOAT_FMT % s.ks_stat,
                    s.mode_count,
                    ";".join(_FLOAT_FMT % loc for loc in s.mode_locations),
                ]
            )


def write_summary_yaml(summaries: list[MarginalSummary], path: Path) -> None:
    doc = [
        {
            "param_name": s.param_name,
            "wasserstein1": s.wasserstein1,
            "ks_stat": s.ks_stat,
            "mode_count": s.mode_count,
            "mode_locations": list(s.mode_locations),
        }
        for s in summaries
    ]
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
