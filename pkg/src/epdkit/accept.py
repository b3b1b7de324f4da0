"""Accept-probability gating and the full estimation pipeline.

Fit losses are min-max normalized over the batch and pushed through
``a = 2 - 2/(1 + exp(-C*s))``, so the best fit always has accept
probability 1 and the scaling factor C controls how sharply worse fits are
pruned.  C=0 accepts every converged fit (the all-possible-combinations
baseline).  A fit is retained when its probability exceeds an independent
Uniform[0,1) draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NoSuccessfulFits
from .fit import DEFAULT_FIT, FitConfig, FitResult, fit_trajectories, fit_trajectory
from .integrate import DEFAULT_INTEGRATOR, IntegratorConfig
from .models import ModelSpec
from .rcs_data import RcsDataset, align_to_model, mean_trajectory
from .resample import sample_trajectories

__all__ = [
    "AcceptanceRecord",
    "DistributionEstimate",
    "accept_probabilities",
    "gate",
    "apply_acceptance",
    "run_epd",
    "run_mean_baseline",
]


@dataclass(frozen=True)
class AcceptanceRecord:
    """Audit entry for one fitted trajectory; accepted iff accept_prob > u."""

    trajectory_index: int
    loss: float
    accept_prob: float
    u: float
    accepted: bool


@dataclass(frozen=True)
class DistributionEstimate:
    """Accepted parameter samples plus the full per-trajectory audit trail."""

    param_names: tuple[str, ...]
    accepted_params: np.ndarray
    records: tuple[AcceptanceRecord, ...]
    fits: tuple[FitResult, ...]
    config: dict

    @property
    def n_accepted(self) -> int:
        return self.accepted_params.shape[0]

    @property
    def losses(self) -> np.ndarray:
        return np.array([rec.loss for rec in self.records])


def accept_probabilities(losses, c: float) -> np.ndarray:
    """Map losses to accept probabilities via the logistic transform.

    Losses are normalized to ``s = (L - L_min) / (L_max - L_min)`` over the
    finite entries; infinite losses get probability 0 and are excluded from
    the normalization so one diverged fit cannot stretch the scale.  When
    all finite losses are equal, s is 0 everywhere (no ranking information)
    and every finite-loss fit gets probability 1.

    Raises
    ------
    NoSuccessfulFits
        If no loss is finite.
    """
    if c < 0:
        raise ConfigurationError(f"scaling factor must be nonnegative, got {c}")
    losses = np.asarray(losses, dtype=float)
    finite = np.isfinite(losses)
    if not finite.any():
        raise NoSuccessfulFits("no successful fits: every loss is infinite")
    lmin = losses[finite].min()
    lmax = losses[finite].max()
    probs = np.zeros(losses.shape)
    if lmax == lmin:
        s = np.zeros(int(finite.sum()))
    else:
        s = (losses[finite] - lmin) / (lmax - lmin)
    # s >= 0, so the exponential only ever underflows (to a = 0)
    probs[finite] = 2.0 - 2.0 / (1.0 + np.exp(-c * s))
    return probs


def gate(probs, seed: int) -> np.ndarray:
    """Accept entries whose probability exceeds an independent Uniform[0,1) draw."""
    probs = np.asarray(probs, dtype=float)
    if np.any((probs < 0) | (probs > 1)):
        raise ConfigurationError("accept probabilities must lie in [0, 1]")
    u = np.random.default_rng(seed).random(probs.size)
    return probs > u


def apply_acceptance(
    fits,
    c: float,
    gate_seed: int,
    param_names,
    config: dict | None = None,
) -> DistributionEstimate:
    """Turn a batch of fits into a distribution estimate at scaling factor c.

    Non-converged fits participate with an infinite loss, so they are never
    accepted and do not influence the normalization.  Reusable over the same
    batch for different c (one fit batch can serve a whole C-sweep).
    """
    fits = tuple(fits)
    losses = np.array([f.loss if f.converged else np.inf for f in fits])
    probs = accept_probabilities(losses, c)
    accepted = gate(probs, gate_seed)
    u = np.random.default_rng(gate_seed).random(len(fits))
    records = tuple(
        AcceptanceRecord(
            trajectory_index=f.trajectory_index,
            loss=float(losses[i]),
            accept_prob=float(probs[i]),
            u=float(u[i]),
            accepted=bool(accepted[i]),
        )
        for i, f in enumerate(fits)
    )
    taken = [f.params for i, f in enumerate(fits) if accepted[i]]
    accepted_params = np.array(taken).reshape(len(taken), -1)
    return DistributionEstimate(
        param_names=tuple(param_names),
        accepted_params=accepted_params,
        records=records,
        fits=fits,
        config=dict(config or {}),
    )


def run_epd(
    data: RcsDataset,
    model: ModelSpec,
    n_trajectories: int,
    c: float,
    *,
    resample_seed: int,
    gate_seed: int,
    y0=None,
    bounds=None,
    fit_config: FitConfig = DEFAULT_FIT,
    integrator: IntegratorConfig = DEFAULT_INTEGRATOR,
    jobs: int = 1,
) -> DistributionEstimate:
    """Full pipeline: resample -> fit each trajectory -> gate by accept probability.

    C=0 reproduces the all-possible-combinations baseline: every converged
    fit is accepted.  Partial integration failures are tolerated (they show
    up as non-converged fits); only a batch with no successful fit at all
    raises :class:`NoSuccessfulFits`.
    """
    data = align_to_model(data, model)
    trajectories = sample_trajectories(data, n_trajectories, resample_seed)
    fits = fit_trajectories(
        model, trajectories, y0=y0, cfg=fit_config, bounds=bounds,
        integrator=integrator, jobs=jobs,
    )
    config = {
        "model": model.name,
        "method": "epd",
        "n_trajectories": n_trajectories,
        "c": c,
        "seeds": {"resample": resample_seed, "gate": gate_seed},
        "fit": {
            "max_iterations": fit_config.max_iterations,
            "param_tol": fit_config.param_tol,
            "loss_tol": fit_config.loss_tol,
            "finite_difference_step": fit_config.finite_difference_step,
            "n_multistart": fit_config.n_multistart,
            "multistart_seed": fit_config.multistart_seed,
        },
        "integrator": {
            "rel_tol": integrator.rel_tol,
            "abs_tol": integrator.abs_tol,
            "max_steps": integrator.max_steps,
            "min_step": integrator.min_step,
        },
    }
    return apply_acceptance(fits, c, gate_seed, model.param_names, config)


def run_mean_baseline(
    data: RcsDataset,
    model: ModelSpec,
    *,
    y0=None,
    bounds=None,
    fit_config: FitConfig = DEFAULT_FIT,
    integrator: IntegratorConfig = DEFAULT_INTEGRATOR,
) -> tuple[FitResult, DistributionEstimate]:
    """Fit the single per-time mean trajectory (the information-losing baseline).

    Returns the fit plus a one-row estimate so downstream reporting can
    treat both methods uniformly.
    """
    data = align_to_model(data, model)
    traj = mean_trajectory(data)
    result = fit_trajectory(
        model, traj, y0=y0, cfg=fit_config, bounds=bounds,
        integrator=integrator, trajectory_index=0,
    )
    if not result.converged:
        raise NoSuccessfulFits("mean-trajectory fit did not converge")
    record = AcceptanceRecord(
        trajectory_index=0, loss=result.loss, accept_prob=1.0, u=0.0, accepted=True
    )
    estimate = DistributionEstimate(
        param_names=model.param_names,
        accepted_params=result.params.reshape(1, -1),
        records=(record,),
        fits=(result,),
        config={"model": model.name, "method": "mean"},
    )
    return result, estimate
