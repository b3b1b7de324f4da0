"""Log-least-squares objective and bounded fitting of artificial trajectories.

The objective is the sum over observed components and times of
``(log10(model + 1) - log10(data + 1))^2``.  Minimization is a
Levenberg-Marquardt damped least-squares loop on the residual vector; each
parameter is mapped to an unconstrained variable through a smooth sine
transform of its (lower, upper) interval, so iterates can never leave the
bounds.  Jacobians come from forward finite differences of the residuals.

Everything here is pure given its inputs, so trajectory fits can run in
parallel worker processes; results are merged by trajectory index.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, IntegrationFailure
from .integrate import DEFAULT_INTEGRATOR, IntegratorConfig, solve_ivp
from .models import ModelSpec
from .resample import ArtificialTrajectory

__all__ = [
    "FitConfig",
    "FitResult",
    "residuals",
    "objective",
    "residual_jacobian",
    "fit_trajectory",
    "fit_trajectories",
]


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings.

    ``n_multistart > 1`` adds uniform random starts inside the bounds
    (drawn from ``multistart_seed``) and keeps the lowest-loss fit.
    """

    max_iterations: int = 200
    param_tol: float = 1e-8
    loss_tol: float = 1e-8
    finite_difference_step: float = 1e-6
    n_multistart: int = 1
    multistart_seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be positive")
        if not (self.param_tol > 0 and self.loss_tol > 0 and self.finite_difference_step > 0):
            raise ConfigurationError("fit tolerances must be positive")
        if self.n_multistart < 1:
            raise ConfigurationError("n_multistart must be at least 1")


DEFAULT_FIT = FitConfig()


@dataclass(frozen=True)
class FitResult:
    """Outcome of fitting one artificial trajectory."""

    params: np.ndarray
    loss: float
    converged: bool
    n_evals: int
    trajectory_index: int = -1


def _observed_values(model: ModelSpec, p, traj: ArtificialTrajectory, y0, integrator):
    solution = solve_ivp(model, p, y0, traj.times, integrator)
    return solution.states[:, model.observed_mask]


def residuals(
    model: ModelSpec,
    p,
    traj: ArtificialTrajectory,
    y0=None,
    integrator: IntegratorConfig = DEFAULT_INTEGRATOR,
) -> np.ndarray:
    """Per-time, per-component log-space differences, flattened.

    Raises :class:`IntegrationFailure` when the model cannot be solved at
    ``p``; callers decide whether that means an infinite objective or a
    rejected optimizer step.
    """
    model_vals = _observed_values(model, p, traj, y0, integrator)
    if traj.values.shape != model_vals.shape:
        raise ConfigurationError(
            f"trajectory has {traj.values.shape[1]} observed columns, "
            f"model {model.name!r} exposes {model_vals.shape[1]}"
        )
    return (np.log10(model_vals + 1.0) - np.log10(traj.values + 1.0)).ravel()


def objective(
    model: ModelSpec,
    p,
    traj: ArtificialTrajectory,
    y0=None,
    integrator: IntegratorConfig = DEFAULT_INTEGRATOR,
) -> float:
    """Sum of squared log-space residuals; +inf when integration fails."""
    try:
        r = residuals(model, p, traj, y0, integrator)
    except IntegrationFailure:
        return np.inf
    return float(r @ r)


def residual_jacobian(
    model: ModelSpec,
    p,
    traj: ArtificialTrajectory,
    y0=None,
    integrator: IntegratorConfig = DEFAULT_INTEGRATOR,
    step: float = 1e-6,
) -> np.ndarray:
    """Forward finite-difference Jacobian of the residual vector w.r.t. p."""
    p = np.asarray(p, dtype=float)
    r0 = residuals(model, p, traj, y0, integrator)
    widths = model.param_bounds[:, 1] - model.param_bounds[:, 0]
    jac = np.empty((r0.size, p.size))
    for j in range(p.size):
        h = step * max(abs(p[j]), 1e-8 * widths[j], 1e-300)
        p_step = p.copy()
        p_step[j] += h
        jac[:, j] = (residuals(model, p_step, traj, y0, integrator) - r0) / h
    return jac


# --- bounds transform: p = lo + (hi - lo) * (sin(z) + 1) / 2 ---------------

def _to_bounded(z, lo, hi):
    return lo + (hi - lo) * (np.sin(z) + 1.0) / 2.0

def _to_unconstrained(p, lo, hi):
    frac = np.clip(2.0 * (p - lo) / (hi - lo) - 1.0, -1.0, 1.0)
    return np.arcsin(frac)


def _default_start(lo, hi):
    # geometric midpoint for strictly positive intervals, arithmetic otherwise
    return np.where(lo > 0, np.sqrt(lo * hi), (lo + hi) / 2.0)


def _lm_minimize(resid_fn, p0, lo, hi, cfg: FitConfig):
    """One LM run from p0. Returns (params, loss, converged, n_evals)."""
    z = _to_unconstrained(np.asarray(p0, dtype=float), lo, hi)
    n_evals = 0

    def eval_at(zv):
        nonlocal n_evals
        n_evals += 1
        try:
            return resid_fn(_to_bounded(zv, lo, hi))
        except IntegrationFailure:
            return None

    r = eval_at(z)
    if r is None:
        return np.asarray(p0, dtype=float), np.inf, False, n_evals
    loss = float(r @ r)
    lam = 1e-3
    widths = hi - lo
    converged = False

    for _ in range(cfg.max_iterations):
        p = _to_bounded(z, lo, hi)
        jac = np.empty((r.size, z.size))
        jac_ok = True
        for j in range(z.size):
            h = cfg.finite_difference_step * max(abs(p[j]), 1e-8 * widths[j], 1e-300)
            p_step = p.copy()
            p_step[j] += h
            try:
                r_step = resid_fn(p_step)
                n_evals += 1
            except IntegrationFailure:
                jac_ok = False
                break
            jac[:, j] = (r_step - r) / h
        if not jac_ok:
            break
        # chain rule into the unconstrained variable; columns vanish at bounds
        jac *= (widths / 2.0) * np.cos(z)

        a_mat = jac.T @ jac
        grad = jac.T @ r
        damp = np.diag(a_mat).copy()
        damp[damp < 1e-30] = 1e-30

        accepted = False
        while lam < 1e14:
            try:
                delta = np.linalg.solve(a_mat + lam * np.diag(damp), -grad)
            except np.linalg.LinAlgError:
                lam *= 3.0
                continue
            r_try = eval_at(z + delta)
            if r_try is not None:
                loss_try = float(r_try @ r_try)
                if loss_try < loss:
                    step_small = np.max(np.abs(delta)) <= cfg.param_tol * (1.0 + np.max(np.abs(z)))
                    loss_small = (loss - loss_try) <= cfg.loss_tol * max(loss, 1e-300)
                    z, r, loss = z + delta, r_try, loss_try
                    lam = max(lam / 3.0, 1e-12)
                    accepted = True
                    if step_small or loss_small:
                        converged = True
                    break
            lam *= 3.0
        if not accepted:
            # no direction improves: at a minimum within working precision
            converged = True
            break
        if converged:
            break

    params = np.clip(_to_bounded(z, lo, hi), lo, hi)
    return params, loss, converged, n_evals


def fit_trajectory(
    model: ModelSpec,
    traj: ArtificialTrajectory,
    y0=None,
    cfg: FitConfig = DEFAULT_FIT,
    bounds=None,
    integrator: IntegratorConfig = DEFAULT_INTEGRATOR,
    trajectory_index: int = -1,
) -> FitResult:
    """Fit the model to one artificial trajectory by bounded least squares.

    The initial state is fixed, not fitted.  Bounds default to the model's
    ``param_bounds`` and must satisfy lower < upper for every parameter.
    Deterministic for fixed inputs and configuration.
    """
    bounds = np.asarray(model.param_bounds if bounds is None else bounds, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    if not np.all(np.isfinite(bounds)):
        raise ConfigurationError("fit bounds must be finite")
    if np.any(lo >= hi):
        raise ConfigurationError("fit bounds require lower < upper for every parameter")

    def resid_fn(p):
        return residuals(model, p, traj, y0, integrator)

    best = _lm_minimize(resid_fn, _default_start(lo, hi), lo, hi, cfg)
    total_evals = best[3]
    if cfg.n_multistart > 1:
        rng = np.random.default_rng(cfg.multistart_seed)
        for _ in range(cfg.n_multistart - 1):
            start = rng.uniform(lo, hi)
            cand = _lm_minimize(resid_fn, start, lo, hi, cfg)
            total_evals += cand[3]
            if cand[1] < best[1]:
                best = cand
    params, loss, converged, _ = best
    if not np.isfinite(loss):
        converged = False
    return FitResult(
        params=params,
        loss=loss,
        converged=converged,
        n_evals=total_evals,
        trajectory_index=trajectory_index,
    )


def _fit_worker(args):
    model, traj, y0, cfg, bounds, integrator, index = args
    return fit_trajectory(model, traj, y0, cfg, bounds, integrator, trajectory_index=index)


def fit_trajectories(
    model: ModelSpec,
    trajectories,
    y0=None,
    cfg: FitConfig = DEFAULT_FIT,
    bounds=None,
    integrator: IntegratorConfig = DEFAULT_INTEGRATOR,
    jobs: int = 1,
) -> list[FitResult]:
    """Fit a batch of trajectories, optionally across worker processes.

    Results are ordered by trajectory index regardless of completion order,
    so the output is identical for any ``jobs`` value.
    """
    tasks = [
        (model, traj, y0, cfg, bounds, integrator, i)
        for i, traj in enumerate(trajectories)
    ]
    if jobs <= 1 or len(tasks) <= 1:
        return [_fit_worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(_fit_worker, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return sorted(results, key=lambda fr: fr.trajectory_index)
