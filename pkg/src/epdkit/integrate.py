"""Initial-value problem solver producing model trajectories at requested times.

The stepper is an adaptive embedded Dormand-Prince 5(4) pair with the
classic quartic dense-output interpolant, so requested observation times are
filled in without forcing the step sequence to land on them.  Integration
always starts at t=0 from the supplied initial state, matching how the
benchmark data anchor y(0).

The same stepper source is compiled twice: a numba version used when the
model right-hand side is itself a numba dispatcher (all built-ins), and the
plain Python version used for models registered with an ordinary callback.
Both paths are deterministic: identical inputs give bit-identical output on
one platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numba

from .errors import ConfigurationError, IntegrationFailure
from .models import ModelSpec

__all__ = ["IntegratorConfig", "Trajectory", "solve_ivp"]


@dataclass(frozen=True)
class IntegratorConfig:
    """Step-control settings for :func:`solve_ivp`.

    ``abs_tol`` should be scaled to the state magnitudes (for states of
    order 1e7, an absolute tolerance of order 1 is reasonable).
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_steps: int = 1_000_000
    min_step: float = 0.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ConfigurationError("integrator tolerances must be positive")
        if self.max_steps < 1:
            raise ConfigurationError("max_steps must be at least 1")
        if self.min_step < 0:
            raise ConfigurationError("min_step must be nonnegative")


DEFAULT_INTEGRATOR = IntegratorConfig()


@dataclass(frozen=True)
class Trajectory:
    """Solution states evaluated at the requested times (row i is times[i])."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "states", np.asarray(self.states, dtype=float))
        self.times.setflags(write=False)
        self.states.setflags(write=False)


# Dormand-Prince 5(4) tableau
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
# 5th-minus-4th-order error weights
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)
# dense-output weights (Hairer's contd5 coefficients)
_D1 = -12715105075.0 / 11282082432.0
_D3 = 87487479700.0 / 32700410799.0
_D4 = -10690763975.0 / 1880347072.0
_D5 = 701980252875.0 / 199316789632.0
_D6 = -1453857185.0 / 822651844.0
_D7 = 69997945.0 / 29380423.0

_OK, _UNDERFLOW, _MAX_STEPS, _NON_FINITE = 0, 1, 2, 3


def _dopri5(rhs, p, y0, times, rtol, atol, max_steps, min_step):
    """Core stepper. Returns (status, states, last_t, n_steps).

    Written against the numpy subset numba supports so it can be compiled
    as-is; do not introduce Python objects here.
    """
    n = y0.shape[0]
    n_times = times.shape[0]
    out = np.full((n_times, n), np.nan)
    t_end = times[n_times - 1]

    t = 0.0
    y = y0.copy()
    i_out = 0
    while i_out < n_times and times[i_out] <= 0.0:
        out[i_out] = y
        i_out += 1
    if t_end <= 0.0:
        return _OK, out, t, 0

    f0 = rhs(y, p, 0.0)
    for j in range(n):
        if not np.isfinite(f0[j]):
            return _NON_FINITE, out, t, 0

    # starting step: Hairer's hinit with the Euler probe
    d0 = 0.0
    d1 = 0.0
    for j in range(n):
        sc = atol + rtol * abs(y[j])
        d0 += (y[j] / sc) ** 2
        d1 += (f0[j] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, t_end)
    y_probe = y + h * f0
    f_probe = rhs(y_probe, p, h)
    d2 = 0.0
    for j in range(n):
        sc = atol + rtol * abs(y[j])
        d2 += ((f_probe[j] - f0[j]) / sc) ** 2
    d2 = np.sqrt(d2 / n) / h
    dmax = max(d1, d2)
    if dmax <= 1e-15:
        h1 = max(1e-6, h * 1e-3)
    else:
        h1 = (0.01 / dmax) ** 0.2
    h = min(100.0 * h, h1, t_end)

    k1 = f0
    n_steps = 0
    facmax = 10.0
    while t < t_end:
        if n_steps >= max_steps:
            return _MAX_STEPS, out, t, n_steps
        if min_step > 0.0 and h < min_step:
            return _UNDERFLOW, out, t, n_steps
        if t + h > t_end:
            h = t_end - t
        if t + h == t:
            return _UNDERFLOW, out, t, n_steps
        n_steps += 1

        k2 = rhs(y + h * (_A21 * k1), p, t + _C2 * h)
        k3 = rhs(y + h * (_A31 * k1 + _A32 * k2), p, t + _C3 * h)
        k4 = rhs(y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), p, t + _C4 * h)
        k5 = rhs(y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), p, t + _C5 * h)
        k6 = rhs(
            y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5),
            p,
            t + h,
        )
        y_new = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = rhs(y_new, p, t + h)
        err_vec = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)

        finite = True
        for j in range(n):
            if not (np.isfinite(y_new[j]) and np.isfinite(err_vec[j])):
                finite = False
        if not finite:
            # retry with a much smaller step; repeated failure underflows h
            h *= 0.2
            facmax = 1.0
            continue

        err = 0.0
        for j in range(n):
            sc = atol + rtol * max(abs(y[j]), abs(y_new[j]))
            err += (err_vec[j] / sc) ** 2
        err = np.sqrt(err / n)

        if err <= 1.0:
            while i_out < n_times and times[i_out] <= t + h:
                theta = (times[i_out] - t) / h
                ydiff = y_new - y
                bspl = h * k1 - ydiff
                c4 = ydiff - h * k7 - bspl
                c5 = h * (_D1 * k1 + _D3 * k3 + _D4 * k4 + _D5 * k5 + _D6 * k6 + _D7 * k7)
                out[i_out] = y + theta * (
                    ydiff + (1.0 - theta) * (bspl + theta * (c4 + (1.0 - theta) * c5))
                )
                i_out += 1
            t = t + h
            y = y_new
            k1 = k7
            if err == 0.0:
                fac = facmax
            else:
                fac = min(facmax, max(0.2, 0.9 * err ** -0.2))
            h *= fac
            facmax = 10.0
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
            facmax = 1.0
    return _OK, out, t, n_steps


_dopri5_jit = numba.njit(cache=True)(_dopri5)

_STATUS_MESSAGES = {
    _UNDERFLOW: "step size underflow",
    _MAX_STEPS: "maximum step count exceeded",
    _NON_FINITE: "non-finite state encountered",
}


def solve_ivp(
    model: ModelSpec,
    p,
    y0=None,
    times=None,
    cfg: IntegratorConfig = DEFAULT_INTEGRATOR,
) -> Trajectory:
    """Integrate ``model`` from t=0 and return states at ``times``.

    Parameters
    ----------
    p : array_like
        Parameter vector, ordered as ``model.param_names``.
    y0 : array_like, optional
        Initial state; defaults to the model's initial state.  Integration
        starts at t=0 even when ``times[0] > 0``.
    times : array_like
        Strictly increasing observation times, ``times[0] >= 0``.

    Raises
    ------
    IntegrationFailure
        On step-size underflow, step budget exhaustion, a non-finite state,
        or a negative state beyond the integration error band
        ``abs_tol + rel_tol * max|y|``.  Negatives inside the band clamp to
        zero, which keeps the downstream log10(y+1) transform safe.
    """
    p = np.ascontiguousarray(p, dtype=float)
    times = np.ascontiguousarray(times, dtype=float)
    y0 = model.default_initial_state if y0 is None else y0
    y0 = np.ascontiguousarray(y0, dtype=float)

    if p.shape != (model.n_params,):
        raise ConfigurationError(
            f"parameter vector has length {p.size}, model {model.name!r} expects {model.n_params}"
        )
    if y0.shape != (model.dim_state,):
        raise ConfigurationError(
            f"initial state has length {y0.size}, model {model.name!r} expects {model.dim_state}"
        )
    if times.ndim != 1 or times.size < 1:
        raise ConfigurationError("times must be a non-empty 1-D vector")
    if times[0] < 0:
        raise ConfigurationError("times must start at or after t=0")
    if np.any(np.diff(times) <= 0):
        raise ConfigurationError("times must be strictly increasing")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(y0)) and np.all(np.isfinite(times))):
        raise ConfigurationError("parameters, initial state and times must be finite")

    core = _dopri5_jit if isinstance(model.rhs, numba.core.dispatcher.Dispatcher) else _dopri5
    try:
        status, states, last_t, n_steps = core(
            model.rhs, p, y0, times, cfg.rel_tol, cfg.abs_tol, cfg.max_steps, cfg.min_step
        )
    except ArithmeticError as exc:
        # scalar division by zero inside a jitted rhs raises instead of
        # producing a non-finite value
        raise IntegrationFailure(f"rhs arithmetic failure: {exc}") from exc
    if status != _OK:
        raise IntegrationFailure(_STATUS_MESSAGES[status], last_time=last_t, n_steps=n_steps)

    # Negatives within the solver's own error band are numerical zeros;
    # anything beyond it means the trajectory is untrustworthy.
    band = cfg.abs_tol + cfg.rel_tol * np.max(np.abs(states), axis=0)
    if np.any(states < -band):
        worst = float(np.min(states))
        raise IntegrationFailure(
            f"state went negative beyond the error band (min={worst:.3e})",
            last_time=last_t,
            n_steps=n_steps,
        )
    states = np.where(states < 0.0, 0.0, states)
    return Trajectory(times=times, states=states)
