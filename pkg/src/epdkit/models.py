"""ODE model definitions: the three built-in benchmark systems and a registry hook.

A model is described by a :class:`ModelSpec`: state/parameter names, a
right-hand-side callback ``rhs(y, p, t) -> dy/dt``, a default initial state,
an observed-component mask and per-parameter fitting bounds.  Built-in
right-hand sides are numba-compiled so the integrator can run its jitted
fast path; user models registered with a plain Python callback fall back to
the interpreted integrator loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from numba import njit

from .errors import ConfigurationError, EvaluationError

__all__ = [
    "ModelSpec",
    "make_builtin",
    "register_model",
    "builtin_names",
    "eval_rhs",
    "DEFAULT_OBSERVATION_TIMES",
    "LOGISTIC_CENTERS",
    "TARGET_CELL_CENTERS",
]


@dataclass(frozen=True)
class ModelSpec:
    """Immutable description of an ODE system.

    Attributes
    ----------
    name : str
        Stable identifier used by configuration files.
    state_names : tuple of str
        One name per state component; defines the state ordering.
    param_names : tuple of str
        One name per parameter; defines the parameter ordering.
    rhs : callable
        ``rhs(y, p, t) -> dy/dt`` where ``y`` and the returned derivative
        have length ``dim_state`` and ``p`` has length ``n_params``.
        Must be pure (no state, no side effects).
    default_initial_state : ndarray
        Nonnegative state vector used when a run does not override y(0).
    observed_mask : ndarray of bool
        True where the component appears in observation data.
    param_bounds : ndarray, shape (n_params, 2)
        Per-parameter (lower, upper) fitting bounds, lower <= upper.
    """

    name: str
    state_names: tuple[str, ...]
    param_names: tuple[str, ...]
    rhs: Callable[[np.ndarray, np.ndarray, float], np.ndarray]
    default_initial_state: np.ndarray
    observed_mask: np.ndarray
    param_bounds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "state_names", tuple(self.state_names))
        object.__setattr__(self, "param_names", tuple(self.param_names))
        y0 = np.asarray(self.default_initial_state, dtype=float)
        mask = np.asarray(self.observed_mask, dtype=bool)
        bounds = np.asarray(self.param_bounds, dtype=float)
        for arr in (y0, mask, bounds):
            arr.setflags(write=False)
        object.__setattr__(self, "default_initial_state", y0)
        object.__setattr__(self, "observed_mask", mask)
        object.__setattr__(self, "param_bounds", bounds)

        if self.dim_state < 1:
            raise ConfigurationError(f"model {self.name!r}: needs at least one state component")
        if self.n_params < 1:
            raise ConfigurationError(f"model {self.name!r}: needs at least one parameter")
        if y0.shape != (self.dim_state,):
            raise ConfigurationError(
                f"model {self.name!r}: initial state has length {y0.size}, expected {self.dim_state}"
            )
        if np.any(y0 < 0) or not np.all(np.isfinite(y0)):
            raise ConfigurationError(f"model {self.name!r}: initial state must be finite and nonnegative")
        if mask.shape != (self.dim_state,):
            raise ConfigurationError(f"model {self.name!r}: observed_mask length must equal dim_state")
        if not mask.any():
            raise ConfigurationError(f"model {self.name!r}: at least one component must be observed")
        if bounds.shape != (self.n_params, 2):
            raise ConfigurationError(f"model {self.name!r}: param_bounds must have shape (n_params, 2)")
        if np.any(bounds[:, 0] > bounds[:, 1]):
            raise ConfigurationError(f"model {self.name!r}: lower bounds must not exceed upper bounds")

    @property
    def dim_state(self) -> int:
        return len(self.state_names)

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    @property
    def observed_names(self) -> tuple[str, ...]:
        return tuple(n for n, on in zip(self.state_names, self.observed_mask) if on)

    def with_observed(self, components) -> "ModelSpec":
        """Return a copy observing only the named components."""
        wanted = list(components)
        unknown = [c for c in wanted if c not in self.state_names]
        if unknown:
            raise ConfigurationError(
                f"model {self.name!r}: unknown observed components {unknown}; states are {list(self.state_names)}"
            )
        mask = np.array([n in wanted for n in self.state_names], dtype=bool)
        return replace(self, observed_mask=mask)

    def with_bounds(self, bounds: dict) -> "ModelSpec":
        """Return a copy with per-parameter bounds overridden from a name -> (lo, hi) mapping."""
        new = np.array(self.param_bounds, dtype=float)
        for key, pair in bounds.items():
            if key not in self.param_names:
                raise ConfigurationError(
                    f"model {self.name!r}: unknown parameter {key!r} in bounds; parameters are {list(self.param_names)}"
                )
            lo, hi = float(pair[0]), float(pair[1])
            if not lo <= hi:
                raise ConfigurationError(f"model {self.name!r}: bounds for {key!r} need lower <= upper")
            new[self.param_names.index(key)] = (lo, hi)
        return replace(self, param_bounds=new)


def eval_rhs(model: ModelSpec, y, p, t: float) -> np.ndarray:
    """Evaluate the model right-hand side with shape and finiteness checks.

    Raises
    ------
    EvaluationError
        If inputs have the wrong length or the derivative is non-finite
        (for instance a vanishing half-saturation denominator).
    """
    y = np.ascontiguousarray(y, dtype=float)
    p = np.ascontiguousarray(p, dtype=float)
    if y.shape != (model.dim_state,):
        raise EvaluationError(f"state has length {y.size}, expected {model.dim_state}")
    if p.shape != (model.n_params,):
        raise EvaluationError(f"parameter vector has length {p.size}, expected {model.n_params}")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(p)) and np.isfinite(t)):
        raise EvaluationError("rhs inputs must be finite")
    try:
        out = np.asarray(model.rhs(y, p, float(t)), dtype=float)
    except ArithmeticError as exc:
        raise EvaluationError(f"rhs failed at t={t:g}: {exc}") from exc
    if out.shape != (model.dim_state,):
        raise EvaluationError(f"rhs returned length {out.size}, expected {model.dim_state}")
    if not np.all(np.isfinite(out)):
        raise EvaluationError(f"rhs produced a non-finite derivative at t={t:g}")
    return out


# --- built-in right-hand sides (numba-compiled; signatures match ModelSpec.rhs) ---

@njit(cache=True)
def _exponential_rhs(y, p, t):
    out = np.empty(1)
    out[0] = p[0] * y[0]
    return out


@njit(cache=True)
def _logistic_rhs(y, p, t):
    out = np.empty(1)
    out[0] = p[0] * y[0] * (1.0 - y[0] / p[1])
    return out


@njit(cache=True)
def _target_cell_rhs(y, p, t):
    # states: T (susceptible), I1 (eclipse), I2 (producing), V (virus)
    # params: beta, p, c, kappa, delta, K_delta
    out = np.empty(4)
    infection = p[0] * y[0] * y[3]
    out[0] = -infection
    out[1] = infection - p[3] * y[1]
    out[2] = p[3] * y[1] - p[4] * y[2] / (p[5] + y[2])
    out[3] = p[1] * y[2] - p[2] * y[3]
    return out


def _make_exponential() -> ModelSpec:
    return ModelSpec(
        name="exponential",
        state_names=("y",),
        param_names=("a",),
        rhs=_exponential_rhs,
        default_initial_state=np.array([1.0]),
        observed_mask=np.array([True]),
        param_bounds=np.array([[0.1, 5.0]]),
    )


def _make_logistic() -> ModelSpec:
    return ModelSpec(
        name="logistic",
        state_names=("y",),
        param_names=("r", "K"),
        rhs=_logistic_rhs,
        default_initial_state=np.array([0.0001]),
        observed_mask=np.array([True]),
        param_bounds=np.array([[0.5, 6.0], [0.3, 2.0]]),
    )


def _make_target_cell() -> ModelSpec:
    # Bounds cover the published benchmark parameter rows with ~40% headroom.
    return ModelSpec(
        name="target_cell_limited",
        state_names=("T", "I1", "I2", "V"),
        param_names=("beta", "p", "c", "kappa", "delta", "K_delta"),
        rhs=_target_cell_rhs,
        default_initial_state=np.array([1.0e7, 75.0, 0.0, 0.0]),
        observed_mask=np.array([True, True, True, True]),
        param_bounds=np.array(
            [
                [1.0e-4, 4.2e-4],
                [0.7, 3.3],
                [5.0, 27.0],
                [1.5, 8.0],
                [0.8e6, 2.8e6],
                [1.4e4, 1.1e5],
            ]
        ),
    )


_FACTORIES: dict[str, Callable[[], ModelSpec]] = {
    "exponential": _make_exponential,
    "logistic": _make_logistic,
    "target_cell_limited": _make_target_cell,
}

#: observation grids used by the shipped benchmark configurations
DEFAULT_OBSERVATION_TIMES = {
    "exponential": np.array([0.0, 0.25, 0.5, 0.75, 1.0]),
    "logistic": np.array([5.0, 10.0, 15.0, 20.0]),
    "target_cell_limited": np.arange(13.0),
}

#: benchmark cluster centers (r, K) for the logistic model
LOGISTIC_CENTERS = {
    "unimodal": np.array([[2.8, 1.0]]),
    "bimodal": np.array([[4.0, 0.6], [1.6, 1.4]]),
    "trimodal": np.array([[1.6, 0.6], [4.0, 0.9], [2.0, 1.3]]),
}

#: benchmark cluster centers (beta, p, c, kappa, delta, K_delta) for the
#: target-cell-limited model, column scales already applied
TARGET_CELL_CENTERS = {
    "unimodal": np.array([[2.40e-4, 1.60, 13.0, 4.00, 1.60e6, 4.50e4]]),
    "bimodal": np.array(
        [
            [2.88e-4, 1.44, 18.2, 5.20, 1.28e6, 3.15e4],
            [2.16e-4, 2.08, 9.1, 3.20, 1.76e6, 4.95e4],
        ]
    ),
    "trimodal": np.array(
        [
            [2.88e-4, 1.12, 15.6, 4.00, 1.44e6, 4.50e4],
            [1.68e-4, 2.24, 18.2, 5.60, 1.60e6, 7.20e4],
            [2.16e-4, 2.08, 7.8, 2.40, 1.92e6, 2.25e4],
        ]
    ),
}


def builtin_names() -> tuple[str, ...]:
    """Names accepted by :func:`make_builtin`, including registered custom models."""
    return tuple(sorted(_FACTORIES))


def make_builtin(name: str) -> ModelSpec:
    """Construct a model by registered name.

    Raises
    ------
    ConfigurationError
        For unknown names; the message lists the valid set.
    """
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown model {name!r}; valid names: {', '.join(builtin_names())}"
        ) from None
    return factory()


def register_model(spec: ModelSpec, overwrite: bool = False) -> None:
    """Register a custom model so configs can refer to it by name."""
    if spec.name in _FACTORIES and not overwrite:
        raise ConfigurationError(f"model name {spec.name!r} is already registered")
    _FACTORIES[spec.name] = lambda: spec
