import numpy as np
import pytest

from epdkit import IntegratorConfig, make_builtin, solve_ivp


@pytest.fixture(scope="session", autouse=True)
def warm_jit():
    """Trigger numba compilation of the solver core for every builtin rhs once,
    so timed tests measure steady-state numerics rather than compile time."""
    solve_ivp(make_builtin("exponential"), [1.0], [1.0], [0.5])
    solve_ivp(make_builtin("logistic"), [2.8, 1.0], [1e-4], [5.0])
    solve_ivp(
        make_builtin("target_cell_limited"),
        [2.4e-4, 1.6, 13.0, 4.0, 1.6e6, 4.5e4],
        None,
        [1.0],
        IntegratorConfig(rel_tol=1e-6, abs_tol=1e-8),
    )


@pytest.fixture
def exponential():
    return make_builtin("exponential")


@pytest.fixture
def logistic():
    return make_builtin("logistic")


@pytest.fixture
def target_cell():
    return make_builtin("target_cell_limited")


def logistic_closed_form(r, K, y0, times):
    times = np.asarray(times, dtype=float)
    return K / (1.0 + ((K - y0) / y0) * np.exp(-r * times))
