import numpy as np
import pytest

from epdkit import (
    ConfigurationError,
    IntegrationFailure,
    IntegratorConfig,
    ModelSpec,
    TARGET_CELL_CENTERS,
    make_builtin,
    solve_ivp,
)
from conftest import logistic_closed_form

TIGHT = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-14)


def python_model(name, rhs, dim=1, y0=None):
    return ModelSpec(
        name=name,
        state_names=tuple(f"y{i}" for i in range(dim)),
        param_names=("a",),
        rhs=rhs,
        default_initial_state=np.ones(dim) if y0 is None else np.asarray(y0, float),
        observed_mask=np.ones(dim, dtype=bool),
        param_bounds=np.array([[0.0, 10.0]]),
    )


def test_exponential_single_point(exponential):
    traj = solve_ivp(exponential, [1.0], [1.0], [1.0])
    assert traj.states[0, 0] == pytest.approx(np.e, rel=10 * 1e-8)


def test_logistic_against_closed_form(logistic):
    times = [5.0, 10.0, 15.0, 20.0]
    traj = solve_ivp(logistic, [2.8, 1.0], [1e-4], times, TIGHT)
    expected = logistic_closed_form(2.8, 1.0, 1e-4, times)
    np.testing.assert_allclose(traj.states[:, 0], expected, rtol=1e-7)


def test_accuracy_within_ten_times_rel_tol_random_draws(exponential, logistic):
    rng = np.random.default_rng(31)
    times_exp = np.array([0.25, 0.5, 0.75, 1.0])
    times_log = np.array([5.0, 10.0, 15.0, 20.0])
    worst = 0.0
    for _ in range(100):
        a = rng.uniform(*exponential.param_bounds[0])
        traj = solve_ivp(exponential, [a], [1.0], times_exp, TIGHT)
        exact = np.exp(a * times_exp)
        worst = max(worst, np.max(np.abs(traj.states[:, 0] - exact) / exact))

        r = rng.uniform(*logistic.param_bounds[0])
        cap = rng.uniform(*logistic.param_bounds[1])
        traj = solve_ivp(logistic, [r, cap], [1e-4], times_log, TIGHT)
        exact = logistic_closed_form(r, cap, 1e-4, times_log)
        worst = max(worst, np.max(np.abs(traj.states[:, 0] - exact) / exact))
    assert worst <= 10 * TIGHT.rel_tol


def test_halving_rel_tol_never_increases_worst_case_error(exponential, logistic):
    """Worst-case error over a fixed 100-case ensemble is monotone under
    tolerance halving (per-case errors carry step-quantization noise, the
    ensemble maximum does not once inside the asymptotic regime)."""
    rng = np.random.default_rng(12345)
    cases_exp = rng.uniform(0.1, 5.0, size=100)
    rng2 = np.random.default_rng(999)
    cases_log = np.column_stack(
        [rng2.uniform(0.5, 6.0, size=100), rng2.uniform(0.3, 2.0, size=100)]
    )
    times_exp = np.array([0.25, 0.5, 0.75, 1.0])
    times_log = np.array([5.0, 10.0, 15.0, 20.0])
    ladder = [1e-5 * 0.5**k for k in range(7)]

    worst_exp, worst_log = [], []
    for rtol in ladder:
        cfg = IntegratorConfig(rel_tol=rtol, abs_tol=1e-14)
        err = 0.0
        for a in cases_exp:
            traj = solve_ivp(exponential, [a], [1.0], times_exp, cfg)
            exact = np.exp(a * times_exp)
            err = max(err, np.max(np.abs(traj.states[:, 0] - exact) / exact))
        worst_exp.append(err)
        err = 0.0
        for r, cap in cases_log:
            traj = solve_ivp(logistic, [r, cap], [1e-4], times_log, cfg)
            exact = logistic_closed_form(r, cap, 1e-4, times_log)
            err = max(err, np.max(np.abs(traj.states[:, 0] - exact) / exact))
        worst_log.append(err)

    assert all(b <= a for a, b in zip(worst_exp, worst_exp[1:])), worst_exp
    assert all(b <= a for a, b in zip(worst_log, worst_log[1:])), worst_log


def test_output_is_deterministic(target_cell):
    cfg = IntegratorConfig(rel_tol=1e-6, abs_tol=1e-8)
    p = TARGET_CELL_CENTERS["unimodal"][0]
    first = solve_ivp(target_cell, p, None, np.arange(13.0), cfg)
    second = solve_ivp(target_cell, p, None, np.arange(13.0), cfg)
    assert np.array_equal(first.states, second.states)


def test_target_cell_susceptible_nonincreasing(target_cell):
    cfg = IntegratorConfig(rel_tol=1e-6, abs_tol=1e-8)
    p = TARGET_CELL_CENTERS["unimodal"][0]
    traj = solve_ivp(target_cell, p, None, np.arange(13.0), cfg)
    t_cells = traj.states[:, 0]
    # nonincreasing up to the solver's own error band
    band = cfg.abs_tol + cfg.rel_tol * t_cells.max()
    assert np.all(np.diff(t_cells) <= band)


def test_integration_anchors_at_time_zero(exponential):
    late_only = solve_ivp(exponential, [1.3], [1.0], [2.0], TIGHT)
    assert late_only.states[0, 0] == pytest.approx(np.exp(2.6), rel=1e-7)
    # dense output does not perturb the step sequence
    both = solve_ivp(exponential, [1.3], [1.0], [0.7, 2.0], TIGHT)
    assert both.states[1, 0] == late_only.states[0, 0]


def test_time_zero_row_is_initial_state(exponential):
    traj = solve_ivp(exponential, [2.0], [1.5], [0.0, 1.0])
    assert traj.states[0, 0] == 1.5


def test_max_steps_exceeded_reports_last_time(logistic):
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-14, max_steps=5)
    with pytest.raises(IntegrationFailure) as exc:
        solve_ivp(logistic, [2.8, 1.0], [1e-4], [20.0], cfg)
    assert 0.0 <= exc.value.last_time < 20.0


def test_non_finite_rhs_fails_cleanly():
    def rhs(y, p, t):
        return np.array([np.nan]) if t > 0.4 else np.array([1.0])

    model = python_model("goes_nan", rhs)
    with pytest.raises(IntegrationFailure):
        solve_ivp(model, [1.0], [1.0], [1.0])


def test_negative_beyond_band_is_failure():
    def rhs(y, p, t):
        return np.array([-10.0])

    model = python_model("plunges", rhs)
    with pytest.raises(IntegrationFailure):
        solve_ivp(model, [1.0], [1.0], [1.0])


def test_tiny_negative_clamps_to_zero():
    def rhs(y, p, t):
        return np.array([-0.1])

    model = python_model("touches_zero", rhs)
    traj = solve_ivp(model, [1.0], [0.1], [1.0])
    assert traj.states[0, 0] == 0.0


def test_python_rhs_matches_jitted_rhs(logistic):
    def rhs(y, p, t):
        return np.array([p[0] * y[0] * (1.0 - y[0] / p[1])])

    plain = ModelSpec(
        "logistic_py", ("y",), ("r", "K"), rhs, np.array([1e-4]),
        np.array([True]), np.array([[0.5, 6.0], [0.3, 2.0]]),
    )
    times = [5.0, 10.0, 15.0, 20.0]
    a = solve_ivp(plain, [2.8, 1.0], None, times, TIGHT)
    b = solve_ivp(logistic, [2.8, 1.0], [1e-4], times, TIGHT)
    np.testing.assert_allclose(a.states, b.states, rtol=1e-13)


def test_input_validation(exponential):
    with pytest.raises(ConfigurationError):
        solve_ivp(exponential, [1.0, 2.0], [1.0], [1.0])
    with pytest.raises(ConfigurationError):
        solve_ivp(exponential, [1.0], [1.0, 2.0], [1.0])
    with pytest.raises(ConfigurationError):
        solve_ivp(exponential, [1.0], [1.0], [-1.0, 1.0])
    with pytest.raises(ConfigurationError):
        solve_ivp(exponential, [1.0], [1.0], [1.0, 1.0])
    with pytest.raises(ConfigurationError):
        IntegratorConfig(rel_tol=-1.0)
    with pytest.raises(ConfigurationError):
        IntegratorConfig(max_steps=0)
