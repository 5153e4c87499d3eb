import logging
import math

import numpy as np
import pytest

from errors import DivergenceError, EllipticityError
from linear_solver import (LinearCoefficients, StepperConfig, Trajectory, estimate_modulus,
                           solve_linear, step_linear)
from spectral_core import Grid, ScalarField, VectorField, band_limited_field


@pytest.fixture
def grid():
    return Grid(1, 32)


@pytest.fixture
def cos_field(grid):
    return ScalarField.from_function(grid, np.cos)


@pytest.fixture
def heat_run(grid, cos_field):
    """Half-heat flow of cos x up to t = 1 with ten snapshots"""
    return solve_linear(cos_field, LinearCoefficients.constant(grid), StepperConfig(t_end=1.0, dt=0.1))


@pytest.mark.parametrize("kwargs", [{"t_end": 0.0}, {"dt": -0.1}, {"dt": "fast"}, {"cfl": 0.0},
                                    {"cfl": 1.5}, {"scheme": "rk4"}, {"snapshot_stride": 0},
                                    {"max_dt": 0.0}])
def test_stepper_config_rejects_invalid_values(kwargs):
    """Test that each invalid stepper parameter raises ValueError"""
    with pytest.raises(ValueError):
        StepperConfig(**kwargs)


def test_resolve_covers_horizon_uniformly(grid):
    """Test n_steps·dt = t_end for fixed and automatic steps"""
    a, b = np.ones(grid.shape), np.zeros((1,) + grid.shape)

    assert StepperConfig(t_end=0.3, dt=0.1).resolve(grid, a, b) == (3, pytest.approx(0.1))
    n_steps, dt = StepperConfig(t_end=0.25, max_dt=0.02).resolve(grid, a, b)
    assert n_steps == 13
    assert n_steps * dt == pytest.approx(0.25)


def test_resolve_respects_stability_bound(grid):
    a = 1.5 + 0.4 * np.sin(grid.coordinates[0])
    b = np.full((1,) + grid.shape, 2.0)
    config = StepperConfig(t_end=1.0, max_dt=1.0)

    _, dt = config.resolve(grid, a, b)

    assert dt <= config.stability_bound(grid, a, b)


def test_fixed_step_above_bound_is_logged(grid, caplog):
    a = 1.5 + 0.4 * np.sin(grid.coordinates[0])
    with caplog.at_level(logging.WARNING):
        StepperConfig(t_end=1.0, dt=0.5).resolve(grid, a, np.zeros((1,) + grid.shape))

    assert "supera la cota de estabilidad" in caplog.text


@pytest.mark.parametrize("kwargs", [{"a0": 0.0}, {"a0": 2.0, "a1": 1.0}])
def test_coefficients_reject_invalid_bounds(grid, kwargs):
    with pytest.raises(ValueError):
        LinearCoefficients(grid, **kwargs)


def test_estimate_modulus(grid):
    """Test that the one-cell modulus of cos is 2 sin(h/2)"""
    values = np.cos(grid.coordinates[0])

    assert estimate_modulus(values, grid) == pytest.approx(2 * math.sin(grid.spacing / 2), rel=1e-2)


@pytest.mark.parametrize("scheme", ["imex-euler", "heun"])
def test_constant_coefficient_is_exact(grid, cos_field, scheme):
    """Test u(t) = e^{-t} cos x from the exact Cauchy factor"""
    run = solve_linear(cos_field, LinearCoefficients.constant(grid),
                       StepperConfig(t_end=1.0, dt=0.1, scheme=scheme))

    assert np.max(np.abs(run.terminal.values - math.exp(-1.0) * cos_field.values)) < 1e-12


def test_constant_forcing_raises_the_mean(grid, cos_field):
    """Test u(t) = e^{-t} cos x + 2t under f = 2"""
    run = solve_linear(cos_field, LinearCoefficients.constant(grid, f=2.0), StepperConfig(t_end=0.5, dt=0.05))
    exact = math.exp(-0.5) * cos_field.values + 1.0

    assert np.max(np.abs(run.terminal.values - exact)) < 1e-12
    assert run.diagnostics["mean"].iloc[-1] == pytest.approx(1.0)


def test_constant_drift_transports(grid, cos_field):
    """Test u(t) = e^{-t} cos(x - t) under b = 1"""
    run = solve_linear(cos_field, LinearCoefficients.constant(grid, b=[1.0]),
                       StepperConfig(t_end=1.0, dt=0.01))
    exact = math.exp(-1.0) * np.cos(grid.coordinates[0] - 1.0)

    assert np.max(np.abs(run.terminal.values - exact)) < 1e-3


def test_ellipticity_violation(grid, cos_field):
    coeffs = LinearCoefficients(grid, a=0.5, a0=1.0)
    with pytest.raises(EllipticityError) as raised:
        solve_linear(cos_field, coeffs, StepperConfig(t_end=0.1, dt=0.05))

    assert raised.value.step == 0


def test_non_finite_state_is_divergence(grid, cos_field):
    coeffs = LinearCoefficients(grid, f=lambda t: np.full(grid.shape, np.nan))
    with pytest.raises(DivergenceError):
        solve_linear(cos_field, coeffs, StepperConfig(t_end=0.1, dt=0.05))


def test_step_linear_matches_single_step_run(grid):
    """Test that one step from t = 0 equals a one-step integration"""
    u0 = band_limited_field(grid, np.random.default_rng(4), 5)
    coeffs = LinearCoefficients(grid, a=lambda t: 1.5 + 0.4 * np.sin(grid.coordinates[0]), a0=1.0,
                                b=lambda t: 0.3 * np.cos(grid.coordinates))
    config = StepperConfig(t_end=0.01, dt=0.01)

    stepped = step_linear(u0, 0.0, 0.01, coeffs, config)

    assert np.array_equal(stepped.values, solve_linear(u0, coeffs, config).terminal.values)


def test_vector_state_evolves_componentwise(grid):
    """Test that components of a vector state share coefficients but not values"""
    rng = np.random.default_rng(6)
    parts = [band_limited_field(grid, rng, 4) for _ in range(2)]
    coeffs = LinearCoefficients.constant(grid, a=0.8, b=[0.5])
    config = StepperConfig(t_end=0.2, dt=0.02)

    together = solve_linear(VectorField.from_components(parts), coeffs, config).terminal
    apart = [solve_linear(p, coeffs, config).terminal for p in parts]

    assert isinstance(together, VectorField)
    for joined, single in zip(together.components, apart):
        assert np.allclose(joined.values, single.values, atol=1e-13)


def test_superposition(grid):
    """Test that the unforced solver is linear in the initial data"""
    rng = np.random.default_rng(7)
    f, g = band_limited_field(grid, rng, 5), band_limited_field(grid, rng, 5)
    coeffs = LinearCoefficients(grid, a=lambda t: 1.5 + 0.4 * np.sin(grid.coordinates[0]), a0=1.0)
    config = StepperConfig(t_end=0.2, dt=0.01)

    combined = solve_linear(f * 2.0 + g, coeffs, config).terminal.values
    separate = 2.0 * solve_linear(f, coeffs, config).terminal.values + solve_linear(g, coeffs, config).terminal.values

    assert np.max(np.abs(combined - separate)) < 1e-10


def test_snapshot_stride_keeps_final_time(grid, cos_field):
    run = solve_linear(cos_field, LinearCoefficients.constant(grid),
                       StepperConfig(t_end=1.0, dt=0.1, snapshot_stride=3))

    assert np.allclose(run.times, [0.0, 0.3, 0.6, 0.9, 1.0])
    assert len(run) == 5


def test_diagnostics_columns_and_sup_bound(heat_run):
    """Test the per-snapshot diagnostics and the maximum principle monitor"""
    frame = heat_run.diagnostics

    assert list(frame.columns) == ["time", "sup_norm", "l2_norm", "max_value", "min_value", "mean",
                                   "forcing_bound"]
    assert frame["sup_norm"].is_monotonic_decreasing
    assert heat_run.sup_bound_excess() <= 0


def test_holder_series_is_indexed_by_time(heat_run):
    series = heat_run.holder_series(0.5)

    assert series.name == "holder_0.5"
    assert np.allclose(series.index, heat_run.times)
    assert series.iloc[-1] < series.iloc[0]


def test_path_norms(heat_run):
    norms = heat_run.path_norms(1, 2.0)

    assert set(norms) == {"y", "x"}
    assert norms["x"] > norms["y"] > 0


def test_at_interpolates_between_snapshots(heat_run):
    midpoint = heat_run.at(0.05).values
    expected = 0.5 * (heat_run.fields[0].values + heat_run.fields[1].values)

    assert np.allclose(midpoint, expected)
    assert heat_run.at(0.3) is heat_run.fields[3]
    with pytest.raises(ValueError):
        heat_run.at(1.5)


def test_subsample_keeps_endpoints(heat_run):
    thinned = heat_run.subsample(4)

    assert isinstance(thinned, Trajectory)
    assert np.allclose(thinned.times, [0.0, 0.4, 0.8, 1.0])
    assert thinned.terminal is heat_run.terminal


def test_sup_difference(heat_run, grid, cos_field):
    shifted = solve_linear(cos_field * 1.5, LinearCoefficients.constant(grid), StepperConfig(t_end=1.0, dt=0.1))

    assert heat_run.sup_difference(shifted) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        heat_run.sup_difference(heat_run.subsample(2))


def test_max_principle_with_nonpositive_forcing():
    """Test that sup_x u(t) is nonincreasing when f <= 0"""
    grid = Grid(1, 64)
    x = grid.coordinates[0]
    u0 = band_limited_field(grid, np.random.default_rng(9), 5)
    coeffs = LinearCoefficients(grid, a=1.5 + 0.4 * np.sin(x), b=0.3 * np.cos(x)[None], f=-0.5, a0=1.0)

    run = solve_linear(u0, coeffs, StepperConfig(t_end=0.5, dt=0.01))

    assert np.all(np.diff(run.diagnostics["max_value"]) <= 1e-12)
