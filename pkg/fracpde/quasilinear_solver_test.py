import math

import numpy as np
import pytest

from errors import EllipticityError, GridError, HypothesisError
from linear_solver import LinearCoefficients, StepperConfig, solve_linear
from quasilinear_solver import (PRESETS, PicardConfig, QuasilinearProblem, clamp_factor,
                                frozen_burgers_problem, picard_step, solve_quasilinear, sqg_problem,
                                sup_bound)
from spectral_core import Grid, ScalarField, cauchy_semigroup, sqg_velocity


def constant_diffusion(t, x, u, r):
    return 1.0


def no_drift(t, x, u, r):
    return 0.0


def no_forcing(t, x, u, r):
    return np.zeros_like(u)


@pytest.fixture
def grid():
    return Grid(1, 32)


@pytest.fixture
def heat_problem(grid):
    """Linear half-heat equation written as a quasilinear problem"""
    return QuasilinearProblem(grid, 1, constant_diffusion, no_drift, no_forcing, name="heat")


@pytest.fixture
def cos_field(grid):
    return ScalarField.from_function(grid, np.cos)


@pytest.mark.parametrize("kwargs", [{"tol_sup": 0.0}, {"max_iters": 0}, {"damping": 0.0},
                                    {"damping": 1.5}])
def test_picard_config_rejects_invalid_values(kwargs):
    with pytest.raises(ValueError):
        PicardConfig(**kwargs)


def test_clamp_factor():
    """Test χ_R = 1 inside R, 0 beyond 2R and linear in between"""
    values = clamp_factor(np.array([0.0, 1.0, 1.5, 2.0, 3.0]), 1.0)

    assert np.allclose(values, [1.0, 1.0, 0.5, 0.0, 0.0])


def test_problem_validation(grid):
    with pytest.raises(ValueError):
        QuasilinearProblem(grid, 0, constant_diffusion, no_drift, no_forcing)
    with pytest.raises(ValueError):
        QuasilinearProblem(grid, 1, constant_diffusion, no_drift, no_forcing, a0=0.0)
    with pytest.raises(ValueError):
        QuasilinearProblem(grid, 1, constant_diffusion, no_drift, no_forcing, f_clamp_radius=-1.0)


def test_nonlocal_operator_must_match_system(grid):
    """Test that R_b acting on the wrong grid is rejected"""
    with pytest.raises(GridError):
        QuasilinearProblem(grid, 1, constant_diffusion, no_drift, no_forcing, R_b=sqg_velocity(Grid(2, 16)))


def test_forcing_is_clamped(grid):
    problem = QuasilinearProblem(grid, 1, constant_diffusion, no_drift,
                                 lambda t, x, u, r: np.ones_like(u), f_clamp_radius=1.0)
    u = np.array([[0.5, 1.5, 2.5]])

    assert np.allclose(problem.forcing(0.0, None, u, None), [[1.0, 0.5, 0.0]])


def test_sup_bound():
    f = ScalarField.constant(Grid(1, 16), -2.0)

    assert sup_bound(f, 0.0) == pytest.approx(4.0)
    assert sup_bound(f, 1.0) == pytest.approx(math.e * 5.0)


def test_linear_problem_converges_in_two_iterations(grid, heat_problem, cos_field):
    """Test that Picard reproduces the linear solver when nothing is frozen"""
    stepper = StepperConfig(t_end=0.5, dt=0.05)
    result = solve_quasilinear(cos_field, heat_problem, PicardConfig(), stepper)
    reference = solve_linear(cos_field, LinearCoefficients.constant(grid), stepper)

    assert result.converged
    assert result.iterations == 2
    assert result.sup_differences[-1] == 0.0
    assert np.allclose(result.trajectory.terminal.values, reference.terminal.values, atol=1e-14)
    assert result.bound_satisfied is None


def test_first_iterate_is_the_semigroup(heat_problem, cos_field):
    """Test that the first Picard iterate from u ≡ 0 is P_t φ"""
    result = solve_quasilinear(cos_field, heat_problem, PicardConfig(max_iters=1),
                               StepperConfig(t_end=0.3, dt=0.1))

    assert not result.converged
    assert result.iterations == 1
    expected = cauchy_semigroup(1.0, 0.3, cos_field).values
    assert np.max(np.abs(result.trajectory.terminal.values - expected)) < 1e-12


def test_picard_step_reuses_the_previous_time_grid(heat_problem, cos_field):
    stepper = StepperConfig(t_end=0.3, dt=0.1)
    previous = solve_quasilinear(cos_field, heat_problem, PicardConfig(max_iters=1), stepper).trajectory

    following = picard_step(previous, heat_problem, stepper)

    assert np.allclose(following.times, previous.times)
    assert following.sup_difference(previous) < 1e-12


def test_damping_slows_but_keeps_convergence(heat_problem, cos_field):
    result = solve_quasilinear(cos_field, heat_problem, PicardConfig(damping=0.5),
                               StepperConfig(t_end=0.1, dt=0.05))

    assert result.converged
    assert result.iterations > 2
    frame = result.convergence_frame()
    assert list(frame.columns) == ["iteration", "sup_difference"]
    assert frame["sup_difference"].is_monotonic_decreasing


def test_ellipticity_error_carries_iteration(grid, cos_field):
    problem = QuasilinearProblem(grid, 1, lambda t, x, u, r: 0.5, no_drift, no_forcing, a0=1.0)
    with pytest.raises(EllipticityError) as raised:
        solve_quasilinear(cos_field, problem, PicardConfig(), StepperConfig(t_end=0.1, dt=0.05))

    assert raised.value.iteration == 1


def test_growth_hypothesis_violation(grid, cos_field):
    """Test that f = u breaks ⟨u, f⟩ <= 0·(|u|² + 1)"""
    problem = QuasilinearProblem(grid, 1, constant_diffusion, no_drift, lambda t, x, u, r: u,
                                 C_f=0.0, hypothesis_check=True)
    with pytest.raises(HypothesisError) as raised:
        solve_quasilinear(cos_field, problem, PicardConfig(), StepperConfig(t_end=0.1, dt=0.05))

    assert raised.value.iteration == 1


def test_presets_check_dimension():
    with pytest.raises(GridError):
        sqg_problem(Grid(1, 16))
    with pytest.raises(GridError):
        frozen_burgers_problem(Grid(2, 16))
    assert set(PRESETS) == {"sqg", "frozen-burgers-1d"}


def test_sqg_steady_shape_decays_exactly():
    """Test that cos x cos y has no self-transport, so θ(t) = e^{-√2 t} φ"""
    grid = Grid(2, 16)
    phi = ScalarField.from_function(grid, lambda x, y: np.cos(x) * np.cos(y))

    result = solve_quasilinear(phi, sqg_problem(grid), PicardConfig(tol_sup=1e-10),
                               StepperConfig(t_end=0.2, dt=0.02))

    assert result.converged
    assert result.bound_satisfied
    expected = math.exp(-math.sqrt(2) * 0.2) * phi.values
    assert np.max(np.abs(result.trajectory.terminal.values - expected)) < 1e-10


@pytest.fixture(scope="module")
def mixed_sqg_run():
    """SQG flow of cos x cos y + 0.4 sin(x + 2y), a state with genuine self-transport"""
    grid = Grid(2, 64)
    x, y = grid.coordinates
    phi = ScalarField(grid, np.cos(x) * np.cos(y) + 0.4 * np.sin(x + 2 * y))
    return phi, solve_quasilinear(phi, sqg_problem(grid), PicardConfig(), StepperConfig(t_end=0.25))


def test_sqg_preserves_mean_and_sup_bound(mixed_sqg_run):
    phi, result = mixed_sqg_run
    frame = result.trajectory.diagnostics

    assert result.converged
    assert result.iterations > 2
    assert np.allclose(frame["mean"], phi.mean(), atol=1e-12)
    assert frame["sup_norm"].max() <= frame["sup_norm"].iloc[0] + 1e-6


def test_sqg_energy_does_not_grow(mixed_sqg_run):
    """Test that the L² norm is nonincreasing up to 1e-6·‖φ‖₂ per unit time"""
    _, result = mixed_sqg_run
    frame = result.trajectory.diagnostics
    slack = 1e-6 * frame["l2_norm"].iloc[0] * np.diff(frame["time"])

    assert np.all(np.diff(frame["l2_norm"]) <= slack)


def test_frozen_burgers_converges():
    grid = Grid(1, 32)
    phi = ScalarField.from_function(grid, lambda x: 0.5 * np.sin(x))

    result = solve_quasilinear(phi, frozen_burgers_problem(grid), PicardConfig(tol_sup=1e-9),
                               StepperConfig(t_end=0.2, dt=0.01))

    assert result.converged
    assert result.bound_satisfied
    assert result.trajectory.diagnostics["mean"].abs().max() < 1e-12
