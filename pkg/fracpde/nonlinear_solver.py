"""
Resolvedor de la ecuación totalmente no lineal

    ∂_t u = F(t, x, u, ∇u, -(-Δ)^{1/2}u)

mediante el truco del sistema gradiente: w = ∇u satisface un sistema
cuasi-lineal con q = R w = (-Δ)^{-1/2} div w, que se resuelve por Picard;
luego u se reconstruye integrando F a lo largo de w. Si F depende de u se
itera en u congelando el iterado anterior.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from errors import GridError, HypothesisError
from linear_solver import StepperConfig, Trajectory
from quasilinear_solver import PicardConfig, QuasilinearProblem, QuasilinearResult, solve_quasilinear
from spectral_core import Grid, ScalarField, VectorField, grad, half_laplacian, r_alpha

logger = logging.getLogger(__name__)

# Callback (t, x, u, w, q): x de forma (dim, ...), u (...), w (dim, ...), q (...)
NonlinearCallback = Callable[[float, np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]

PARTIAL_SAMPLES = 100
PARTIAL_RTOL = 1e-4
GROWTH_SAMPLES = 1000
FD_STEP = 1e-6
# Cota del residuo relativo ‖∇u - w‖∞ / ‖w‖∞ al final: CONSISTENCY_RATE·dt·max(1, t_end) + CONSISTENCY_FLOOR
CONSISTENCY_RATE = 5.0
CONSISTENCY_FLOOR = 1e-3


@dataclass(frozen=True)
class NonlinearProblem:
    """
    Problema totalmente no lineal con F y sus cuatro derivadas parciales.

    Args:
        grid: malla
        F: F(t, x, u, w, q)
        dF_dq: ∂_qF
        grad_w_F: ∇_wF (dim componentes)
        dF_du: ∂_uF
        grad_x_F: ∇_xF (dim componentes)
        a0: cota inferior de ∂_qF
        kappa0: constante de crecimiento |F(t,x,u,0,0)| <= κ0(|u|+1)
        depends_on_u: si F depende de u (si no, basta una iteración externa)
        a1: cota superior de ∂_qF
        name: etiqueta
        validate: comprobar derivadas y crecimiento al construir
    """

    grid: Grid
    F: NonlinearCallback
    dF_dq: NonlinearCallback
    grad_w_F: NonlinearCallback
    dF_du: NonlinearCallback
    grad_x_F: NonlinearCallback
    a0: float
    kappa0: Optional[float] = None
    depends_on_u: bool = True
    a1: float = math.inf
    name: str = "custom"
    validate: bool = True

    def __post_init__(self):
        if not self.a0 > 0:
            raise ValueError(f"a0 debe ser positivo, se recibió {self.a0}")
        if self.validate:
            rng = np.random.default_rng(0)
            self.check_partials(rng)
            self.check_growth(rng)

    def _random_points(self, rng: np.random.Generator, n: int):
        grid = self.grid
        t = float(rng.uniform(0.0, 1.0))
        x = rng.uniform(0.0, grid.period, size=(grid.dim, n))
        u = rng.normal(size=n)
        w = rng.normal(size=(grid.dim, n))
        q = rng.normal(size=n)
        return t, x, u, w, q

    def check_partials(self, rng: np.random.Generator, n_points: int = PARTIAL_SAMPLES,
                       rtol: float = PARTIAL_RTOL):
        """Contrasta las derivadas dadas con diferencias centradas en puntos aleatorios"""
        t, x, u, w, q = self._random_points(rng, n_points)
        dim = self.grid.dim
        shape = (n_points,)

        def value(x_, u_, w_, q_):
            return np.broadcast_to(self.F(t, x_, u_, w_, q_), shape)

        def compare(label: str, analytic: np.ndarray, numeric: np.ndarray):
            analytic = np.broadcast_to(analytic, shape)
            error = np.abs(analytic - numeric)
            scale = np.maximum(1.0, np.abs(analytic))
            worst = int(np.argmax(error / scale))
            if error[worst] > rtol * scale[worst]:
                raise HypothesisError(
                    f"La derivada {label} de '{self.name}' no coincide con diferencias finitas: "
                    f"{analytic[worst]:.6g} frente a {numeric[worst]:.6g}")

        compare("∂_qF", self.dF_dq(t, x, u, w, q),
                (value(x, u, w, q + FD_STEP) - value(x, u, w, q - FD_STEP)) / (2 * FD_STEP))
        compare("∂_uF", self.dF_du(t, x, u, w, q),
                (value(x, u + FD_STEP, w, q) - value(x, u - FD_STEP, w, q)) / (2 * FD_STEP))
        grad_w = np.broadcast_to(self.grad_w_F(t, x, u, w, q), (dim,) + shape)
        grad_x = np.broadcast_to(self.grad_x_F(t, x, u, w, q), (dim,) + shape)
        for j in range(dim):
            step = np.zeros((dim, 1))
            step[j] = FD_STEP
            compare(f"∂_w{j + 1}F", grad_w[j],
                    (value(x, u, w + step, q) - value(x, u, w - step, q)) / (2 * FD_STEP))
            compare(f"∂_x{j + 1}F", grad_x[j],
                    (value(x + step, u, w, q) - value(x - step, u, w, q)) / (2 * FD_STEP))

    def check_growth(self, rng: np.random.Generator, n_points: int = GROWTH_SAMPLES,
                     radius: float = 10.0):
        """Muestrea |F(t,x,u,0,0)| <= κ0(|u|+1)"""
        if self.kappa0 is None:
            return
        t, x, _, _, _ = self._random_points(rng, n_points)
        u = rng.uniform(-radius, radius, size=n_points)
        zero_w = np.zeros((self.grid.dim, n_points))
        values = np.abs(np.broadcast_to(self.F(t, x, u, zero_w, np.zeros(n_points)), u.shape))
        bound = self.kappa0 * (np.abs(u) + 1.0)
        worst = int(np.argmax(values - bound))
        if values[worst] > bound[worst] + 1e-12:
            raise HypothesisError(f"|F(t,x,u,0,0)| = {values[worst]:.6g} supera "
                                  f"κ0(|u|+1) = {bound[worst]:.6g} en u={u[worst]:.4g}")


class _FrozenState:
    """u_{n-1} y su gradiente en cada instante (ceros si no hay iterado previo)"""

    def __init__(self, grid: Grid, trajectory: Optional[Trajectory]):
        self.grid = grid
        self.trajectory = trajectory
        self.largest_mean = 0.0
        self.values = lru_cache(maxsize=8)(self._values)

    def _values(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        if self.trajectory is None:
            return np.zeros(self.grid.shape), np.zeros((self.grid.dim,) + self.grid.shape)
        u = self.trajectory.at(t).values
        return u, grad(u, self.grid)


def gradient_problem(problem: NonlinearProblem, frozen: _FrozenState,
                     picard_seed: int = 0) -> QuasilinearProblem:
    """
    Sistema cuasi-lineal para w = ∇u con m = dim y argumento no local q = R w:

        ∂_t w + ∂_qF (-Δ)^{1/2}w - ∇_wF·∇w = ∂_uF·∇u_{n-1} + ∇_xF
    """
    grid = problem.grid
    x = grid.coordinates

    def diffusion(t, x_, w, r):
        u, _ = frozen.values(t)
        return problem.dF_dq(t, x, u, w, r[0])

    def drift(t, x_, w, r):
        u, _ = frozen.values(t)
        return -np.broadcast_to(problem.grad_w_F(t, x, u, w, r[0]), w.shape)

    def forcing(t, x_, w, r):
        u, du = frozen.values(t)
        source = np.broadcast_to(problem.grad_x_F(t, x, u, w, r[0]), w.shape)
        means = np.mean(source, axis=grid.axes)
        frozen.largest_mean = max(frozen.largest_mean, float(np.max(np.abs(means))))
        source = source - means[(...,) + (None,) * grid.dim]
        return np.broadcast_to(problem.dF_du(t, x, u, w, r[0]), u.shape) * du + source

    return QuasilinearProblem(grid, grid.dim, diffusion, drift, forcing, R_a=r_alpha(grid, 1.0),
                              R_b=r_alpha(grid, 1.0), R_f=r_alpha(grid, 1.0), a0=problem.a0,
                              a1=problem.a1, name=f"{problem.name}:gradiente")


def solve_gradient_system(phi: ScalarField, frozen_u: Optional[Trajectory], problem: NonlinearProblem,
                          stepper: StepperConfig = StepperConfig(),
                          picard: PicardConfig = PicardConfig()) -> QuasilinearResult:
    """
    Resuelve el sistema para w con w(0) = ∇φ.

    Args:
        phi: dato inicial de u
        frozen_u: iterado u_{n-1} (None equivale a u ≡ 0)
        problem: problema no lineal
        stepper: integrador (todas las instantáneas se conservan)
        picard: parámetros de la iteración interna

    Returns:
        QuasilinearResult: trayectoria de w y serie de convergencia interna
    """
    if phi.grid != problem.grid:
        raise GridError("El dato inicial y el problema usan mallas distintas")
    frozen = _FrozenState(problem.grid, frozen_u)
    w0 = VectorField(phi.grid, grad(phi.values, phi.grid))
    result = solve_quasilinear(w0, gradient_problem(problem, frozen), picard, stepper)
    if frozen.largest_mean > 1e-10:
        logger.warning(f"∇_xF tiene media no nula (hasta {frozen.largest_mean:.3e}); "
                       f"se resta para mantener la estructura de gradiente")
    return result


def _q_field(w: VectorField) -> np.ndarray:
    return r_alpha(w.grid, 1.0).apply_values(w.values)[0]


def reconstruct_u(phi: ScalarField, w: Trajectory, problem: NonlinearProblem,
                  frozen_u: Optional[Trajectory] = None) -> Trajectory:
    """
    u(t) = φ + ∫_0^t F(s, x, u_{n-1}(s), w(s), R w(s)) ds.

    Trapecio cuando w viene de Heun y rectángulo izquierdo con IMEX-Euler.
    """
    grid = phi.grid
    frozen = _FrozenState(grid, frozen_u)
    x = grid.coordinates
    rates = []
    for t, w_t in zip(w.times, w.fields):
        u_prev, _ = frozen.values(float(t))
        rates.append(np.broadcast_to(problem.F(float(t), x, u_prev, w_t.values, _q_field(w_t)), grid.shape))
    trapezoid = w.scheme == "heun"
    current = np.array(phi.values)
    fields = [phi]
    for k in range(1, len(w.times)):
        dt = w.times[k] - w.times[k - 1]
        increment = 0.5 * (rates[k - 1] + rates[k]) if trapezoid else rates[k - 1]
        current = current + dt * increment
        fields.append(ScalarField(grid, current))
    return Trajectory(grid, np.array(w.times), tuple(fields), np.zeros(len(fields)), w.dt, w.scheme)


@dataclass
class ConsistencyReport:
    """Residuos de consistencia entre u y w a lo largo del tiempo"""

    times: np.ndarray
    h_residual: np.ndarray
    h_relative: np.ndarray
    curl_residual: np.ndarray
    pde_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pde_residual: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def terminal_h(self) -> float:
        return float(self.h_residual[-1])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({
            "time": self.times,
            "h_residual": self.h_residual,
            "h_relative": self.h_relative,
            "curl_residual": self.curl_residual,
        })
        if len(self.pde_residual):
            pde = pd.DataFrame({"time": self.pde_times, "pde_residual": self.pde_residual})
            frame = frame.merge(pde, on="time", how="outer").sort_values("time", ignore_index=True)
        return frame


def check_consistency(u: Trajectory, w: Trajectory,
                      problem: Optional[NonlinearProblem] = None) -> ConsistencyReport:
    """
    Residuos h = ∇u - w, U = ∇w - (∇w)^t y, con el problema, ∂_t u - F por diferencias.

    Args:
        u: trayectoria escalar
        w: trayectoria vectorial con los mismos instantes
        problem: si se da, se calcula el residuo de la ecuación

    Returns:
        ConsistencyReport: series de residuos
    """
    if len(u) != len(w) or not np.allclose(u.times, w.times):
        raise ValueError("u y w deben compartir los instantes guardados")
    grid = u.grid
    h_abs, h_rel, curl = [], [], []
    for u_t, w_t in zip(u.fields, w.fields):
        h = grad(u_t.values, grid) - w_t.values
        residual = float(np.max(np.abs(h)))
        h_abs.append(residual)
        h_rel.append(residual / max(float(np.max(np.abs(w_t.values))), 1e-300))
        jacobian = grad(w_t.values, grid)
        curl.append(float(np.max(np.abs(jacobian - np.swapaxes(jacobian, 0, 1)))))
    report = ConsistencyReport(np.array(u.times), np.array(h_abs), np.array(h_rel), np.array(curl))
    if problem is not None and len(u) > 1:
        x = grid.coordinates
        rates = []
        for t, u_t in zip(u.times, u.fields):
            du = grad(u_t.values, grid)
            q = -half_laplacian(u_t.values, grid)
            rates.append(np.broadcast_to(problem.F(float(t), x, u_t.values, du, q), grid.shape))
        residual = []
        for k in range(1, len(u)):
            dt = u.times[k] - u.times[k - 1]
            difference = (u.fields[k].values - u.fields[k - 1].values) / dt - 0.5 * (rates[k] + rates[k - 1])
            residual.append(float(np.sqrt(np.sum(difference ** 2) * grid.cell_volume)))
        report.pde_times = 0.5 * (u.times[1:] + u.times[:-1])
        report.pde_residual = np.array(residual)
    return report


def consistency_tolerance(dt: float, t_end: float) -> float:
    """
    Umbral del residuo relativo de h al final de la integración.

    El residuo acumulado es de primer orden en dt con cualquiera de los dos
    esquemas, por eso la cota escala con dt y con la longitud del horizonte.
    """
    return CONSISTENCY_RATE * dt * max(1.0, t_end) + CONSISTENCY_FLOOR


@dataclass
class FullyNonlinearResult:
    """Resultado de la iteración externa en u"""

    u: Trajectory
    w: Trajectory
    consistency: ConsistencyReport
    sup_differences: List[float] = field(default_factory=list)
    converged: bool = False
    bound_satisfied: Optional[bool] = None
    consistent: bool = True

    def convergence_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "iteration": np.arange(1, len(self.sup_differences) + 1),
            "sup_difference": self.sup_differences,
        })


def resolve_step(phi: ScalarField, problem: NonlinearProblem, stepper: StepperConfig) -> StepperConfig:
    """Fija el paso una vez para que todas las iteraciones compartan los instantes"""
    grid = phi.grid
    w = grad(phi.values, grid)
    q = -half_laplacian(phi.values, grid)
    a = np.broadcast_to(problem.dF_dq(0.0, grid.coordinates, phi.values, w, q), grid.shape)
    b = -np.broadcast_to(problem.grad_w_F(0.0, grid.coordinates, phi.values, w, q), w.shape)
    _, dt = stepper.resolve(grid, a, b)
    return replace(stepper, dt=dt)


def solve_fully_nonlinear(phi: ScalarField, problem: NonlinearProblem,
                          stepper: StepperConfig = StepperConfig(),
                          picard: PicardConfig = PicardConfig(),
                          outer: PicardConfig = PicardConfig()) -> FullyNonlinearResult:
    """
    Iteración externa: congela u_{n-1}, resuelve w, reconstruye u_n.

    Se detiene cuando sup_t ‖u_n - u_{n-1}‖∞ < outer.tol_sup, o tras la primera
    iteración si F no depende de u.
    """
    if phi.grid != problem.grid:
        raise GridError("El dato inicial y el problema usan mallas distintas")
    fixed = resolve_step(phi, problem, stepper)
    logger.info(f"Resolviendo '{problem.name}' hasta t={stepper.t_end} con dt={fixed.dt:.3g}")
    frozen: Optional[Trajectory] = None
    differences: List[float] = []
    converged = False
    u = w = None
    for iteration in range(1, outer.max_iters + 1):
        w_result = solve_gradient_system(phi, frozen, problem, fixed, picard)
        if not w_result.converged:
            logger.warning(f"El sistema gradiente no convergió en la iteración externa {iteration}")
        w = w_result.trajectory
        u = reconstruct_u(phi, w, problem, frozen)
        previous = frozen.fields if frozen is not None else [phi * 0.0] * len(u)
        difference = float(max(np.max(np.abs(a.values - b.values)) for a, b in zip(u.fields, previous)))
        differences.append(difference)
        logger.debug(f"Iteración externa {iteration}: sup-diferencia {difference:.3e}")
        frozen = u
        if not problem.depends_on_u or difference < outer.tol_sup:
            converged = w_result.converged
            break
    if not converged:
        logger.warning(f"La iteración externa no convergió (última diferencia {differences[-1]:.3e})")
    consistency = check_consistency(u, w, problem)
    curl0 = float(consistency.curl_residual[0])
    consistent = (float(consistency.h_relative[-1]) <= consistency_tolerance(fixed.dt, fixed.t_end)
                  and float(consistency.curl_residual.max()) <= 10.0 * curl0 + 1e-10)
    if not consistent:
        logger.warning(f"Fallo de consistencia del gradiente: ‖∇u - w‖∞ relativo "
                       f"{consistency.h_relative[-1]:.3e}, rotacional máximo "
                       f"{consistency.curl_residual.max():.3e}")
    bound_satisfied = None
    if problem.kappa0 is not None:
        bound = math.exp(problem.kappa0) * (float(np.max(np.abs(phi.values))) + problem.kappa0)
        reached = float(u.diagnostics["sup_norm"].max())
        bound_satisfied = reached <= bound + 1e-6
        if not bound_satisfied:
            logger.error(f"Cota sup violada: {reached:.6g} > {bound:.6g}")
    stride = stepper.snapshot_stride
    return FullyNonlinearResult(u.subsample(stride) if stride > 1 else u,
                                w.subsample(stride) if stride > 1 else w,
                                consistency, differences, converged, bound_satisfied, consistent)


# --- Escenarios predefinidos ---

def _zeros_like_w(t, x, u, w, q):
    return np.zeros_like(w)


def _zero(t, x, u, w, q):
    return np.zeros_like(q)


def _one(t, x, u, w, q):
    return np.ones_like(q)


def _hamiltonian(w: np.ndarray) -> np.ndarray:
    return np.sqrt(1.0 + np.sum(w ** 2, axis=0))


def half_heat_problem(grid: Grid) -> NonlinearProblem:
    """F = q"""
    return NonlinearProblem(grid, lambda t, x, u, w, q: q, _one, _zeros_like_w, _zero, _zeros_like_w,
                            a0=1.0, a1=1.0, kappa0=0.0, depends_on_u=False, name="half-heat")


def hj_critical_problem(grid: Grid) -> NonlinearProblem:
    """F = q + √(1+|w|²)"""
    return NonlinearProblem(grid, lambda t, x, u, w, q: q + _hamiltonian(w), _one,
                            lambda t, x, u, w, q: w / _hamiltonian(w), _zero, _zeros_like_w,
                            a0=1.0, a1=1.0, kappa0=1.0, depends_on_u=False, name="hj-critical")


def reaction_problem(grid: Grid, rate: float = 1.0) -> NonlinearProblem:
    """F = q - r·u"""
    return NonlinearProblem(grid, lambda t, x, u, w, q: q - rate * u, _one, _zeros_like_w,
                            lambda t, x, u, w, q: np.full_like(q, -rate), _zeros_like_w,
                            a0=1.0, a1=1.0, kappa0=abs(rate), depends_on_u=rate != 0, name="reaction")


def remark_class_problem(grid: Grid, c_q: float = 1.0, c_s: float = 0.5, c_h: float = 1.0,
                         c_r: float = 1.0, c_0: float = 0.0) -> NonlinearProblem:
    """
    F = A(q) + H(w) + f(u) con A(q) = c_q·q + c_s·sin q, H(w) = c_h·√(1+|w|²)
    y f(u) = -c_r·u + c_0.
    """
    a0 = c_q - abs(c_s)
    if not a0 > 0:
        raise ValueError(f"Se necesita c_q > |c_s| para la elipticidad (c_q={c_q}, c_s={c_s})")

    def F(t, x, u, w, q):
        return c_q * q + c_s * np.sin(q) + c_h * _hamiltonian(w) - c_r * u + c_0

    return NonlinearProblem(
        grid, F,
        lambda t, x, u, w, q: c_q + c_s * np.cos(q),
        lambda t, x, u, w, q: c_h * w / _hamiltonian(w),
        lambda t, x, u, w, q: np.full_like(q, -c_r),
        _zeros_like_w,
        a0=a0, a1=c_q + abs(c_s), kappa0=max(abs(c_r), abs(c_h + c_0)),
        depends_on_u=c_r != 0, name="remark-class")


PRESETS: Dict[str, Callable[..., NonlinearProblem]] = {
    "half-heat": half_heat_problem,
    "hj-critical": hj_critical_problem,
    "reaction": reaction_problem,
    "remark-class": remark_class_problem,
}
