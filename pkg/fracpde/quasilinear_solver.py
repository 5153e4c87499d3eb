"""
Iteración de Picard para el sistema cuasi-lineal no local

    ∂_t u + a(t,x,u,R_a u)(-Δ)^{1/2}u + b(t,x,u,R_b u)·∇u = f(t,x,u,R_f u)

Cada iterado resuelve la ecuación lineal con los coeficientes congelados sobre
la trayectoria completa del iterado anterior, empezando por u ≡ 0.
Incluye los escenarios predefinidos "sqg" y "frozen-burgers-1d".
"""

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from errors import GridError, HypothesisError, SolverError
from linear_solver import StepperConfig, Trajectory, march
from spectral_core import Grid, MultiplierOp, ScalarField, VectorField, sqg_velocity

logger = logging.getLogger(__name__)

# Puntos de muestreo de la hipótesis de crecimiento por iteración
GROWTH_SAMPLES = 1000

# Callback (t, x, u, r) -> valores; x de forma (dim, ...), u (m, ...), r (k, ...)
Callback = Callable[[float, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def clamp_factor(magnitude: np.ndarray, radius: float) -> np.ndarray:
    """χ_R: 1 en |u| <= R, 0 en |u| >= 2R, lineal entre ambos"""
    return np.clip(2.0 - magnitude / radius, 0.0, 1.0)


@dataclass(frozen=True)
class PicardConfig:
    """
    Args:
        tol_sup: tolerancia en sup_t ‖u_n - u_{n-1}‖∞
        max_iters: máximo de iteraciones
        damping: γ en (0, 1], u_n <- (1-γ)u_{n-1} + γ·picard_step(u_{n-1})
        seed: semilla del muestreo de hipótesis
    """

    tol_sup: float = 1e-8
    max_iters: int = 50
    damping: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.tol_sup > 0:
            raise ValueError(f"tol_sup debe ser positiva, se recibió {self.tol_sup}")
        if not isinstance(self.max_iters, int) or self.max_iters < 1:
            raise ValueError(f"max_iters debe ser un entero >= 1, se recibió {self.max_iters}")
        if not 0 < self.damping <= 1:
            raise ValueError(f"damping debe estar en (0, 1], se recibió {self.damping}")


@dataclass(frozen=True)
class QuasilinearProblem:
    """
    Problema cuasi-lineal con argumentos no locales.

    Args:
        grid: malla
        m: tamaño del sistema
        a_fn: difusión a(t, x, u, r)
        b_fn: deriva b(t, x, u, r), dim componentes
        f_fn: forzamiento f(t, x, u, r), m componentes
        R_a: multiplicador k×m para el argumento r de a (None: sin argumento)
        R_b: multiplicador para el argumento de b
        R_f: multiplicador para el argumento de f
        a0: cota inferior de elipticidad
        a1: cota superior de a
        C_f: constante de crecimiento ⟨u, f⟩ <= C_f(|u|² + 1)
        hypothesis_check: muestrear la hipótesis de crecimiento en cada iteración
        f_clamp_radius: radio R del truncamiento χ_R de f (None: sin truncar)
        name: etiqueta del problema
    """

    grid: Grid
    m: int
    a_fn: Callback
    b_fn: Callback
    f_fn: Callback
    R_a: Optional[MultiplierOp] = None
    R_b: Optional[MultiplierOp] = None
    R_f: Optional[MultiplierOp] = None
    a0: float = 1.0
    a1: float = math.inf
    C_f: Optional[float] = None
    hypothesis_check: bool = False
    f_clamp_radius: Optional[float] = None
    name: str = "custom"

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"El sistema necesita m >= 1, se recibió {self.m}")
        if not self.a0 > 0:
            raise ValueError(f"a0 debe ser positivo, se recibió {self.a0}")
        for label, op in (("R_a", self.R_a), ("R_b", self.R_b), ("R_f", self.R_f)):
            if op is not None and (op.grid != self.grid or op.n_in != self.m):
                raise GridError(f"{label} debe actuar sobre {self.m} componentes en la misma malla")
        if self.f_clamp_radius is not None and not self.f_clamp_radius > 0:
            raise ValueError(f"El radio de truncamiento debe ser positivo, se recibió {self.f_clamp_radius}")

    def _nonlocal(self, op: Optional[MultiplierOp], u: np.ndarray) -> np.ndarray:
        if op is None:
            return np.zeros((0,) + u.shape[1:])
        return op.apply_values(u)

    def forcing(self, t: float, x: np.ndarray, u: np.ndarray, r: np.ndarray) -> np.ndarray:
        f = np.broadcast_to(self.f_fn(t, x, u, r), u.shape)
        if self.f_clamp_radius is None:
            return f
        return f * clamp_factor(np.sqrt(np.sum(u ** 2, axis=0)), self.f_clamp_radius)

    def frozen_coefficients(self, t: float, u: np.ndarray):
        """(a, b, f) evaluados sobre el estado u de forma (m, *shape)"""
        grid = self.grid
        x = grid.coordinates
        a = np.broadcast_to(self.a_fn(t, x, u, self._nonlocal(self.R_a, u)), grid.shape)
        b = np.broadcast_to(self.b_fn(t, x, u, self._nonlocal(self.R_b, u)), (grid.dim,) + grid.shape)
        f = self.forcing(t, x, u, self._nonlocal(self.R_f, u))
        return a, b, f

    def check_growth(self, state: Trajectory, rng: np.random.Generator,
                     iteration: Optional[int] = None, n_points: int = GROWTH_SAMPLES):
        """
        Comprueba ⟨u, f(t,x,u,r)⟩ <= C_f(|u|² + 1) en puntos aleatorios.

        La mitad de los puntos son estados de la trayectoria congelada y la otra
        mitad valores de u aleatorios en una bola que la contiene.
        """
        if self.C_f is None:
            return
        grid = self.grid
        n_state = n_points // 2
        snapshot_index = rng.integers(0, len(state), size=n_state)
        node_index = rng.integers(0, grid.size, size=n_state)
        u_samples, r_samples, t_samples = [], [], []
        for i, node in zip(snapshot_index, node_index):
            values = state.fields[i].values
            values = values[None] if values.ndim == grid.dim else values
            flat = values.reshape(self.m, -1)
            r_flat = self._nonlocal(self.R_f, values).reshape(-1, grid.size)
            u_samples.append(flat[:, node])
            r_samples.append(r_flat[:, node])
            t_samples.append(state.times[i])
        radius = 2.0 * max(1.0, max(float(np.max(np.abs(f.values))) for f in state.fields))
        n_random = n_points - n_state
        random_u = rng.uniform(-radius, radius, size=(n_random, self.m))
        k_f = self.R_f.n_out if self.R_f is not None else 0
        random_r = rng.normal(scale=radius, size=(n_random, k_f))
        u = np.concatenate([np.array(u_samples).reshape(n_state, self.m), random_u]).T
        r = np.concatenate([np.array(r_samples).reshape(n_state, k_f), random_r]).T
        times = np.concatenate([np.array(t_samples), rng.uniform(0, state.t_end, n_random)])
        nodes = np.concatenate([node_index, rng.integers(0, grid.size, size=n_random)])
        x = grid.coordinates.reshape(grid.dim, -1)[:, nodes]
        # Los callbacks se evalúan punto a punto en el tiempo para admitir f(t) escalares
        f = np.stack([np.broadcast_to(self.forcing(t, x[:, j:j + 1], u[:, j:j + 1], r[:, j:j + 1]),
                                      (self.m, 1))[:, 0] for j, t in enumerate(times)], axis=1)
        lhs = np.sum(u * f, axis=0)
        rhs = self.C_f * (np.sum(u ** 2, axis=0) + 1.0)
        worst = int(np.argmax(lhs - rhs))
        if lhs[worst] > rhs[worst] + 1e-12 * max(1.0, abs(rhs[worst])):
            raise HypothesisError(
                f"⟨u, f⟩ = {lhs[worst]:.6g} supera C_f(|u|²+1) = {rhs[worst]:.6g} "
                f"en t={times[worst]:.4g}", iteration=iteration)


@dataclass
class QuasilinearResult:
    """Resultado de la iteración de Picard"""

    trajectory: Trajectory
    sup_differences: List[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    bound_satisfied: Optional[bool] = None

    def convergence_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "iteration": np.arange(1, len(self.sup_differences) + 1),
            "sup_difference": self.sup_differences,
        })


def _as_state(phi, m: int):
    if isinstance(phi, VectorField):
        if len(phi) != m:
            raise GridError(f"El dato inicial tiene {len(phi)} componentes y el sistema {m}")
        return phi
    if m != 1:
        raise GridError(f"Un dato escalar no sirve para un sistema de {m} componentes")
    return phi


def picard_step(u_prev: Trajectory, problem: QuasilinearProblem, stepper: StepperConfig,
                phi=None, n_steps: Optional[int] = None, dt: Optional[float] = None,
                iteration: Optional[int] = None) -> Trajectory:
    """
    Un iterado de Picard: resuelve la ecuación lineal con coeficientes congelados en u_prev.

    Args:
        u_prev: trayectoria del iterado anterior sobre todo el horizonte
        problem: problema cuasi-lineal
        stepper: parámetros del integrador
        phi: dato inicial (por defecto, el inicial de u_prev)
        n_steps: número de pasos ya resuelto
        dt: paso ya resuelto
        iteration: índice de la iteración para los mensajes de error

    Returns:
        Trajectory: nuevo iterado
    """
    phi = _as_state(u_prev.initial if phi is None else phi, problem.m)

    @lru_cache(maxsize=4)
    def coefficients(t: float):
        values = u_prev.at(t).values
        return problem.frozen_coefficients(t, values[None] if values.ndim == problem.grid.dim else values)

    if n_steps is None or dt is None:
        n_steps, dt = u_prev.times.size - 1, u_prev.dt
    try:
        return march(problem.grid, phi, coefficients, problem.a0, problem.a1, stepper,
                     n_steps=n_steps, dt=dt)
    except SolverError as exc:
        if iteration is None:
            raise
        raise exc.with_iteration(iteration) from exc


def _zero_trajectory(phi, n_steps: int, dt: float, scheme: str) -> Trajectory:
    zero = phi * 0.0
    times = np.arange(n_steps + 1) * dt
    return Trajectory(phi.grid, times, (zero,) * (n_steps + 1), np.zeros(n_steps + 1), dt, scheme)


def _blend(previous: Trajectory, candidate: Trajectory, damping: float, phi) -> Trajectory:
    fields = [phi] + [p * (1.0 - damping) + c * damping
                      for p, c in zip(previous.fields[1:], candidate.fields[1:])]
    return replace(candidate, fields=tuple(fields))


def sup_bound(phi, C_f: float) -> float:
    """e^{C_f}(‖φ‖∞² + C_f)"""
    sup = float(np.max(np.abs(phi.values)))
    return math.exp(C_f) * (sup ** 2 + C_f)


def solve_quasilinear(phi, problem: QuasilinearProblem, picard: PicardConfig = PicardConfig(),
                      stepper: StepperConfig = StepperConfig()) -> QuasilinearResult:
    """
    Itera hasta sup_t ‖u_n - u_{n-1}‖∞ < tol_sup o hasta max_iters.

    La trayectoria del resultado guarda todos los pasos; el paso se resuelve una
    sola vez sobre los coeficientes evaluados en φ.
    """
    phi = _as_state(phi, problem.m)
    if phi.grid != problem.grid:
        raise GridError("El dato inicial y el problema usan mallas distintas")
    inner = replace(stepper, snapshot_stride=1)
    values = phi.values[None] if isinstance(phi, ScalarField) else phi.values
    a, b, _ = problem.frozen_coefficients(0.0, values)
    n_steps, dt = inner.resolve(problem.grid, a, b)
    logger.info(f"Picard '{problem.name}': {n_steps} pasos con dt={dt:.3g}, tol={picard.tol_sup:g}")
    rng = np.random.default_rng(picard.seed)
    previous = _zero_trajectory(phi, n_steps, dt, inner.scheme)
    differences: List[float] = []
    converged = False
    for iteration in range(1, picard.max_iters + 1):
        if problem.hypothesis_check:
            problem.check_growth(previous, rng, iteration)
        candidate = picard_step(previous, problem, inner, phi, n_steps, dt, iteration)
        if picard.damping < 1:
            candidate = _blend(previous, candidate, picard.damping, phi)
        difference = candidate.sup_difference(previous)
        differences.append(difference)
        logger.debug(f"Iteración {iteration}: sup-diferencia {difference:.3e}")
        previous = candidate
        if difference < picard.tol_sup:
            converged = True
            break
    if converged:
        logger.info(f"Picard convergió en {len(differences)} iteraciones")
    else:
        logger.warning(f"Picard no convergió en {picard.max_iters} iteraciones "
                       f"(última diferencia {differences[-1]:.3e})")
    bound_satisfied = None
    if problem.C_f is not None:
        bound = sup_bound(phi, problem.C_f)
        reached = float(previous.diagnostics["sup_norm"].max()) ** 2
        bound_satisfied = reached <= bound + 1e-6 * max(1.0, bound)
        if not bound_satisfied:
            logger.error(f"Cota sup violada: {reached:.6g} > {bound:.6g}")
    return QuasilinearResult(previous, differences, converged, len(differences), bound_satisfied)


# --- Escenarios predefinidos ---

def sqg_problem(grid: Grid, kappa: float = 1.0) -> QuasilinearProblem:
    """
    SQG crítico: ∂_tθ + κ(-Δ)^{1/2}θ + Rθ·∇θ = 0 con Rθ = ∇⊥(-Δ)^{-1/2}θ.
    """
    if grid.dim != 2:
        raise GridError("El escenario 'sqg' necesita dimensión 2")

    def diffusion(t, x, u, r):
        return kappa

    def drift(t, x, u, r):
        return r

    def forcing(t, x, u, r):
        return np.zeros_like(u)

    return QuasilinearProblem(grid, 1, diffusion, drift, forcing, R_b=sqg_velocity(grid),
                              a0=kappa, C_f=0.0, name="sqg")


def frozen_burgers_problem(grid: Grid, viscosity: float = 1.0) -> QuasilinearProblem:
    """Burgers crítico 1D: ∂_t u + ν(-Δ)^{1/2}u + u·∂_x u = 0"""
    if grid.dim != 1:
        raise GridError("El escenario 'frozen-burgers-1d' necesita dimensión 1")

    def diffusion(t, x, u, r):
        return viscosity

    def drift(t, x, u, r):
        return u

    def forcing(t, x, u, r):
        return np.zeros_like(u)

    return QuasilinearProblem(grid, 1, diffusion, drift, forcing, a0=viscosity, C_f=0.0,
                              name="frozen-burgers-1d")


PRESETS: Dict[str, Callable[..., QuasilinearProblem]] = {
    "sqg": sqg_problem,
    "frozen-burgers-1d": frozen_burgers_problem,
}
