"""
Resolvedor temporal de la ecuación lineal

    ∂_t u + a(t,x)(-Δ)^{1/2}u + b(t,x)·∇u = f(t,x)

sobre el toro. La parte rígida con coeficiente constante ā (media espacial de
a en el instante del paso) se integra exactamente con el semigrupo de Cauchy
y el resto, (a - ā)(-Δ)^{1/2}u + b·∇u, se trata de forma explícita con
productos desaliasados.

Esquemas disponibles:
- imex-euler: u⁺ = P_{ā dt}[u + dt·N(t, u)]
- heun: factor integrante con corrector trapezoidal (orden 2)
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from errors import DivergenceError, EllipticityError
from norms_diag import NormReport, holder_seminorm, norm_report, sup_norm, x_norm, y_norm
from spectral_core import (Grid, ScalarField, VectorField, forward, grad, half_laplacian,
                           inverse, product, semigroup_symbol)

logger = logging.getLogger(__name__)

SCHEMES = ("imex-euler", "heun")
EPSILON = 1e-12

Provider = Union[Callable[[float], np.ndarray], float, np.ndarray]
CoefficientFn = Callable[[float], Tuple[np.ndarray, np.ndarray, np.ndarray]]
Field = Union[ScalarField, VectorField]


def _evaluate(provider: Provider, t: float, shape: Tuple[int, ...]) -> np.ndarray:
    value = provider(t) if callable(provider) else provider
    return np.broadcast_to(np.asarray(value, dtype=float), shape)


@dataclass(frozen=True)
class LinearCoefficients:
    """
    Coeficientes de la ecuación lineal como proveedores t -> arreglo.

    Cada proveedor puede ser una función del tiempo o un valor fijo
    (escalar o arreglo) que se difunde a la forma de la malla.

    Args:
        grid: malla de trabajo
        a: difusión, forma (*shape)
        b: deriva, forma (dim, *shape)
        f: forzamiento, forma (*shape) o (m, *shape) para sistemas
        a0: cota inferior de elipticidad, a0 > 0
        a1: cota superior de a
    """

    grid: Grid
    a: Provider = 1.0
    b: Provider = 0.0
    f: Provider = 0.0
    a0: float = 1.0
    a1: float = math.inf

    def __post_init__(self):
        if not self.a0 > 0:
            raise ValueError(f"a0 debe ser positivo, se recibió {self.a0}")
        if self.a1 < self.a0:
            raise ValueError(f"a1={self.a1} es menor que a0={self.a0}")

    @classmethod
    def constant(cls, grid: Grid, a: float = 1.0, b: Sequence[float] = None,
                 f: float = 0.0, a0: Optional[float] = None) -> "LinearCoefficients":
        drift = np.zeros(grid.dim) if b is None else np.asarray(b, dtype=float).reshape(grid.dim)
        drift = drift[(...,) + (None,) * grid.dim]
        return cls(grid, a=a, b=drift, f=f, a0=a if a0 is None else a0)

    def evaluate(self, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        grid = self.grid
        a = _evaluate(self.a, t, grid.shape)
        b = _evaluate(self.b, t, (grid.dim,) + grid.shape)
        f = self.f(t) if callable(self.f) else self.f
        return a, b, np.asarray(f, dtype=float)


@dataclass(frozen=True)
class StepperConfig:
    """
    Parámetros del integrador temporal.

    Args:
        t_end: horizonte final
        dt: paso fijo o "auto"
        cfl: factor de seguridad en (0, 1]
        scheme: "imex-euler" o "heun"
        snapshot_stride: se guarda una instantánea cada tantos pasos
        max_dt: tope del paso automático
    """

    t_end: float = 1.0
    dt: Union[float, str] = "auto"
    cfl: float = 0.5
    scheme: str = "heun"
    snapshot_stride: int = 1
    max_dt: float = 1e-2

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError(f"t_end debe ser positivo, se recibió {self.t_end}")
        if self.dt != "auto" and not (isinstance(self.dt, (int, float)) and self.dt > 0):
            raise ValueError(f"dt debe ser positivo o 'auto', se recibió {self.dt!r}")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl debe estar en (0, 1], se recibió {self.cfl}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"Esquema desconocido '{self.scheme}', opciones: {SCHEMES}")
        if not isinstance(self.snapshot_stride, int) or self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride debe ser un entero >= 1, se recibió {self.snapshot_stride}")
        if not self.max_dt > 0:
            raise ValueError(f"max_dt debe ser positivo, se recibió {self.max_dt}")

    def stability_bound(self, grid: Grid, a: np.ndarray, b: np.ndarray) -> float:
        """cfl·min(h/(‖b‖∞+ε), 1/(‖a-ā‖∞·ξ_max+ε))"""
        spread = float(np.max(np.abs(a - np.mean(a))))
        drift = float(np.max(np.sqrt(np.sum(b ** 2, axis=0))))
        return self.cfl * min(grid.spacing / (drift + EPSILON), 1.0 / (spread * grid.xi_max + EPSILON))

    def resolve(self, grid: Grid, a: np.ndarray, b: np.ndarray) -> Tuple[int, float]:
        """
        Número de pasos y paso efectivo para cubrir [0, t_end] uniformemente.

        Returns:
            Tuple[int, float]: (n_steps, dt) con n_steps·dt = t_end
        """
        bound = self.stability_bound(grid, a, b)
        if self.dt == "auto":
            dt = min(self.max_dt, bound)
        else:
            dt = float(self.dt)
            if dt > bound:
                logger.warning(f"dt={dt:.3g} supera la cota de estabilidad estimada {bound:.3g}")
        n_steps = max(1, math.ceil(self.t_end / dt - 1e-9))
        return n_steps, self.t_end / n_steps


def estimate_modulus(values: np.ndarray, grid: Grid) -> float:
    """Módulo de continuidad discreto: mayor incremento sobre desplazamientos de una celda"""
    values = np.asarray(values, dtype=float)
    return float(max(np.max(np.abs(np.roll(values, 1, axis=axis) - values)) for axis in grid.axes))


def _semigroup(values: np.ndarray, grid: Grid, abar: float, dt: float) -> np.ndarray:
    return inverse(forward(values, grid) * semigroup_symbol(grid, abar, dt), grid)


def _remainder(u: np.ndarray, grid: Grid, a: np.ndarray, abar: float,
               b: np.ndarray, f: np.ndarray) -> np.ndarray:
    """N(u) = f - (a - ā)(-Δ)^{1/2}u - b·∇u con productos desaliasados"""
    out = np.broadcast_to(f, u.shape).copy()
    spread = a - abar
    if np.any(spread != 0):
        out -= product(spread, half_laplacian(u, grid), grid)
    if np.any(b != 0):
        du = grad(u, grid)
        for j in range(grid.dim):
            if np.any(b[j] != 0):
                out -= product(b[j], du[j], grid)
    return out


def _check_ellipticity(a: np.ndarray, a0: float, a1: float, step: int, t: float):
    low, high = float(a.min()), float(a.max())
    if low < a0:
        raise EllipticityError(f"a alcanza {low:.6g} < a0={a0:.6g}", step=step, time=t)
    if high > a1:
        raise EllipticityError(f"a alcanza {high:.6g} > a1={a1:.6g}", step=step, time=t)


def _advance(u: np.ndarray, t: float, dt: float, grid: Grid, coefficient_fn: CoefficientFn,
             a0: float, a1: float, scheme: str, step: int) -> Tuple[np.ndarray, float]:
    """Un paso del esquema; devuelve el nuevo estado y ∫‖f‖∞ sobre el paso"""
    a, b, f = coefficient_fn(t)
    _check_ellipticity(a, a0, a1, step, t)
    abar = float(np.mean(a))
    n0 = _remainder(u, grid, a, abar, b, f)
    f_norm = float(np.max(np.abs(f)))
    if scheme == "imex-euler":
        return _semigroup(u + dt * n0, grid, abar, dt), dt * f_norm
    predictor = _semigroup(u + dt * n0, grid, abar, dt)
    a_next, b_next, f_next = coefficient_fn(t + dt)
    _check_ellipticity(a_next, a0, a1, step, t + dt)
    n1 = _remainder(predictor, grid, a_next, abar, b_next, f_next)
    state = _semigroup(u + 0.5 * dt * n0, grid, abar, dt) + 0.5 * dt * n1
    return state, 0.5 * dt * (f_norm + float(np.max(np.abs(f_next))))


def _wrap(grid: Grid, values: np.ndarray, vector: bool) -> Field:
    return VectorField(grid, values) if vector else ScalarField(grid, values[0])


def march(grid: Grid, u0: Field, coefficient_fn: CoefficientFn, a0: float, a1: float,
          config: StepperConfig, n_steps: Optional[int] = None, dt: Optional[float] = None,
          log_moduli: bool = True) -> "Trajectory":
    """
    Motor de integración compartido por los resolvedores.

    Las componentes de un estado vectorial comparten a y b y avanzan juntas.

    Args:
        grid: malla
        u0: dato inicial escalar o vectorial
        coefficient_fn: t -> (a, b, f) como arreglos
        a0: cota inferior de elipticidad
        a1: cota superior de a
        config: parámetros del integrador
        n_steps: número de pasos ya resuelto (si no, se calcula con config)
        dt: paso ya resuelto (junto con n_steps)
        log_moduli: registrar los módulos de continuidad de a y b

    Returns:
        Trajectory: instantáneas, tiempos y diagnósticos
    """
    vector = isinstance(u0, VectorField)
    state = np.array(u0.values[None] if not vector else u0.values, dtype=float)
    if n_steps is None or dt is None:
        a, b, _ = coefficient_fn(0.0)
        n_steps, dt = config.resolve(grid, a, b)
        if log_moduli:
            logger.debug(f"Módulos discretos: ω_a={estimate_modulus(a, grid):.3g}, "
                         f"ω_b={max(estimate_modulus(bj, grid) for bj in b):.3g}")
    logger.debug(f"Integración {config.scheme}: {n_steps} pasos con dt={dt:.3g}")
    times = [0.0]
    fields = [u0]
    integrals = [0.0]
    accumulated = 0.0
    for step in range(n_steps):
        t = step * dt
        state, increment = _advance(state, t, dt, grid, coefficient_fn, a0, a1, config.scheme, step)
        accumulated += increment
        if not np.all(np.isfinite(state)):
            raise DivergenceError("El estado contiene NaN o Inf", step=step, time=t + dt)
        if (step + 1) % config.snapshot_stride == 0 or step + 1 == n_steps:
            times.append((step + 1) * dt)
            fields.append(_wrap(grid, state, vector))
            integrals.append(accumulated)
    return Trajectory(grid, np.array(times), tuple(fields), np.array(integrals), dt, config.scheme)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Serie inmutable de instantáneas de una integración.

    Args:
        grid: malla
        times: instantes guardados (incluye 0 y el instante final)
        fields: campos en esos instantes
        forcing_integral: ∫_0^t ‖f(s)‖∞ ds acumulada en cada instante
        dt: paso de integración efectivo
        scheme: esquema usado
    """

    grid: Grid
    times: np.ndarray
    fields: Tuple[Field, ...]
    forcing_integral: np.ndarray
    dt: float
    scheme: str = "heun"

    def __len__(self) -> int:
        return len(self.fields)

    @property
    def initial(self) -> Field:
        return self.fields[0]

    @property
    def terminal(self) -> Field:
        return self.fields[-1]

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @cached_property
    def diagnostics(self) -> pd.DataFrame:
        """Diagnósticos baratos por instantánea"""
        sup0 = sup_norm(self.initial)
        return pd.DataFrame({
            "time": self.times,
            "sup_norm": [sup_norm(f) for f in self.fields],
            "l2_norm": [float(np.sqrt(np.sum(f.values ** 2) * self.grid.cell_volume)) for f in self.fields],
            "max_value": [float(f.values.max()) for f in self.fields],
            "min_value": [float(f.values.min()) for f in self.fields],
            "mean": [float(np.mean(f.values)) for f in self.fields],
            "forcing_bound": sup0 + self.forcing_integral,
        })

    def holder_series(self, beta: float = 0.5) -> pd.Series:
        """Seminorma de Hölder por instantánea (se calcula al pedirla)"""
        return pd.Series([holder_seminorm(f, beta) for f in self.fields], index=self.times,
                         name=f"holder_{beta:g}")

    def norm_reports(self, **kwargs) -> List[NormReport]:
        return [norm_report(f, **kwargs) for f in self.fields]

    def norm_frame(self, **kwargs) -> pd.DataFrame:
        frames = [r.to_frame(t) for t, r in zip(self.times, self.norm_reports(**kwargs))]
        return pd.concat(frames, ignore_index=True)

    def path_norms(self, k: int = 1, p: float = 2.0) -> Dict[str, float]:
        """Agregados temporales ‖u‖_{Y^{k,p}_t} y ‖u‖_{X^{k,p}_t}"""
        return {"y": y_norm(self.times, self.fields, k, p),
                "x": x_norm(self.times, self.fields, k, p)}

    def sup_bound_excess(self, slack: float = 1e-6) -> float:
        """
        Exceso máximo de ‖u(t)‖∞ sobre ‖u₀‖∞ + ∫‖f‖∞ ds (negativo si la cota se cumple).
        """
        frame = self.diagnostics
        scale = max(1.0, float(frame["sup_norm"].iloc[0]))
        return float((frame["sup_norm"] - frame["forcing_bound"] - slack * scale).max())

    def at(self, t: float) -> Field:
        """Interpolación lineal en el tiempo entre instantáneas"""
        if t < -EPSILON or t > self.t_end + EPSILON:
            raise ValueError(f"t={t} fuera del horizonte [0, {self.t_end}]")
        index = int(np.searchsorted(self.times, t))
        if index < len(self.times) and abs(self.times[index] - t) <= EPSILON:
            return self.fields[index]
        if index == 0:
            return self.fields[0]
        if index >= len(self.times):
            return self.fields[-1]
        t0, t1 = self.times[index - 1], self.times[index]
        weight = (t - t0) / (t1 - t0)
        return self.fields[index - 1] * (1.0 - weight) + self.fields[index] * weight

    def subsample(self, stride: int) -> "Trajectory":
        """Conserva una instantánea de cada `stride`, siempre con la final"""
        keep = list(range(0, len(self.fields), stride))
        if keep[-1] != len(self.fields) - 1:
            keep.append(len(self.fields) - 1)
        return replace(self, times=self.times[keep], fields=tuple(self.fields[i] for i in keep),
                       forcing_integral=self.forcing_integral[keep])

    def sup_difference(self, other: "Trajectory") -> float:
        """sup_t ‖u(t) - v(t)‖∞ sobre instantes comunes"""
        if len(other) != len(self) or not np.allclose(other.times, self.times):
            raise ValueError("Las trayectorias no comparten instantes")
        return float(max(np.max(np.abs(a.values - b.values)) for a, b in zip(self.fields, other.fields)))


def step_linear(u: Field, t: float, dt: float, coeffs: LinearCoefficients,
                config: StepperConfig, step: int = 0) -> Field:
    """
    Un paso del esquema configurado desde el instante t.

    Args:
        u: estado actual (escalar o vectorial)
        t: instante actual
        dt: paso
        coeffs: coeficientes de la ecuación
        config: parámetros del integrador (se usa el esquema)
        step: índice del paso para los mensajes de error

    Returns:
        Field: estado en t + dt
    """
    vector = isinstance(u, VectorField)
    state = u.values if vector else u.values[None]
    new, _ = _advance(state, t, dt, coeffs.grid, coeffs.evaluate, coeffs.a0, coeffs.a1,
                      config.scheme, step)
    if not np.all(np.isfinite(new)):
        raise DivergenceError("El estado contiene NaN o Inf", step=step, time=t + dt)
    return _wrap(coeffs.grid, new, vector)


def solve_linear(u0: Field, coeffs: LinearCoefficients, config: StepperConfig) -> Trajectory:
    logger.info(f"Resolviendo la ecuación lineal hasta t={config.t_end} ({config.scheme})")
    trajectory = march(coeffs.grid, u0, coeffs.evaluate, coeffs.a0, coeffs.a1, config)
    logger.info(f"Integración lineal terminada: {len(trajectory)} instantáneas, dt={trajectory.dt:.3g}")
    return trajectory
