"""
Normas y seminormas discretas usadas como diagnóstico de los resolvedores.

Incluye normas L^p, normas de Sobolev enteras y fraccionarias, la seminorma
de Hölder, la norma U^{k,p} = ‖f‖∞ + ‖∇f‖_{k,p} y los agregados temporales
X^{k,p}_t e Y^{k,p}_t sobre una serie de instantáneas.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from spectral_core import Grid, ScalarField, VectorField, forward, grad, inverse

logger = logging.getLogger(__name__)

Field = Union[ScalarField, VectorField]

# Tamaño máximo de malla para las sumas dobles exhaustivas
QUADRATURE_MAX_N = 128
HOLDER_EXHAUSTIVE_MAX_SHIFTS = QUADRATURE_MAX_N ** 2
HOLDER_RANDOM_SHIFTS = 10_000
HOLDER_SEED = 0


def _component_values(f: Field) -> np.ndarray:
    """Valores con un eje inicial de componentes, forma (m, *shape)"""
    return f.values[None] if isinstance(f, ScalarField) else f.values


def _magnitude(values: np.ndarray) -> np.ndarray:
    """Norma euclídea (Frobenius) punto a punto sobre el eje inicial"""
    return np.sqrt(np.sum(values ** 2, axis=0))


def _check_p(p: float):
    if not p >= 1:
        raise ValueError(f"Se necesita p >= 1, se recibió {p}")


def _lp(values: np.ndarray, grid: Grid, p: float) -> float:
    magnitude = _magnitude(values)
    if np.isinf(p):
        return float(magnitude.max())
    return float((np.sum(magnitude ** p) * grid.cell_volume) ** (1.0 / p))


def lp_norm(f: Field, p: float) -> float:
    """
    Norma L^p por cuadratura sobre la malla.

    Args:
        f: campo escalar o vectorial (módulo euclídeo punto a punto)
        p: exponente, p >= 1 (np.inf da la norma del supremo)

    Returns:
        float: (Σ|f|^p h^d)^{1/p}
    """
    _check_p(p)
    return _lp(_component_values(f), f.grid, p)


def sup_norm(f: Field) -> float:
    return float(_magnitude(_component_values(f)).max())


def _gradient_tensor(values: np.ndarray, grid: Grid, k: int) -> np.ndarray:
    """∇^k aplicado a (m, *shape); aplana los índices de derivada en el eje inicial"""
    for _ in range(k):
        values = grad(values, grid).reshape((-1,) + grid.shape)
    return values


def _shift_offsets(grid: Grid) -> np.ndarray:
    return np.array([o for o in np.ndindex(*grid.shape) if any(o)], dtype=np.int64)


def _quadrature_seminorm(values: np.ndarray, grid: Grid, s: float, p: float) -> float:
    """
    Doble suma de |g(x+y) - g(x)|^p / dist(y)^{d+sp} sobre todos los pares de nodos.
    """
    total = 0.0
    for offset in _shift_offsets(grid):
        shifted = np.roll(values, shift=tuple(-offset), axis=grid.axes)
        distance = float(grid.torus_distance(offset))
        total += np.sum(_magnitude(shifted - values) ** p) / distance ** (grid.dim + s * p)
    return float((total * grid.cell_volume ** 2) ** (1.0 / p))


def _check_quadrature_grid(grid: Grid):
    if grid.dim > 2 or grid.n_per_axis > QUADRATURE_MAX_N:
        raise ValueError(
            f"La cuadratura doble sólo está disponible en 1D/2D con N <= {QUADRATURE_MAX_N} "
            f"(malla {grid.dim}D con N={grid.n_per_axis}); use p=2 para la forma espectral")


@lru_cache(maxsize=32)
def fractional_calibration(grid: Grid, s: float) -> float:
    """
    Constante que iguala la forma espectral ‖(-Δ)^{s/2}g‖₂ con la doble suma (p=2).

    Se ajusta una vez por malla y orden sobre el modo de referencia cos(2πx₁/L).
    Si la malla supera el tope de la cuadratura se calibra en una malla reducida.
    """
    reference = grid
    if grid.dim > 2 or grid.n_per_axis > QUADRATURE_MAX_N:
        reference = Grid(grid.dim, min(grid.n_per_axis, 16 if grid.dim > 2 else 32), grid.period)
    mode = np.cos(2.0 * np.pi * reference.coordinates[0] / reference.period)[None]
    spectral = _lp(_fractional_power(mode, reference, s), reference, 2.0)
    quadrature = _quadrature_seminorm(mode, reference, s, 2.0)
    constant = quadrature / spectral
    logger.debug(f"Constante de calibración (N={grid.n_per_axis}, d={grid.dim}, s={s:g}): {constant:.6g}")
    return constant


def _fractional_power(values: np.ndarray, grid: Grid, s: float) -> np.ndarray:
    return inverse(forward(values, grid) * grid.xi_norm ** s, grid)


def sobolev_norm(f: Field, beta: float, p: float = 2.0) -> float:
    """
    Norma de Sobolev ‖f‖_{β,p}.

    Para β entero es la suma de ‖∇^k f‖_p con k <= β. Para β fraccionario se
    suma ‖f‖_p y, para cada k <= [β], la seminorma de orden {β} de ∇^k f:
    con p=2 por la forma espectral calibrada y con p≠2 por la doble suma
    (sólo 1D/2D y N <= 128). Un campo vectorial suma sus componentes.
    """
    if beta < 0:
        raise ValueError(f"Se necesita β >= 0, se recibió {beta}")
    _check_p(p)
    if isinstance(f, VectorField):
        return float(sum(sobolev_norm(c, beta, p) for c in f.components))
    grid = f.grid
    values = f.values[None]
    order = int(np.floor(beta))
    fraction = beta - order
    if fraction == 0:
        return float(sum(_lp(_gradient_tensor(values, grid, k), grid, p) for k in range(order + 1)))
    total = _lp(values, grid, p)
    if p == 2:
        constant = fractional_calibration(grid, fraction)
        for k in range(order + 1):
            derivative = _gradient_tensor(values, grid, k)
            total += constant * _lp(_fractional_power(derivative, grid, fraction), grid, 2.0)
        return float(total)
    _check_quadrature_grid(grid)
    for k in range(order + 1):
        total += _quadrature_seminorm(_gradient_tensor(values, grid, k), grid, fraction, p)
    return float(total)


def holder_estimate(f: Field, beta: float) -> Tuple[float, bool]:
    """
    Seminorma de Hölder sobre desplazamientos de la malla.

    Args:
        f: campo
        beta: exponente en (0, 1]

    Returns:
        Tuple[float, bool]: valor y si es sólo una cota inferior (muestreo aleatorio)
    """
    if not 0 < beta <= 1:
        raise ValueError(f"El exponente de Hölder debe estar en (0, 1], se recibió {beta}")
    grid = f.grid
    values = _component_values(f)
    if np.ptp(values) == 0:
        return 0.0, False
    lower_bound = grid.size > HOLDER_EXHAUSTIVE_MAX_SHIFTS
    if lower_bound:
        rng = np.random.default_rng(HOLDER_SEED)
        offsets = rng.integers(0, grid.n_per_axis, size=(HOLDER_RANDOM_SHIFTS, grid.dim))
        offsets = offsets[np.any(offsets != 0, axis=1)]
    else:
        offsets = _shift_offsets(grid)
    best = 0.0
    for offset in offsets:
        shifted = np.roll(values, shift=tuple(-offset), axis=grid.axes)
        increment = np.max(np.abs(shifted - values))
        best = max(best, increment / float(grid.torus_distance(offset)) ** beta)
    return float(best), lower_bound


def holder_seminorm(f: Field, beta: float) -> float:
    return holder_estimate(f, beta)[0]


def u_kp_norm(f: Field, k: int, p: float) -> float:
    """‖f‖_{U^{k,p}} = ‖f‖∞ + ‖∇f‖_{k,p} (suma por componentes del gradiente)"""
    values = _component_values(f)
    gradient = VectorField(f.grid, _gradient_tensor(values, f.grid, 1))
    return sup_norm(f) + sobolev_norm(gradient, k, p)


@dataclass
class NormReport:
    """Conjunto de normas de un campo en un instante"""

    lp: Dict[float, float] = field(default_factory=dict)
    sobolev: Dict[Tuple[float, float], float] = field(default_factory=dict)
    holder: Dict[float, float] = field(default_factory=dict)
    sup: float = 0.0
    u_kp: Dict[Tuple[int, float], float] = field(default_factory=dict)
    holder_lower_bound: bool = False

    def to_rows(self) -> List[Tuple[str, float]]:
        rows = [(f"lp_{p:g}", v) for p, v in self.lp.items()]
        rows += [(f"sobolev_{b:g}_{p:g}", v) for (b, p), v in self.sobolev.items()]
        rows += [(f"holder_{b:g}", v) for b, v in self.holder.items()]
        rows.append(("sup", self.sup))
        rows += [(f"u_kp_{k}_{p:g}", v) for (k, p), v in self.u_kp.items()]
        return rows

    def to_frame(self, time: float) -> pd.DataFrame:
        """Filas (time, norm, value) para los monitores de trayectoria"""
        rows = self.to_rows()
        return pd.DataFrame({
            "time": [time] * len(rows),
            "norm": [name for name, _ in rows],
            "value": [value for _, value in rows],
        })


def norm_report(f: Field, ps: Sequence[float] = (2.0,),
                sobolev: Sequence[Tuple[float, float]] = ((1.0, 2.0),),
                holders: Sequence[float] = (0.5,),
                u_kp: Sequence[Tuple[int, float]] = ((1, 2.0),)) -> NormReport:
    report = NormReport(sup=sup_norm(f))
    for p in ps:
        report.lp[p] = lp_norm(f, p)
    for beta, p in sobolev:
        report.sobolev[(beta, p)] = sobolev_norm(f, beta, p)
    for beta in holders:
        value, lower = holder_estimate(f, beta)
        report.holder[beta] = value
        report.holder_lower_bound |= lower
    for k, p in u_kp:
        report.u_kp[(k, p)] = u_kp_norm(f, k, p)
    return report


def y_norm(times: Sequence[float], fields: Sequence[Field], k: float, p: float) -> float:
    """‖u‖_{Y^{k,p}_t} = (∫_0^t ‖u(s)‖_{k,p}^p ds)^{1/p} por la regla del trapecio"""
    _check_p(p)
    if len(times) < 2:
        return 0.0
    values = np.array([sobolev_norm(f, k, p) ** p for f in fields])
    return float(trapezoid(values, np.asarray(times)) ** (1.0 / p))


def x_norm(times: Sequence[float], fields: Sequence[Field], k: int, p: float) -> float:
    """
    ‖u‖_{X^{k,p}_t} = sup_s ‖u(s)‖_{k-1,p} + ‖u‖_{Y^{k,p}_t} + ‖∂_t u‖_{Y^{k-1,p}_t}.

    La derivada temporal se aproxima por diferencias entre instantáneas consecutivas.
    """
    if k < 1:
        raise ValueError(f"La norma X^{{k,p}} necesita k >= 1, se recibió {k}")
    times = np.asarray(times, dtype=float)
    sup_part = max(sobolev_norm(f, k - 1, p) for f in fields)
    if len(times) < 2:
        return float(sup_part)
    derivatives = [(b - a) * (1.0 / (t1 - t0))
                   for a, b, t0, t1 in zip(fields[:-1], fields[1:], times[:-1], times[1:])]
    midpoints = 0.5 * (times[:-1] + times[1:])
    return float(sup_part + y_norm(times, fields, k, p) + y_norm(midpoints, derivatives, k - 1, p))
