"""
Núcleo espectral sobre el toro periódico [0, L)^d.

Este módulo reúne las piezas sobre las que se apoyan todos los resolvedores:
1. Mallas periódicas y su retículo de números de onda
2. Transformadas de Fourier directa e inversa
3. Operadores no locales como multiplicadores de Fourier
   ((-Δ)^{α/2}, transformadas de Riesz, R^α, velocidad SQG)
4. Semigrupo de Cauchy y propagador desplazado por una deriva
5. El carré du champ asociado a (-Δ)^{1/2}
6. Un oráculo Monte Carlo basado en el proceso de Cauchy

Los campos y operadores son inmutables; todas las operaciones son funciones
puras de sus argumentos.
"""

import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Sequence, Tuple, Union

import numpy as np
from scipy import fft as sp_fft

from errors import FieldError, GridError, SymbolError

logger = logging.getLogger(__name__)

# Número mínimo de muestras aceptado por los estimadores Monte Carlo
MIN_MC_SAMPLES = 1000

# Entradas complejas por bloque al evaluar muestras Monte Carlo
MC_CHUNK_BUDGET = 2 ** 22

MC_EVALUATIONS = ("trig", "nearest")


def _read_only(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class Grid:
    """
    Malla uniforme del toro [0, L)^d.

    Args:
        dim: dimensión espacial (1, 2 o 3)
        n_per_axis: puntos por eje, potencia de dos mayor o igual que 8
        period: longitud L del período
    """

    dim: int
    n_per_axis: int
    period: float = 2.0 * np.pi

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or not 1 <= self.dim <= 3:
            raise GridError(f"La dimensión debe estar entre 1 y 3, se recibió {self.dim!r}")
        n = self.n_per_axis
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise GridError(f"n_per_axis debe ser potencia de dos >= 8, se recibió {n!r}")
        if not np.isfinite(self.period) or self.period <= 0:
            raise GridError(f"El período debe ser positivo y finito, se recibió {self.period!r}")

    @property
    def spacing(self) -> float:
        return self.period / self.n_per_axis

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.n_per_axis ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def axes(self) -> Tuple[int, ...]:
        """Ejes espaciales (los últimos `dim` ejes de cualquier arreglo de valores)"""
        return tuple(range(-self.dim, 0))

    @cached_property
    def mode_indices(self) -> np.ndarray:
        """Índices enteros k de cada modo, forma (dim, *shape)"""
        k = np.rint(sp_fft.fftfreq(self.n_per_axis) * self.n_per_axis).astype(np.int64)
        return _read_only(np.array(np.meshgrid(*([k] * self.dim), indexing="ij")))

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Números de onda ξ = 2πk/L de un eje"""
        return _read_only(2.0 * np.pi * sp_fft.fftfreq(self.n_per_axis, d=self.spacing))

    @cached_property
    def xi(self) -> np.ndarray:
        return _read_only(np.array(np.meshgrid(*([self.wavenumbers] * self.dim), indexing="ij")))

    @cached_property
    def xi_norm(self) -> np.ndarray:
        return _read_only(np.sqrt(np.sum(self.xi ** 2, axis=0)))

    @property
    def xi_max(self) -> float:
        return float(self.xi_norm.max())

    @cached_property
    def derivative_symbols(self) -> np.ndarray:
        """Símbolos iξ_j, anulados en la frecuencia de Nyquist para preservar datos reales"""
        nyquist = np.abs(self.mode_indices) == self.n_per_axis // 2
        return _read_only(np.where(nyquist, 0.0, 1j * self.xi))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Máscara de la regla de 2/3: conserva |k_j| < n/3 en cada eje"""
        keep = np.abs(self.mode_indices) < self.n_per_axis / 3.0
        return _read_only(np.all(keep, axis=0))

    @cached_property
    def coordinates(self) -> np.ndarray:
        x = np.arange(self.n_per_axis) * self.spacing
        return _read_only(np.array(np.meshgrid(*([x] * self.dim), indexing="ij")))

    @cached_property
    def node_indices(self) -> np.ndarray:
        return _read_only(np.indices(self.shape))

    def torus_distance(self, offsets: np.ndarray) -> np.ndarray:
        """
        Distancia en el toro asociada a desplazamientos enteros de nodos.

        Args:
            offsets: arreglo (..., dim) de desplazamientos en número de celdas

        Returns:
            np.ndarray: distancias euclídeas mínimas módulo el período
        """
        n = self.n_per_axis
        wrapped = np.abs(np.asarray(offsets)) % n
        wrapped = np.minimum(wrapped, n - wrapped)
        return np.sqrt(np.sum(wrapped.astype(float) ** 2, axis=-1)) * self.spacing


# --- Núcleos sobre arreglos (usados por los resolvedores) ---

def forward(values: np.ndarray, grid: Grid) -> np.ndarray:
    return sp_fft.fftn(values, axes=grid.axes)


def inverse(coefficients: np.ndarray, grid: Grid) -> np.ndarray:
    # La parte real equivale a proyectar sobre coeficientes con simetría hermítica
    return sp_fft.ifftn(coefficients, axes=grid.axes).real


def truncate(values: np.ndarray, grid: Grid) -> np.ndarray:
    return inverse(forward(values, grid) * grid.dealias_mask, grid)


def product(a: np.ndarray, b: np.ndarray, grid: Grid) -> np.ndarray:
    """Producto puntual desaliasado con la regla de 2/3"""
    return truncate(truncate(a, grid) * truncate(b, grid), grid)


def half_laplacian(values: np.ndarray, grid: Grid) -> np.ndarray:
    return inverse(forward(values, grid) * grid.xi_norm, grid)


def grad(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Gradiente espectral; añade un eje inicial de longitud dim"""
    coefficients = forward(values, grid)
    return np.stack([inverse(coefficients * s, grid) for s in grid.derivative_symbols])


def div(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Divergencia espectral; consume el eje inicial (de longitud dim)"""
    if values.shape[0] != grid.dim:
        raise GridError(f"La divergencia necesita {grid.dim} componentes, se recibieron {values.shape[0]}")
    coefficients = forward(values, grid)
    total = sum(s * coefficients[j] for j, s in enumerate(grid.derivative_symbols))
    return inverse(total, grid)


def semigroup_symbol(grid: Grid, lam: float, t: float) -> np.ndarray:
    return np.exp(-lam * t * grid.xi_norm)


def hermitian_part(symbol: np.ndarray, grid: Grid) -> np.ndarray:
    """Impone symbol(-ξ) = conj(symbol(ξ)) sobre los últimos `dim` ejes"""
    reflected = symbol
    index = (-np.arange(grid.n_per_axis)) % grid.n_per_axis
    for axis in grid.axes:
        reflected = np.take(reflected, index, axis=axis)
    return 0.5 * (symbol + np.conj(reflected))


# --- Campos ---

class _FieldArithmetic:
    """Aritmética lineal común a campos escalares y vectoriales"""

    grid: Grid
    values: np.ndarray

    def _with_values(self, values):
        return type(self)(self.grid, values)

    def _operand(self, other):
        if isinstance(other, _FieldArithmetic):
            if other.grid != self.grid:
                raise GridError("Los campos están definidos en mallas distintas")
            return other.values
        return other

    def __add__(self, other):
        return self._with_values(self.values + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._with_values(self.values - self._operand(other))

    def __mul__(self, other):
        return self._with_values(self.values * self._operand(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self._with_values(-self.values)

    def mean(self):
        return np.mean(self.values, axis=self.grid.axes)

    @cached_property
    def coefficients(self) -> np.ndarray:
        """Coeficientes espectrales (caché perezosa)"""
        return _read_only(forward(self.values, self.grid))


@dataclass(frozen=True, eq=False)
class ScalarField(_FieldArithmetic):
    """Muestras reales de una función sobre los nodos de la malla"""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise FieldError(f"Forma {values.shape} incompatible con la malla {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise FieldError("El campo contiene valores no finitos (NaN o Inf)")
        object.__setattr__(self, "values", _read_only(values))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "ScalarField":
        """Evalúa fn(x_1, ..., x_d) sobre los nodos"""
        return cls(grid, np.broadcast_to(fn(*grid.coordinates), grid.shape))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    def mean(self) -> float:
        return float(np.mean(self.values))


@dataclass(frozen=True, eq=False)
class VectorField(_FieldArithmetic):
    """Campo con m componentes escalares sobre una misma malla, forma (m, *shape)"""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != self.grid.dim + 1 or values.shape[1:] != self.grid.shape:
            raise FieldError(f"Forma {values.shape} incompatible con (m, {self.grid.shape})")
        if not np.all(np.isfinite(values)):
            raise FieldError("El campo contiene valores no finitos (NaN o Inf)")
        object.__setattr__(self, "values", _read_only(values))

    @classmethod
    def from_components(cls, components: Sequence[ScalarField]) -> "VectorField":
        if not components:
            raise FieldError("Un campo vectorial necesita al menos una componente")
        grid = components[0].grid
        if any(c.grid != grid for c in components):
            raise GridError("Todas las componentes deben compartir la misma malla")
        return cls(grid, np.stack([c.values for c in components]))

    @property
    def components(self) -> Tuple[ScalarField, ...]:
        return tuple(ScalarField(self.grid, v) for v in self.values)

    def __len__(self) -> int:
        return self.values.shape[0]


Field = Union[ScalarField, VectorField]


def _rebuild(f: Field, values: np.ndarray) -> Field:
    return type(f)(f.grid, values)


def _check_same_grid(*fields: Field) -> Grid:
    grid = fields[0].grid
    for other in fields[1:]:
        if other.grid != grid:
            raise GridError("Los campos están definidos en mallas distintas")
    return grid


def band_limited_field(grid: Grid, rng: np.random.Generator, k_max: int,
                       amplitude: float = 1.0) -> ScalarField:
    """
    Polinomio trigonométrico aleatorio con modos |k_j| <= k_max.

    Los coeficientes no dependen de la malla, así que la misma función puede
    muestrearse en mallas refinadas usando un generador con la misma semilla.
    """
    if 2 * k_max >= grid.n_per_axis:
        raise GridError(f"k_max={k_max} no cabe en una malla de {grid.n_per_axis} puntos")
    modes = np.arange(-k_max, k_max + 1)
    wave_vectors = np.array(np.meshgrid(*([modes] * grid.dim), indexing="ij")).reshape(grid.dim, -1).T
    coefficients = rng.standard_normal(len(wave_vectors)) + 1j * rng.standard_normal(len(wave_vectors))
    values = np.zeros(grid.shape)
    scale = 2.0 * np.pi / grid.period
    for k, c in zip(wave_vectors, coefficients):
        phase = scale * np.tensordot(k.astype(float), grid.coordinates, axes=1)
        values += (c * np.exp(1j * phase)).real
    return ScalarField(grid, amplitude * values / np.sqrt(len(wave_vectors)))


# --- Transformadas ---

def transform_forward(f: ScalarField) -> np.ndarray:
    """
    Coeficientes espectrales de un campo escalar.

    Args:
        f: campo escalar

    Returns:
        np.ndarray: coeficientes complejos con la disposición de la malla
    """
    if not np.all(np.isfinite(f.values)):
        raise FieldError("No se puede transformar un campo con valores no finitos")
    return np.array(f.coefficients)


def transform_inverse(coefficients: np.ndarray, grid: Grid) -> ScalarField:
    coefficients = np.asarray(coefficients)
    if coefficients.shape != grid.shape:
        raise GridError(f"Coeficientes de forma {coefficients.shape} no encajan en la malla {grid.shape}")
    if not np.all(np.isfinite(coefficients)):
        raise FieldError("Los coeficientes contienen valores no finitos")
    return ScalarField(grid, inverse(coefficients, grid))


def parseval_sum(coefficients: np.ndarray, grid: Grid) -> float:
    """Suma normalizada de |c|^2 que iguala a sum |f|^2 h^d"""
    return float(grid.cell_volume * np.sum(np.abs(coefficients) ** 2) / grid.size)


# --- Multiplicadores de Fourier ---

@dataclass(frozen=True, eq=False)
class MultiplierOp:
    """
    Operador definido por un símbolo sobre el retículo de números de onda.

    El símbolo se guarda con forma (n_out, n_in, *shape); un símbolo escalar se
    promueve a (1, 1, *shape). En construcción se fija el valor en ξ = 0,
    se rechazan puntos no definidos y se impone la simetría hermítica para que
    los campos reales vayan a campos reales.

    Args:
        name: etiqueta del operador
        grid: malla sobre la que actúa
        symbol: valores del símbolo
        zero_mode_rule: valor declarado en ξ = 0 (por la identidad si es cuadrado)
    """

    name: str
    grid: Grid
    symbol: np.ndarray
    zero_mode_rule: complex = 0.0

    def __post_init__(self):
        symbol = np.array(self.symbol, dtype=complex)
        if symbol.ndim == self.grid.dim:
            symbol = symbol[None, None]
        if symbol.ndim != self.grid.dim + 2 or symbol.shape[2:] != self.grid.shape:
            raise GridError(f"Símbolo de forma {symbol.shape} incompatible con la malla {self.grid.shape}")
        n_out, n_in = symbol.shape[:2]
        zero = (slice(None), slice(None)) + (0,) * self.grid.dim
        if n_out == n_in:
            symbol[zero] = self.zero_mode_rule * np.eye(n_out)
        elif self.zero_mode_rule != 0:
            raise SymbolError(f"'{self.name}' no es cuadrado: su valor en ξ=0 debe ser 0")
        else:
            symbol[zero] = 0.0
        undefined = int(np.count_nonzero(~np.isfinite(symbol)))
        if undefined:
            raise SymbolError(f"El símbolo de '{self.name}' no está definido en {undefined} puntos del retículo")
        object.__setattr__(self, "symbol", _read_only(hermitian_part(symbol, self.grid)))

    @classmethod
    def from_symbol(cls, name: str, grid: Grid, fn: Callable[[np.ndarray], np.ndarray],
                    zero_mode_rule: complex = 0.0) -> "MultiplierOp":
        """Construye el operador evaluando fn(ξ) con ξ de forma (dim, *shape)"""
        with np.errstate(divide="ignore", invalid="ignore"):
            symbol = fn(np.asarray(grid.xi))
        return cls(name, grid, symbol, zero_mode_rule)

    @property
    def n_out(self) -> int:
        return self.symbol.shape[0]

    @property
    def n_in(self) -> int:
        return self.symbol.shape[1]

    def apply_coefficients(self, coefficients: np.ndarray) -> np.ndarray:
        return np.einsum("oi...,i...->o...", self.symbol, coefficients)

    def apply_values(self, values: np.ndarray) -> np.ndarray:
        """Aplica el operador a un arreglo (n_in, *shape) y devuelve (n_out, *shape)"""
        if values.shape[0] != self.n_in:
            raise GridError(f"'{self.name}' espera {self.n_in} componentes, recibió {values.shape[0]}")
        return inverse(self.apply_coefficients(forward(values, self.grid)), self.grid)

    def compose(self, other: "MultiplierOp") -> "MultiplierOp":
        """Composición self ∘ other (producto de símbolos)"""
        if other.grid != self.grid:
            raise GridError("No se pueden componer operadores de mallas distintas")
        if self.n_in != other.n_out:
            raise GridError(f"Dimensiones incompatibles: {self.name} ∘ {other.name}")
        symbol = np.einsum("ij...,jk...->ik...", self.symbol, other.symbol)
        square = self.n_out == other.n_in
        rule = self.zero_mode_rule * other.zero_mode_rule if square else 0.0
        return MultiplierOp(f"{self.name}∘{other.name}", self.grid, symbol, rule)


@lru_cache(maxsize=64)
def fractional_laplacian(grid: Grid, alpha: float) -> MultiplierOp:
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha debe estar en (0, 2), se recibió {alpha}")
    return MultiplierOp.from_symbol(f"(-Δ)^{alpha / 2:g}", grid,
                                    lambda xi: np.sqrt(np.sum(xi ** 2, axis=0)) ** alpha)


@lru_cache(maxsize=64)
def riesz_potential(grid: Grid, beta: float) -> MultiplierOp:
    """(-Δ)^{-β/2}, nulo sobre las constantes"""
    if beta <= 0.0:
        raise ValueError(f"beta debe ser positivo, se recibió {beta}")
    return MultiplierOp.from_symbol(f"(-Δ)^-{beta / 2:g}", grid,
                                    lambda xi: np.sqrt(np.sum(xi ** 2, axis=0)) ** (-beta))


@lru_cache(maxsize=64)
def riesz_transform(grid: Grid, j: int) -> MultiplierOp:
    if not 0 <= j < grid.dim:
        raise ValueError(f"Índice de Riesz {j} fuera de rango para dim={grid.dim}")
    return MultiplierOp.from_symbol(f"R_{j + 1}", grid,
                                    lambda xi: 1j * xi[j] / np.sqrt(np.sum(xi ** 2, axis=0)))


@lru_cache(maxsize=64)
def r_alpha(grid: Grid, alpha: float = 1.0) -> MultiplierOp:
    """R^α = (-Δ)^{(α-2)/2} div, de campos vectoriales a escalares"""
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha debe estar en (0, 2], se recibió {alpha}")

    def symbol(xi):
        return (1j * xi * np.sqrt(np.sum(xi ** 2, axis=0)) ** (alpha - 2.0))[None]

    return MultiplierOp.from_symbol(f"R^{alpha:g}", grid, symbol)


@lru_cache(maxsize=8)
def sqg_velocity(grid: Grid) -> MultiplierOp:
    """∇⊥(-Δ)^{-1/2} con ∇⊥ = (-∂_2, ∂_1); sólo en dimensión 2"""
    if grid.dim != 2:
        raise GridError("El operador de velocidad SQG sólo existe en dimensión 2")

    def symbol(xi):
        norm = np.sqrt(np.sum(xi ** 2, axis=0))
        return np.stack([-1j * xi[1] / norm, 1j * xi[0] / norm])[:, None]

    return MultiplierOp.from_symbol("∇⊥(-Δ)^-1/2", grid, symbol)


@lru_cache(maxsize=8)
def gradient_op(grid: Grid) -> MultiplierOp:
    return MultiplierOp.from_symbol("∇", grid, lambda xi: (1j * xi)[:, None])


@lru_cache(maxsize=8)
def divergence_op(grid: Grid) -> MultiplierOp:
    return MultiplierOp.from_symbol("div", grid, lambda xi: (1j * xi)[None])


@lru_cache(maxsize=8)
def box_symbol_op(grid: Grid) -> MultiplierOp:
    """□ = div∇ - ∇div; idénticamente nulo en dimensión 1"""

    def symbol(xi):
        outer = xi[:, None] * xi[None, :]
        return outer - np.eye(grid.dim)[(...,) + (None,) * grid.dim] * np.sum(xi ** 2, axis=0)

    return MultiplierOp.from_symbol("□", grid, symbol)


def apply_multiplier(op: MultiplierOp, f: Field) -> Field:
    """
    Aplica un multiplicador a un campo.

    Un operador escalar (1x1) actúa componente a componente sobre un campo
    vectorial. Si el operador devuelve una sola componente a partir de
    varias (div, R^α) el resultado es escalar.
    """
    if op.grid != f.grid:
        raise GridError(f"'{op.name}' y el campo están definidos en mallas distintas")
    coefficients = f.coefficients[None] if isinstance(f, ScalarField) else f.coefficients
    if op.n_in == 1 and op.n_out == 1 and coefficients.shape[0] != 1:
        return VectorField(f.grid, inverse(coefficients * op.symbol[0, 0], f.grid))
    if coefficients.shape[0] != op.n_in:
        raise GridError(f"'{op.name}' espera {op.n_in} componentes, recibió {coefficients.shape[0]}")
    out = inverse(op.apply_coefficients(coefficients), f.grid)
    if out.shape[0] == 1 and (isinstance(f, ScalarField) or op.n_in > 1):
        return ScalarField(f.grid, out[0])
    return VectorField(f.grid, out)


def gradient(f: ScalarField) -> VectorField:
    return VectorField(f.grid, grad(f.values, f.grid))


def divergence(v: VectorField) -> ScalarField:
    return ScalarField(v.grid, div(v.values, v.grid))


def box_op(v: VectorField) -> VectorField:
    if len(v) != v.grid.dim:
        raise GridError(f"□ actúa sobre campos de {v.grid.dim} componentes")
    return apply_multiplier(box_symbol_op(v.grid), v)


def carre_du_champ(f: ScalarField, g: ScalarField) -> ScalarField:
    """
    E(f, g) = g(-Δ)^{1/2}f + f(-Δ)^{1/2}g - (-Δ)^{1/2}(fg).

    Todos los productos se desalian con la regla de 2/3.
    """
    grid = _check_same_grid(f, g)
    lf = half_laplacian(f.values, grid)
    lg = half_laplacian(g.values, grid)
    fg = product(f.values, g.values, grid)
    values = product(g.values, lf, grid) + product(f.values, lg, grid) - half_laplacian(fg, grid)
    return ScalarField(grid, values)


def _check_time_args(**kwargs):
    for name, value in kwargs.items():
        if not np.isfinite(value) or value < 0:
            raise ValueError(f"{name} debe ser finito y no negativo, se recibió {value}")


def cauchy_semigroup(lam: float, t: float, f: Field) -> Field:
    """Semigrupo de Cauchy P^λ_t: multiplica cada modo por e^{-λt|ξ|}"""
    _check_time_args(lam=lam, t=t)
    if lam == 0 or t == 0:
        return f
    return _rebuild(f, inverse(f.coefficients * semigroup_symbol(f.grid, lam, t), f.grid))


def shifted_propagator(lam: float, theta: Sequence[float], t: float, s: float,
                       f: Field) -> Field:
    """
    Propagador de ∂_t v + λ(-Δ)^{1/2}v + θ·∇v = 0 desde s hasta t.

    Equivale al semigrupo de Cauchy compuesto con la traslación x -> x - θ(t-s).

    Args:
        lam: coeficiente de difusión λ >= 0
        theta: deriva constante (vector de longitud dim)
        t: instante final
        s: instante inicial, s <= t
        f: dato en el instante s

    Returns:
        Field: solución en el instante t
    """
    if s > t:
        raise ValueError(f"El propagador necesita s <= t, se recibió s={s}, t={t}")
    tau = t - s
    _check_time_args(lam=lam, tau=tau)
    theta = np.asarray(theta, dtype=float).reshape(f.grid.dim)
    phase = np.tensordot(theta, f.grid.xi, axes=1)
    symbol = np.exp(-lam * tau * f.grid.xi_norm - 1j * tau * phase)
    return _rebuild(f, inverse(f.coefficients * symbol, f.grid))


def propagate_piecewise(segments: Iterable[Tuple[float, Sequence[float], float]], f: Field) -> Field:
    """Compone propagadores con λ(·), θ(·) constantes a trozos: (λ, θ, duración)"""
    for lam, theta, duration in segments:
        f = shifted_propagator(lam, theta, duration, 0.0, f)
    return f


# --- Oráculo Monte Carlo ---

@dataclass(frozen=True)
class CauchySampler:
    """
    Generador de incrementos del proceso de Cauchy isótropo.

    El incremento sobre un tiempo s se obtiene como s·Z/|N| (Z normal estándar
    d-dimensional, N normal escalar independiente): una t de Student
    multivariante con un grado de libertad, cuya densidad es el núcleo de Poisson.
    Cada llamada reinicia el generador, así que la salida sólo depende de la semilla.
    """

    rng_seed: int
    scale: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if not np.isfinite(self.scale) or self.scale < 0:
            raise ValueError(f"La escala debe ser no negativa, se recibió {self.scale}")
        if not 1 <= self.dim <= 3:
            raise ValueError(f"La dimensión debe estar entre 1 y 3, se recibió {self.dim}")

    def increments(self, t: float, n_samples: int) -> np.ndarray:
        rng = np.random.default_rng(self.rng_seed)
        z = rng.standard_normal((n_samples, self.dim))
        denominator = np.abs(rng.standard_normal(n_samples))
        return self.scale * t * z / denominator[:, None]


def _shifted_samples(grid: Grid, values: np.ndarray, coefficients: np.ndarray,
                     shifts: np.ndarray, evaluation: str) -> np.ndarray:
    """Evalúa g(x + y) en todos los nodos para cada desplazamiento y del bloque"""
    if evaluation == "trig":
        phase = np.exp(1j * np.tensordot(shifts, grid.xi, axes=(1, 0)))
        return inverse(coefficients * phase, grid)
    n = grid.n_per_axis
    offsets = np.rint(shifts / grid.spacing).astype(np.int64) % n
    expand = (-1,) + (1,) * grid.dim
    index = tuple((grid.node_indices[j][None] + offsets[:, j].reshape(expand)) % n
                  for j in range(grid.dim))
    return values[index]


def _mc_average(base: ScalarField, shifts: np.ndarray,
                evaluation: str) -> Tuple[ScalarField, ScalarField]:
    grid = base.grid
    n_samples = len(shifts)
    chunk = max(1, MC_CHUNK_BUDGET // grid.size)
    total = np.zeros(grid.shape)
    total_sq = np.zeros(grid.shape)
    # Se acumulan desviaciones respecto de base, en orden fijo de bloques
    for start in range(0, n_samples, chunk):
        deviation = _shifted_samples(grid, base.values, base.coefficients,
                                     shifts[start:start + chunk], evaluation) - base.values
        total += deviation.sum(axis=0)
        total_sq += (deviation ** 2).sum(axis=0)
    mean_deviation = total / n_samples
    variance = np.maximum(total_sq - n_samples * mean_deviation ** 2, 0.0) / (n_samples - 1)
    estimate = ScalarField(grid, base.values + mean_deviation)
    return estimate, ScalarField(grid, np.sqrt(variance / n_samples))


def _check_mc_args(sampler: CauchySampler, f: ScalarField, n_samples: int, evaluation: str):
    if n_samples < MIN_MC_SAMPLES:
        raise ValueError(f"Se necesitan al menos {MIN_MC_SAMPLES} muestras, se pidieron {n_samples}")
    if evaluation not in MC_EVALUATIONS:
        raise ValueError(f"Evaluación desconocida '{evaluation}', opciones: {MC_EVALUATIONS}")
    if sampler.dim != f.grid.dim:
        raise GridError(f"El muestreador es {sampler.dim}D y el campo {f.grid.dim}D")


def mc_semigroup(sampler: CauchySampler, lam: float, t: float, f: ScalarField,
                 n_samples: int, evaluation: str = "trig") -> Tuple[ScalarField, ScalarField]:
    """
    Estimador Monte Carlo de P^λ_t f(x) = E f(x + λL_t).

    Args:
        sampler: generador de incrementos de Cauchy
        lam: escala λ >= 0
        t: tiempo t >= 0
        f: campo a propagar
        n_samples: número de muestras (>= MIN_MC_SAMPLES)
        evaluation: 'trig' (interpolación trigonométrica) o 'nearest' (nodo más cercano)

    Returns:
        Tuple[ScalarField, ScalarField]: estimación y error estándar por punto
    """
    _check_mc_args(sampler, f, n_samples, evaluation)
    _check_time_args(lam=lam, t=t)
    if lam == 0 or t == 0 or np.ptp(f.values) == 0:
        return f, ScalarField.constant(f.grid, 0.0)
    shifts = lam * sampler.increments(t, n_samples)
    return _mc_average(f, shifts, evaluation)


def mc_shifted_propagator(sampler: CauchySampler, lam: float, lam0: float,
                          theta: Sequence[float], t: float, s: float, f: ScalarField,
                          n_samples: int, evaluation: str = "trig") -> Tuple[ScalarField, ScalarField]:
    """
    Estimador del propagador desplazado como E P^{λ0}_{t-s} f(x - X_t + X_s).

    Con deriva constante, X_t - X_s = θ(t-s) - (λ-λ0)·ΔL, donde ΔL es un
    incremento de Cauchy independiente del semigrupo de escala λ0.
    """
    _check_mc_args(sampler, f, n_samples, evaluation)
    if s > t:
        raise ValueError(f"El propagador necesita s <= t, se recibió s={s}, t={t}")
    if not 0 <= lam0 <= lam:
        raise ValueError(f"Se necesita 0 <= λ0 <= λ, se recibió λ0={lam0}, λ={lam}")
    tau = t - s
    base = cauchy_semigroup(lam0, tau, f)
    if np.ptp(f.values) == 0:
        return base, ScalarField.constant(f.grid, 0.0)
    theta = np.asarray(theta, dtype=float).reshape(f.grid.dim)
    shifts = -theta * tau + (lam - lam0) * sampler.increments(tau, n_samples)
    return _mc_average(base, shifts, evaluation)
