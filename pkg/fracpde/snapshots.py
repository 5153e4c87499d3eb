"""
Persistencia de campos: formato binario FPDE, exportación CSV y mapas de calor PPM.

Formato FPDE (little-endian):
    b"FPDE" | versión u16 | dim u16 | n_per_axis u32 por eje | período f64 | valores f64 (row-major)
"""

import logging
import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import pandas as pd

from errors import FieldError, GridError
from spectral_core import Grid, ScalarField

logger = logging.getLogger(__name__)

MAGIC = b"FPDE"
VERSION = 1
_PREFIX = struct.Struct("<4sHH")
_PERIOD = struct.Struct("<d")

PathLike = Union[str, Path]


def encode_snapshot(field: ScalarField) -> bytes:
    grid = field.grid
    header = _PREFIX.pack(MAGIC, VERSION, grid.dim)
    header += struct.pack(f"<{grid.dim}I", *grid.shape)
    header += _PERIOD.pack(grid.period)
    return header + np.ascontiguousarray(field.values, dtype="<f8").tobytes()


def decode_snapshot(data: bytes) -> ScalarField:
    """
    Reconstruye un campo a partir de los bytes de un fichero FPDE.

    Args:
        data: contenido completo del fichero

    Returns:
        ScalarField: campo con su malla
    """
    if len(data) < _PREFIX.size:
        raise FieldError("Fichero FPDE truncado: cabecera incompleta")
    magic, version, dim = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise FieldError(f"Firma inválida {magic!r}, se esperaba {MAGIC!r}")
    if version != VERSION:
        raise FieldError(f"Versión FPDE {version} no soportada")
    offset = _PREFIX.size
    if not 1 <= dim <= 3:
        raise GridError(f"Dimensión {dim} fuera de rango en la cabecera")
    sizes = struct.unpack_from(f"<{dim}I", data, offset)
    offset += 4 * dim
    if len(set(sizes)) != 1:
        raise GridError(f"Sólo se admiten mallas con el mismo número de puntos por eje: {sizes}")
    (period,) = _PERIOD.unpack_from(data, offset)
    offset += _PERIOD.size
    grid = Grid(dim, sizes[0], period)
    expected = offset + 8 * grid.size
    if len(data) != expected:
        raise FieldError(f"Tamaño de fichero {len(data)} distinto del esperado {expected}")
    values = np.frombuffer(data, dtype="<f8", offset=offset).reshape(grid.shape)
    return ScalarField(grid, values.astype(float))


def write_snapshot(path: PathLike, field: ScalarField) -> Path:
    path = Path(path)
    path.write_bytes(encode_snapshot(field))
    logger.debug(f"Instantánea escrita en {path}")
    return path


def read_snapshot(path: PathLike) -> ScalarField:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"El fichero {path} no existe")
    return decode_snapshot(path.read_bytes())


def snapshot_frame(field: ScalarField) -> pd.DataFrame:
    """Una fila por nodo: coordenadas x1..xd y el valor"""
    grid = field.grid
    columns = {f"x{j + 1}": grid.coordinates[j].ravel() for j in range(grid.dim)}
    columns["value"] = field.values.ravel()
    return pd.DataFrame(columns)


def write_csv(path: PathLike, field: ScalarField) -> Path:
    path = Path(path)
    snapshot_frame(field).to_csv(path, index=False, float_format="%.17g")
    return path


def heatmap_plane(field: ScalarField) -> np.ndarray:
    """Plano 2D que se dibuja: tira en 1D, el campo en 2D y el corte central en 3D"""
    values = field.values
    if field.grid.dim == 1:
        return np.tile(values, (max(8, field.grid.n_per_axis // 8), 1))
    if field.grid.dim == 3:
        return values[field.grid.n_per_axis // 2]
    return values


def write_heatmap(path: PathLike, field: ScalarField,
                  value_range: Tuple[float, float] = None) -> Tuple[float, float]:
    """
    Escribe un mapa de calor en escala de grises (PPM binario P6, canales iguales).

    Args:
        path: destino
        field: campo a dibujar
        value_range: (mínimo, máximo) de normalización; por defecto los del campo

    Returns:
        Tuple[float, float]: normalización usada, para el manifiesto
    """
    plane = heatmap_plane(field)
    low, high = value_range if value_range is not None else (float(plane.min()), float(plane.max()))
    span = high - low
    scaled = np.zeros_like(plane) if span <= 0 else (plane - low) / span
    gray = np.clip(np.rint(255.0 * scaled), 0, 255).astype(np.uint8)
    rgb = np.repeat(gray[..., None], 3, axis=-1)
    height, width = gray.shape
    Path(path).write_bytes(f"P6\n{width} {height}\n255\n".encode("ascii") + rgb.tobytes())
    return low, high
