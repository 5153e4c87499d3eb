"""
Excepciones del paquete.

Cada error lleva un mensaje claro que indica la naturaleza del problema.
La CLI traduce estas excepciones a códigos de salida distintos.
"""

from typing import Optional


class FracPDEError(Exception):
    """Error base de todas las excepciones del paquete"""


class GridError(FracPDEError, ValueError):
    """Parámetros de malla inválidos o campos definidos en mallas incompatibles"""


class FieldError(FracPDEError, ValueError):
    """Muestras no finitas o forma incorrecta de un campo"""


class SymbolError(FracPDEError, ValueError):
    """Símbolo de un multiplicador no definido en algún punto del retículo"""


class ConfigError(FracPDEError, ValueError):
    """Configuración de escenario rechazada"""


class SolverError(FracPDEError):
    """
    Error durante la integración temporal.

    Args:
        message: descripción del problema
        step: índice del paso en el que se detectó (si se conoce)
        time: instante asociado al paso
        iteration: índice de la iteración externa o de Picard
    """

    def __init__(self, message: str, step: Optional[int] = None,
                 time: Optional[float] = None, iteration: Optional[int] = None):
        self.reason = message
        self.step = step
        self.time = time
        self.iteration = iteration
        details = []
        if iteration is not None:
            details.append(f"iteración {iteration}")
        if step is not None:
            details.append(f"paso {step}")
        if time is not None:
            details.append(f"t={time:.6g}")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)

    def with_iteration(self, iteration: int) -> "SolverError":
        """Copia del error con el índice de iteración externa"""
        return type(self)(self.reason, step=self.step, time=self.time, iteration=iteration)


class EllipticityError(SolverError):
    """El coeficiente de difusión sale del intervalo [a0, a1]"""


class DivergenceError(SolverError):
    """Aparecen valores NaN o Inf en el estado"""


class HypothesisError(SolverError):
    """Falla una comprobación por muestreo de una hipótesis de crecimiento"""


class InvariantViolation(FracPDEError):
    """Una cota a posteriori (principio del máximo, cotas sup) no se cumple"""
