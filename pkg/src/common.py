"""
Common utilities for sg-granger scripts.

Este módulo agrupa lo compartido por todos los paquetes:
- Códigos de color ANSI para la salida de consola de los runners y del CLI
- Jerarquía de excepciones del proyecto, cada una con su código de salida
- Helpers mínimos de consola (banners y mensajes de estado)

Las funciones de librería nunca imprimen; solo los runners y el CLI usan
los helpers de consola.
"""

import sys
from typing import Optional


class Colors:
    """ANSI color codes for terminal output."""

    GREEN = "\033[92m"
    RED = "\033[91m"
    YELLOW = "\033[93m"
    BLUE = "\033[94m"
    CYAN = "\033[96m"
    BOLD = "\033[1m"
    RESET = "\033[0m"


# Códigos de salida del CLI
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class SgGrangerError(Exception):
    """Error base del proyecto. `exit_code` es el código que retorna el CLI."""

    exit_code = 1


class ConfigError(SgGrangerError):
    """Configuración inválida (knobs, grupos, folds, grilla de M_T)."""

    exit_code = EXIT_CONFIG


class DataError(SgGrangerError):
    """Datos de entrada inválidos."""

    exit_code = EXIT_DATA


class DimensionError(DataError):
    """Dimensiones incompatibles entre arrays."""


class DegenerateColumnError(DataError):
    """Columna con desviación estándar nula."""

    def __init__(self, column: str):
        super().__init__(f"column '{column}' has zero standard deviation")
        self.column = column


class GroupStructureError(DataError):
    """La estructura de grupos no es una partición de las columnas."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class RankDeficiencyError(DataError):
    """Matriz sin rango completo (diccionario o matriz de restricciones R)."""

    def __init__(self, message: str, rows: Optional[tuple] = None):
        super().__init__(message)
        self.rows = rows


class CsvParseError(DataError):
    """Falla de parseo de CSV con la línea y columna del problema."""

    def __init__(self, path: str, line: int, column: str, value: object, reason: str):
        super().__init__(f"{path}: line {line}, column '{column}': {reason} (value={value!r})")
        self.path = path
        self.line = line
        self.column = column


class NumericalError(SgGrangerError):
    """Falla numérica durante la estimación."""

    exit_code = EXIT_NUMERICAL


class SolverDivergenceError(NumericalError):
    """El objetivo del solver dejó de ser finito."""


class NearSingularDesignError(NumericalError):
    """Varianza residual nodewise por debajo del piso de 1e-12."""


class DegenerateVarianceError(NumericalError):
    """Entrada diagonal no positiva en la varianza de largo plazo."""


def banner(title: str, color: str = Colors.CYAN, quiet: bool = False) -> None:
    """Imprime un encabezado de sección con el estilo de los runners."""
    if quiet:
        return
    print("\n" + "=" * 80)
    print(f"{Colors.BOLD}{color}{title}{Colors.RESET}")
    print("=" * 80)


def status(message: str, color: str = Colors.GREEN, quiet: bool = False) -> None:
    """Imprime una línea de estado coloreada."""
    if quiet:
        return
    print(f"{color}{message}{Colors.RESET}")


def error(message: str) -> None:
    """Los errores siempre se imprimen, en stderr."""
    print(f"{Colors.RED}Error: {message}{Colors.RESET}", file=sys.stderr)
