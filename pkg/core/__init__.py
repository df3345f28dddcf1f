"""Core de BOSQUE: solver, regrid y simulación."""

from core.errores import (
    ErrorBosque,
    ErrorConfiguracion,
    ErrorPrecondicion,
    TipoError,
    codigo_salida,
)

__all__ = [
    "ErrorBosque",
    "ErrorConfiguracion",
    "ErrorPrecondicion",
    "TipoError",
    "codigo_salida",
]
