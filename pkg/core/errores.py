"""Errores de BOSQUE."""

from enum import Enum
from typing import Optional


class TipoError(str, Enum):
    CONFIGURACION = "configuracion"
    PRECONDICION = "precondicion"
    BALANCE = "balance"
    LOCALIDAD = "localidad"
    PROTOCOLO = "protocolo"
    NUMERICO = "numerico"
    CFL = "cfl"
    ENTRADA_SALIDA = "entrada_salida"
    INTERNO = "interno"


class ErrorBosque(Exception):
    """Error base con diagnóstico."""

    tipo: TipoError = TipoError.INTERNO

    def __init__(self, mensaje: str, contexto: Optional[dict] = None):
        super().__init__(mensaje)
        self.mensaje = mensaje
        self.contexto = contexto or {}

    def to_dict(self) -> dict:
        return {
            "tipo": self.tipo.value,
            "mensaje": self.mensaje,
            "contexto": self.contexto,
        }


class ErrorConfiguracion(ErrorBosque):
    """Configuración inválida (cotas de parámetros, dominio, niveles)."""
    tipo = TipoError.CONFIGURACION


class ErrorPrecondicion(ErrorBosque):
    tipo = TipoError.PRECONDICION


class ErrorBalance(ErrorBosque):
    """Vecinos a más de un nivel de distancia."""
    tipo = TipoError.BALANCE


class ErrorLocalidad(ErrorBosque):
    """Un stencil de interpolación cruzaría más de una curva de nivel."""
    tipo = TipoError.LOCALIDAD


class ErrorProtocolo(ErrorBosque):
    """Fallo del protocolo de intercambio entre rangos."""
    tipo = TipoError.PROTOCOLO


class ErrorNumerico(ErrorBosque):
    tipo = TipoError.NUMERICO


class ErrorCFL(ErrorBosque):
    tipo = TipoError.CFL


class ErrorSalida(ErrorBosque):
    tipo = TipoError.ENTRADA_SALIDA


def codigo_salida(error: Exception) -> int:
    """Código de salida del CLI: 2 para configuración, 1 para el resto."""
    if isinstance(error, ErrorBosque) and error.tipo in (
        TipoError.CONFIGURACION,
        TipoError.PRECONDICION,
    ):
        return 2
    return 1
