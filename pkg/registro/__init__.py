"""Historial de corridas de BOSQUE."""

from registro.base import inicializar_base_datos
from registro.operaciones import guardar_corrida, listar_corridas

__all__ = [
    "inicializar_base_datos",
    "guardar_corrida",
    "listar_corridas",
]
