"""Utilidades de BOSQUE."""

from utils.cronometro import Cronometro

__all__ = ["Cronometro"]
