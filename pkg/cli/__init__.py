"""Línea de comandos de BOSQUE."""

from cli.configuracion import RunConfig, parse_config
from cli.salidas import emit_solution, emit_timing, load_solution

__all__ = [
    "RunConfig",
    "parse_config",
    "emit_solution",
    "emit_timing",
    "load_solution",
]
