"""Cronómetros exclusivos anidados."""

import threading
import time
from contextlib import contextmanager
from typing import Dict, List, Optional


class Cronometro:
    """Acumula tiempo por categoría; una categoría anidada pausa a la externa.

    Solo mide en el hilo que lo creó; desde otros hilos `medir` no hace nada.
    """

    def __init__(self, categorias: Optional[List[str]] = None):
        self.tiempos: Dict[str, float] = {c: 0.0 for c in (categorias or [])}
        self._pila: List[str] = []
        self._marca = 0.0
        self._hilo = threading.get_ident()
        self._inicio = time.perf_counter()

    def _cargar(self, ahora: float):
        if self._pila:
            cat = self._pila[-1]
            self.tiempos[cat] = self.tiempos.get(cat, 0.0) + (ahora - self._marca)
        self._marca = ahora

    @contextmanager
    def medir(self, categoria: str):
        if threading.get_ident() != self._hilo:
            yield
            return
        self._cargar(time.perf_counter())
        self._pila.append(categoria)
        try:
            yield
        finally:
            self._cargar(time.perf_counter())
            self._pila.pop()

    def sumar(self, categoria: str, segundos: float, desde: Optional[str] = None):
        """Mueve `segundos` a `categoria`, restándolos de `desde` si se indica."""
        self.tiempos[categoria] = self.tiempos.get(categoria, 0.0) + segundos
        if desde is not None:
            self.tiempos[desde] = self.tiempos.get(desde, 0.0) - segundos

    @property
    def total(self) -> float:
        return time.perf_counter() - self._inicio

    def medido(self) -> float:
        return sum(self.tiempos.values())
