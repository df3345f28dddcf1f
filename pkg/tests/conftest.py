"""Fixtures compartidas de los tests de BOSQUE."""

from typing import Dict, List, Optional, Tuple

import numpy as np
import pytest

from fantasmas.gestor_planes import gestor_planes
from malla.connectivity import GnomonicMapping, build_brick, build_cubed_sphere
from malla.forest import Forest, Quadrant, balance_2to1, new_uniform
from parches.patch import Patch, StencilConfig


def bosque_aleatorio(conn, rng: np.random.Generator, level_min: int = 2, level_max: int = 4, prob: float = 0.3) -> Forest:
    """Bosque balanceado con refinamiento aleatorio entre level_min y level_max."""
    forest = new_uniform(conn, level_min)
    for nivel in range(level_min, level_max):
        for q in list(forest.global_leaves()):
            if q.level == nivel and rng.random() < prob:
                forest.refine(q)
        balance_2to1(forest)
    return forest


def parches_aleatorios(forest: Forest, rng: np.random.Generator, M: int = 8, m: int = 2, w: int = 3) -> Dict[Quadrant, Patch]:
    """Interiores aleatorios y fantasmas en NaN."""
    cfg = StencilConfig(w=w)
    parches = {}
    for q in forest.global_leaves():
        p = Patch(q, M, m, cfg)
        p.q[...] = np.nan
        p.interior[...] = rng.random((M, M))
        parches[q] = p
    return parches


def copiar_parches(parches: Dict[Quadrant, Patch]) -> Dict[Quadrant, Patch]:
    return {q: p.copy() for q, p in parches.items()}


def diferencias(a: Dict[Quadrant, Patch], b: Dict[Quadrant, Patch]) -> list:
    """Cuadrantes cuyos arreglos difieren bit a bit (NaN iguales a NaN)."""
    return [q for q in a if not np.array_equal(a[q].q, b[q].q, equal_nan=True)]


def cajas_de_hojas(forest: Forest) -> Tuple[List[Quadrant], np.ndarray, np.ndarray]:
    """Caja cerrada de cada hoja en coordenadas globales: plano del ladrillo o superficie del cubo."""
    hojas = forest.global_leaves()
    lo, hi = [], []
    for q in hojas:
        h = 2.0 ** -q.level
        mapa = forest.conn.mapping(q.block)
        punto = mapa.cube_point if isinstance(mapa, GnomonicMapping) else mapa
        a = np.array(punto(q.x * h, q.y * h), dtype=float)
        b = np.array(punto((q.x + 1) * h, (q.y + 1) * h), dtype=float)
        lo.append(np.minimum(a, b))
        hi.append(np.maximum(a, b))
    return hojas, np.array(lo), np.array(hi)


def contactos(forest: Forest, periodo: Optional[Tuple[int, int]] = None) -> Tuple[List[Quadrant], np.ndarray]:
    """Matriz de hojas que se tocan (cara o esquina), con copias periódicas del ladrillo."""
    hojas, lo, hi = cajas_de_hojas(forest)
    if periodo is None:
        desplazamientos = [np.zeros(lo.shape[1])]
    else:
        desplazamientos = [np.array([sx * periodo[0], sy * periodo[1]]) for sx in (-1, 0, 1) for sy in (-1, 0, 1)]
    toca = np.zeros((len(hojas), len(hojas)), dtype=bool)
    for d in desplazamientos:
        toca |= np.all((lo[:, None, :] <= hi[None, :, :] + d) & (lo[None, :, :] + d <= hi[:, None, :]), axis=2)
    np.fill_diagonal(toca, False)
    return hojas, toca


def desbalances(forest: Forest, periodo: Optional[Tuple[int, int]] = None) -> List[Tuple[Quadrant, Quadrant]]:
    """Pares (gruesa, fina) en contacto con más de un nivel de diferencia."""
    hojas, toca = contactos(forest, periodo)
    niveles = np.array([q.level for q in hojas])
    i, j = np.nonzero(toca & (niveles[None, :] - niveles[:, None] > 1))
    return [(hojas[a], hojas[b]) for a, b in zip(i.tolist(), j.tolist())]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def brick_periodico():
    return build_brick(1, 1, periodic_x=True, periodic_y=True)


@pytest.fixture
def brick_2x2():
    return build_brick(2, 2, periodic_x=True, periodic_y=True)


@pytest.fixture
def esfera():
    return build_cubed_sphere()


@pytest.fixture
def cfg():
    return StencilConfig(w=3, limiter="minmod")


@pytest.fixture(autouse=True)
def limpiar_planes():
    """Cada test empieza con la caché de planes vacía."""
    gestor_planes.limpiar()
    yield
    gestor_planes.limpiar()
