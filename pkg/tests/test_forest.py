"""Tests del bosque: orden de Morton, vecinos, balance 2:1 y partición."""

from collections import deque
from functools import partial

import numpy as np
import pytest

from core.errores import ErrorBalance, ErrorPrecondicion
from malla.connectivity import build_brick
from malla.forest import (
    ALL_REGIONS,
    CORNERS,
    FACES,
    Forest,
    NeighborKind,
    Quadrant,
    balance_2to1,
    morton_code,
    new_uniform,
)
from tests.conftest import bosque_aleatorio, desbalances

EPS = 2.0 ** -12


def _muestras(q: Quadrant, region) -> list:
    """Puntos justo fuera de q en la región: dos por cara, uno por esquina."""
    h = 2.0 ** -q.level
    x0, y0 = q.x * h, q.y * h
    dx, dy = region.offset
    fuera_x = x0 + h + EPS if dx > 0 else x0 - EPS
    fuera_y = y0 + h + EPS if dy > 0 else y0 - EPS
    if not region.is_face:
        return [(fuera_x, fuera_y)]
    if dx:
        return [(fuera_x, y0 + 0.25 * h), (fuera_x, y0 + 0.75 * h)]
    return [(x0 + 0.25 * h, fuera_y), (x0 + 0.75 * h, fuera_y)]


def _ubicar_ladrillo(b, x, y, nx, ny, periodic_x=True, periodic_y=True):
    X, Y = b % nx + x, b // nx + y
    if not 0 <= X < nx:
        if not periodic_x:
            return None
        X %= nx
    if not 0 <= Y < ny:
        if not periodic_y:
            return None
        Y %= ny
    bi, bj = int(X), int(Y)
    return bi + nx * bj, X - bi, Y - bj


def _ubicar_esfera(conn, b, x, y):
    """Pliega el punto sobre la cara vecina del cubo y lo expresa en ese bloque."""
    fuera_x = not 0.0 <= x <= 1.0
    fuera_y = not 0.0 <= y <= 1.0
    if not (fuera_x or fuera_y):
        return b, x, y
    if fuera_x and fuera_y:
        return None
    mapa = conn.mapping(b)
    O, U, V = (np.array(v, dtype=float) for v in (mapa.origin, mapa.U, mapa.V))
    xc, yc = min(max(x, 0.0), 1.0), min(max(y, 0.0), 1.0)
    exceso = abs(x - xc) + abs(y - yc)
    P = O + xc * U + yc * V - 2.0 * exceso * (O + (U + V) / 2)
    for otro in range(conn.num_blocks):
        if otro == b:
            continue
        m2 = conn.mapping(otro)
        O2, U2, V2 = (np.array(v, dtype=float) for v in (m2.origin, m2.U, m2.V))
        d = P - O2
        if abs(d @ (O2 + (U2 + V2) / 2)) > 1e-12:
            continue
        x2, y2 = d @ U2 / 4.0, d @ V2 / 4.0
        if 0.0 <= x2 <= 1.0 and 0.0 <= y2 <= 1.0:
            return otro, x2, y2
    raise AssertionError(f"Punto plegado sin cara: bloque {b}, ({x}, {y})")


def _hoja_que_contiene(forest: Forest, b: int, x: float, y: float) -> Quadrant:
    for nivel in range(12):
        n = 1 << nivel
        q = Quadrant(b, nivel, int(x * n), int(y * n))
        if q in forest:
            return q
    raise AssertionError(f"Ninguna hoja contiene ({x}, {y}) en el bloque {b}")


def _balance_por_contacto(forest: Forest, periodo) -> Forest:
    """Refina solo las hojas forzadas por un contacto geométrico hasta el punto fijo."""
    while True:
        pares = desbalances(forest, periodo)
        if not pares:
            return forest
        for q in sorted({gruesa for gruesa, _ in pares}, key=lambda q: q.sort_key):
            forest.refine(q)


class TestQuadrant:
    """Cuadrantes y códigos de Morton."""

    def test_morton_entrelaza_bits(self):
        assert morton_code(0, 0) == 0
        assert morton_code(1, 0) == 1
        assert morton_code(0, 1) == 2
        assert morton_code(3, 3) == 15

    def test_hijos_y_padre(self):
        q = Quadrant(0, 2, 1, 3)
        hijos = q.children()
        assert [h.child_id for h in hijos] == [0, 1, 2, 3]
        assert all(h.parent() == q for h in hijos)
        assert hijos[3].ancestor(1) == Quadrant(0, 1, 0, 1)

    def test_orden_de_morton_en_bloque(self):
        forest = new_uniform(build_brick(1, 1), 1)
        assert [(q.x, q.y) for q in forest.global_leaves()] == [(0, 0), (1, 0), (0, 1), (1, 1)]

    def test_hijos_en_orden_de_morton(self):
        q = Quadrant(0, 1, 1, 0)
        claves = [h.sort_key for h in q.children()]
        assert claves == sorted(claves)
        assert claves[0][1] == q.morton, "El primer hijo hereda la clave del padre"

    def test_raiz_sin_padre(self):
        with pytest.raises(ErrorPrecondicion):
            Quadrant(0, 0, 0, 0).parent()


class TestRefinamiento:
    """refine/coarsen sobre las hojas del bosque."""

    def test_refinar_y_engrosar(self, brick_periodico):
        forest = new_uniform(brick_periodico, 1)
        revision = forest.revision
        q = Quadrant(0, 1, 0, 0)
        hijos = forest.refine(q)
        assert len(forest) == 7
        assert forest.revision > revision
        assert forest.coarsen(hijos) == q
        assert len(forest) == 4

    def test_familia_incompleta(self, brick_periodico):
        forest = new_uniform(brick_periodico, 2)
        with pytest.raises(ErrorPrecondicion):
            forest.coarsen([Quadrant(0, 2, 0, 0), Quadrant(0, 2, 1, 0), Quadrant(0, 2, 0, 1), Quadrant(0, 2, 2, 1)])

    def test_solo_hojas(self, brick_periodico):
        forest = new_uniform(brick_periodico, 1)
        with pytest.raises(ErrorPrecondicion):
            forest.refine(Quadrant(0, 0, 0, 0))


class TestVecinos:
    """Consultas de vecinos por cara y esquina."""

    def test_mismo_tamano_periodico(self, brick_periodico):
        forest = new_uniform(brick_periodico, 2)
        info = forest.neighbor(Quadrant(0, 2, 0, 0), FACES[0])
        assert info.kind == NeighborKind.SAME
        assert info.neighbors == (Quadrant(0, 2, 3, 0),)
        esquina = forest.neighbor(Quadrant(0, 2, 0, 0), CORNERS[0])
        assert esquina.neighbors == (Quadrant(0, 2, 3, 3),)

    def test_frontera_fisica(self):
        forest = new_uniform(build_brick(1, 1), 1)
        assert forest.neighbor(Quadrant(0, 1, 0, 0), FACES[0]).kind == NeighborKind.BOUNDARY
        assert forest.neighbor(Quadrant(0, 1, 0, 0), CORNERS[0]).kind == NeighborKind.BOUNDARY
        assert forest.neighbor(Quadrant(0, 1, 0, 0), CORNERS[3]).kind == NeighborKind.SAME

    def test_doble_y_mitad(self, brick_periodico):
        forest = new_uniform(brick_periodico, 1)
        forest.refine(Quadrant(0, 1, 1, 0))
        fino = Quadrant(0, 2, 2, 0)
        grueso = Quadrant(0, 1, 0, 0)

        info = forest.neighbor(fino, FACES[0])
        assert info.kind == NeighborKind.DOUBLE
        assert info.neighbors == (grueso,)

        info = forest.neighbor(grueso, FACES[1])
        assert info.kind == NeighborKind.HALF
        assert info.neighbors == (Quadrant(0, 2, 2, 0), Quadrant(0, 2, 2, 1))
        assert info.which_half == (0, 1)

    def test_entre_bloques(self, brick_2x2):
        forest = new_uniform(brick_2x2, 1)
        info = forest.neighbor(Quadrant(0, 1, 1, 0), FACES[1])
        assert info.neighbors == (Quadrant(1, 1, 0, 0),)
        info = forest.neighbor(Quadrant(0, 1, 1, 1), CORNERS[3])
        assert info.neighbors == (Quadrant(3, 1, 0, 0),)

    def test_desbalance_detectado(self, brick_periodico):
        forest = new_uniform(brick_periodico, 1)
        forest.refine(Quadrant(0, 1, 1, 0))
        forest.refine(Quadrant(0, 2, 2, 0))
        assert not forest.is_balanced()
        with pytest.raises(ErrorBalance):
            forest.neighbor(Quadrant(0, 1, 0, 0), FACES[1])


class TestVecinosGeometricos:
    """Cada vecino coincide con la hoja que contiene puntos justo fuera de la región."""

    def _revisar(self, forest: Forest, ubicar):
        revisadas = 0
        for q in forest.global_leaves():
            for region in ALL_REGIONS:
                info = forest.neighbor(q, region)
                muestras = _muestras(q, region)
                destinos = [ubicar(q.block, x, y) for x, y in muestras]
                if None in destinos:
                    assert destinos == [None] * len(muestras)
                    assert info.kind == NeighborKind.BOUNDARY, f"{q} {region}"
                    assert info.neighbors == ()
                    continue

                esperados = [_hoja_que_contiene(forest, *d) for d in destinos]
                nivel = {h.level for h in esperados}
                assert len(nivel) == 1, f"{q} {region}: vecinos de niveles mezclados"
                nivel = nivel.pop()
                if nivel == q.level:
                    tipo = NeighborKind.SAME
                elif nivel < q.level:
                    tipo = NeighborKind.DOUBLE
                else:
                    tipo = NeighborKind.HALF
                assert info.kind == tipo, f"{q} {region}: {info.kind} en vez de {tipo}"
                assert info.neighbors == tuple(dict.fromkeys(esperados)), f"{q} {region}"

                # La transformación lleva cada muestra a su imagen en el bloque vecino
                for (x, y), (b, xv, yv) in zip(muestras, destinos):
                    assert info.neighbors[0].block == b
                    assert info.transform.apply_point((x, y)) == pytest.approx((xv, yv), abs=1e-12)
                revisadas += 1
        return revisadas

    @pytest.mark.parametrize("nx,ny,periodic_y", [(1, 1, True), (2, 2, True), (3, 2, False)])
    def test_ladrillos(self, rng, nx, ny, periodic_y):
        conn = build_brick(nx, ny, periodic_x=True, periodic_y=periodic_y)
        ubicar = partial(_ubicar_ladrillo, nx=nx, ny=ny, periodic_y=periodic_y)
        for _ in range(3):
            assert self._revisar(bosque_aleatorio(conn, rng, 1, 4), ubicar) > 0

    def test_esfera_con_caras_rotadas(self, rng, esfera):
        assert esfera.stats()["no_identidad"] > 0
        for _ in range(3):
            forest = bosque_aleatorio(esfera, rng, 1, 3)
            assert self._revisar(forest, partial(_ubicar_esfera, esfera)) > 0


class TestBalance:
    """balance_2to1 llega a un bosque balanceado por caras y esquinas."""

    def test_bosques_aleatorios(self, rng, brick_periodico, brick_2x2, esfera):
        for conn in (brick_periodico, brick_2x2, esfera):
            for _ in range(5):
                forest = new_uniform(conn, 2)
                for _ in range(3):
                    hojas = forest.global_leaves()
                    forest.refine(hojas[rng.integers(len(hojas))])
                    hojas = [q for q in forest.global_leaves() if q.level == max(h.level for h in forest.global_leaves())]
                    forest.refine(hojas[rng.integers(len(hojas))])
                balance_2to1(forest)
                assert forest.is_balanced(), f"Bosque desbalanceado en {conn.nombre}"

    def test_balance_refina_lo_minimo(self, brick_periodico):
        forest = new_uniform(brick_periodico, 2)
        forest.refine(Quadrant(0, 2, 1, 1))
        forest.refine(Quadrant(0, 3, 2, 2))
        antes = len(forest)
        balance_2to1(forest)
        assert forest.is_balanced()
        assert len(forest) > antes

    @pytest.mark.parametrize("dominio,periodo", [("brick_periodico", (1, 1)), ("brick_2x2", (2, 2)), ("esfera", None)])
    def test_minimo_contra_contacto_geometrico(self, dominio, periodo, request, rng):
        conn = request.getfixturevalue(dominio)
        for _ in range(4):
            forest = new_uniform(conn, 1)
            for _ in range(8):
                hojas = forest.global_leaves()
                profundas = [q for q in hojas if q.level == max(h.level for h in hojas)]
                candidatas = profundas if rng.random() < 0.6 else hojas
                q = candidatas[rng.integers(len(candidatas))]
                if q.level < 5:
                    forest.refine(q)

            esperado = _balance_por_contacto(forest.copy(), periodo)
            balance_2to1(forest)
            assert forest.global_leaves() == esperado.global_leaves(), f"Balance no mínimo en {conn.nombre}"
            assert desbalances(forest, periodo) == []


def _componentes(forest: Forest, rank: int, block: int) -> int:
    """Componentes conexas por caras de las hojas del rango en un bloque."""
    hojas = {q for q in forest.leaves(block) if forest.owner(q) == rank}
    vistos = set()
    componentes = 0
    for inicio in hojas:
        if inicio in vistos:
            continue
        componentes += 1
        cola = deque([inicio])
        vistos.add(inicio)
        while cola:
            q = cola.popleft()
            for cara in FACES:
                for n in forest.neighbor(q, cara).neighbors:
                    if n in hojas and n.block == block and n not in vistos:
                        vistos.add(n)
                        cola.append(n)
    return componentes


class TestParticion:
    """Segmentos de Morton contiguos y equilibrados."""

    def test_conteos_equilibrados_y_contiguos(self, rng):
        conn = build_brick(2, 2)
        for _ in range(40):
            forest = bosque_aleatorio(conn, rng, 1, 4)
            P = int(rng.integers(1, 33))
            forest.partition(P)
            assert max(forest.counts) - min(forest.counts) <= 1
            assert sum(forest.counts) == len(forest)
            duenos = [forest.owner(q) for q in forest.global_leaves()]
            assert duenos == sorted(duenos), "Los rangos deben ser segmentos contiguos"
            for r in range(P):
                for b in range(conn.num_blocks):
                    assert _componentes(forest, r, b) <= 2, f"Rango {r} fragmentado en el bloque {b}"

    def test_resto_a_los_primeros_rangos(self, brick_periodico):
        forest = new_uniform(brick_periodico, 2)
        forest.partition(3)
        assert forest.counts == [6, 5, 5]

    def test_frontera_paralela(self, brick_periodico):
        forest = new_uniform(brick_periodico, 2)
        forest.partition(2)
        frontera = forest.parallel_boundary_leaves(0)
        assert frontera, "Con dos rangos periódicos toda hoja del rango 0 toca al rango 1"
        assert frontera <= set(forest.leaves_of_rank(0))
