"""Tests del llenado serial de fantasmas y de la caché de planes."""

import numpy as np
import pytest

from cli.configuracion import RunConfig
from core.errores import ErrorBalance
from core.simulacion import demo_esfera_cubica
from fantasmas.gestor_planes import GestorPlanes, gestor_planes
from fantasmas.planificador import EstadoPlan, GhostFillPlan, TipoOperacion, build_plan, plan_a_texto
from fantasmas.serial import run_plan, update_ghost
from malla.connectivity import build_brick
from malla.forest import Quadrant, balance_2to1, new_uniform
from parches.patch import Patch, StencilConfig, cell_centers, fill_from_function, limited_slope
from tests.conftest import bosque_aleatorio, copiar_parches, diferencias, parches_aleatorios

M, m = 8, 2


def _constantes(parches, valor):
    for p in parches.values():
        p.interior[...] = valor
    return parches


def _sin_fantasmas(parches):
    copia = copiar_parches(parches)
    for p in copia.values():
        interior = p.interior.copy()
        p.q[...] = np.nan
        p.interior[...] = interior
    return copia


def _lineal(x, y):
    return 2.0 * x - 3.0 * y + 0.5


# === ORACULO POR CELDA EN LADRILLOS PERIODICOS ===

def _cubre(parches, n, L, I, J):
    """Hoja que cubre la celda global (I, J) de nivel L en un ladrillo n×n periódico."""
    Mb = M << L
    bi, ci = divmod(I % (n * Mb), Mb)
    bj, cj = divmod(J % (n * Mb), Mb)
    b = bi + n * bj
    for nivel in range(L + 1, -1, -1):
        if nivel > L:
            x, y = (2 * ci) // M, (2 * cj) // M
        else:
            x, y = (ci >> (L - nivel)) // M, (cj >> (L - nivel)) // M
        q = Quadrant(b, nivel, x, y)
        if q in parches:
            return q, ci, cj
    raise AssertionError(f"Ninguna hoja cubre ({I}, {J}) en nivel {L}")


def _compuesto(parches, n, L, I, J):
    """Valor de la celda en su nivel: propia o media de las cuatro finas."""
    q, ci, cj = _cubre(parches, n, L, I, J)
    interior = parches[q].interior
    if q.level == L:
        return interior[ci % M, cj % M]
    if q.level == L + 1:
        i0, j0 = (2 * ci) % M, (2 * cj) % M
        f = [interior[i0 + a, j0 + b] for a, b in ((0, 0), (1, 0), (0, 1), (1, 1))]
        return (((f[0] + f[1]) + f[2]) + f[3]) * 0.25
    raise AssertionError(f"El stencil de nivel {L} lee la hoja {q}")


def _esperado(parches, n, L, I, J, limiter):
    q, _, _ = _cubre(parches, n, L, I, J)
    if q.level >= L:
        return _compuesto(parches, n, L, I, J)
    assert q.level == L - 1, f"Fantasma de nivel {L} cubierto por {q}"
    Ic, Jc = I // 2, J // 2

    def v(a, b):
        return _compuesto(parches, n, L - 1, a, b)

    qc = v(Ic, Jc)
    sx = limited_slope(v(Ic - 1, Jc), qc, v(Ic + 1, Jc), limiter)
    sy = limited_slope(v(Ic, Jc - 1), qc, v(Ic, Jc + 1), limiter)
    dx = 1 if I % 2 else -1
    dy = 1 if J % 2 else -1
    return float(qc + 0.25 * (sx * dx + sy * dy))


class TestPlan:
    """Estructura del plan de cuatro barridos."""

    def test_uniforme_periodico_solo_copias(self, brick_periodico):
        plan = build_plan(new_uniform(brick_periodico, 2), 2, 2, M)
        assert plan.counts() == {"copy": 16 * 8, "average": 0, "interpolate": 0, "physbc": 0}

    def test_uniforme_con_fronteras(self):
        forest = new_uniform(build_brick(1, 1), 1)
        plan = build_plan(forest, 1, 1, M)
        conteo = plan.counts()
        assert conteo["copy"] == 12, "Cada hoja copia una cara x, una cara y y la esquina interior"
        assert conteo["physbc"] == 8
        assert all(op.sweep == 2 for op in plan.by_sweep()[2])
        assert plan.by_sweep()[4] == []

    def test_barridos_adaptativos(self, brick_periodico):
        forest = new_uniform(brick_periodico, 1)
        forest.refine(Quadrant(0, 1, 1, 0))
        plan = build_plan(forest, 1, 2, M)
        grupos = plan.by_sweep()
        assert {op.tipo for op in grupos[1]} == {TipoOperacion.COPY, TipoOperacion.AVERAGE}
        assert {op.tipo for op in grupos[3]} == {TipoOperacion.INTERPOLATE}
        conteo = plan.counts()
        assert conteo["average"] == conteo["interpolate"] > 0
        assert all(op.dst.level == op.src.level + 1 for op in grupos[3])
        assert [op.numero for op in plan.ops] == list(range(1, len(plan.ops) + 1))

    def test_texto(self, brick_periodico):
        plan = build_plan(new_uniform(brick_periodico, 1), 1, 1, M)
        texto = plan_a_texto(plan)
        assert "copy: 32" in texto
        assert "barrido 3: 0 operaciones" in texto

    def test_bosque_desbalanceado(self, brick_periodico):
        forest = new_uniform(brick_periodico, 1)
        forest.refine(Quadrant(0, 1, 1, 0))
        forest.refine(Quadrant(0, 2, 2, 0))
        with pytest.raises(ErrorBalance):
            build_plan(forest, 1, 3, M)


class TestLlenado:
    """Todos los fantasmas quedan definidos y las constantes se conservan."""

    @pytest.mark.parametrize("dominio", ["brick_periodico", "brick_2x2", "esfera"])
    def test_constante_bit_a_bit(self, dominio, request, rng, cfg):
        conn = request.getfixturevalue(dominio)
        forest = bosque_aleatorio(conn, rng)
        parches = _constantes(parches_aleatorios(forest, rng), 0.75)
        resultado = update_ghost(forest, parches, 2, 4, cfg)
        assert resultado.exito
        for q, p in parches.items():
            assert not np.isnan(p.q).any(), f"Fantasmas sin llenar en {q}"
            assert np.all(p.q == 0.75), f"Constante alterada en {q}"

    def test_fronteras_fisicas_extrapolan(self, rng, cfg):
        forest = new_uniform(build_brick(2, 1), 2)
        parches = parches_aleatorios(forest, rng)
        update_ghost(forest, parches, 2, 2, cfg)
        p = parches[Quadrant(0, 2, 0, 1)]
        np.testing.assert_array_equal(p.q[0, 2:M + 2], p.q[2, 2:M + 2])

    def test_plan_completado(self, rng, brick_periodico, cfg):
        forest = bosque_aleatorio(brick_periodico, rng)
        parches = parches_aleatorios(forest, rng)
        resultado = update_ghost(forest, parches, 2, 4, cfg)
        plan = gestor_planes.buscar_plan(resultado.plan_id)
        assert plan.estado == EstadoPlan.COMPLETADO
        assert resultado.operaciones == plan.counts()

    def test_sin_parches(self, brick_periodico):
        assert update_ghost(new_uniform(brick_periodico, 1), {}, 1, 1).exito


class TestCachePlanes:
    """Los planes se reconstruyen solo cuando el bosque cambia."""

    def test_aciertos_y_revision(self, rng, brick_periodico, cfg):
        forest = new_uniform(brick_periodico, 2)
        parches = parches_aleatorios(forest, rng)
        update_ghost(forest, parches, 2, 3, cfg)
        update_ghost(forest, parches, 2, 3, cfg)
        assert gestor_planes.estadisticas() == {"planes": 1, "aciertos": 1, "fallos": 1}

        forest.refine(Quadrant(0, 2, 0, 0))
        parches = parches_aleatorios(forest, rng)
        update_ghost(forest, parches, 2, 3, cfg)
        stats = gestor_planes.estadisticas()
        assert stats["fallos"] == 2
        assert stats["planes"] == 1, "El plan de la revisión anterior se descarta"


class TestEsferaCubica:
    """Copia entre caras del cubo contra la evaluación geométrica."""

    @pytest.mark.parametrize("ranks", [1, 4, 7])
    def test_desviacion_y_paralelo(self, ranks):
        rc = RunConfig(domain="cubed-sphere", minlevel=2, maxlevel=2, mx=8, ghost=2, ranks=ranks)
        r = demo_esfera_cubica(rc)
        assert r.celdas_comparadas > 0
        assert r.desviacion <= 1e-12
        assert r.diferencia_paralelo == 0.0
        assert len(r.forest) == 6 * 16


class TestOraculoPorCelda:
    """Cada fantasma contra la solución compuesta evaluada celda a celda."""

    @pytest.mark.parametrize("limiter", ["minmod", "mc"])
    @pytest.mark.parametrize("n,niveles", [(1, (2, 4)), (2, (1, 3))])
    def test_bosques_aleatorios(self, rng, limiter, n, niveles):
        conn = build_brick(n, n, periodic_x=True, periodic_y=True)
        cfg = StencilConfig(w=3, limiter=limiter)
        for _ in range(2):
            forest = bosque_aleatorio(conn, rng, *niveles)
            parches = parches_aleatorios(forest, rng)
            resultado = update_ghost(forest, parches, *niveles, cfg)
            assert resultado.operaciones["interpolate"] > 0
            for q, p in parches.items():
                L = q.level
                base_i = (q.block % n) * (M << L) + q.x * M
                base_j = (q.block // n) * (M << L) + q.y * M
                for i in range(-m, M + m):
                    for j in range(-m, M + m):
                        if 0 <= i < M and 0 <= j < M:
                            continue
                        esperado = _esperado(parches, n, L, base_i + i, base_j + j, limiter)
                        obtenido = p.q[i + m, j + m]
                        assert abs(obtenido - esperado) <= 1e-13, f"{q} celda ({i}, {j}): {obtenido} != {esperado}"


class TestRepeticion:
    """Repetir el llenado, cambiar de gestor o reordenar un barrido no cambia nada."""

    @pytest.mark.parametrize("dominio", ["brick_2x2", "esfera"])
    def test_segunda_llamada_y_gestor_nuevo(self, dominio, request, rng, cfg):
        forest = bosque_aleatorio(request.getfixturevalue(dominio), rng)
        parches = parches_aleatorios(forest, rng)
        update_ghost(forest, parches, 2, 4, cfg)
        primera = copiar_parches(parches)

        update_ghost(forest, parches, 2, 4, cfg)
        assert diferencias(primera, parches) == []
        assert gestor_planes.estadisticas()["aciertos"] == 1

        otro = GestorPlanes()
        frescos = _sin_fantasmas(parches)
        update_ghost(forest, frescos, 2, 4, cfg, gestor=otro)
        assert otro.estadisticas() == {"planes": 1, "aciertos": 0, "fallos": 1}
        assert diferencias(primera, frescos) == []

    @pytest.mark.parametrize("dominio", ["brick_2x2", "esfera"])
    def test_orden_dentro_de_cada_barrido(self, dominio, request, rng, cfg):
        forest = bosque_aleatorio(request.getfixturevalue(dominio), rng)
        parches = parches_aleatorios(forest, rng)
        resultado = update_ghost(forest, parches, 2, 4, cfg)
        plan = gestor_planes.buscar_plan(resultado.plan_id)

        for _ in range(3):
            ops = []
            for grupo in plan.by_sweep().values():
                ops.extend(grupo[k] for k in rng.permutation(len(grupo)))
            permutado = GhostFillPlan(id="permutado", level_min=2, level_max=4, M=M, ops=ops)
            otros = _sin_fantasmas(parches)
            run_plan(permutado, otros, cfg)
            assert permutado.estado == EstadoPlan.COMPLETADO
            assert diferencias(parches, otros) == []


class TestCampoLineal:
    """Sin limitador, un campo lineal atraviesa copia, promedio e interpolación exacto."""

    def test_tres_niveles(self, brick_periodico):
        forest = new_uniform(brick_periodico, 2)
        for x in (1, 2):
            for y in (1, 2):
                forest.refine(Quadrant(0, 2, x, y))
        forest.refine(Quadrant(0, 3, 3, 3))
        forest.refine(Quadrant(0, 3, 4, 4))
        balance_2to1(forest)
        assert forest.levels() == (2, 4)

        cfg = StencilConfig(w=3, limiter="none")
        parches = {}
        for q in forest.global_leaves():
            p = Patch(q, M, m, cfg)
            fill_from_function(p, _lineal)
            parches[q] = p
        parches = _sin_fantasmas(parches)
        resultado = update_ghost(forest, parches, 2, 4, cfg)
        assert resultado.operaciones["interpolate"] > 0
        assert resultado.operaciones["average"] > 0

        # La periodicidad rompe la linealidad fuera del cuadrado unidad
        for q, p in parches.items():
            x, y = cell_centers(p)
            fantasma = np.ones(p.q.shape, dtype=bool)
            fantasma[m:M + m, m:M + m] = False
            dentro = fantasma & (x > 0) & (x < 1) & (y > 0) & (y < 1)
            np.testing.assert_allclose(p.q[dentro], _lineal(x, y)[dentro], rtol=1e-13, atol=1e-13, err_msg=str(q))
