"""
Simulación de BOSQUE: refinamiento inicial, bucle de tiempo y regrid.
También la demo de conectividad de la esfera cúbica.
"""

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from cli.configuracion import RunConfig
from core.regrid import ParametrosRegrid, ResultadoRegrid, regrid
from core.solver import RunStats, TimeControls, VelocityField, advance_patch, cfl_sync
from fantasmas.paralelo import SimulatedCluster
from fantasmas.gestor_planes import gestor_planes
from fantasmas.planificador import TipoOperacion
from fantasmas.serial import update_ghost
from malla.connectivity import Connectivity, build_brick, build_cubed_sphere
from malla.forest import Forest, Quadrant, new_uniform
from parches.patch import Patch, cell_centers, fill_from_function, region_cells
from utils.cronometro import Cronometro

CATEGORIAS = ["advance", "ghost_fill", "comm", "cfl_sync", "regrid"]


# === CONDICIONES INICIALES ===

def discos(centros, radio: float) -> Callable:
    """1 dentro de algún disco, 0 fuera; coordenadas de bloque."""
    def f(x, y):
        dentro = np.zeros(np.shape(x), dtype=bool)
        for cx, cy in centros:
            dentro |= (x - cx) ** 2 + (y - cy) ** 2 <= radio * radio
        return dentro.astype(np.float64)
    return f


def gaussiana(sigma: float, centro=(0.5, 0.5)) -> Callable:
    """Gaussiana periódica en el bloque unidad (suma de imágenes vecinas)."""
    def f(x, y):
        total = np.zeros(np.shape(x))
        for sx in (-1.0, 0.0, 1.0):
            for sy in (-1.0, 0.0, 1.0):
                r2 = (x - centro[0] - sx) ** 2 + (y - centro[1] - sy) ** 2
                total += np.exp(-r2 / (2 * sigma * sigma))
        return total
    return f


def condicion_inicial(rc: RunConfig) -> Callable:
    if rc.init == "gaussian":
        return gaussiana(rc.sigma)
    return discos(rc.centers, rc.radius)


def solucion_exacta(f: Callable, t: float, velocidad=(0.5, 0.5)) -> Callable:
    """f transportada un tiempo t con velocidad constante, periódica en el bloque."""
    def g(x, y):
        return f(np.mod(x - velocidad[0] * t, 1.0), np.mod(y - velocidad[1] * t, 1.0))
    return g


def conectividad(rc: RunConfig) -> Connectivity:
    if rc.domain == "cubed-sphere":
        return build_cubed_sphere()
    nx, ny = rc.bricks
    return build_brick(nx, ny, periodic_x=rc.periodic, periodic_y=rc.periodic)


@dataclass
class ResultadoCorrida:
    stats: RunStats
    forest: Forest
    patches: Dict[Quadrant, Patch]
    regrids: List[ResultadoRegrid] = field(default_factory=list)
    trace: Optional[List[str]] = None


# === SIMULACION ===

class Simulacion:
    """Corrida completa del benchmark sobre rangos simulados."""

    def __init__(self, rc: RunConfig, verbose: bool = False):
        self.rc = rc
        self.verbose = verbose
        self.cfg = rc.stencil_config
        self.conn = conectividad(rc)
        self.vel = VelocityField()
        self.f0 = condicion_inicial(rc)

        self.level_min = rc.minlevel
        self.level_max = rc.minlevel if rc.uniform else rc.maxlevel
        self.controles = TimeControls.desde_niveles(
            rc.cfl, self.level_min, self.level_max, rc.mx, rc.steps, rc.regrid_interval, rc.dt,
        )
        self.params = ParametrosRegrid(
            tau_r=rc.tag_refine,
            tau_c=rc.tag_coarsen,
            level_min=self.level_min,
            level_max=self.level_max,
            smooth=rc.smooth,
        )

        self.stats = RunStats(ranks=rc.ranks)
        self.cronometro = Cronometro(CATEGORIAS)
        self.regrids: List[ResultadoRegrid] = []

        self.forest = new_uniform(self.conn, self.level_min)
        self.patches: Dict[Quadrant, Patch] = {}
        for q in self.forest.global_leaves():
            p = Patch(q, rc.mx, rc.ghost, self.cfg)
            fill_from_function(p, self.f0)
            self.patches[q] = p
        self.cluster = SimulatedCluster(
            self.forest,
            self.patches,
            rc.ranks,
            self.cfg,
            self.level_min,
            self.level_max,
            threads=rc.threads,
            trace=bool(rc.trace),
        )

    # === PIEZAS DEL PASO ===

    def llenar_fantasmas(self):
        with self.cronometro.medir("ghost_fill"):
            r = self.cluster.update_ghost()
        # Con varios hilos la comunicación se solapa y queda dentro de ghost_fill
        if self.rc.threads == 1:
            self.cronometro.sumar("comm", r.tiempo_comm, desde="ghost_fill")
        self.stats.mensajes += r.mensajes
        self.stats.bytes += r.bytes

    def avanzar(self) -> float:
        dt, limiter = self.controles.dt, self.rc.limiter

        def avanzar_rango(ctx) -> float:
            maximo = 0.0
            for q in ctx.topology.local:
                maximo = max(maximo, advance_patch(ctx.patches[q], self.vel, dt, limiter))
            return maximo

        with self.cronometro.medir("advance"):
            maximos = self.cluster.map_ranks(avanzar_rango)
        self.stats.cell_updates += len(self.patches) * self.rc.mx * self.rc.mx
        with self.cronometro.medir("cfl_sync"):
            cfl = cfl_sync(maximos)
        self.stats.cfl.append(cfl)
        return cfl

    def hacer_regrid(self, paso: int) -> ResultadoRegrid:
        with self.cronometro.medir("regrid"):
            self.llenar_fantasmas()
            self.patches, res = regrid(
                self.forest, self.patches, self.params, self.cfg, self.cluster, rellenar=False,
            )
        self.regrids.append(res)
        self._registrar_malla()
        if self.verbose:
            print(f"✓ regrid paso {paso}: {res.hojas} parches, nivel {res.level_min}..{res.level_max}")
        return res

    def _registrar_malla(self):
        grids = self.cluster.grids_per_rank()
        self.stats.hojas.append(len(self.forest))
        self.stats.grids_per_rank.append(sum(grids) / len(grids))

    def masa(self) -> float:
        return sum(p.mass() for p in self.patches.values())

    # === CORRIDA ===

    def refinamiento_inicial(self):
        """Regrid ℓmax - ℓmin veces, reevaluando la condición inicial cada vez."""
        if self.rc.uniform:
            return
        for _ in range(self.level_max - self.level_min):
            self.llenar_fantasmas()
            self.patches, res = regrid(
                self.forest, self.patches, self.params, self.cfg, self.cluster, rellenar=False,
            )
            for p in self.patches.values():
                fill_from_function(p, self.f0)
            if self.verbose:
                print(f"✓ refinamiento inicial: {res.hojas} parches, nivel {res.level_min}..{res.level_max}")

    def run(self) -> ResultadoCorrida:
        self.refinamiento_inicial()
        self.cronometro = Cronometro(CATEGORIAS)
        self._registrar_malla()
        self.stats.masa.append(self.masa())

        intervalo = self.controles.regrid_interval
        inicio = time.perf_counter()
        for paso in range(1, self.controles.steps + 1):
            self.llenar_fantasmas()
            self.avanzar()
            if not self.rc.uniform and paso % intervalo == 0:
                self.hacer_regrid(paso)
        self.stats.wall = time.perf_counter() - inicio

        self.stats.tiempos = {c: self.cronometro.tiempos.get(c, 0.0) for c in CATEGORIAS}
        self.stats.masa.append(self.masa())
        return ResultadoCorrida(self.stats, self.forest, self.patches, self.regrids, self.cluster.trace)


def run(rc: RunConfig, verbose: bool = False) -> ResultadoCorrida:
    return Simulacion(rc, verbose).run()


# === DEMO DE LA ESFERA CUBICA ===

def funcion_mundo(X, Y, Z):
    return np.sin(2.0 * X) + np.cos(3.0 * Y) * Z + 0.5 * X * Y


@dataclass
class ResultadoEsfera:
    desviacion: float
    diferencia_paralelo: float
    celdas_comparadas: int
    forest: Forest
    patches: Dict[Quadrant, Patch]


def demo_esfera_cubica(rc: RunConfig, f: Callable = funcion_mundo, verbose: bool = False) -> ResultadoEsfera:
    """Copia de fantasmas de una función suave del mundo sobre la esfera cúbica.

    Compara cada celda fantasma copiada con la evaluación directa en el punto
    geométricamente coincidente, y el llenado paralelo con el serial.
    """
    conn = build_cubed_sphere()
    forest = new_uniform(conn, rc.minlevel)
    cfg = rc.stencil_config

    def nuevos_parches() -> Dict[Quadrant, Patch]:
        parches = {}
        for q in forest.global_leaves():
            p = Patch(q, rc.mx, rc.ghost, cfg)
            fill_from_function(p, f, conn.mapping(q.block))
            marco = np.ones(p.q.shape, dtype=bool)
            marco[p.m:p.m + p.M, p.m:p.m + p.M] = False
            p.q[marco] = np.nan
            parches[q] = p
        return parches

    serial = nuevos_parches()
    update_ghost(forest, serial, rc.minlevel, rc.minlevel, cfg)

    plan = gestor_planes.obtener_plan(forest, rc.minlevel, rc.minlevel, rc.mx)
    desviacion, celdas = 0.0, 0
    for op in plan.ops:
        if op.tipo != TipoOperacion.COPY:
            continue
        p = serial[op.dst]
        i, j = region_cells(op.region, p.M, p.m)
        x, y = cell_centers(p)
        xs, ys = x[i + p.m, j + p.m], y[i + p.m, j + p.m]
        esperado = f(*conn.mapping(op.dst.block).folded_point(xs, ys))
        obtenido = p.q[i + p.m, j + p.m]
        desviacion = max(desviacion, float(np.max(np.abs(obtenido - esperado))))
        celdas += len(i)

    paralelo = nuevos_parches()
    cluster = SimulatedCluster(forest, paralelo, rc.ranks, cfg, rc.minlevel, rc.minlevel, threads=rc.threads)
    cluster.update_ghost()
    diferencia = max(
        float(np.nanmax(np.abs(paralelo[q].q - serial[q].q), initial=0.0)) for q in serial
    )
    if np.isnan(diferencia) or any(
        not np.array_equal(np.isnan(paralelo[q].q), np.isnan(serial[q].q)) for q in serial
    ):
        diferencia = float("inf")

    if verbose:
        print(f"✓ esfera cúbica: {len(forest)} parches, {celdas} celdas copiadas")
        print(f"  desviación máxima: {desviacion:.3e}")
        print(f"  paralelo vs serial: {diferencia:.3e}")
    return ResultadoEsfera(desviacion, diferencia, celdas, forest, serial)
