"""Llenado de fantasmas entre rangos simulados.

Cada rango conoce el bosque completo pero solo guarda los datos de sus
hojas. Los parches de la frontera paralela viajan empaquetados (solo el
marco: capas fantasma más 2m capas interiores) por buzones FIFO entre pares
de rangos. El llenado colectivo corre en dos fases separadas por una
barrera:

- Fase A: paso 1 (regiones gruesas locales y BC de la frontera), envío,
  paso 2 (parches interiores completos).
- Fase B: recepción, intercambio indirecto entre parches fantasma de
  distintos dueños, paso 3 (a..e).
"""

import threading
import time
from collections import defaultdict, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from core.errores import ErrorConfiguracion, ErrorProtocolo
from fantasmas.gestor_planes import GestorPlanes, gestor_planes
from fantasmas.planificador import GhostFillPlan, GhostOp, TipoOperacion
from fantasmas.serial import execute_op
from malla.forest import Forest, Quadrant
from parches.patch import Patch, StencilConfig, smoothed_target


# === EMPAQUETADO ===

@lru_cache(maxsize=None)
def frame_mask(M: int, m: int) -> np.ndarray:
    """Celdas del marco: índice de almacenamiento a < 3m o a ≥ M - m en algún eje."""
    a = np.arange(M + 2 * m)
    borde = (a < 3 * m) | (a >= M - m)
    mascara = borde[:, None] | borde[None, :]
    mascara.setflags(write=False)
    return mascara


@dataclass(frozen=True)
class GhostPatchBuffer:
    quadrant: Quadrant
    M: int
    m: int
    source_rank: int
    payload: np.ndarray

    @property
    def level(self) -> int:
        return self.quadrant.level

    @property
    def nbytes(self) -> int:
        return int(self.payload.nbytes)


def pack(p: Patch, rank: int) -> GhostPatchBuffer:
    return GhostPatchBuffer(p.quadrant, p.M, p.m, rank, p.q[frame_mask(p.M, p.m)].copy())


def unpack(buf: GhostPatchBuffer, cfg: Optional[StencilConfig] = None) -> Patch:
    """Parche fantasma con el marco recibido y el centro envenenado con NaN."""
    n = buf.M + 2 * buf.m
    p = Patch(buf.quadrant, buf.M, buf.m, cfg, q=np.full((n, n), np.nan))
    p.q[frame_mask(buf.M, buf.m)] = buf.payload
    return p


# === BUZONES ===

class Mailbox:
    """Colas FIFO por par ordenado de rangos, con fases de envío y recepción."""

    def __init__(self, num_ranks: int, trace: bool = False):
        self.num_ranks = num_ranks
        self._colas: Dict[Tuple[int, int, str], deque] = defaultdict(deque)
        self._cerrados: Set[Tuple[int, str]] = set()
        self._lock = threading.Lock()
        self.trace: Optional[List[str]] = [] if trace else None
        self.mensajes = 0
        self.bytes = 0

    def nueva_ronda(self, canal: str):
        with self._lock:
            pendientes = [c for c, cola in self._colas.items() if c[2] == canal and cola]
            if pendientes:
                raise ErrorProtocolo(f"Mensajes sin recibir en el canal {canal}", {"pares": [c[:2] for c in pendientes]})
            self._cerrados = {c for c in self._cerrados if c[1] != canal}

    def send(self, src: int, dst: int, item, canal: str = "ghost"):
        with self._lock:
            if (src, canal) in self._cerrados:
                raise ErrorProtocolo(f"El rango {src} ya cerró su fase de envío")
            self._colas[(src, dst, canal)].append(item)
            if isinstance(item, GhostPatchBuffer):
                self.mensajes += 1
                self.bytes += item.nbytes
                if self.trace is not None:
                    self.trace.append(f"{src} {dst} {item.quadrant} {item.nbytes}")

    def close_send(self, src: int, canal: str = "ghost"):
        with self._lock:
            self._cerrados.add((src, canal))

    def receive(self, src: int, dst: int, canal: str = "ghost") -> list:
        with self._lock:
            if (src, canal) not in self._cerrados:
                raise ErrorProtocolo(f"Recepción de {src} en {dst} antes de que termine su envío")
            cola = self._colas[(src, dst, canal)]
            items = list(cola)
            cola.clear()
            return items


# === TOPOLOGIA Y CONTEXTO ===

@dataclass
class RankTopology:
    rank: int
    num_ranks: int
    local: List[Quadrant] = field(default_factory=list)
    boundary: Set[Quadrant] = field(default_factory=set)
    send_lists: Dict[int, List[Quadrant]] = field(default_factory=dict)
    remote: Dict[Quadrant, int] = field(default_factory=dict)

    @property
    def interior(self) -> Set[Quadrant]:
        return set(self.local) - self.boundary

    @classmethod
    def from_forest(cls, forest: Forest, rank: int) -> "RankTopology":
        topo = cls(rank=rank, num_ranks=forest.num_ranks, local=forest.leaves_of_rank(rank))
        envios: Dict[int, Set[Quadrant]] = defaultdict(set)
        for q in topo.local:
            for n in forest.neighbors_all(q):
                dueno = forest.owner(n)
                if dueno != rank:
                    topo.boundary.add(q)
                    envios[dueno].add(q)
                    topo.remote[n] = dueno
        topo.send_lists = {
            s: sorted(qs, key=lambda q: q.sort_key) for s, qs in sorted(envios.items())
        }
        return topo


class RankContext:
    """Estado de un rango: parches locales, parches fantasma y buzón compartido."""

    def __init__(
        self,
        rank: int,
        forest: Forest,
        patches: Mapping[Quadrant, Patch],
        mailbox: Mailbox,
        cfg: StencilConfig,
        level_min: int,
        level_max: int,
    ):
        self.rank = rank
        self.forest = forest
        self.mailbox = mailbox
        self.cfg = cfg
        self.level_min = level_min
        self.level_max = level_max
        self.topology = RankTopology.from_forest(forest, rank)
        self.patches: Dict[Quadrant, Patch] = {q: patches[q] for q in self.topology.local}
        self.ghosts: Dict[Quadrant, Patch] = {}
        self.ghost_owner: Dict[Quadrant, int] = {}
        self.remote_targets: Dict[Quadrant, int] = {}
        self.tiempo_comm = 0.0
        self._enviado = False
        self._plan_id: Optional[str] = None

    # === OPERACIONES DEL PLAN ===

    def preparar(self, plan: GhostFillPlan):
        """Agrupa las operaciones del plan global que tocan a este rango."""
        if plan.id == self._plan_id:
            return
        propios = set(self.topology.local) | set(self.topology.remote)
        self.gruesas: Dict[Quadrant, List[GhostOp]] = defaultdict(list)
        self.bc: Dict[Quadrant, List[GhostOp]] = defaultdict(list)
        self.interpolaciones: List[GhostOp] = []
        lados_vistos: Set[Tuple[Quadrant, object]] = set()
        for op in plan.ops:
            if op.dst not in propios:
                continue
            if op.es_grueso:
                self.gruesas[op.dst].append(op)
            elif op.tipo == TipoOperacion.PHYSBC:
                if (op.dst, op.region) not in lados_vistos:
                    lados_vistos.add((op.dst, op.region))
                    self.bc[op.dst].append(op)
            elif op.dst in self.patches:
                self.interpolaciones.append(op)
        self._plan_id = plan.id

    def buscar(self, q: Quadrant) -> Optional[Patch]:
        p = self.patches.get(q)
        return p if p is not None else self.ghosts.get(q)

    def _ejecutar(self, op: GhostOp, dst: Patch, src: Optional[Patch] = None):
        execute_op(op, dst, src, self.cfg)

    def aplicar_bc(self, q: Quadrant, p: Patch):
        for op in self.bc.get(q, ()):
            self._ejecutar(op, p)

    def _en_orden(self, qs: Iterable[Quadrant]) -> List[Quadrant]:
        return sorted(qs, key=lambda q: q.sort_key)

    # === FASES ===

    def fase_a(self):
        local = self.patches
        frontera = self._en_orden(self.topology.boundary)
        interior = self._en_orden(self.topology.interior)

        # Paso 1: regiones gruesas de la frontera desde vecinos locales
        for q in frontera:
            for op in self.gruesas.get(q, ()):
                if op.src in local:
                    self._ejecutar(op, local[q], local[op.src])
        for q in frontera:
            self.aplicar_bc(q, local[q])

        exchange_begin(self)

        # Paso 2: parches interiores
        for q in interior:
            for op in self.gruesas.get(q, ()):
                if op.src not in local:
                    raise ErrorProtocolo(f"Parche interior {q} con vecino remoto {op.src}")
                self._ejecutar(op, local[q], local[op.src])
        for q in interior:
            self.aplicar_bc(q, local[q])
        fuentes_interiores = self.topology.interior
        for op in self.interpolaciones:
            if op.src in fuentes_interiores:
                self._ejecutar(op, local[op.dst], local[op.src])

    def fase_b(self, indirect: bool = True):
        local = self.patches
        frontera = self._en_orden(self.topology.boundary)

        exchange_end(self)
        if indirect:
            self.intercambio_indirecto()

        # (a) regiones gruesas de la frontera desde parches fantasma
        for q in frontera:
            for op in self.gruesas.get(q, ()):
                if op.src not in local:
                    src = self.ghosts.get(op.src)
                    if src is None:
                        raise ErrorProtocolo(f"Falta el parche fantasma {op.src} en el rango {self.rank}")
                    self._ejecutar(op, local[q], src)
        for q in frontera:
            self.aplicar_bc(q, local[q])

        # (b) regiones gruesas de fantasmas que son fuente de interpolación
        fuentes: List[Quadrant] = []
        for op in self.interpolaciones:
            if op.src in self.ghosts and op.src not in fuentes:
                fuentes.append(op.src)
        for g in fuentes:
            for op in self.gruesas.get(g, ()):
                if op.src in local:
                    self._ejecutar(op, self.ghosts[g], local[op.src])

        # (c)
        for g in fuentes:
            self.aplicar_bc(g, self.ghosts[g])

        # (d) interpolación desde la frontera y desde fantasmas
        interiores = self.topology.interior
        for op in self.interpolaciones:
            if op.src in interiores:
                continue
            src = self.buscar(op.src)
            if src is None:
                raise ErrorProtocolo(f"Falta el parche grueso {op.src} en el rango {self.rank}")
            self._ejecutar(op, local[op.dst], src)

        # (e)
        finales = set(frontera) | {op.dst for op in self.interpolaciones}
        for q in self._en_orden(finales):
            self.aplicar_bc(q, local[q])

    def intercambio_indirecto(self):
        """Regiones gruesas entre parches fantasma de distintos dueños."""
        for g in self._en_orden(self.ghosts):
            for op in self.gruesas.get(g, ()):
                src = self.ghosts.get(op.src)
                if src is not None and self.ghost_owner[op.src] != self.ghost_owner[g]:
                    self._ejecutar(op, self.ghosts[g], src)


def exchange_begin(ctx: RankContext):
    """Empaqueta y envía los parches de frontera visibles para cada rango."""
    if ctx._enviado:
        raise ErrorProtocolo(f"exchange_begin repetido en el rango {ctx.rank}")
    inicio = time.perf_counter()
    for destino, qs in ctx.topology.send_lists.items():
        for q in qs:
            ctx.mailbox.send(ctx.rank, destino, pack(ctx.patches[q], ctx.rank))
    ctx.mailbox.close_send(ctx.rank)
    ctx._enviado = True
    ctx.tiempo_comm += time.perf_counter() - inicio


def exchange_end(ctx: RankContext) -> Dict[Quadrant, Patch]:
    """Recibe los parches fantasma, en orden de rango de origen."""
    if not ctx._enviado:
        raise ErrorProtocolo(f"exchange_end sin exchange_begin en el rango {ctx.rank}")
    inicio = time.perf_counter()
    ctx.ghosts = {}
    ctx.ghost_owner = {}
    for origen in range(ctx.topology.num_ranks):
        if origen == ctx.rank:
            continue
        for buf in ctx.mailbox.receive(origen, ctx.rank):
            ctx.ghosts[buf.quadrant] = unpack(buf, ctx.cfg)
            ctx.ghost_owner[buf.quadrant] = buf.source_rank
    faltantes = set(ctx.topology.remote) - set(ctx.ghosts)
    ctx._enviado = False
    ctx.tiempo_comm += time.perf_counter() - inicio
    if faltantes:
        raise ErrorProtocolo(
            f"El rango {ctx.rank} no recibió {len(faltantes)} parches fantasma",
            {"faltantes": sorted(str(q) for q in faltantes)},
        )
    return ctx.ghosts


# === COLECTIVOS ===

@dataclass
class ResultadoParalelo:
    tiempo_total: float
    tiempo_comm: float
    mensajes: int
    bytes: int


def _colectivo(contexts: Sequence[RankContext], fase: Callable, threads: int, order: Optional[Sequence[int]]):
    orden = [contexts[r] for r in (order if order is not None else range(len(contexts)))]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fase, orden))
    else:
        for ctx in orden:
            fase(ctx)


def parallel_update_ghost(
    contexts: Sequence[RankContext],
    threads: int = 1,
    order: Optional[Sequence[int]] = None,
    indirect: bool = True,
    gestor: Optional[GestorPlanes] = None,
) -> ResultadoParalelo:
    """Llenado colectivo: fase A en todos los rangos, barrera, fase B."""
    if not contexts:
        raise ErrorConfiguracion("No hay rangos")
    inicio = time.perf_counter()
    ctx0 = contexts[0]
    cualquiera = next((p for c in contexts for p in c.patches.values()), None)
    if cualquiera is None:
        return ResultadoParalelo(0.0, 0.0, 0, 0)
    plan = (gestor or gestor_planes).obtener_plan(ctx0.forest, ctx0.level_min, ctx0.level_max, cualquiera.M)

    mailbox = ctx0.mailbox
    mailbox.nueva_ronda("ghost")
    mensajes, nbytes = mailbox.mensajes, mailbox.bytes
    for ctx in contexts:
        ctx.preparar(plan)
        ctx.tiempo_comm = 0.0

    _colectivo(contexts, lambda c: c.fase_a(), threads, order)
    _colectivo(contexts, lambda c: c.fase_b(indirect), threads, order)

    return ResultadoParalelo(
        tiempo_total=time.perf_counter() - inicio,
        tiempo_comm=sum(c.tiempo_comm for c in contexts),
        mensajes=mailbox.mensajes - mensajes,
        bytes=mailbox.bytes - nbytes,
    )


def exchange_target_levels(
    contexts: Sequence[RankContext],
    targets: Mapping[Quadrant, int],
    level_min: int,
    level_max: int,
) -> Dict[Quadrant, int]:
    """Intercambia niveles objetivo de la frontera y suaviza cada hoja local."""
    mailbox = contexts[0].mailbox
    mailbox.nueva_ronda("target")
    for ctx in contexts:
        for destino, qs in ctx.topology.send_lists.items():
            mailbox.send(ctx.rank, destino, [(q, targets[q]) for q in qs], canal="target")
        mailbox.close_send(ctx.rank, canal="target")

    suavizados: Dict[Quadrant, int] = {}
    for ctx in contexts:
        ctx.remote_targets = {}
        for origen in range(ctx.topology.num_ranks):
            if origen == ctx.rank:
                continue
            for mensaje in mailbox.receive(origen, ctx.rank, canal="target"):
                ctx.remote_targets.update(mensaje)
        for q in ctx.topology.local:
            vecinos = []
            for n in ctx.forest.neighbors_all(q):
                t = targets[n] if n in ctx.patches else ctx.remote_targets.get(n)
                if t is None:
                    raise ErrorProtocolo(f"Sin nivel objetivo para el vecino {n} de {q}")
                vecinos.append((n.level, t))
            suavizados[q] = smoothed_target(q.level, targets[q], vecinos, level_min, level_max)
    return suavizados


class SimulatedCluster:
    """Conjunto de rangos simulados sobre un bosque particionado."""

    def __init__(
        self,
        forest: Forest,
        patches: Mapping[Quadrant, Patch],
        num_ranks: int,
        cfg: StencilConfig,
        level_min: int,
        level_max: int,
        threads: int = 1,
        trace: bool = False,
    ):
        if num_ranks < 1:
            raise ErrorConfiguracion(f"P ≥ 1: P={num_ranks}")
        self.num_ranks = num_ranks
        self.cfg = cfg
        self.level_min = level_min
        self.level_max = level_max
        self.threads = threads
        self.mailbox = Mailbox(num_ranks, trace)
        self.contexts: List[RankContext] = []
        self.rebuild(forest, patches)

    def rebuild(self, forest: Forest, patches: Mapping[Quadrant, Patch]):
        """Reconstruye los contextos tras una nueva partición."""
        if forest.num_ranks != self.num_ranks:
            forest.partition(self.num_ranks)
        self.forest = forest
        self.contexts = [
            RankContext(r, forest, patches, self.mailbox, self.cfg, self.level_min, self.level_max)
            for r in range(self.num_ranks)
        ]

    def update_ghost(self, order: Optional[Sequence[int]] = None, indirect: bool = True) -> ResultadoParalelo:
        return parallel_update_ghost(self.contexts, self.threads, order, indirect)

    def exchange_target_levels(self, targets: Mapping[Quadrant, int]) -> Dict[Quadrant, int]:
        return exchange_target_levels(self.contexts, targets, self.level_min, self.level_max)

    def map_ranks(self, funcion: Callable[[RankContext], object]) -> list:
        """Aplica `funcion` a cada rango, en hilos si threads > 1; resultados en orden de rango."""
        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(funcion, self.contexts))
        return [funcion(ctx) for ctx in self.contexts]

    def grids_per_rank(self) -> List[int]:
        return [len(ctx.patches) for ctx in self.contexts]

    @property
    def trace(self) -> Optional[List[str]]:
        return self.mailbox.trace
