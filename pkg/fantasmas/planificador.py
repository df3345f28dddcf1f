"""Planificador de llenado de fantasmas de BOSQUE.

Un plan es la lista ordenada de operaciones del llenado serial en cuatro
barridos por nivel:

1. copia / promedio, niveles level_min..level_max
2. condiciones físicas, level_min..level_max-1
3. interpolación grueso -> fino, level_min..level_max-1
4. condiciones físicas, level_min+1..level_max
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Union
from uuid import uuid4

from malla.forest import (
    ALL_REGIONS,
    CORNERS,
    FACES,
    Forest,
    NeighborKind,
    Quadrant,
    Region,
)
from malla.transforms import (
    CoarseFineTransform,
    SameSizeTransform,
    coarse_fine_transform,
    same_size_transform,
)


class EstadoPlan(str, Enum):
    CONSTRUIDO = "construido"
    EN_EJECUCION = "en_ejecucion"
    COMPLETADO = "completado"
    FALLIDO = "fallido"


class TipoOperacion(str, Enum):
    COPY = "copy"
    AVERAGE = "average"
    INTERPOLATE = "interpolate"
    PHYSBC = "physbc"


@dataclass
class GhostOp:
    """Una operación del plan.

    Para copy/average `region` es la región de dst; para interpolate es la
    región de src donde está dst; para physbc es el lado exterior de dst.
    """
    numero: int
    tipo: TipoOperacion
    sweep: int
    dst: Quadrant
    src: Optional[Quadrant] = None
    region: Optional[Region] = None
    transform: Optional[Union[SameSizeTransform, CoarseFineTransform]] = None
    forbidden: FrozenSet[Region] = frozenset()

    @property
    def es_grueso(self) -> bool:
        return self.tipo in (TipoOperacion.COPY, TipoOperacion.AVERAGE)

    def to_dict(self) -> dict:
        return {
            "numero": self.numero,
            "tipo": self.tipo.value,
            "sweep": self.sweep,
            "dst": str(self.dst),
            "src": str(self.src) if self.src else None,
            "region": str(self.region) if self.region else None,
            "forbidden": sorted(str(r) for r in self.forbidden),
        }


@dataclass
class GhostFillPlan:
    """Plan completo de llenado de fantasmas."""
    id: str
    level_min: int
    level_max: int
    M: int
    ops: List[GhostOp] = field(default_factory=list)
    estado: EstadoPlan = EstadoPlan.CONSTRUIDO

    def by_sweep(self) -> Dict[int, List[GhostOp]]:
        grupos: Dict[int, List[GhostOp]] = {s: [] for s in range(1, 5)}
        for op in self.ops:
            grupos[op.sweep].append(op)
        return grupos

    def counts(self) -> Dict[str, int]:
        conteo = {t.value: 0 for t in TipoOperacion}
        for op in self.ops:
            conteo[op.tipo.value] += 1
        return conteo

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "level_min": self.level_min,
            "level_max": self.level_max,
            "M": self.M,
            "estado": self.estado.value,
            "conteo": self.counts(),
            "ops": [op.to_dict() for op in self.ops],
        }

    def plan_a_texto(self) -> str:
        return plan_a_texto(self)


def physbc_sides(forest: Forest, q: Quadrant) -> List[Region]:
    """Lados exteriores de q: caras de frontera y esquinas sin vecino con caras enlazadas."""
    lados = [f for f in FACES if forest.neighbor(q, f).kind == NeighborKind.BOUNDARY]
    for c in CORNERS:
        cara_x = FACES[c.index & 1]
        cara_y = FACES[2 + (c.index >> 1)]
        if cara_x in lados or cara_y in lados:
            continue
        if forest.neighbor(q, c).kind == NeighborKind.BOUNDARY:
            lados.append(c)
    return lados


def _niveles(forest: Forest, nivel: int) -> List[Quadrant]:
    return [q for q in forest.global_leaves() if q.level == nivel]


def build_plan(forest: Forest, level_min: int, level_max: int, M: int) -> GhostFillPlan:
    """Plan determinista del llenado serial; rechaza bosques desbalanceados."""
    plan = GhostFillPlan(id=str(uuid4()), level_min=level_min, level_max=level_max, M=M)
    ops = plan.ops

    def agregar(**kwargs):
        ops.append(GhostOp(numero=len(ops) + 1, **kwargs))

    # Barrido 1: regiones gruesas desde vecinos del mismo tamaño y más finos
    for nivel in range(level_min, level_max + 1):
        for q in _niveles(forest, nivel):
            for region in ALL_REGIONS:
                info = forest.neighbor(q, region)
                if info.kind == NeighborKind.SAME:
                    agregar(
                        tipo=TipoOperacion.COPY, sweep=1, dst=q, src=info.neighbors[0],
                        region=region, transform=same_size_transform(info, M),
                    )
                elif info.kind == NeighborKind.HALF:
                    for k, fino in enumerate(info.neighbors):
                        agregar(
                            tipo=TipoOperacion.AVERAGE, sweep=1, dst=q, src=fino,
                            region=region, transform=coarse_fine_transform(info, k, M),
                        )

    def barrido_bc(sweep: int, niveles: range):
        for nivel in niveles:
            for q in _niveles(forest, nivel):
                for lado in physbc_sides(forest, q):
                    agregar(tipo=TipoOperacion.PHYSBC, sweep=sweep, dst=q, region=lado)

    # Barrido 2: en el caso uniforme cubre level_min
    barrido_bc(2, range(level_min, max(level_max, level_min + 1)))

    # Barrido 3: interpolación desde el parche grueso hacia cada vecino fino
    for nivel in range(level_min, level_max):
        for q in _niveles(forest, nivel):
            infos = [forest.neighbor(q, r) for r in ALL_REGIONS]
            prohibidas = frozenset(i.region for i in infos if i.kind == NeighborKind.DOUBLE)
            for info in infos:
                if info.kind != NeighborKind.HALF:
                    continue
                for k, fino in enumerate(info.neighbors):
                    agregar(
                        tipo=TipoOperacion.INTERPOLATE, sweep=3, dst=fino, src=q,
                        region=info.region, transform=coarse_fine_transform(info, k, M),
                        forbidden=prohibidas,
                    )

    barrido_bc(4, range(level_min + 1, level_max + 1))
    return plan


def plan_a_texto(plan: GhostFillPlan) -> str:
    """Resumen legible del plan."""
    conteo = plan.counts()
    lineas = [
        f"Plan {plan.id[:8]} niveles {plan.level_min}..{plan.level_max} ({plan.estado.value})",
        "  " + ", ".join(f"{k}: {v}" for k, v in conteo.items()),
    ]
    for sweep, ops in plan.by_sweep().items():
        lineas.append(f"  barrido {sweep}: {len(ops)} operaciones")
    return "\n".join(lineas)
