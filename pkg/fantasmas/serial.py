"""Ejecutor serial del llenado de fantasmas de BOSQUE."""

import time
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

from core.errores import ErrorBosque, ErrorProtocolo
from fantasmas.gestor_planes import GestorPlanes, gestor_planes
from fantasmas.planificador import EstadoPlan, GhostFillPlan, GhostOp, TipoOperacion
from malla.forest import Forest, Quadrant
from parches.patch import (
    Patch,
    StencilConfig,
    apply_physbc,
    average_ghost,
    copy_ghost,
    interpolate_ghost,
)


@dataclass
class ResultadoGhostFill:
    """Resultado de ejecutar un plan de llenado."""
    exito: bool
    operaciones: Dict[str, int] = field(default_factory=dict)
    tiempo_total: float = 0.0
    plan_id: Optional[str] = None


def execute_op(op: GhostOp, dst: Patch, src: Optional[Patch], cfg: StencilConfig):
    """Aplica una operación sobre parches ya resueltos."""
    if op.tipo == TipoOperacion.PHYSBC:
        apply_physbc(dst, op.region)
        return
    if src is None:
        raise ErrorProtocolo(f"Falta el parche origen {op.src} de la operación {op.numero}")
    if op.tipo == TipoOperacion.COPY:
        copy_ghost(dst, src, op.region, op.transform)
    elif op.tipo == TipoOperacion.AVERAGE:
        average_ghost(dst, src, op.region, op.transform)
    else:
        interpolate_ghost(dst, src, op.region, op.transform, cfg, op.forbidden)


def run_plan(plan: GhostFillPlan, patches: Mapping[Quadrant, Patch], cfg: StencilConfig) -> ResultadoGhostFill:
    inicio = time.perf_counter()
    plan.estado = EstadoPlan.EN_EJECUCION
    try:
        for op in plan.ops:
            execute_op(op, patches[op.dst], patches.get(op.src) if op.src else None, cfg)
    except (ErrorBosque, KeyError):
        plan.estado = EstadoPlan.FALLIDO
        raise
    plan.estado = EstadoPlan.COMPLETADO
    return ResultadoGhostFill(
        exito=True,
        operaciones=plan.counts(),
        tiempo_total=time.perf_counter() - inicio,
        plan_id=plan.id,
    )


def update_ghost(
    forest: Forest,
    patches: Mapping[Quadrant, Patch],
    level_min: int,
    level_max: int,
    cfg: Optional[StencilConfig] = None,
    gestor: Optional[GestorPlanes] = None,
) -> ResultadoGhostFill:
    """Llena todos los fantasmas de todos los parches con el plan (cacheado) del bosque."""
    if not patches:
        return ResultadoGhostFill(exito=True)
    M = next(iter(patches.values())).M
    plan = (gestor or gestor_planes).obtener_plan(forest, level_min, level_max, M)
    return run_plan(plan, patches, cfg or StencilConfig())
