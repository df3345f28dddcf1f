"""Llenado de celdas fantasma: plan serial, caché de planes y rangos simulados."""

from fantasmas.gestor_planes import GestorPlanes, gestor_planes
from fantasmas.paralelo import (
    GhostPatchBuffer,
    Mailbox,
    RankContext,
    RankTopology,
    SimulatedCluster,
    exchange_begin,
    exchange_end,
    exchange_target_levels,
    frame_mask,
    pack,
    parallel_update_ghost,
    unpack,
)
from fantasmas.planificador import GhostFillPlan, GhostOp, TipoOperacion, build_plan
from fantasmas.serial import ResultadoGhostFill, update_ghost

__all__ = [
    "GestorPlanes",
    "gestor_planes",
    "GhostPatchBuffer",
    "Mailbox",
    "RankContext",
    "RankTopology",
    "SimulatedCluster",
    "exchange_begin",
    "exchange_end",
    "exchange_target_levels",
    "frame_mask",
    "pack",
    "parallel_update_ghost",
    "unpack",
    "GhostFillPlan",
    "GhostOp",
    "TipoOperacion",
    "build_plan",
    "ResultadoGhostFill",
    "update_ghost",
]
