"""Gestor de planes de llenado de BOSQUE."""

from typing import Dict, Optional, Tuple

from fantasmas.planificador import GhostFillPlan, build_plan
from malla.forest import Forest

ClavePlan = Tuple[str, int, int, int, int]


class GestorPlanes:
    """Cachea planes por (uid del bosque, revisión, niveles, M)."""

    def __init__(self):
        self._planes: Dict[ClavePlan, GhostFillPlan] = {}
        self.aciertos = 0
        self.fallos = 0

    @staticmethod
    def clave(forest: Forest, level_min: int, level_max: int, M: int) -> ClavePlan:
        return (forest.uid, forest.revision, level_min, level_max, M)

    def obtener_plan(self, forest: Forest, level_min: int, level_max: int, M: int) -> GhostFillPlan:
        """Devuelve el plan vigente, construyéndolo si el bosque cambió."""
        clave = self.clave(forest, level_min, level_max, M)
        plan = self._planes.get(clave)
        if plan is not None:
            self.aciertos += 1
            return plan

        self.fallos += 1
        # Las revisiones anteriores del mismo bosque ya no sirven
        for vieja in [c for c in self._planes if c[0] == forest.uid]:
            del self._planes[vieja]
        plan = build_plan(forest, level_min, level_max, M)
        self._planes[clave] = plan
        return plan

    def buscar_plan(self, plan_id: str) -> Optional[GhostFillPlan]:
        for plan in self._planes.values():
            if plan.id == plan_id:
                return plan
        return None

    def limpiar(self):
        self._planes.clear()
        self.aciertos = 0
        self.fallos = 0

    def estadisticas(self) -> dict:
        return {
            "planes": len(self._planes),
            "aciertos": self.aciertos,
            "fallos": self.fallos,
        }


# Instancia global
gestor_planes = GestorPlanes()
