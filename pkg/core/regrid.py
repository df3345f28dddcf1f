"""Regrid de BOSQUE: etiquetado, suavizado, adaptación, balance y transferencia."""

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

from core.errores import ErrorBalance, ErrorBosque
from fantasmas.paralelo import SimulatedCluster
from fantasmas.serial import update_ghost
from malla.forest import ALL_REGIONS, MAX_LEVEL, Forest, Quadrant, balance_2to1
from parches.patch import (
    Patch,
    StencilConfig,
    average_to_parent,
    interpolate_to_children,
    smoothed_target,
    tag_coarsen,
    tag_refine,
)


@dataclass
class ParametrosRegrid:
    tau_r: float
    tau_c: float
    level_min: int
    level_max: int
    smooth: bool = True


@dataclass
class ResultadoRegrid:
    refinadas: int
    engrosadas: int
    hojas: int
    level_min: int
    level_max: int


def familias(forest: Forest) -> List[List[Quadrant]]:
    """Familias de 4 hermanos que son hojas, en orden de Morton del padre."""
    por_padre: Dict[Quadrant, List[Quadrant]] = {}
    for q in forest.global_leaves():
        if q.level > 0:
            por_padre.setdefault(q.parent(), []).append(q)
    return [
        sorted(hs, key=lambda q: q.child_id)
        for padre, hs in sorted(por_padre.items(), key=lambda par: par[0].sort_key)
        if len(hs) == 4
    ]


def compute_targets(forest: Forest, patches: Mapping[Quadrant, Patch], params: ParametrosRegrid) -> Dict[Quadrant, int]:
    """Nivel objetivo por hoja: nivel + 1, nivel - 1 o nivel."""
    targets = {q: q.level for q in forest.global_leaves()}
    for q in targets:
        if tag_refine(patches[q], params.tau_r, params.level_max):
            targets[q] = q.level + 1
    for familia in familias(forest):
        if any(targets[h] > h.level for h in familia):
            continue
        if tag_coarsen([patches[h] for h in familia], params.tau_c, params.level_min):
            for h in familia:
                targets[h] = h.level - 1
    for q, t in targets.items():
        patches[q].target_level = t
    return targets


def smooth_targets(forest: Forest, targets: Mapping[Quadrant, int], level_min: int, level_max: int) -> Dict[Quadrant, int]:
    """Suavizado serial de los niveles objetivo."""
    return {
        q: smoothed_target(
            q.level,
            targets[q],
            [(n.level, targets[n]) for n in forest.neighbors_all(q)],
            level_min,
            level_max,
        )
        for q in forest.global_leaves()
    }


def _puede_engrosar(forest: Forest, padre: Quadrant) -> bool:
    try:
        for region in ALL_REGIONS:
            forest.neighbor(padre, region)
    except ErrorBalance:
        return False
    return True


def adapt(forest: Forest, targets: Mapping[Quadrant, int]) -> Tuple[int, int]:
    """Refina, balancea y engrosa en el propio bosque; devuelve (refinadas, engrosadas)."""
    refinar = [q for q in forest.global_leaves() if targets.get(q, q.level) > q.level]
    for q in refinar:
        forest.refine(q)
    balance_2to1(forest)

    engrosadas = 0
    candidatas = [
        f for f in familias(forest)
        if all(h in targets and targets[h] < h.level for h in f)
    ]
    # Las familias más finas primero
    candidatas.sort(key=lambda f: (-f[0].level, f[0].sort_key))
    for familia in candidatas:
        padre = forest.coarsen(familia)
        if _puede_engrosar(forest, padre):
            engrosadas += 1
        else:
            forest.refine(padre)
    return len(refinar), engrosadas


def transfer(
    forest: Forest,
    old: Mapping[Quadrant, Patch],
    cfg: StencilConfig,
) -> Dict[Quadrant, Patch]:
    """Datos del bosque nuevo: reutiliza, interpola a hijos o promedia al padre."""
    nuevos: Dict[Quadrant, Patch] = {}
    hijos_de: Dict[Quadrant, List[Patch]] = {}
    for q in forest.global_leaves():
        if q in old:
            nuevos[q] = old[q]
            continue
        if q.level > 0 and q.parent() in old:
            padre = q.parent()
            if padre not in hijos_de:
                hijos_de[padre] = interpolate_to_children(old[padre], cfg)
            nuevos[q] = hijos_de[padre][q.child_id]
            continue
        hijos = q.children() if q.level < MAX_LEVEL else []
        if hijos and all(h in old for h in hijos):
            nuevos[q] = average_to_parent([old[h] for h in hijos])
            continue
        raise ErrorBosque(f"Sin datos de origen para la hoja nueva {q}", {"quadrant": str(q)})
    for q, p in nuevos.items():
        p.target_level = q.level
    return nuevos


def regrid(
    forest: Forest,
    patches: Dict[Quadrant, Patch],
    params: ParametrosRegrid,
    cfg: StencilConfig,
    cluster: Optional[SimulatedCluster] = None,
    rellenar: bool = True,
) -> Tuple[Dict[Quadrant, Patch], ResultadoRegrid]:
    """tag -> smooth -> adapt -> balance -> transfer -> partition -> ghost fill.

    Los fantasmas deben estar llenos al entrar. El bosque se modifica en sitio.
    Con rellenar=False el llenado final queda a cargo de quien llama.
    """
    targets = compute_targets(forest, patches, params)
    if params.smooth:
        if cluster is not None:
            targets = cluster.exchange_target_levels(targets)
        else:
            targets = smooth_targets(forest, targets, params.level_min, params.level_max)

    refinadas, engrosadas = adapt(forest, targets)
    nuevos = transfer(forest, patches, cfg)

    if cluster is not None:
        forest.partition(cluster.num_ranks)
        cluster.rebuild(forest, nuevos)
        if rellenar:
            cluster.update_ghost()
    else:
        forest.partition(1)
        if rellenar:
            update_ghost(forest, nuevos, params.level_min, params.level_max, cfg)

    lmin, lmax = forest.levels()
    return nuevos, ResultadoRegrid(refinadas, engrosadas, len(forest), lmin, lmax)
