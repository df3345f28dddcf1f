"""Operaciones del historial de corridas."""

import json
from typing import List, Optional

from registro.base import Corrida, get_session, inicializar_base_datos


def guardar_corrida(
    resumen: dict,
    stats,
    url: Optional[str] = None,
    exito: bool = True,
    error: Optional[str] = None,
) -> int:
    """Guarda una corrida terminada; devuelve su id."""
    inicializar_base_datos(url)
    tiempos = stats.tiempos
    with get_session(url) as db:
        corrida = Corrida(
            configuracion_json=json.dumps(resumen),
            dominio=resumen.get("domain", "brick"),
            ranks=stats.ranks,
            grids_per_rank_avg=stats.grids_per_rank_avg,
            wall=stats.wall,
            advance=tiempos.get("advance", 0.0),
            ghost_fill=tiempos.get("ghost_fill", 0.0),
            comm=tiempos.get("comm", 0.0),
            cfl_sync=tiempos.get("cfl_sync", 0.0),
            regrid=tiempos.get("regrid", 0.0),
            cell_updates=stats.cell_updates,
            deriva_masa=stats.deriva_masa,
            exito=exito,
            error=error,
        )
        db.add(corrida)
        db.commit()
        return corrida.id


def listar_corridas(url: Optional[str] = None, limite: int = 20) -> List[dict]:
    """Últimas corridas, de la más antigua a la más reciente."""
    inicializar_base_datos(url)
    with get_session(url) as db:
        corridas = db.query(Corrida).order_by(Corrida.id.desc()).limit(limite).all()
        return [
            {
                "id": c.id,
                "creada_en": c.creada_en.isoformat(),
                "configuracion": json.loads(c.configuracion_json or "{}"),
                "ranks": c.ranks,
                "grids_per_rank_avg": c.grids_per_rank_avg,
                "wall": c.wall,
                "advance": c.advance,
                "ghost_fill": c.ghost_fill,
                "comm": c.comm,
                "cfl_sync": c.cfl_sync,
                "regrid": c.regrid,
                "cell_updates": c.cell_updates,
                "deriva_masa": c.deriva_masa,
                "exito": c.exito,
            }
            for c in reversed(corridas)
        ]
