"""Salidas de una corrida: CSV de tiempos, volcado de parches y VTK legado."""

import csv
from pathlib import Path
from typing import Dict, Mapping, Optional

import numpy as np

from core.errores import ErrorSalida
from core.solver import RunStats
from malla.connectivity import Connectivity
from malla.forest import Quadrant
from parches.patch import Patch, StencilConfig, dump_patch, load_patch

# Nombre aceptado -> formato de escritura
FORMATOS = {
    "dump": "dump",
    "patch-dump": "dump",
    "vtk": "vtk",
    "legacy-vtk-quads": "vtk",
}

COLUMNAS_TIEMPOS = [
    "ranks",
    "grids_per_rank_avg",
    "wall",
    "advance",
    "ghost_fill",
    "comm",
    "cfl_sync",
    "regrid",
    "cell_updates",
]


def _preparar(path) -> Path:
    ruta = Path(path)
    try:
        ruta.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ErrorSalida(f"No se puede crear {ruta.parent}: {e}", {"ruta": str(ruta)})
    return ruta


def emit_timing(stats: RunStats, path):
    """Agrega una fila al CSV de tiempos; escribe el encabezado si el archivo es nuevo."""
    ruta = _preparar(path)
    nuevo = not ruta.exists() or ruta.stat().st_size == 0
    try:
        with open(ruta, "a", newline="", encoding="utf-8") as f:
            escritor = csv.DictWriter(f, fieldnames=COLUMNAS_TIEMPOS)
            if nuevo:
                escritor.writeheader()
            escritor.writerow(stats.fila_csv())
    except OSError as e:
        raise ErrorSalida(f"No se puede escribir {ruta}: {e}", {"ruta": str(ruta)})


def _ordenados(patches: Mapping[Quadrant, Patch]):
    return [patches[q] for q in sorted(patches, key=lambda q: q.sort_key)]


def emit_solution(
    patches: Mapping[Quadrant, Patch],
    path,
    format: str = "dump",
    conn: Optional[Connectivity] = None,
):
    """Escribe la solución como volcado de parches o como VTK legado de cuadriláteros."""
    formato = FORMATOS.get(format)
    if formato is None:
        raise ErrorSalida(f"Formato desconocido: {format}", {"formatos": list(FORMATOS)})
    ruta = _preparar(path)
    try:
        with open(ruta, "w", encoding="utf-8") as f:
            if formato == "dump":
                f.write("\n\n".join(dump_patch(p) for p in _ordenados(patches)))
                f.write("\n")
            else:
                _escribir_vtk(f, _ordenados(patches), conn)
    except OSError as e:
        raise ErrorSalida(f"No se puede escribir {ruta}: {e}", {"ruta": str(ruta)})


def load_solution(path, cfg: Optional[StencilConfig] = None) -> Dict[Quadrant, Patch]:
    """Lee un volcado de parches escrito por emit_solution."""
    try:
        texto = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ErrorSalida(f"No se puede leer {path}: {e}")
    parches = {}
    for bloque in texto.strip().split("\n\n"):
        if bloque.strip():
            p = load_patch(bloque, cfg)
            parches[p.quadrant] = p
    return parches


# === VTK ===

def _esquinas(p: Patch, conn: Optional[Connectivity]):
    """Coordenadas físicas de las (M+1)² esquinas de celda."""
    q = p.quadrant
    escala = 2.0 ** -q.level
    k = np.arange(p.M + 1) / p.M
    x, y = np.meshgrid((q.x + k) * escala, (q.y + k) * escala, indexing="ij")
    mapa = conn.mapping(q.block) if conn is not None else None
    if mapa is None:
        return x, y, np.zeros_like(x)
    coords = mapa(x, y)
    if len(coords) == 2:
        return coords[0], coords[1], np.zeros_like(x)
    return coords


def _escribir_vtk(f, parches, conn: Optional[Connectivity]):
    puntos, celdas, valores = [], [], []
    base = 0
    for p in parches:
        X, Y, Z = _esquinas(p, conn)
        puntos.append(np.column_stack([X.ravel(), Y.ravel(), Z.ravel()]))
        n = p.M + 1
        i, j = np.meshgrid(np.arange(p.M), np.arange(p.M), indexing="ij")
        i, j = i.ravel(), j.ravel()
        a = base + i * n + j
        celdas.append(np.column_stack([np.full_like(a, 4), a, a + n, a + n + 1, a + 1]))
        valores.append(p.interior.ravel())
        base += n * n

    P = np.vstack(puntos) if puntos else np.zeros((0, 3))
    C = np.vstack(celdas) if celdas else np.zeros((0, 5), dtype=int)
    V = np.concatenate(valores) if valores else np.zeros(0)

    f.write("# vtk DataFile Version 3.0\nBOSQUE\nASCII\nDATASET UNSTRUCTURED_GRID\n")
    f.write(f"POINTS {len(P)} double\n")
    np.savetxt(f, P, fmt="%.17g")
    f.write(f"CELLS {len(C)} {C.size}\n")
    np.savetxt(f, C, fmt="%d")
    f.write(f"CELL_TYPES {len(C)}\n")
    np.savetxt(f, np.full(len(C), 9), fmt="%d")
    f.write(f"CELL_DATA {len(V)}\nSCALARS q double 1\nLOOKUP_TABLE default\n")
    np.savetxt(f, V, fmt="%.17g")
