"""Parches de BOSQUE y operadores de celdas fantasma.

Cada parche guarda un arreglo contiguo (M+2m)² indexado q[i+m, j+m], con el
índice x primero. Los operadores de fantasmas trabajan con mapas de índices
planos que se calculan una vez por (región, transformación, M, m).
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, FrozenSet, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np

from core.errores import (
    ErrorConfiguracion,
    ErrorLocalidad,
    ErrorPrecondicion,
    ErrorSalida,
)
from malla.connectivity import BlockMapping
from malla.forest import CORNERS, FACES, Quadrant, Region, RegionKind
from malla.transforms import (
    DIRECTIONS,
    CoarseFineTransform,
    SameSizeTransform,
    parent_child_transform,
)

LIMITADORES = ("minmod", "mc", "none")


class BCKind(str, Enum):
    EXTRAPOLATE = "extrapolate"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class StencilConfig:
    """Ancho del stencil de interpolación y limitador de pendientes."""
    w: int = 3
    limiter: str = "minmod"

    def __post_init__(self):
        if self.limiter not in LIMITADORES:
            raise ErrorConfiguracion(
                f"Limitador desconocido: {self.limiter}",
                {"permitidos": list(LIMITADORES)},
            )


class Patch:
    """Datos de una hoja: interior M×M más m capas fantasma."""

    def __init__(
        self,
        quadrant: Quadrant,
        M: int,
        m: int,
        cfg: Optional[StencilConfig] = None,
        q: Optional[np.ndarray] = None,
    ):
        cfg = cfg or StencilConfig()
        if M % 2:
            raise ErrorPrecondicion(f"M even: M={M}")
        if m < 1:
            raise ErrorPrecondicion(f"m ≥ 1: m={m}")
        if 4 * m > M:
            raise ErrorPrecondicion(f"m ≤ M/4: m={m}, M={M}")
        if 2 * cfg.w > M:
            raise ErrorPrecondicion(f"w ≤ M/2: w={cfg.w}, M={M}")

        self.cfg = cfg
        self.quadrant = quadrant
        self.M = M
        self.m = m
        self.level = quadrant.level
        self.h = 2.0 ** -quadrant.level / M
        self.target_level = quadrant.level

        n = M + 2 * m
        if q is None:
            self.q = np.zeros((n, n), dtype=np.float64)
        else:
            if q.shape != (n, n):
                raise ErrorPrecondicion(f"Forma {q.shape} esperada {(n, n)}")
            self.q = np.ascontiguousarray(q, dtype=np.float64).copy()

    @property
    def interior(self) -> np.ndarray:
        return self.q[self.m:self.m + self.M, self.m:self.m + self.M]

    def copy(self) -> "Patch":
        otro = Patch(self.quadrant, self.M, self.m, self.cfg, q=self.q)
        otro.target_level = self.target_level
        return otro

    def spread(self) -> float:
        interior = self.interior
        return float(interior.max() - interior.min())

    def mass(self) -> float:
        """Integral del interior en unidades de bloque."""
        return float(self.interior.sum()) * self.h * self.h

    def __repr__(self) -> str:
        return f"Patch({self.quadrant}, M={self.M}, m={self.m})"


# === GEOMETRIA DE REGIONES ===

def region_ranges(region: Optional[Region], M: int, m: int) -> Tuple[range, range]:
    """Rangos (i, j) de una región fantasma; None es el interior."""
    bajo, alto, centro = range(-m, 0), range(M, M + m), range(0, M)
    if region is None:
        return centro, centro
    if region.kind == RegionKind.FACE:
        return [
            (bajo, centro),
            (alto, centro),
            (centro, bajo),
            (centro, alto),
        ][region.index]
    return (
        alto if region.index & 1 else bajo,
        alto if region.index >> 1 else bajo,
    )


def region_cells(region: Optional[Region], M: int, m: int) -> Tuple[np.ndarray, np.ndarray]:
    ri, rj = region_ranges(region, M, m)
    i, j = np.meshgrid(np.arange(ri.start, ri.stop), np.arange(rj.start, rj.stop), indexing="ij")
    return i.ravel(), j.ravel()


def ghost_region(i: int, j: int, M: int) -> Optional[Region]:
    """Región fantasma que contiene la celda (i, j); None si es interior."""
    ix = 0 if i < 0 else 2 if i >= M else 1
    jy = 0 if j < 0 else 2 if j >= M else 1
    if ix == 1 and jy == 1:
        return None
    if jy == 1:
        return FACES[0 if ix == 0 else 1]
    if ix == 1:
        return FACES[2 if jy == 0 else 3]
    return CORNERS[(ix // 2) + 2 * (jy // 2)]


def _flat(i, j, M: int, m: int):
    return (np.asarray(i) + m) * (M + 2 * m) + (np.asarray(j) + m)


def _interior(i, j, M: int):
    return (i >= 0) & (i < M) & (j >= 0) & (j < M)


def _congelar(*arrays):
    for a in arrays:
        a.setflags(write=False)
    return arrays


# === MAPAS DE INDICES ===

@lru_cache(maxsize=None)
def _mapa_copia(region: Region, t: SameSizeTransform, M: int, m: int):
    i, j = region_cells(region, M, m)
    si, sj = t.apply_arrays(i, j)
    if not np.all(_interior(si, sj, M)):
        raise ErrorPrecondicion(f"La región {region} no es adyacente al origen", {"transform": str(t)})
    return _congelar(_flat(i, j, M, m), _flat(si, sj, M, m))


@lru_cache(maxsize=None)
def _mapa_promedio(region: Optional[Region], t: CoarseFineTransform, M: int, m: int):
    i, j = region_cells(region, M, m)
    fi, fj = t.fine_indices_arrays(i, j)
    dentro = np.all(_interior(fi, fj, M), axis=0)
    if not dentro.any():
        raise ErrorPrecondicion(f"Ninguna celda de {region} cae en el interior fino")
    return _congelar(_flat(i[dentro], j[dentro], M, m), _flat(fi[:, dentro], fj[:, dentro], M, m))


class MapaInterpolacion(NamedTuple):
    destino: np.ndarray
    centro: np.ndarray
    izquierda: np.ndarray
    derecha: np.ndarray
    abajo: np.ndarray
    arriba: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    huella: FrozenSet[Region]


def _banda(region: Region, M: int, m: int) -> Tuple[range, range]:
    c = -(-m // 2)
    bajo, alto, todo = range(0, c), range(M - c, M), range(0, M)
    if region.kind == RegionKind.FACE:
        return [(bajo, todo), (alto, todo), (todo, bajo), (todo, alto)][region.index]
    return (alto if region.index & 1 else bajo, alto if region.index >> 1 else bajo)


def _construir_interpolacion(ic, jc, fi, fj, M: int, m: int, destino_valido) -> MapaInterpolacion:
    """Mapa de interpolación para celdas finas (fi, fj) hijas de (ic, jc)."""
    dk = np.array(DIRECTIONS)
    dx = np.broadcast_to(dk[:, 0:1], fi.shape)[destino_valido]
    dy = np.broadcast_to(dk[:, 1:2], fi.shape)[destino_valido]
    ic = np.broadcast_to(ic, fi.shape)[destino_valido]
    jc = np.broadcast_to(jc, fi.shape)[destino_valido]

    huella = set()
    for vi, vj in ((ic - 1, jc), (ic + 1, jc), (ic, jc - 1), (ic, jc + 1)):
        for a, b in set(zip(vi.tolist(), vj.tolist())):
            region = ghost_region(a, b, M)
            if region is not None:
                huella.add(region)

    return MapaInterpolacion(
        *_congelar(
            _flat(fi[destino_valido], fj[destino_valido], M, m),
            _flat(ic, jc, M, m),
            _flat(ic - 1, jc, M, m),
            _flat(ic + 1, jc, M, m),
            _flat(ic, jc - 1, M, m),
            _flat(ic, jc + 1, M, m),
            dx.copy(),
            dy.copy(),
        ),
        frozenset(huella),
    )


@lru_cache(maxsize=None)
def _mapa_interpolacion(region: Region, t: CoarseFineTransform, M: int, m: int) -> MapaInterpolacion:
    ri, rj = _banda(region, M, m)
    ic, jc = np.meshgrid(np.arange(ri.start, ri.stop), np.arange(rj.start, rj.stop), indexing="ij")
    ic, jc = ic.ravel(), jc.ravel()
    fi, fj = t.fine_indices_arrays(ic, jc)
    en_marco = (fi >= -m) & (fi < M + m) & (fj >= -m) & (fj < M + m)
    validos = en_marco & ~_interior(fi, fj, M)
    if not validos.any():
        raise ErrorPrecondicion(f"La región {region} no toca fantasmas del destino")
    return _construir_interpolacion(ic, jc, fi, fj, M, m, validos)


@lru_cache(maxsize=None)
def _mapa_hijo(t: CoarseFineTransform, M: int, m: int) -> MapaInterpolacion:
    """Interior de un hijo desde las celdas del padre que lo cubren."""
    fi, fj = region_cells(None, M, m)
    ic, jc, dx, dy = t.coarse_of(fi, fj)
    huella = set()
    for vi, vj in ((ic - 1, jc), (ic + 1, jc), (ic, jc - 1), (ic, jc + 1)):
        for a, b in set(zip(vi.tolist(), vj.tolist())):
            region = ghost_region(a, b, M)
            if region is not None:
                huella.add(region)
    return MapaInterpolacion(
        *_congelar(
            _flat(fi, fj, M, m),
            _flat(ic, jc, M, m),
            _flat(ic - 1, jc, M, m),
            _flat(ic + 1, jc, M, m),
            _flat(ic, jc - 1, M, m),
            _flat(ic, jc + 1, M, m),
            np.asarray(dx),
            np.asarray(dy),
        ),
        frozenset(huella),
    )


# === OPERADORES ===

def limited_slope(izq: np.ndarray, centro: np.ndarray, der: np.ndarray, limiter: str) -> np.ndarray:
    """Diferencia por celda a partir de las diferencias laterales."""
    a = centro - izq
    b = der - centro
    if limiter == "none":
        return 0.5 * (a + b)
    if limiter == "mc":
        lim = np.minimum(0.5 * np.abs(a + b), 2.0 * np.minimum(np.abs(a), np.abs(b)))
        return np.where(a * b > 0.0, np.sign(a + b) * lim, 0.0)
    return np.where(a * b > 0.0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _evaluar(src: np.ndarray, mapa: MapaInterpolacion, limiter: str) -> np.ndarray:
    qc = np.take(src, mapa.centro)
    sx = limited_slope(np.take(src, mapa.izquierda), qc, np.take(src, mapa.derecha), limiter)
    sy = limited_slope(np.take(src, mapa.abajo), qc, np.take(src, mapa.arriba), limiter)
    return qc + 0.25 * (sx * mapa.dx + sy * mapa.dy)


def _misma_forma(dst: Patch, src: Patch):
    if dst.M != src.M or dst.m != src.m:
        raise ErrorPrecondicion(f"Parches incompatibles: {dst} y {src}")


def copy_ghost(dst: Patch, src: Patch, region: Region, t: SameSizeTransform):
    _misma_forma(dst, src)
    if dst.level != src.level:
        raise ErrorPrecondicion(f"copy_ghost exige el mismo nivel: {dst} y {src}")
    destino, origen = _mapa_copia(region, t, dst.M, dst.m)
    np.put(dst.q, destino, np.take(src.q, origen))


def average_ghost(dst: Patch, src: Patch, region: Region, t: CoarseFineTransform):
    """Fantasmas gruesos de `dst` como media de los 4 hijos en el interior de `src`."""
    _misma_forma(dst, src)
    if src.level != dst.level + 1:
        raise ErrorPrecondicion(f"average_ghost exige src un nivel más fino: {dst} y {src}")
    destino, origen = _mapa_promedio(region, t, dst.M, dst.m)
    f = np.take(src.q, origen)
    np.put(dst.q, destino, (((f[0] + f[1]) + f[2]) + f[3]) * 0.25)


def interpolate_ghost(
    dst: Patch,
    src: Patch,
    region: Region,
    t: CoarseFineTransform,
    cfg: StencilConfig,
    forbidden: FrozenSet[Region] = frozenset(),
):
    """Fantasmas finos de `dst` desde el parche grueso `src`.

    `region` es la región de `src` donde está `dst`; `t` va de `src` a `dst`.
    """
    _misma_forma(dst, src)
    if dst.level != src.level + 1:
        raise ErrorPrecondicion(f"interpolate_ghost exige dst un nivel más fino: {dst} y {src}")
    mapa = _mapa_interpolacion(region, t, src.M, src.m)
    cruce = mapa.huella & forbidden
    if cruce:
        raise ErrorLocalidad(
            f"El stencil de {src} hacia {dst} lee fantasmas no disponibles",
            {"regiones": sorted(str(r) for r in cruce)},
        )
    np.put(dst.q, mapa.destino, _evaluar(src.q, mapa, cfg.limiter))


def apply_physbc(p: Patch, side: Region, kind: BCKind = BCKind.EXTRAPOLATE):
    """Extrapolación de orden cero en una cara (franja completa) o esquina."""
    if kind == BCKind.PERIODIC:
        raise ErrorPrecondicion("La periodicidad se resuelve con enlaces, no con condiciones físicas")
    M, m, q = p.M, p.m, p.q
    if side.kind == RegionKind.FACE:
        if side.index == 0:
            q[:m, :] = q[m:m + 1, :]
        elif side.index == 1:
            q[M + m:, :] = q[M + m - 1:M + m, :]
        elif side.index == 2:
            q[:, :m] = q[:, m:m + 1]
        else:
            q[:, M + m:] = q[:, M + m - 1:M + m]
        return
    si = slice(M + m, None) if side.index & 1 else slice(0, m)
    sj = slice(M + m, None) if side.index >> 1 else slice(0, m)
    ci = M + m - 1 if side.index & 1 else m
    cj = M + m - 1 if side.index >> 1 else m
    q[si, sj] = q[ci, cj]


# === ETIQUETADO Y TRANSFERENCIA ===

def tag_refine(p: Patch, tau_r: float, level_max: int) -> bool:
    return p.level < level_max and p.spread() > tau_r


def tag_coarsen(family: Iterable[Patch], tau_c: float, level_min: int) -> bool:
    familia = list(family)
    if len(familia) != 4:
        return False
    return familia[0].level > level_min and all(p.spread() < tau_c for p in familia)


def smoothed_target(
    level: int,
    target: int,
    vecinos: Iterable[Tuple[int, int]],
    level_min: int,
    level_max: int,
) -> int:
    """Máximo entre el objetivo propio y los de vecinos marcados para refinar.

    `vecinos` son pares (nivel, objetivo). El resultado queda en
    [level_min, level_max] y a un nivel de distancia como mucho.
    """
    objetivo = target
    for nivel, suyo in vecinos:
        if suyo > nivel:
            objetivo = max(objetivo, suyo)
    objetivo = min(max(objetivo, level - 1), level + 1)
    return min(max(objetivo, level_min), level_max)


def interpolate_to_children(parent: Patch, cfg: StencilConfig) -> List[Patch]:
    """Hijos en orden child_id; las pendientes usan los fantasmas del padre."""
    hijos = []
    for cq in parent.quadrant.children():
        hijo = Patch(cq, parent.M, parent.m, cfg)
        t = parent_child_transform(parent.quadrant, cq, parent.M)
        mapa = _mapa_hijo(t, parent.M, parent.m)
        np.put(hijo.q, mapa.destino, _evaluar(parent.q, mapa, cfg.limiter))
        hijo.target_level = cq.level
        hijos.append(hijo)
    return hijos


def average_to_parent(children: Iterable[Patch]) -> Patch:
    hijos = sorted(children, key=lambda p: p.quadrant.child_id)
    if len(hijos) != 4:
        raise ErrorPrecondicion("average_to_parent exige 4 hijos")
    padre_q = hijos[0].quadrant.parent()
    if [h.quadrant for h in hijos] != padre_q.children():
        raise ErrorPrecondicion(f"Los parches no forman la familia de {padre_q}")
    M, m = hijos[0].M, hijos[0].m
    padre = Patch(padre_q, M, m, hijos[0].cfg)
    for hijo in hijos:
        t = parent_child_transform(padre_q, hijo.quadrant, M)
        destino, origen = _mapa_promedio(None, t, M, m)
        f = np.take(hijo.q, origen)
        np.put(padre.q, destino, (((f[0] + f[1]) + f[2]) + f[3]) * 0.25)
    return padre


# === EVALUACION Y VOLCADO ===

def cell_centers(p: Patch) -> Tuple[np.ndarray, np.ndarray]:
    """Centros de todas las celdas (interior y fantasmas) en coordenadas de bloque."""
    escala = 2.0 ** -p.level
    k = (np.arange(-p.m, p.M + p.m) + 0.5) / p.M
    xs = (p.quadrant.x + k) * escala
    ys = (p.quadrant.y + k) * escala
    return np.meshgrid(xs, ys, indexing="ij")


def fill_from_function(p: Patch, f: Callable, mapping: Optional[BlockMapping] = None):
    x, y = cell_centers(p)
    valores = f(*mapping(x, y)) if mapping is not None else f(x, y)
    p.q[...] = np.broadcast_to(np.asarray(valores, dtype=np.float64), p.q.shape)


def dump_patch(p: Patch) -> str:
    q = p.quadrant
    lineas = [f"{q.block} {q.level} {q.x} {q.y} {p.M} {p.m}"]
    for fila in p.interior:
        lineas.append(" ".join(f"{v:.17g}" for v in fila))
    return "\n".join(lineas)


def load_patch(text: str, cfg: Optional[StencilConfig] = None) -> Patch:
    lineas = [l for l in text.strip().splitlines() if l.strip()]
    try:
        block, level, x, y, M, m = (int(v) for v in lineas[0].split())
        valores = np.array([[float(v) for v in l.split()] for l in lineas[1:]], dtype=np.float64)
    except (ValueError, IndexError) as e:
        raise ErrorSalida(f"Volcado de parche mal formado: {e}")
    if valores.shape != (M, M):
        raise ErrorSalida(f"Volcado con forma {valores.shape}, esperada {(M, M)}")
    p = Patch(Quadrant(block, level, x, y), M, m, cfg)
    p.interior[...] = valores
    return p
