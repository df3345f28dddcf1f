"""Bosque de quadtrees de BOSQUE: hojas, balance 2:1, vecinos y partición."""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Set, Tuple
from uuid import uuid4

from core.errores import ErrorBalance, ErrorConfiguracion, ErrorPrecondicion
from malla.connectivity import Connectivity, FACE_NORMALS, IDENTITY, LinkTransform

MAX_LEVEL = 30


def _spread(n: int) -> int:
    n &= 0xFFFFFFFF
    n = (n | (n << 16)) & 0x0000FFFF0000FFFF
    n = (n | (n << 8)) & 0x00FF00FF00FF00FF
    n = (n | (n << 4)) & 0x0F0F0F0F0F0F0F0F
    n = (n | (n << 2)) & 0x3333333333333333
    return (n | (n << 1)) & 0x5555555555555555


def morton_code(x: int, y: int) -> int:
    return _spread(x) | (_spread(y) << 1)


@dataclass(frozen=True)
class Quadrant:
    """Hoja de un quadtree: bloque, nivel y coordenadas enteras."""
    block: int
    level: int
    x: int
    y: int

    @cached_property
    def morton(self) -> int:
        s = MAX_LEVEL - self.level
        return morton_code(self.x << s, self.y << s)

    @property
    def sort_key(self) -> Tuple[int, int, int]:
        return (self.block, self.morton, self.level)

    @property
    def child_id(self) -> int:
        return (self.x & 1) + 2 * (self.y & 1)

    def children(self) -> List["Quadrant"]:
        if self.level >= MAX_LEVEL:
            raise ErrorConfiguracion(f"Nivel máximo {MAX_LEVEL} alcanzado en {self}")
        l, x, y = self.level + 1, 2 * self.x, 2 * self.y
        return [
            Quadrant(self.block, l, x, y),
            Quadrant(self.block, l, x + 1, y),
            Quadrant(self.block, l, x, y + 1),
            Quadrant(self.block, l, x + 1, y + 1),
        ]

    def parent(self) -> "Quadrant":
        if self.level == 0:
            raise ErrorPrecondicion(f"El cuadrante raíz no tiene padre: {self}")
        return Quadrant(self.block, self.level - 1, self.x >> 1, self.y >> 1)

    def ancestor(self, level: int) -> "Quadrant":
        s = self.level - level
        return Quadrant(self.block, level, self.x >> s, self.y >> s)

    def __str__(self) -> str:
        return f"{self.block} {self.level} {self.x} {self.y}"


class RegionKind(str, Enum):
    FACE = "face"
    CORNER = "corner"


@dataclass(frozen=True)
class Region:
    """Región fantasma: cara 0..3 (-x, +x, -y, +y) o esquina 0..3."""
    kind: RegionKind
    index: int

    @property
    def offset(self) -> Tuple[int, int]:
        if self.kind == RegionKind.FACE:
            return FACE_NORMALS[self.index]
        return (1 if self.index & 1 else -1, 1 if self.index >> 1 else -1)

    @property
    def is_face(self) -> bool:
        return self.kind == RegionKind.FACE

    def __str__(self) -> str:
        return f"{self.kind.value}{self.index}"


FACES = tuple(Region(RegionKind.FACE, i) for i in range(4))
CORNERS = tuple(Region(RegionKind.CORNER, i) for i in range(4))
ALL_REGIONS = FACES + CORNERS


class NeighborKind(str, Enum):
    SAME = "same"
    DOUBLE = "double"
    HALF = "half"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class NeighborInfo:
    """Vecino(s) de una hoja en una región."""
    quadrant: Quadrant
    region: Region
    kind: NeighborKind
    neighbors: Tuple[Quadrant, ...] = ()
    orientation_code: int = 0
    which_half: Tuple[int, ...] = ()
    transform: LinkTransform = IDENTITY

    def to_dict(self) -> dict:
        return {
            "quadrant": str(self.quadrant),
            "region": str(self.region),
            "kind": self.kind.value,
            "neighbors": [str(n) for n in self.neighbors],
            "orientation_code": self.orientation_code,
            "which_half": list(self.which_half),
        }


def refine_leaf(q: Quadrant) -> List[Quadrant]:
    return q.children()


def coarsen_family(siblings: Iterable[Quadrant]) -> Quadrant:
    familia = list(siblings)
    if len(familia) != 4 or familia[0].level == 0:
        raise ErrorPrecondicion("Una familia tiene exactamente 4 hermanos de nivel > 0")
    padre = familia[0].parent()
    if sorted(familia, key=lambda q: q.child_id) != padre.children():
        raise ErrorPrecondicion(f"Los cuadrantes no forman una familia: {[str(q) for q in familia]}")
    return padre


class Forest:
    """Hojas por bloque, orden de Morton global y propiedad por rango."""

    def __init__(self, conn: Connectivity, leaves: Iterable[Quadrant] = ()):
        self.conn = conn
        self.uid = str(uuid4())
        self.revision = 0
        self._leaves: Set[Quadrant] = set(leaves)
        self._orden: Optional[List[Quadrant]] = None
        self.ownership: Dict[Quadrant, int] = {}
        self.num_ranks = 1
        self.counts: List[int] = [len(self._leaves)]

    # === HOJAS ===

    def __len__(self) -> int:
        return len(self._leaves)

    def __contains__(self, q: Quadrant) -> bool:
        return q in self._leaves

    def _tocar(self):
        self.revision += 1
        self._orden = None

    def global_leaves(self) -> List[Quadrant]:
        """Hojas en orden de Morton global (bloque, clave)."""
        if self._orden is None:
            self._orden = sorted(self._leaves, key=lambda q: q.sort_key)
        return self._orden

    def leaves(self, block: int) -> List[Quadrant]:
        return [q for q in self.global_leaves() if q.block == block]

    def levels(self) -> Tuple[int, int]:
        niveles = [q.level for q in self._leaves]
        return min(niveles), max(niveles)

    def refine(self, q: Quadrant) -> List[Quadrant]:
        if q not in self._leaves:
            raise ErrorPrecondicion(f"Solo se refinan hojas: {q}")
        hijos = refine_leaf(q)
        self._leaves.remove(q)
        self._leaves.update(hijos)
        self._tocar()
        return hijos

    def coarsen(self, siblings: Iterable[Quadrant]) -> Quadrant:
        familia = list(siblings)
        padre = coarsen_family(familia)
        if any(h not in self._leaves for h in familia):
            raise ErrorPrecondicion(f"La familia de {padre} no está formada por hojas")
        self._leaves.difference_update(familia)
        self._leaves.add(padre)
        self._tocar()
        return padre

    def copy(self) -> "Forest":
        otro = Forest(self.conn, self._leaves)
        otro.ownership = dict(self.ownership)
        otro.num_ranks = self.num_ranks
        otro.counts = list(self.counts)
        return otro

    # === VECINOS ===

    def _locate(self, block: int, level: int, cx: int, cy: int):
        """Ubica la caja (cx, cy) de nivel `level`, posiblemente fuera del bloque.

        Devuelve (bloque, x, y, transformación) o None en frontera física y
        en esquinas sin vecino diagonal.
        """
        n = 1 << level
        fuera_x = 0 if cx < 0 else 1 if cx >= n else None
        fuera_y = 2 if cy < 0 else 3 if cy >= n else None
        if fuera_x is None and fuera_y is None:
            return block, cx, cy, IDENTITY

        if fuera_x is not None and fuera_y is not None:
            esquina = fuera_x + (2 if fuera_y == 3 else 0)
            if self.conn.corner_valence(block, esquina) != 4:
                return None
            enlace = self.conn.link(block, fuera_x)
            nx, ny = enlace.transform.apply_box(level, cx, cy)
            paso = self._locate(enlace.block, level, nx, ny)
            if paso is None:
                return None
            nb, x, y, tr = paso
            return nb, x, y, tr.compose(enlace.transform)

        cara = fuera_x if fuera_x is not None else fuera_y
        enlace = self.conn.link(block, cara)
        if enlace is None:
            return None
        x, y = enlace.transform.apply_box(level, cx, cy)
        return enlace.block, x, y, enlace.transform

    def _containing_leaf(self, block: int, level: int, x: int, y: int) -> Optional[Quadrant]:
        """Hoja igual o ancestro de la caja dada; None si está subdividida."""
        for l in range(level, -1, -1):
            s = level - l
            q = Quadrant(block, l, x >> s, y >> s)
            if q in self._leaves:
                return q
        return None

    def neighbor(self, q: Quadrant, region: Region) -> NeighborInfo:
        dx, dy = region.offset
        loc = self._locate(q.block, q.level, q.x + dx, q.y + dy)
        if loc is None:
            return NeighborInfo(q, region, NeighborKind.BOUNDARY)

        nb, nx, ny, tr = loc
        candidato = Quadrant(nb, q.level, nx, ny)
        if candidato in self._leaves:
            return NeighborInfo(q, region, NeighborKind.SAME, (candidato,), tr.code, (), tr)

        if q.level > 0 and candidato.parent() in self._leaves:
            return NeighborInfo(q, region, NeighborKind.DOUBLE, (candidato.parent(),), tr.code, (), tr)

        inversa = tr.inverse()
        x0, y0 = 2 * q.x, 2 * q.y
        finos = []
        for hijo in candidato.children():
            hx, hy = inversa.apply_box(hijo.level, hijo.x, hijo.y)
            if hx <= x0 + 2 and hx + 1 >= x0 and hy <= y0 + 2 and hy + 1 >= y0:
                if hijo not in self._leaves:
                    raise ErrorBalance(
                        f"Vecino de {q} en {region} a más de un nivel",
                        {"quadrant": str(q), "region": str(region)},
                    )
                if region.is_face:
                    mitad = int(hy != y0) if region.index < 2 else int(hx != x0)
                else:
                    mitad = 0
                finos.append((mitad, hijo))

        if not finos:
            raise ErrorBalance(f"Vecino de {q} en {region} a más de un nivel", {"quadrant": str(q)})
        finos.sort(key=lambda par: par[0])
        return NeighborInfo(
            q,
            region,
            NeighborKind.HALF,
            tuple(h for _, h in finos),
            tr.code,
            tuple(m for m, _ in finos),
            tr,
        )

    def neighbors_all(self, q: Quadrant) -> Set[Quadrant]:
        """Hojas adyacentes por cara o esquina."""
        vecinos: Set[Quadrant] = set()
        for region in ALL_REGIONS:
            vecinos.update(self.neighbor(q, region).neighbors)
        vecinos.discard(q)
        return vecinos

    def is_balanced(self) -> bool:
        try:
            for q in self._leaves:
                for region in ALL_REGIONS:
                    self.neighbor(q, region)
        except ErrorBalance:
            return False
        return True

    # === PARTICION ===

    def partition(self, P: int) -> Dict[Quadrant, int]:
        """Segmentos de Morton contiguos; los segmentos largos van a los primeros rangos."""
        if P < 1:
            raise ErrorConfiguracion(f"Número de rangos inválido: {P}")
        orden = self.global_leaves()
        base, resto = divmod(len(orden), P)
        self.counts = [base + (1 if r < resto else 0) for r in range(P)]
        self.ownership = {}
        inicio = 0
        for r, n in enumerate(self.counts):
            for q in orden[inicio:inicio + n]:
                self.ownership[q] = r
            inicio += n
        self.num_ranks = P
        return self.ownership

    def owner(self, q: Quadrant) -> int:
        return self.ownership.get(q, 0)

    def leaves_of_rank(self, rank: int) -> List[Quadrant]:
        return [q for q in self.global_leaves() if self.owner(q) == rank]

    def parallel_boundary_leaves(self, rank: int) -> Set[Quadrant]:
        frontera = set()
        for q in self.leaves_of_rank(rank):
            if any(self.owner(n) != rank for n in self.neighbors_all(q)):
                frontera.add(q)
        return frontera

    # === DEPURACION ===

    def dump(self) -> str:
        return "\n".join(f"{q} {self.owner(q)}" for q in self.global_leaves())

    def stats(self) -> dict:
        por_nivel: Dict[int, int] = {}
        for q in self._leaves:
            por_nivel[q.level] = por_nivel.get(q.level, 0) + 1
        return {
            "hojas": len(self._leaves),
            "por_nivel": dict(sorted(por_nivel.items())),
            "rangos": self.num_ranks,
            "por_rango": list(self.counts),
        }


def new_uniform(conn: Connectivity, level: int) -> Forest:
    if level < 0 or level > MAX_LEVEL:
        raise ErrorConfiguracion(f"Nivel fuera de rango: {level}")
    n = 1 << level
    hojas = [
        Quadrant(b, level, x, y)
        for b in range(conn.num_blocks)
        for y in range(n)
        for x in range(n)
    ]
    bosque = Forest(conn, hojas)
    bosque.partition(1)
    return bosque


def balance_2to1(forest: Forest) -> Forest:
    """Punto fijo de balance por caras y esquinas, desde el nivel más fino."""
    while True:
        marcadas: Set[Quadrant] = set()
        hojas = sorted(forest.global_leaves(), key=lambda q: (-q.level, q.sort_key))
        for q in hojas:
            if q.level < 2:
                break
            for region in ALL_REGIONS:
                dx, dy = region.offset
                loc = forest._locate(q.block, q.level, q.x + dx, q.y + dy)
                if loc is None:
                    continue
                nb, nx, ny, _ = loc
                hoja = forest._containing_leaf(nb, q.level, nx, ny)
                if hoja is not None and hoja.level < q.level - 1:
                    marcadas.add(hoja)
        if not marcadas:
            return forest
        for hoja in sorted(marcadas, key=lambda q: q.sort_key):
            forest.refine(hoja)
