"""Conectividad multibloque de BOSQUE.

Cada bloque es un cuadrado unidad con coordenadas locales (x, y) en [0, 1].
Las caras se numeran 0 (-x), 1 (+x), 2 (-y), 3 (+y) y las esquinas
0..3 con el bit 0 indicando el lado +x y el bit 1 el lado +y.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.errores import ErrorConfiguracion

Matriz = Tuple[Tuple[int, int], Tuple[int, int]]
Vector = Tuple[int, int]

# Rotaciones 0, 90, 180, 270 y las cuatro colocaciones reflejadas
ORIENTACIONES: Tuple[Matriz, ...] = (
    ((1, 0), (0, 1)),
    ((0, -1), (1, 0)),
    ((-1, 0), (0, -1)),
    ((0, 1), (-1, 0)),
    ((-1, 0), (0, 1)),
    ((0, 1), (1, 0)),
    ((1, 0), (0, -1)),
    ((0, -1), (-1, 0)),
)

FACE_NORMALS: Tuple[Vector, ...] = ((-1, 0), (1, 0), (0, -1), (0, 1))

# Centros de cara multiplicados por 2 (enteros)
_FACE_CENTERS_2: Tuple[Vector, ...] = ((0, 1), (2, 1), (1, 0), (1, 2))

# Extremos de cada cara en coordenadas locales
_FACE_ENDPOINTS: Tuple[Tuple[Vector, Vector], ...] = (
    ((0, 0), (0, 1)),
    ((1, 0), (1, 1)),
    ((0, 0), (1, 0)),
    ((0, 1), (1, 1)),
)


def mat_vec(A: Matriz, v: Sequence) -> tuple:
    return (A[0][0] * v[0] + A[0][1] * v[1], A[1][0] * v[0] + A[1][1] * v[1])


def mat_mul(A: Matriz, B: Matriz) -> Matriz:
    return (
        (A[0][0] * B[0][0] + A[0][1] * B[1][0], A[0][0] * B[0][1] + A[0][1] * B[1][1]),
        (A[1][0] * B[0][0] + A[1][1] * B[1][0], A[1][0] * B[0][1] + A[1][1] * B[1][1]),
    )


def transpose(A: Matriz) -> Matriz:
    return ((A[0][0], A[1][0]), (A[0][1], A[1][1]))


def determinant(A: Matriz) -> int:
    return A[0][0] * A[1][1] - A[0][1] * A[1][0]


def orientation_matrix(code: int) -> Matriz:
    if not 0 <= code < len(ORIENTACIONES):
        raise ErrorConfiguracion(f"Código de orientación fuera de rango: {code}")
    return ORIENTACIONES[code]


def orientation_code(A: Matriz) -> int:
    try:
        return ORIENTACIONES.index(A)
    except ValueError:
        raise ErrorConfiguracion(f"Matriz sin código de orientación: {A}")


def inverse_code(code: int) -> int:
    """Código de la orientación inversa (la traspuesta)."""
    return orientation_code(transpose(orientation_matrix(code)))


@dataclass(frozen=True)
class LinkTransform:
    """Mapa afín X' = A·X + t entre coordenadas locales de dos bloques."""
    A: Matriz = ORIENTACIONES[0]
    t: Vector = (0, 0)

    @property
    def code(self) -> int:
        return orientation_code(self.A)

    @property
    def is_identity(self) -> bool:
        return self.A == ORIENTACIONES[0] and self.t == (0, 0)

    def apply_point(self, X: Sequence) -> tuple:
        ax, ay = mat_vec(self.A, X)
        return (ax + self.t[0], ay + self.t[1])

    def compose(self, primero: "LinkTransform") -> "LinkTransform":
        """Aplica `primero` y luego self."""
        A = mat_mul(self.A, primero.A)
        at = mat_vec(self.A, primero.t)
        return LinkTransform(A, (at[0] + self.t[0], at[1] + self.t[1]))

    def inverse(self) -> "LinkTransform":
        At = transpose(self.A)
        tt = mat_vec(At, self.t)
        return LinkTransform(At, (-tt[0], -tt[1]))

    def apply_box(self, level: int, x: int, y: int) -> Vector:
        """Esquina inferior izquierda de la caja (x, y) de nivel `level` tras el mapa."""
        n = 1 << level
        c0 = mat_vec(self.A, (x, y))
        c1 = mat_vec(self.A, (x + 1, y + 1))
        return (
            min(c0[0], c1[0]) + self.t[0] * n,
            min(c0[1], c1[1]) + self.t[1] * n,
        )


IDENTITY = LinkTransform()


@dataclass(frozen=True)
class FaceLink:
    """Enlace de una cara hacia (bloque vecino, cara vecina, orientación)."""
    block: int
    face: int
    code: int
    transform: LinkTransform


class BlockMapping:
    """Mapa geométrico del cuadrado unidad a coordenadas físicas."""

    dimension: int = 2

    def __call__(self, x, y):
        raise NotImplementedError


@dataclass(frozen=True)
class BrickMapping(BlockMapping):
    i: int = 0
    j: int = 0
    dimension: int = 2

    def __call__(self, x, y):
        return (np.asarray(x) + self.i, np.asarray(y) + self.j)


@dataclass(frozen=True)
class GnomonicMapping(BlockMapping):
    """Cara del cubo [-1,1]^3 proyectada sobre la esfera unidad."""
    origin: Tuple[int, int, int]
    U: Tuple[int, int, int]
    V: Tuple[int, int, int]
    dimension: int = 3

    def cube_point(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return tuple(self.origin[k] + x * self.U[k] + y * self.V[k] for k in range(3))

    def __call__(self, x, y):
        X, Y, Z = self.cube_point(x, y)
        r = np.sqrt(X * X + Y * Y + Z * Z)
        return (X / r, Y / r, Z / r)

    def folded_point(self, x, y):
        """Punto de la esfera para (x, y) fuera del cuadrado en una sola dirección.

        El exceso se pliega sobre la cara vecina del cubo, hacia el centro.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        xc = np.clip(x, 0.0, 1.0)
        yc = np.clip(y, 0.0, 1.0)
        exceso = 2.0 * (np.abs(x - xc) + np.abs(y - yc))
        normal = [self.origin[k] + (self.U[k] + self.V[k]) / 2 for k in range(3)]
        base = self.cube_point(xc, yc)
        X, Y, Z = (base[k] - exceso * normal[k] for k in range(3))
        r = np.sqrt(X * X + Y * Y + Z * Z)
        return (X / r, Y / r, Z / r)


def _derivar_traslacion(face: int, nface: int, A: Matriz) -> Vector:
    """t tal que el centro de `face` cae en el centro de `nface`."""
    ac = mat_vec(A, _FACE_CENTERS_2[face])
    c = _FACE_CENTERS_2[nface]
    t2 = (c[0] - ac[0], c[1] - ac[1])
    if t2[0] % 2 or t2[1] % 2:
        raise ErrorConfiguracion(f"Traslación no entera entre caras {face} y {nface}")
    return (t2[0] // 2, t2[1] // 2)


def make_link(block: int, face: int, nblock: int, nface: int, code: int) -> FaceLink:
    A = orientation_matrix(code)
    return FaceLink(nblock, nface, code, LinkTransform(A, _derivar_traslacion(face, nface, A)))


@dataclass
class Connectivity:
    """Grafo estático de bloques con enlaces por cara."""
    num_blocks: int
    face_links: List[List[Optional[FaceLink]]]
    mappings: List[Optional[BlockMapping]] = field(default_factory=list)
    nombre: str = "custom"

    def __post_init__(self):
        self._ciclos: Dict[Tuple[int, int], Optional[tuple]] = {}

    def link(self, block: int, face: int) -> Optional[FaceLink]:
        return self.face_links[block][face]

    def is_boundary(self, block: int, face: int) -> bool:
        return self.face_links[block][face] is None

    def mapping(self, block: int) -> Optional[BlockMapping]:
        if block < len(self.mappings):
            return self.mappings[block]
        return None

    def corner_cycle(self, block: int, corner: int):
        """Recorre los bloques alrededor de una esquina.

        Devuelve (visitados, transformación compuesta) o None si el recorrido
        alcanza una frontera física.
        """
        clave = (block, corner)
        if clave in self._ciclos:
            return self._ciclos[clave]

        visitados = [(block, corner)]
        total = IDENTITY
        blk, cor, entrada = block, corner, None
        resultado = None
        for _ in range(8):
            cara_x = cor & 1
            cara_y = 2 + (cor >> 1)
            cara = cara_x if entrada != cara_x else cara_y
            enlace = self.face_links[blk][cara]
            if enlace is None:
                break
            img = enlace.transform.apply_point((cor & 1, cor >> 1))
            blk, cor, entrada = enlace.block, img[0] + 2 * img[1], enlace.face
            total = enlace.transform.compose(total)
            if (blk, cor) == (block, corner):
                resultado = (visitados, total)
                break
            visitados.append((blk, cor))
        else:
            # No cerró: se reporta en validate
            resultado = (visitados, None)

        self._ciclos[clave] = resultado
        return resultado

    def corner_valence(self, block: int, corner: int) -> Optional[int]:
        ciclo = self.corner_cycle(block, corner)
        if ciclo is None or ciclo[1] is None:
            return None
        return len(ciclo[0])

    def stats(self) -> dict:
        enlaces = [l for caras in self.face_links for l in caras if l is not None]
        return {
            "nombre": self.nombre,
            "bloques": self.num_blocks,
            "enlaces": len(enlaces),
            "fronteras": 4 * self.num_blocks - len(enlaces),
            "no_identidad": sum(1 for l in enlaces if l.code != 0),
        }


def build_brick(nx: int, ny: int, periodic_x: bool = False, periodic_y: bool = False) -> Connectivity:
    """Ladrillo nx × ny de bloques unidad; bloque (i, j) tiene id i + nx·j."""
    if nx < 1 or ny < 1:
        raise ErrorConfiguracion(f"Dimensiones de ladrillo inválidas: {nx}x{ny}")

    enlaces: List[List[Optional[FaceLink]]] = []
    mapas: List[Optional[BlockMapping]] = []
    for j in range(ny):
        for i in range(nx):
            b = i + nx * j
            caras: List[Optional[FaceLink]] = [None, None, None, None]
            for face, (di, dj) in enumerate(FACE_NORMALS):
                ni, nj = i + di, j + dj
                if not 0 <= ni < nx:
                    if not periodic_x:
                        continue
                    ni %= nx
                if not 0 <= nj < ny:
                    if not periodic_y:
                        continue
                    nj %= ny
                caras[face] = make_link(b, face, ni + nx * nj, face ^ 1, 0)
            enlaces.append(caras)
            mapas.append(BrickMapping(i, j))

    return Connectivity(nx * ny, enlaces, mapas, nombre=f"brick{nx}x{ny}")


# Caras del cubo [-1,1]^3: (origen, U, V), todas con normal saliente U×V
_CARAS_CUBO = (
    ((1, -1, -1), (0, 2, 0), (0, 0, 2)),
    ((1, 1, -1), (-2, 0, 0), (0, 0, 2)),
    ((-1, 1, -1), (0, -2, 0), (0, 0, 2)),
    ((-1, -1, -1), (2, 0, 0), (0, 0, 2)),
    ((1, -1, 1), (0, 2, 0), (-2, 0, 0)),
    ((-1, -1, -1), (0, 2, 0), (2, 0, 0)),
)


def _punto_cubo(cara: int, p: Vector) -> Tuple[int, int, int]:
    O, U, V = _CARAS_CUBO[cara]
    return tuple(O[k] + p[0] * U[k] + p[1] * V[k] for k in range(3))


def build_cubed_sphere() -> Connectivity:
    """Esfera cúbica de 6 bloques, derivada de la geometría del cubo."""
    extremos = {
        (b, f): tuple(_punto_cubo(b, p) for p in _FACE_ENDPOINTS[f])
        for b in range(6)
        for f in range(4)
    }

    enlaces: List[List[Optional[FaceLink]]] = [[None] * 4 for _ in range(6)]
    for (b, f), (P0, P1) in extremos.items():
        for (nb, nf), (Q0, Q1) in extremos.items():
            if nb == b or {Q0, Q1} != {P0, P1}:
                continue
            p0, p1 = _FACE_ENDPOINTS[f]
            q0 = _FACE_ENDPOINTS[nf][0] if Q0 == P0 else _FACE_ENDPOINTS[nf][1]
            q1 = _FACE_ENDPOINTS[nf][1] if Q0 == P0 else _FACE_ENDPOINTS[nf][0]

            tangente = (q1[0] - q0[0], q1[1] - q0[1])
            normal = tuple(-c for c in FACE_NORMALS[nf])
            signo = FACE_NORMALS[f][0] + FACE_NORMALS[f][1]
            normal = (normal[0] * signo, normal[1] * signo)
            if f < 2:
                col_x, col_y = normal, tangente
            else:
                col_x, col_y = tangente, normal
            A = ((col_x[0], col_y[0]), (col_x[1], col_y[1]))
            code = orientation_code(A)
            ap = mat_vec(A, p0)
            t = (q0[0] - ap[0], q0[1] - ap[1])
            enlaces[b][f] = FaceLink(nb, nf, code, LinkTransform(A, t))
            break

    mapas = [GnomonicMapping(*_CARAS_CUBO[b]) for b in range(6)]
    return Connectivity(6, enlaces, mapas, nombre="cubed-sphere")


def validate(conn: Connectivity) -> List[str]:
    """Lista de violaciones de involución, orientación y esquinas."""
    violaciones: List[str] = []
    for b in range(conn.num_blocks):
        for f in range(4):
            enlace = conn.face_links[b][f]
            if enlace is None:
                continue
            nb, nf = enlace.block, enlace.face
            # Cada par consistente se revisa una vez, desde su extremo menor
            if (nb, nf) < (b, f) and 0 <= nb < conn.num_blocks and 0 <= nf < 4:
                inverso = conn.face_links[nb][nf]
                if inverso is not None and (inverso.block, inverso.face) == (b, f):
                    continue
            problema = _revisar_enlace(conn, b, f, enlace)
            if problema:
                violaciones.append(f"bloque {b} cara {f}: {problema}")

    if violaciones:
        return violaciones

    for b in range(conn.num_blocks):
        for c in range(4):
            ciclo = conn.corner_cycle(b, c)
            if ciclo is None:
                continue
            visitados, total = ciclo
            if total is None or len(visitados) > 4:
                violaciones.append(f"bloque {b} esquina {c}: más de 4 bloques en la esquina")
            elif len(visitados) == 4 and not total.is_identity:
                violaciones.append(f"bloque {b} esquina {c}: el ciclo de esquina no es la identidad")
            elif len(visitados) < 4 and determinant(total.A) != 1:
                violaciones.append(f"bloque {b} esquina {c}: el ciclo de esquina invierte la orientación")
    return violaciones


def _revisar_enlace(conn: Connectivity, b: int, f: int, enlace: FaceLink) -> Optional[str]:
    nb, nf = enlace.block, enlace.face
    if not 0 <= nb < conn.num_blocks or not 0 <= nf < 4:
        return "enlace fuera de rango"
    A = orientation_matrix(enlace.code)
    if A != enlace.transform.A:
        return "el código no coincide con la matriz del enlace"
    inverso = conn.face_links[nb][nf]
    if inverso is None or (inverso.block, inverso.face) != (b, f):
        return "el enlace inverso no regresa a la cara original"
    if inverso.code != inverse_code(enlace.code):
        return f"código inverso {inverso.code} esperado {inverse_code(enlace.code)}"
    n = mat_vec(A, FACE_NORMALS[f])
    if n != tuple(-c for c in FACE_NORMALS[nf]):
        return "la normal saliente no apunta hacia el interior del vecino"
    ac = mat_vec(A, _FACE_CENTERS_2[f])
    t = enlace.transform.t
    if (ac[0] + 2 * t[0], ac[1] + 2 * t[1]) != _FACE_CENTERS_2[nf]:
        return "el centro de la cara no cae en el centro de la cara vecina"
    if inverso.transform != enlace.transform.inverse():
        return "la transformación inversa no es la inversa del enlace"
    return None
