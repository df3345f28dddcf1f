"""Transformaciones afines de índices entre parches vecinos.

Convención de índices: interior 0..M-1, fantasmas -m..-1 y M..M+m-1.
Todas las cuentas son enteras; los medios índices de la variante
grueso-fino se guardan duplicados.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from core.errores import ErrorPrecondicion
from malla.connectivity import IDENTITY, LinkTransform, Matriz, Vector, mat_vec, transpose
from malla.forest import NeighborInfo, NeighborKind, Quadrant

DIRECTIONS: Tuple[Vector, ...] = ((-1, -1), (1, -1), (-1, 1), (1, 1))


def _aplicar_arrays(A: Matriz, i, j):
    i = np.asarray(i)
    j = np.asarray(j)
    return A[0][0] * i + A[0][1] * j, A[1][0] * i + A[1][1] * j


@dataclass(frozen=True)
class SameSizeTransform:
    """I_n = A·I + F entre dos parches del mismo nivel."""
    A: Matriz
    F: Vector

    def apply(self, I: Vector) -> Vector:
        ax, ay = mat_vec(self.A, I)
        return (ax + self.F[0], ay + self.F[1])

    def apply_arrays(self, i, j):
        ai, aj = _aplicar_arrays(self.A, i, j)
        return ai + self.F[0], aj + self.F[1]

    def invert(self) -> "SameSizeTransform":
        At = transpose(self.A)
        f = mat_vec(At, self.F)
        return SameSizeTransform(At, (-f[0], -f[1]))


@dataclass(frozen=True)
class CoarseFineTransform:
    """I_f^k = 2A·I_c + ½A·d_k + F^f, con F2 = 2·F^f entero."""
    A: Matriz
    F2: Vector

    def fine_indices(self, I: Vector) -> List[Vector]:
        base = mat_vec(self.A, (4 * I[0], 4 * I[1]))
        salida = []
        for d in DIRECTIONS:
            ad = mat_vec(self.A, d)
            vx = base[0] + ad[0] + self.F2[0]
            vy = base[1] + ad[1] + self.F2[1]
            if vx % 2 or vy % 2:
                raise ErrorPrecondicion(f"Índice fino no entero para {I}: {self}")
            salida.append((vx // 2, vy // 2))
        return salida

    def fine_indices_arrays(self, i, j):
        """Arrays de forma (4, ...) con los índices finos de cada celda gruesa."""
        ai, aj = _aplicar_arrays(self.A, 4 * np.asarray(i), 4 * np.asarray(j))
        fi, fj = [], []
        for d in DIRECTIONS:
            ad = mat_vec(self.A, d)
            fi.append((ai + ad[0] + self.F2[0]) // 2)
            fj.append((aj + ad[1] + self.F2[1]) // 2)
        return np.stack(fi), np.stack(fj)

    def coarse_of(self, i_f, j_f):
        """Celda gruesa que contiene cada celda fina y su dirección d en el marco grueso."""
        At = transpose(self.A)
        vi, vj = _aplicar_arrays(At, 2 * np.asarray(i_f) - self.F2[0], 2 * np.asarray(j_f) - self.F2[1])
        ic = (vi + 1) // 4
        jc = (vj + 1) // 4
        return ic, jc, vi - 4 * ic, vj - 4 * jc


def same_size_between(q: Quadrant, n: Quadrant, link: LinkTransform, M: int) -> SameSizeTransform:
    """Transformación del parche de `q` al de `n` (mismo nivel) a través de `link`."""
    if q.level != n.level:
        raise ErrorPrecondicion(f"Niveles distintos: {q} y {n}")
    A = link.A
    escala = 2 * M << q.level
    ax, ay = mat_vec(A, (2 * M * q.x + 1, 2 * M * q.y + 1))
    F2 = (
        ax + escala * link.t[0] - 2 * M * n.x - 1,
        ay + escala * link.t[1] - 2 * M * n.y - 1,
    )
    return SameSizeTransform(A, (F2[0] // 2, F2[1] // 2))


def coarse_fine_between(coarse_q: Quadrant, fine_q: Quadrant, link: LinkTransform, M: int) -> CoarseFineTransform:
    """Transformación del parche grueso al fino (un nivel más fino) a través de `link`."""
    if fine_q.level != coarse_q.level + 1:
        raise ErrorPrecondicion(f"El parche fino debe estar un nivel por debajo: {coarse_q} y {fine_q}")
    A = link.A
    escala = 4 * M << coarse_q.level
    ax, ay = mat_vec(A, (4 * M * coarse_q.x + 2, 4 * M * coarse_q.y + 2))
    F2 = (
        ax + escala * link.t[0] - 2 * M * fine_q.x - 1,
        ay + escala * link.t[1] - 2 * M * fine_q.y - 1,
    )
    return CoarseFineTransform(A, F2)


def same_size_transform(info: NeighborInfo, M: int) -> SameSizeTransform:
    if info.kind != NeighborKind.SAME:
        raise ErrorPrecondicion(f"Se esperaba vecino del mismo tamaño, hay {info.kind.value}")
    return same_size_between(info.quadrant, info.neighbors[0], info.transform, M)


def coarse_fine_transform(info: NeighborInfo, k: int, M: int) -> CoarseFineTransform:
    """Del parche grueso (info.quadrant) a su k-ésimo vecino fino."""
    if info.kind != NeighborKind.HALF:
        raise ErrorPrecondicion(f"Se esperaba vecino de mitad de tamaño, hay {info.kind.value}")
    return coarse_fine_between(info.quadrant, info.neighbors[k], info.transform, M)


def parent_child_transform(parent: Quadrant, child: Quadrant, M: int) -> CoarseFineTransform:
    return coarse_fine_between(parent, child, IDENTITY, M)


def fine_indices(I_c: Vector, t: CoarseFineTransform) -> List[Vector]:
    return t.fine_indices(I_c)


def invert(t: SameSizeTransform) -> SameSizeTransform:
    return t.invert()
