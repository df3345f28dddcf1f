"""Solver de advección escalar de BOSQUE.

Esquema CTU (corner transport upwind) en forma de flujos, con pendientes
limitadas y velocidades de arista obtenidas como diferencias de la función
de corriente en las esquinas de las celdas. Requiere m ≥ 2.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from core.errores import ErrorCFL, ErrorConfiguracion, ErrorNumerico, ErrorPrecondicion
from parches.patch import LIMITADORES, Patch, limited_slope


def corriente_diagonal(x, y):
    """ψ = -(x - y)/2: velocidad constante (0.5, 0.5)."""
    return -(x - y) / 2


class VelocityField:
    """Velocidades de arista desde una función de corriente por bloque.

    ψ se evalúa en coordenadas locales del bloque, así que parches con la
    misma geometría local comparten velocidades en todos los bloques.
    """

    def __init__(self, psi: Callable = corriente_diagonal):
        self.psi = psi
        self._cache: Dict[Tuple[int, int, int, int, int], Tuple[np.ndarray, np.ndarray]] = {}

    def edge_velocities(self, p: Patch) -> Tuple[np.ndarray, np.ndarray]:
        """u en aristas x, forma (N+1, N); v en aristas y, forma (N, N+1)."""
        q = p.quadrant
        clave = (q.level, q.x, q.y, p.M, p.m)
        if clave in self._cache:
            return self._cache[clave]

        n = p.M + 2 * p.m
        escala = 2.0 ** -q.level
        k = np.arange(n + 1) - p.m
        xs = q.x * escala + k * p.h
        ys = q.y * escala + k * p.h
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        psi = self.psi(X, Y)
        u = (psi[:, 1:] - psi[:, :-1]) / p.h
        v = -(psi[1:, :] - psi[:-1, :]) / p.h
        u.setflags(write=False)
        v.setflags(write=False)
        self._cache[clave] = (u, v)
        return u, v

    def max_speeds(self, p: Patch) -> Tuple[float, float]:
        u, v = self.edge_velocities(p)
        m, M = p.m, p.M
        return (
            float(np.abs(u[m:m + M + 1, m:m + M]).max()),
            float(np.abs(v[m:m + M, m:m + M + 1]).max()),
        )


@dataclass
class TimeControls:
    dt: float
    alpha: float
    dx_fino: float
    steps: int
    regrid_interval: int

    @classmethod
    def desde_niveles(
        cls,
        alpha: float,
        level_min: int,
        level_max: int,
        M: int,
        steps: int,
        regrid_interval: Optional[int] = None,
        dt: Optional[float] = None,
    ) -> "TimeControls":
        dx = 2.0 ** -level_max / M
        intervalo = regrid_interval if regrid_interval else 2 ** (level_max - level_min)
        return cls(dt=dt if dt is not None else alpha * dx, alpha=alpha, dx_fino=dx, steps=steps, regrid_interval=intervalo)


@dataclass
class RunStats:
    """Tiempos por categoría y contadores de una corrida."""
    ranks: int = 1
    tiempos: Dict[str, float] = field(default_factory=lambda: {
        "advance": 0.0, "ghost_fill": 0.0, "comm": 0.0, "cfl_sync": 0.0, "regrid": 0.0,
    })
    wall: float = 0.0
    cell_updates: int = 0
    grids_per_rank: List[float] = field(default_factory=list)
    hojas: List[int] = field(default_factory=list)
    cfl: List[float] = field(default_factory=list)
    masa: List[float] = field(default_factory=list)
    mensajes: int = 0
    bytes: int = 0

    @property
    def grids_per_rank_avg(self) -> float:
        if not self.grids_per_rank:
            return 0.0
        return sum(self.grids_per_rank) / len(self.grids_per_rank)

    @property
    def cobertura(self) -> float:
        """Fracción del tiempo total cubierta por las categorías."""
        return sum(self.tiempos.values()) / self.wall if self.wall > 0 else 0.0

    @property
    def deriva_masa(self) -> float:
        if len(self.masa) < 2 or self.masa[0] == 0:
            return 0.0
        return abs(self.masa[-1] - self.masa[0]) / abs(self.masa[0])

    def fila_csv(self) -> dict:
        return {
            "ranks": self.ranks,
            "grids_per_rank_avg": f"{self.grids_per_rank_avg:.2f}",
            "wall": f"{self.wall:.6f}",
            **{k: f"{v:.6f}" for k, v in self.tiempos.items()},
            "cell_updates": self.cell_updates,
        }

    def to_dict(self) -> dict:
        return {
            "ranks": self.ranks,
            "wall": self.wall,
            "tiempos": dict(self.tiempos),
            "cell_updates": self.cell_updates,
            "grids_per_rank_avg": self.grids_per_rank_avg,
            "hojas": list(self.hojas),
            "cfl_max": max(self.cfl) if self.cfl else 0.0,
            "deriva_masa": self.deriva_masa,
            "mensajes": self.mensajes,
            "bytes": self.bytes,
        }


def advance_patch(p: Patch, vel: VelocityField, dt: float, limiter: str = "minmod") -> float:
    """Avanza el interior de p un paso dt; devuelve el CFL local.

    Los fantasmas (esquinas incluidas) deben estar llenos.
    """
    if p.m < 2:
        raise ErrorPrecondicion(f"m ≥ 2 for the CTU scheme: m={p.m}")
    if limiter not in LIMITADORES:
        raise ErrorConfiguracion(f"Limitador desconocido: {limiter}")

    q = p.q
    M, m, h = p.M, p.m, p.h
    n = M + 2 * m
    u, v = vel.edge_velocities(p)

    sx = np.zeros_like(q)
    sy = np.zeros_like(q)
    sx[1:-1, :] = limited_slope(q[:-2, :], q[1:-1, :], q[2:, :], limiter)
    sy[:, 1:-1] = limited_slope(q[:, :-2], q[:, 1:-1], q[:, 2:], limiter)

    # Estados en aristas interiores del arreglo, con upwind por el signo de la velocidad
    ue = u[1:n, :]
    ve = v[:, 1:n]
    cu = ue * dt / h
    cv = ve * dt / h
    ax = np.where(ue > 0, q[:-1, :] + 0.5 * (1.0 - cu) * sx[:-1, :], q[1:, :] - 0.5 * (1.0 + cu) * sx[1:, :])
    ay = np.where(ve > 0, q[:, :-1] + 0.5 * (1.0 - cv) * sy[:, :-1], q[:, 1:] - 0.5 * (1.0 + cv) * sy[:, 1:])

    # Corrección transversal desde la celda upwind
    fxt = ue * ax
    fyt = ve * ay
    dG = fyt[:, 1:] - fyt[:, :-1]
    dH = fxt[1:, :] - fxt[:-1, :]
    mitad = 0.5 * dt / h
    ax_c = ax[:, 1:-1] - mitad * np.where(ue[:, 1:-1] > 0, dG[:-1, :], dG[1:, :])
    ay_c = ay[1:-1, :] - mitad * np.where(ve[1:-1, :] > 0, dH[:, :-1], dH[:, 1:])
    Fx = ue[:, 1:-1] * ax_c
    Fy = ve[1:-1, :] * ay_c

    a, b = m - 1, M + m - 1
    FxL = Fx[a:b, a:b]
    FxR = Fx[m:M + m, a:b]
    FyB = Fy[a:b, a:b]
    FyT = Fy[a:b, m:M + m]

    interior = p.interior
    interior -= (dt / h) * ((FxR - FxL) + (FyT - FyB))
    if not np.all(np.isfinite(interior)):
        raise ErrorNumerico(f"NaN en el parche {p.quadrant}", {"quadrant": str(p.quadrant)})

    umax, vmax = vel.max_speeds(p)
    return (umax + vmax) * dt / h


def cfl_sync(maxima: Iterable[float], limite: float = 1.0) -> float:
    """Máximo global del CFL; error si supera el límite."""
    valores = list(maxima)
    global_max = max(valores) if valores else 0.0
    if global_max > limite:
        raise ErrorCFL(f"CFL {global_max:.4f} > {limite}", {"cfl": global_max})
    return global_max
