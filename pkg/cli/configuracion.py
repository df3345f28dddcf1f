"""
Configuración validada de una corrida.
Los valores por defecto vienen de `config` (ENV > YAML > defaults) y los
argumentos de línea de comandos los sobrescriben.
"""

import argparse
from typing import List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, Field, ValidationError, model_validator

from cli.salidas import FORMATOS
from config.settings import Config, config as config_global
from core.errores import ErrorConfiguracion
from parches.patch import LIMITADORES, StencilConfig


class RunConfig(BaseModel):
    """Parámetros de una corrida del benchmark o de la demo de la esfera cúbica."""

    domain: Literal["brick", "cubed-sphere"] = Field("brick", description="Dominio: brick o cubed-sphere")
    bricks: Tuple[int, int] = Field((1, 1), description="Bloques del brick (nx, ny)")
    periodic: bool = Field(True, description="Brick periódico en ambas direcciones")
    mx: int = Field(8, description="Celdas por lado del parche (M)")
    ghost: int = Field(2, description="Capas fantasma (m)")
    stencil: int = Field(3, description="Ancho del stencil de interpolación (w)")
    limiter: str = Field("minmod", description="Limitador de pendientes")
    minlevel: int = Field(4, ge=0, description="Nivel mínimo")
    maxlevel: int = Field(7, ge=0, le=30, description="Nivel máximo")
    ranks: int = Field(1, description="Rangos lógicos (P)")
    threads: int = Field(1, ge=1, description="Hilos para ejecutar los rangos")
    steps: int = Field(160, ge=0, description="Pasos de tiempo")
    cfl: float = Field(0.64, gt=0, description="Número de Courant α")
    dt: Optional[float] = Field(None, gt=0, description="Paso fijo; None usa α·2^-ℓmax/M")
    tag_refine: float = Field(0.25, ge=0, description="Umbral de refinamiento τ_r")
    tag_coarsen: float = Field(0.001, ge=0, description="Umbral de engrosamiento τ_c")
    smooth: bool = Field(True, description="Suavizado de niveles objetivo")
    regrid_interval: Optional[int] = Field(None, ge=1, description="Pasos entre regrids")
    uniform: bool = Field(False, description="Malla uniforme en ℓmin, sin regrid")
    init: Literal["disks", "gaussian"] = Field("disks", description="Condición inicial")
    radius: float = Field(0.3, gt=0, description="Radio de los discos")
    centers: List[Tuple[float, float]] = Field(
        default_factory=lambda: [(0.5, 0.5), (0.2, 0.2), (0.8, 0.2), (0.2, 0.8), (0.8, 0.8)],
        description="Centros de los discos en coordenadas de bloque",
    )
    sigma: float = Field(0.1, gt=0, description="Ancho de la gaussiana")
    out: Optional[str] = Field(None, description="Ruta de la solución")
    timing: Optional[str] = Field(None, description="CSV de tiempos")
    format: Literal["dump", "vtk", "patch-dump", "legacy-vtk-quads"] = Field(
        "dump", description="Formato de la solución; patch-dump y legacy-vtk-quads son alias"
    )
    trace: Optional[str] = Field(None, description="Traza de mensajes")
    db: Optional[str] = Field(None, description="URL de la base de datos del historial")
    history: bool = Field(False, description="Mostrar el historial y salir")
    quiet: bool = Field(False, description="Sin líneas de estado")

    @model_validator(mode="after")
    def revisar_precondiciones(self) -> "RunConfig":
        M, m, w = self.mx, self.ghost, self.stencil
        if M < 2 or M % 2:
            raise ValueError(f"M even: M={M}")
        if m < 1:
            raise ValueError(f"m ≥ 1: m={m}")
        if 4 * m > M:
            raise ValueError(f"m ≤ M/4: m={m}, M={M}")
        if w < 1 or 2 * w > M:
            raise ValueError(f"w ≤ M/2: w={w}, M={M}")
        if m < 2:
            raise ValueError(f"m ≥ 2 for the CTU scheme: m={m}")
        if self.minlevel > self.maxlevel:
            raise ValueError(f"ℓ_min ≤ ℓ_max: {self.minlevel} > {self.maxlevel}")
        if self.ranks < 1:
            raise ValueError(f"P ≥ 1: P={self.ranks}")
        if min(self.bricks) < 1:
            raise ValueError(f"Bricks inválidos: {self.bricks}")
        if self.limiter not in LIMITADORES:
            raise ValueError(f"Limitador desconocido: {self.limiter}")
        return self

    @property
    def stencil_config(self) -> StencilConfig:
        return StencilConfig(w=self.stencil, limiter=self.limiter)

    def resumen(self) -> dict:
        """Campos que identifican la corrida en el historial."""
        return {
            "domain": self.domain,
            "bricks": f"{self.bricks[0]}x{self.bricks[1]}",
            "mx": self.mx,
            "ghost": self.ghost,
            "niveles": f"{self.minlevel}..{self.maxlevel}",
            "ranks": self.ranks,
            "steps": self.steps,
            "cfl": self.cfl,
            "uniform": self.uniform,
        }


def desde_config(cfg: Config, **cambios) -> RunConfig:
    """RunConfig con los valores de `cfg` y los cambios indicados."""
    base = {
        "domain": cfg.dominio,
        "bricks": cfg.bricks,
        "periodic": cfg.periodico,
        "mx": cfg.mx,
        "ghost": cfg.ghost,
        "stencil": cfg.stencil,
        "limiter": cfg.limitador,
        "minlevel": cfg.nivel_min,
        "maxlevel": cfg.nivel_max,
        "ranks": cfg.rangos,
        "threads": cfg.hilos,
        "steps": cfg.pasos,
        "cfl": cfg.cfl,
        "dt": cfg.dt,
        "tag_refine": cfg.tau_refinar,
        "tag_coarsen": cfg.tau_engrosar,
        "smooth": cfg.suave,
        "regrid_interval": cfg.intervalo_regrid,
        "uniform": cfg.uniforme,
        "init": cfg.condicion_inicial,
        "radius": cfg.radio_discos,
        "centers": cfg.centros_discos,
        "sigma": cfg.sigma_gauss,
        "out": cfg.ruta_solucion,
        "timing": cfg.ruta_tiempos,
        "format": cfg.formato,
        "db": cfg.database_url,
    }
    base.update(cambios)
    return validar(base)


def validar(datos: dict) -> RunConfig:
    try:
        return RunConfig(**datos)
    except ValidationError as e:
        mensajes = [err["msg"].removeprefix("Value error, ") for err in e.errors()]
        raise ErrorConfiguracion("; ".join(mensajes), {"errores": mensajes}) from None


# === ARGUMENTOS ===

class _Parser(argparse.ArgumentParser):
    """argparse que lanza ErrorConfiguracion en lugar de salir."""

    def error(self, message):
        raise ErrorConfiguracion(message)


def _bricks(texto: str) -> Tuple[int, int]:
    try:
        nx, ny = (int(v) for v in texto.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--bricks espera NxN: {texto!r}")
    return nx, ny


def crear_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bosque", description="Benchmark de advección AMR sobre un bosque de quadtrees")
    p.add_argument("--config", help="Archivo YAML de configuración")

    dominio = p.add_argument_group("dominio")
    dominio.add_argument("--domain", choices=["brick", "cubed-sphere"])
    dominio.add_argument("--bricks", type=_bricks, metavar="NxN")

    malla = p.add_argument_group("malla")
    malla.add_argument("--mx", type=int)
    malla.add_argument("--ghost", type=int)
    malla.add_argument("--stencil", type=int)
    malla.add_argument("--limiter", choices=list(LIMITADORES))
    malla.add_argument("--minlevel", type=int)
    malla.add_argument("--maxlevel", type=int)

    tiempo = p.add_argument_group("tiempo")
    tiempo.add_argument("--steps", type=int)
    tiempo.add_argument("--cfl", type=float)
    tiempo.add_argument("--dt", type=float)
    tiempo.add_argument("--regrid-interval", type=int)
    tiempo.add_argument("--uniform", action="store_true", default=None)

    etiquetado = p.add_argument_group("etiquetado")
    etiquetado.add_argument("--tag-refine", type=float)
    etiquetado.add_argument("--tag-coarsen", type=float)
    etiquetado.add_argument("--smooth", action=argparse.BooleanOptionalAction, default=None)
    etiquetado.add_argument("--init", choices=["disks", "gaussian"])

    paralelo = p.add_argument_group("paralelo")
    paralelo.add_argument("--ranks", type=int)
    paralelo.add_argument("--threads", type=int)

    salida = p.add_argument_group("salida")
    salida.add_argument("--out")
    salida.add_argument("--timing")
    salida.add_argument("--format", choices=list(FORMATOS))
    salida.add_argument("--trace")
    salida.add_argument("--db")
    salida.add_argument("--history", action="store_true", default=None)
    salida.add_argument("--quiet", action="store_true", default=None)
    return p


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Argumentos -> RunConfig. Sin argumentos se obtienen los valores por defecto."""
    args = crear_parser().parse_args(list(argv or []))
    base = Config(ruta=args.config) if args.config else config_global
    cambios = {
        k.replace("-", "_"): v
        for k, v in vars(args).items()
        if v is not None and k != "config"
    }
    return desde_config(base, **cambios)
