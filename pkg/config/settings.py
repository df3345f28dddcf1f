"""
Configuración de BOSQUE.
PRIORIDAD: Variables de entorno > YAML > Defaults
"""

import os
from pathlib import Path
from typing import List, Optional, Tuple

import yaml


class Config:
    """Configuración centralizada con prioridad ENV > YAML."""

    def __init__(self, ruta: Optional[str] = None):
        self._yaml_data = {}
        self.ruta = ruta or os.getenv("BOSQUE_CONFIG_PATH", "./config/bosque.yaml")
        self._cargar_yaml()

    def _cargar_yaml(self):
        """Carga el archivo YAML como base."""
        ruta_path = Path(self.ruta)
        if ruta_path.exists():
            with open(ruta_path, "r", encoding="utf-8") as f:
                self._yaml_data = yaml.safe_load(f) or {}

    def _get(self, *keys, env_var: str = None, default=None):
        """
        Obtiene un valor con prioridad: ENV > YAML > default.

        Args:
            *keys: Ruta en el YAML (ej: "malla", "M")
            env_var: Variable de entorno alternativa
            default: Valor por defecto
        """
        # 1. Intentar variable de entorno
        if env_var and os.getenv(env_var):
            valor = os.getenv(env_var)
            # Convertir tipos básicos
            if valor.lower() in ("true", "false"):
                return valor.lower() == "true"
            for tipo in (int, float):
                try:
                    return tipo(valor)
                except ValueError:
                    pass
            return valor

        # 2. Intentar YAML
        data = self._yaml_data
        for key in keys:
            if isinstance(data, dict) and key in data:
                data = data[key]
            else:
                return default
        return data if data is not None else default

    # === DOMINIO ===
    @property
    def dominio(self) -> str:
        """'brick' o 'cubed-sphere'"""
        return self._get("dominio", "tipo", env_var="BOSQUE_DOMAIN", default="brick")

    @property
    def bricks(self) -> Tuple[int, int]:
        valor = self._get("dominio", "bricks", env_var="BOSQUE_BRICKS", default="1x1")
        nx, ny = str(valor).lower().split("x")
        return int(nx), int(ny)

    @property
    def periodico(self) -> bool:
        return self._get("dominio", "periodico", default=True)

    # === MALLA ===
    @property
    def mx(self) -> int:
        return self._get("malla", "mx", env_var="BOSQUE_MX", default=8)

    @property
    def ghost(self) -> int:
        return self._get("malla", "ghost", env_var="BOSQUE_GHOST", default=2)

    @property
    def stencil(self) -> int:
        return self._get("malla", "stencil", default=3)

    @property
    def limitador(self) -> str:
        return self._get("malla", "limitador", env_var="BOSQUE_LIMITER", default="minmod")

    # === NIVELES ===
    @property
    def nivel_min(self) -> int:
        return self._get("niveles", "min", env_var="BOSQUE_MINLEVEL", default=4)

    @property
    def nivel_max(self) -> int:
        return self._get("niveles", "max", env_var="BOSQUE_MAXLEVEL", default=7)

    # === TIEMPO ===
    @property
    def cfl(self) -> float:
        return self._get("tiempo", "cfl", default=0.64)

    @property
    def dt(self) -> Optional[float]:
        return self._get("tiempo", "dt", default=None)

    @property
    def pasos(self) -> int:
        return self._get("tiempo", "pasos", env_var="BOSQUE_STEPS", default=160)

    @property
    def intervalo_regrid(self) -> Optional[int]:
        """None usa 2^(nivel_max - nivel_min)."""
        return self._get("tiempo", "intervalo_regrid", default=None)

    @property
    def uniforme(self) -> bool:
        return self._get("tiempo", "uniforme", default=False)

    # === ETIQUETADO ===
    @property
    def tau_refinar(self) -> float:
        return self._get("etiquetado", "tau_refinar", default=0.25)

    @property
    def tau_engrosar(self) -> float:
        return self._get("etiquetado", "tau_engrosar", default=0.001)

    @property
    def suave(self) -> bool:
        return self._get("etiquetado", "suave", default=True)

    # === CONDICION INICIAL ===
    @property
    def condicion_inicial(self) -> str:
        """'disks' o 'gaussian'"""
        return self._get("condicion_inicial", "tipo", env_var="BOSQUE_INIT", default="disks")

    @property
    def radio_discos(self) -> float:
        return self._get("condicion_inicial", "radio", default=0.3)

    @property
    def centros_discos(self) -> List[Tuple[float, float]]:
        centros = self._get(
            "condicion_inicial",
            "centros",
            default=[[0.5, 0.5], [0.2, 0.2], [0.8, 0.2], [0.2, 0.8], [0.8, 0.8]],
        )
        return [(float(x), float(y)) for x, y in centros]

    @property
    def sigma_gauss(self) -> float:
        return self._get("condicion_inicial", "sigma", default=0.1)

    # === PARALELO ===
    @property
    def rangos(self) -> int:
        return self._get("paralelo", "rangos", env_var="BOSQUE_RANKS", default=1)

    @property
    def hilos(self) -> int:
        return self._get("paralelo", "hilos", env_var="BOSQUE_THREADS", default=1)

    # === SALIDA ===
    @property
    def formato(self) -> str:
        return self._get("salida", "formato", default="dump")

    @property
    def ruta_solucion(self) -> Optional[str]:
        return self._get("salida", "solucion", env_var="BOSQUE_OUT", default=None)

    @property
    def ruta_tiempos(self) -> Optional[str]:
        return self._get("salida", "tiempos", env_var="BOSQUE_TIMING", default=None)

    # === REGISTRO ===
    @property
    def database_url(self) -> Optional[str]:
        return self._get("registro", "url", env_var="DATABASE_URL", default=None)

    def resumen(self) -> dict:
        """Resumen de configuración actual."""
        return {
            "dominio": self.dominio,
            "bricks": "x".join(str(n) for n in self.bricks),
            "mx": self.mx,
            "ghost": self.ghost,
            "niveles": f"{self.nivel_min}..{self.nivel_max}",
            "cfl": self.cfl,
            "pasos": self.pasos,
            "rangos": self.rangos,
        }


# Instancia global
config = Config()
