"""Modelos de base de datos del historial de corridas de BOSQUE."""

from datetime import datetime
from typing import Dict, Optional

from sqlalchemy import Boolean, Column, DateTime, Float, Integer, String, Text, create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import DeclarativeBase, sessionmaker

from config.settings import config
from core.errores import ErrorConfiguracion


class Base(DeclarativeBase):
    pass


class Corrida(Base):
    """Una corrida del benchmark."""
    __tablename__ = "corridas"

    id = Column(Integer, primary_key=True, autoincrement=True)
    creada_en = Column(DateTime, default=datetime.utcnow, index=True)
    configuracion_json = Column(Text, default="{}")
    dominio = Column(String(20))
    ranks = Column(Integer)
    grids_per_rank_avg = Column(Float)
    wall = Column(Float)
    advance = Column(Float)
    ghost_fill = Column(Float)
    comm = Column(Float)
    cfl_sync = Column(Float)
    regrid = Column(Float)
    cell_updates = Column(Integer)
    deriva_masa = Column(Float, nullable=True)
    exito = Column(Boolean, default=True)
    error = Column(Text, nullable=True)


# === ENGINE Y SESSION ===

_engines: Dict[str, Engine] = {}
_sesiones: Dict[str, sessionmaker] = {}


def _url(url: Optional[str]) -> str:
    url = url or config.database_url
    if not url:
        raise ErrorConfiguracion("No hay URL de base de datos (--db o DATABASE_URL)")
    return url


def get_engine(url: Optional[str] = None) -> Engine:
    """Obtiene o crea el engine de SQLAlchemy para la URL."""
    url = _url(url)
    if url not in _engines:
        _engines[url] = create_engine(url, echo=False)
    return _engines[url]


def get_session(url: Optional[str] = None):
    """Obtiene una nueva sesión de base de datos."""
    url = _url(url)
    if url not in _sesiones:
        _sesiones[url] = sessionmaker(autocommit=False, autoflush=False, bind=get_engine(url))
    return _sesiones[url]()


def inicializar_base_datos(url: Optional[str] = None, verbose: bool = False):
    """Crea todas las tablas."""
    Base.metadata.create_all(bind=get_engine(url))
    if verbose:
        print("✓ Base de datos inicializada")
