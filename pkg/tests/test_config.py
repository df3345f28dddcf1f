"""Tests de configuración: ENV > YAML > defaults."""

import pytest

from cli.configuracion import desde_config, parse_config
from config.settings import Config
from core.errores import ErrorConfiguracion


@pytest.fixture
def yaml_corrida(tmp_path):
    ruta = tmp_path / "corrida.yaml"
    ruta.write_text(
        "dominio:\n  bricks: '2x2'\nmalla:\n  mx: 16\n  limitador: mc\n"
        "niveles:\n  min: 3\n  max: 5\ntiempo:\n  pasos: 40\n",
        encoding="utf-8",
    )
    return str(ruta)


@pytest.fixture(autouse=True)
def entorno_limpio(monkeypatch):
    for v in ("BOSQUE_MX", "BOSQUE_MINLEVEL", "BOSQUE_BRICKS", "BOSQUE_LIMITER", "BOSQUE_STEPS", "DATABASE_URL"):
        monkeypatch.delenv(v, raising=False)


def test_yaml_sobre_defaults(yaml_corrida):
    cfg = Config(ruta=yaml_corrida)
    assert cfg.mx == 16 and cfg.bricks == (2, 2) and cfg.limitador == "mc"
    assert (cfg.nivel_min, cfg.nivel_max, cfg.pasos) == (3, 5, 40)
    assert cfg.ghost == 2, "Lo que falta en el YAML toma el valor por defecto"
    assert cfg.database_url is None


def test_entorno_sobre_yaml(yaml_corrida, monkeypatch):
    monkeypatch.setenv("BOSQUE_MX", "32")
    monkeypatch.setenv("BOSQUE_BRICKS", "3x1")
    cfg = Config(ruta=yaml_corrida)
    assert cfg.mx == 32
    assert cfg.bricks == (3, 1)


def test_archivo_inexistente(tmp_path):
    cfg = Config(ruta=str(tmp_path / "no_existe.yaml"))
    assert (cfg.mx, cfg.nivel_min, cfg.nivel_max) == (8, 4, 7)
    assert cfg.centros_discos[0] == (0.5, 0.5)


def test_desde_config_valida(yaml_corrida):
    rc = desde_config(Config(ruta=yaml_corrida), ghost=4)
    assert (rc.mx, rc.ghost, rc.bricks) == (16, 4, (2, 2))
    with pytest.raises(ErrorConfiguracion, match="m ≤ M/4"):
        desde_config(Config(ruta=yaml_corrida), ghost=5)


def test_argumento_config(yaml_corrida):
    rc = parse_config(["--config", yaml_corrida, "--steps", "7"])
    assert rc.mx == 16 and rc.steps == 7
