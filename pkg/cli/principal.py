"""Punto de entrada de la línea de comandos de BOSQUE."""

import sys
from pathlib import Path
from typing import List, Optional, Sequence

from cli.configuracion import RunConfig, parse_config
from cli.salidas import emit_solution, emit_timing
from core.errores import ErrorBosque, ErrorSalida, codigo_salida
from core.simulacion import ResultadoCorrida, demo_esfera_cubica, run
from registro import guardar_corrida, listar_corridas


def _banner(rc: RunConfig):
    print("=" * 50)
    print("🌲 BOSQUE - advección AMR sobre un bosque de quadtrees")
    dominio = rc.domain if rc.domain != "brick" else f"brick {rc.bricks[0]}x{rc.bricks[1]}"
    print(f"📋 Dominio: {dominio} | M={rc.mx} m={rc.ghost} w={rc.stencil}")
    niveles = f"{rc.minlevel}" if rc.uniform else f"{rc.minlevel}..{rc.maxlevel}"
    print(f"📐 Niveles: {niveles} | P={rc.ranks} hilos={rc.threads}")
    print("=" * 50)


def _resumen(resultado: ResultadoCorrida):
    s = resultado.stats
    print("=" * 50)
    print(f"✓ {len(s.cfl)} pasos, {len(resultado.forest)} parches al final")
    print(f"  wall: {s.wall:.3f} s (cubierto {100 * s.cobertura:.1f}%)")
    for categoria, t in s.tiempos.items():
        fraccion = t / s.wall if s.wall > 0 else 0.0
        print(f"  {categoria:<11} {t:9.4f} s  {100 * fraccion:5.1f}%")
    if s.wall > 0:
        tasa = s.cell_updates / s.wall / s.ranks
        print(f"  actualizaciones por segundo y rango: {tasa:.3e}")
    print(f"  deriva de masa: {s.deriva_masa:.3e}")
    print("=" * 50)


def _escribir_traza(traza: Optional[List[str]], ruta: str):
    try:
        Path(ruta).write_text("\n".join(traza or []) + "\n", encoding="utf-8")
    except OSError as e:
        raise ErrorSalida(f"No se puede escribir {ruta}: {e}", {"ruta": ruta})


def _historial(rc: RunConfig) -> int:
    corridas = listar_corridas(rc.db)
    if not corridas:
        print("⚠ No hay corridas registradas")
        return 0
    print(f"{'id':>4} {'dominio':<12} {'P':>4} {'grids/P':>8} {'wall':>9} {'ghost':>7} {'regrid':>7}")
    for c in corridas:
        wall = c["wall"] or 0.0
        fr_ghost = (c["ghost_fill"] + c["comm"]) / wall if wall else 0.0
        fr_regrid = c["regrid"] / wall if wall else 0.0
        print(
            f"{c['id']:>4} {c['configuracion'].get('domain', '?'):<12} {c['ranks']:>4} "
            f"{c['grids_per_rank_avg']:>8.1f} {wall:>9.3f} {100 * fr_ghost:>6.1f}% {100 * fr_regrid:>6.1f}%"
        )
    return 0


def _esfera(rc: RunConfig) -> int:
    r = demo_esfera_cubica(rc, verbose=not rc.quiet)
    if rc.out:
        emit_solution(r.patches, rc.out, rc.format, r.forest.conn)
    if r.diferencia_paralelo != 0.0:
        print(f"✗ El llenado paralelo difiere del serial: {r.diferencia_paralelo:.3e}")
        return 1
    return 0


def _benchmark(rc: RunConfig) -> int:
    resultado = run(rc, verbose=not rc.quiet)
    if rc.timing:
        emit_timing(resultado.stats, rc.timing)
    if rc.out:
        emit_solution(resultado.patches, rc.out, rc.format, resultado.forest.conn)
    if rc.trace:
        _escribir_traza(resultado.trace, rc.trace)
    if rc.db:
        corrida_id = guardar_corrida(rc.resumen(), resultado.stats, rc.db)
        if not rc.quiet:
            print(f"✓ Corrida registrada con id {corrida_id}")
    if not rc.quiet:
        _resumen(resultado)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Ejecuta el CLI; devuelve 0 (ok), 2 (configuración) o 1 (ejecución)."""
    argv = sys.argv[1:] if argv is None else argv
    try:
        rc = parse_config(argv)
        if rc.history:
            return _historial(rc)
        if not rc.quiet:
            _banner(rc)
        if rc.domain == "cubed-sphere":
            return _esfera(rc)
        return _benchmark(rc)
    except ErrorBosque as e:
        print(f"✗ {e.tipo.value}: {e.mensaje}", file=sys.stderr)
        return codigo_salida(e)
    except Exception as e:
        print(f"✗ Error inesperado: {e}", file=sys.stderr)
        return 1
