"""Tests de los cronómetros exclusivos."""

import threading
import time

from utils.cronometro import Cronometro


def test_anidado_exclusivo():
    c = Cronometro(["a", "b"])
    with c.medir("a"):
        time.sleep(0.02)
        with c.medir("b"):
            time.sleep(0.03)
    assert c.tiempos["b"] >= 0.03
    assert 0.02 <= c.tiempos["a"] < 0.03 + 0.02, "El tiempo de b no se cuenta en a"
    assert c.medido() <= c.total


def test_sumar_mueve_tiempo():
    c = Cronometro(["ghost_fill", "comm"])
    c.tiempos["ghost_fill"] = 1.0
    c.sumar("comm", 0.25, desde="ghost_fill")
    assert c.tiempos == {"ghost_fill": 0.75, "comm": 0.25}
    assert c.medido() == 1.0


def test_otros_hilos_no_miden():
    c = Cronometro(["advance"])

    def trabajo():
        with c.medir("advance"):
            time.sleep(0.01)

    hilo = threading.Thread(target=trabajo)
    hilo.start()
    hilo.join()
    assert c.tiempos["advance"] == 0.0
