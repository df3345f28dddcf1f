"""Tests de BOSQUE."""
