"""Parches de datos y operadores de celdas fantasma."""

from parches.patch import (
    BCKind,
    Patch,
    StencilConfig,
    apply_physbc,
    average_ghost,
    average_to_parent,
    copy_ghost,
    dump_patch,
    fill_from_function,
    interpolate_ghost,
    interpolate_to_children,
    load_patch,
    tag_coarsen,
    tag_refine,
)

__all__ = [
    "BCKind",
    "Patch",
    "StencilConfig",
    "apply_physbc",
    "average_ghost",
    "average_to_parent",
    "copy_ghost",
    "dump_patch",
    "fill_from_function",
    "interpolate_ghost",
    "interpolate_to_children",
    "load_patch",
    "tag_coarsen",
    "tag_refine",
]
