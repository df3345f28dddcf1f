"""Malla de BOSQUE: conectividad multibloque, bosque de quadtrees y transformaciones."""

from malla.connectivity import (
    Connectivity,
    FaceLink,
    LinkTransform,
    build_brick,
    build_cubed_sphere,
    validate,
)
from malla.forest import (
    ALL_REGIONS,
    CORNERS,
    FACES,
    Forest,
    NeighborInfo,
    NeighborKind,
    Quadrant,
    Region,
    RegionKind,
    balance_2to1,
    new_uniform,
)
from malla.transforms import (
    DIRECTIONS,
    CoarseFineTransform,
    SameSizeTransform,
    coarse_fine_between,
    coarse_fine_transform,
    same_size_transform,
)

__all__ = [
    "Connectivity",
    "FaceLink",
    "LinkTransform",
    "build_brick",
    "build_cubed_sphere",
    "validate",
    "ALL_REGIONS",
    "CORNERS",
    "FACES",
    "Forest",
    "NeighborInfo",
    "NeighborKind",
    "Quadrant",
    "Region",
    "RegionKind",
    "balance_2to1",
    "new_uniform",
    "DIRECTIONS",
    "CoarseFineTransform",
    "SameSizeTransform",
    "coarse_fine_between",
    "coarse_fine_transform",
    "same_size_transform",
]
