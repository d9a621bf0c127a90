"""porocell: periodic fluid/solid unit-cell design by level-set shape optimization."""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .grid import PeriodicGrid
from .levelset import (
    Circle,
    DensityField,
    Ellipse,
    Intersection,
    LevelSetField,
    Mask,
    ShapeMeasures,
    Slab,
    Union,
    advect,
    curvature,
    heaviside_density,
    init_levelset,
    measure_area,
    measure_perimeter,
    reinitialize,
    shape_measures,
)

__all__ = [
    "KERNEL_BACKEND",
    "PeriodicGrid",
    "Circle",
    "Ellipse",
    "Slab",
    "Union",
    "Intersection",
    "Mask",
    "LevelSetField",
    "DensityField",
    "ShapeMeasures",
    "init_levelset",
    "heaviside_density",
    "measure_area",
    "measure_perimeter",
    "curvature",
    "advect",
    "reinitialize",
    "shape_measures",
    "__version__",
]
