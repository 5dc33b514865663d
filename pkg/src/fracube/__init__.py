"""Fractal-cube analysis: trivial points, connectedness-index bounds,
graph-directed dimensions, and the fracube CLI."""

from .bounds import BoundsReport, IslandWitness, bounds_report, ic_upper_bound
from .errors import BudgetError, FracubeError, ParseError, memory_budget
from .graphdir import (
    GDVerification,
    MWGraph,
    gd_dimension,
    load_graph,
    path_cells,
    spectral_radius,
    verify_decomposition,
)
from .grid import CellGrid, build_grid, parse_pbm, render_pbm
from .model import (
    AffineReduction,
    DigitSet,
    PrescreenReport,
    ReductionStep,
    affine_rank,
    compose_level,
    dihedral_canonical,
    dihedral_images,
    hausdorff_dimension,
    is_latin,
    parse_digitset,
    reduce_full_rank,
    serialize_digitset,
    th_prescreen,
)
from .topology import (
    ComponentInfo,
    ComponentLabeling,
    TrivialPointVerdict,
    component_of_cell,
    find_islands,
    first_island_level,
    hata_connected,
    label_components,
    piece_intersects,
    trivial_point_status,
)

__version__ = "0.1.0"

__all__ = [
    "AffineReduction",
    "BoundsReport",
    "BudgetError",
    "CellGrid",
    "ComponentInfo",
    "ComponentLabeling",
    "DigitSet",
    "FracubeError",
    "GDVerification",
    "IslandWitness",
    "MWGraph",
    "ParseError",
    "PrescreenReport",
    "ReductionStep",
    "TrivialPointVerdict",
    "affine_rank",
    "bounds_report",
    "build_grid",
    "component_of_cell",
    "compose_level",
    "dihedral_canonical",
    "dihedral_images",
    "find_islands",
    "first_island_level",
    "gd_dimension",
    "hata_connected",
    "hausdorff_dimension",
    "ic_upper_bound",
    "is_latin",
    "label_components",
    "load_graph",
    "memory_budget",
    "parse_digitset",
    "parse_pbm",
    "path_cells",
    "piece_intersects",
    "reduce_full_rank",
    "render_pbm",
    "serialize_digitset",
    "spectral_radius",
    "th_prescreen",
    "trivial_point_status",
    "verify_decomposition",
]
