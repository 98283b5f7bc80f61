"""Plaque mesh extraction, unfolding and morphometry for vessel-wall volumes."""

from .volume_io import (
    IntensityVolume,
    LabelVolume,
    read_nrrd,
    write_nrrd,
)
from .phantom import BumpSpec, PhantomSpec, PhantomTruth, generate_phantom
from .mesh import Submesh, TriangleMesh, boundary_loops, connected_components
from .isosurface import laplacian_smooth, marching_cubes
from .distance import MeshDistanceQuery, distance_to_mesh
from .ply import read_ply, write_ply
from .plaque import (
    DistanceProfile,
    ExtractionResult,
    PlaqueMesh,
    ThresholdState,
    case_specific_threshold,
    detect_plaque_region,
    extract_from_meshes,
    extract_plaque,
    global_threshold,
    make_watertight,
    offset_regions,
    project_to_inner,
    stitch_borders,
)
from .unfold import UnfoldedPatch, lscm_unfold
from .svgrender import render_svg, write_svg
from .analysis import (
    Histogram,
    PlaqueReport,
    geometric_parameters,
    intensity_histogram,
    voxels_inside,
    winding_numbers,
)

__version__ = "0.1.0"

__all__ = [
    "BumpSpec",
    "DistanceProfile",
    "ExtractionResult",
    "Histogram",
    "IntensityVolume",
    "LabelVolume",
    "MeshDistanceQuery",
    "PhantomSpec",
    "PhantomTruth",
    "PlaqueMesh",
    "PlaqueReport",
    "Submesh",
    "ThresholdState",
    "TriangleMesh",
    "UnfoldedPatch",
    "boundary_loops",
    "case_specific_threshold",
    "connected_components",
    "detect_plaque_region",
    "distance_to_mesh",
    "extract_from_meshes",
    "extract_plaque",
    "generate_phantom",
    "geometric_parameters",
    "global_threshold",
    "intensity_histogram",
    "laplacian_smooth",
    "lscm_unfold",
    "make_watertight",
    "marching_cubes",
    "offset_regions",
    "project_to_inner",
    "read_nrrd",
    "read_ply",
    "render_svg",
    "stitch_borders",
    "voxels_inside",
    "winding_numbers",
    "write_nrrd",
    "write_ply",
    "write_svg",
]
