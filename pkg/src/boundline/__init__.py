"""Semi-automatic cadastral boundary delineation toolkit.

Pipeline stages: contour detection (gPb-style cues), SLIC superpixels,
buffer-fused vector networks, interactive shortest-path delineation with
sinuosity feedback, and buffer-based localization assessment.
"""

from .assessment import (
    DEFAULT_DISTANCES,
    AssessmentConfig,
    ConfusionSeries,
    confusion_series,
    distance_transform,
    grid_for_layers,
    rasterize_lines,
    report_csv,
    report_json,
    report_text,
    save_histogram,
)
from .contours import (
    BinaryBoundaryMap,
    BoundaryProbabilityMap,
    CueParams,
    TextonMap,
    binary_boundary_map,
    boundary_strength,
    close_contours,
    multiscale_pb,
    compute_textons,
    spectral_globalize,
    vectorize_boundaries,
)
from .delineation import (
    GREEN,
    RED,
    YELLOW,
    AcceptedLine,
    CandidateLine,
    DelineationSession,
    classify_sinuosity,
    connect_nodes,
    simplify_line,
)
from .errors import (
    BoundlineError,
    GridMismatchError,
    NoPathError,
    ParameterError,
    RasterFormatError,
    SessionStateError,
    SpectralConvergenceError,
    TopologyError,
    UndefinedMeasureError,
    UnknownNodeError,
    WorldFileError,
)
from .geometry import Polyline, douglas_peucker, sinuosity
from .pipeline import (
    ContourResult,
    StepOneParams,
    StepOneResult,
    SuperpixelResult,
    assemble_network,
    contour_lines,
    default_slic_params,
    run_step_one,
    superpixel_lines,
)
from .raster import (
    GeoTransform,
    ImageGrid,
    LabelMap,
    LabGrid,
    downscale,
    load_image,
    read_world_file,
    rgb_to_lab,
    write_world_file,
)
from .superpixels import (
    SlicParams,
    enforce_connectivity,
    slic,
    superpixel_outlines,
)
from .vectornet import (
    LineNetwork,
    NetworkEdge,
    buffer_filter,
    build_network,
    clean_topology,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "BoundlineError", "GridMismatchError", "NoPathError", "ParameterError",
    "RasterFormatError", "SessionStateError", "SpectralConvergenceError",
    "TopologyError", "UndefinedMeasureError", "UnknownNodeError",
    "WorldFileError",
    # raster
    "GeoTransform", "ImageGrid", "LabGrid", "LabelMap", "downscale",
    "load_image", "read_world_file", "rgb_to_lab", "write_world_file",
    # geometry
    "Polyline", "douglas_peucker", "sinuosity",
    # contours
    "BinaryBoundaryMap", "BoundaryProbabilityMap", "CueParams", "TextonMap",
    "binary_boundary_map", "boundary_strength", "close_contours",
    "compute_textons", "multiscale_pb", "spectral_globalize",
    "vectorize_boundaries",
    # superpixels
    "SlicParams", "enforce_connectivity", "slic", "superpixel_outlines",
    # vector network
    "LineNetwork", "NetworkEdge", "buffer_filter", "build_network",
    "clean_topology",
    # pipeline
    "ContourResult", "StepOneParams", "StepOneResult", "SuperpixelResult",
    "assemble_network", "contour_lines", "default_slic_params",
    "run_step_one", "superpixel_lines",
    # delineation
    "AcceptedLine", "CandidateLine", "DelineationSession", "GREEN", "RED",
    "YELLOW", "classify_sinuosity", "connect_nodes", "simplify_line",
    # assessment
    "AssessmentConfig", "ConfusionSeries", "DEFAULT_DISTANCES",
    "confusion_series", "distance_transform", "grid_for_layers",
    "rasterize_lines", "report_csv", "report_json", "report_text",
    "save_histogram",
]
