"""End-to-end composition of the automatic boundary extraction stages.

Chains the contour detector, the superpixel stage, and the network assembly
into one call. The contour chain runs on a resolution-capped copy of the
input; superpixels run at full resolution so their outlines keep the native
ground sampling distance.
"""

from __future__ import annotations

from dataclasses import dataclass

from .contours import (
    BinaryBoundaryMap,
    BoundaryProbabilityMap,
    CueParams,
    binary_boundary_map,
    boundary_strength,
    close_contours,
    multiscale_pb,
    spectral_globalize,
    vectorize_boundaries,
)
from .errors import ParameterError
from .geometry import Polyline
from .raster import GeoTransform, ImageGrid, LabelMap, downscale, rgb_to_lab
from .superpixels import (
    SlicParams,
    enforce_connectivity,
    slic,
    superpixel_outlines,
)
from .vectornet import LineNetwork, buffer_filter, build_network, clean_topology

__all__ = [
    "StepOneParams",
    "ContourResult",
    "SuperpixelResult",
    "StepOneResult",
    "default_slic_params",
    "contour_lines",
    "superpixel_lines",
    "assemble_network",
    "run_step_one",
]


@dataclass(frozen=True)
class StepOneParams:
    """Knobs for the full automatic stage.

    Leaving `cue` or `slic_params` unset picks the module defaults; the
    superpixel spacing then derives from the ground sampling distance so
    superpixel edges end up roughly one meter long.
    """

    cue: CueParams | None = None
    slic_params: SlicParams | None = None
    threshold: float = 0.3
    spectral: bool = True
    max_dim: int = 1000
    buffer_radius_m: float = 5.0
    snap_tol_m: float = 0.05
    min_dangle_m: float = 0.5

    def __post_init__(self):
        if not 0 <= self.threshold <= 1:
            raise ParameterError(
                f"threshold must be within [0, 1], got {self.threshold}")
        if self.max_dim < 2:
            raise ParameterError(f"max_dim must be >= 2, got {self.max_dim}")
        if self.buffer_radius_m < 0:
            raise ParameterError(
                f"buffer_radius_m must be >= 0, got {self.buffer_radius_m}")
        if self.snap_tol_m < 0:
            raise ParameterError(
                f"snap_tol_m must be >= 0, got {self.snap_tol_m}")
        if self.min_dangle_m < 0:
            raise ParameterError(
                f"min_dangle_m must be >= 0, got {self.min_dangle_m}")


@dataclass(frozen=True)
class ContourResult:
    probability: BoundaryProbabilityMap
    strength: BoundaryProbabilityMap
    binary: BinaryBoundaryMap
    lines: list[Polyline]


@dataclass(frozen=True)
class SuperpixelResult:
    labels: LabelMap
    lines: list[Polyline]


@dataclass(frozen=True)
class StepOneResult:
    contour: ContourResult
    superpixel: SuperpixelResult
    network: LineNetwork


def default_slic_params(transform: GeoTransform) -> SlicParams:
    """Superpixel settings tuned to the raster's ground sampling distance."""
    gsd = (abs(transform.pixel_size_x) + abs(transform.pixel_size_y)) / 2.0
    return SlicParams(region_size=max(2, int(round(1.0 / gsd))))


def contour_lines(grid: ImageGrid, params: CueParams | None = None, *,
                  threshold: float = 0.3, spectral: bool = True,
                  max_dim: int = 1000) -> ContourResult:
    """Probability map, closed-region strength, and vectorized boundaries."""
    coarse, _ = downscale(grid, max_dim)
    lab = rgb_to_lab(coarse)
    pb = multiscale_pb(lab, params)
    if spectral:
        pb = spectral_globalize(pb, params)
    regions = close_contours(pb)
    strength = boundary_strength(regions, pb)
    binary = binary_boundary_map(strength, threshold)
    return ContourResult(probability=pb, strength=strength, binary=binary,
                         lines=vectorize_boundaries(binary))


def superpixel_lines(grid: ImageGrid,
                     params: SlicParams | None = None) -> SuperpixelResult:
    """Connected superpixel labeling of the full-resolution image."""
    lab = rgb_to_lab(grid)
    if params is None:
        params = default_slic_params(grid.transform)
    spacing = params.spacing(grid.width, grid.height)
    labels = enforce_connectivity(slic(lab, params), params.min_size(spacing))
    return SuperpixelResult(labels=labels, lines=superpixel_outlines(labels))


def assemble_network(candidate_lines, guide_lines, *, radius: float = 5.0,
                     snap_tol: float = 0.05,
                     min_dangle: float = 0.5) -> LineNetwork:
    """Filter candidate lines near the guides and build the edit network."""
    kept = buffer_filter(candidate_lines, guide_lines, radius)
    cleaned = clean_topology(kept, snap_tol=snap_tol, min_dangle=min_dangle)
    return build_network(cleaned)


def run_step_one(grid: ImageGrid,
                 params: StepOneParams | None = None) -> StepOneResult:
    """The whole automatic stage: contours, superpixels, and the network."""
    params = params or StepOneParams()
    contour = contour_lines(grid, params.cue, threshold=params.threshold,
                            spectral=params.spectral, max_dim=params.max_dim)
    superpixel = superpixel_lines(grid, params.slic_params)
    network = assemble_network(superpixel.lines, contour.lines,
                               radius=params.buffer_radius_m,
                               snap_tol=params.snap_tol_m,
                               min_dangle=params.min_dangle_m)
    return StepOneResult(contour=contour, superpixel=superpixel,
                         network=network)
