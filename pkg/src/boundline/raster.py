"""Georeferenced raster model: world-file transforms, CIELAB conversion, downscaling.

Rasters are numpy arrays in row-major (row, col) order paired with a
GeoTransform. The world file origin is the outer corner of the top-left
pixel; pixel centers sit half a pixel inward, so pixel (col, row) maps to
origin + (col + 0.5, row + 0.5) through the affine terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ParameterError, RasterFormatError, WorldFileError


@dataclass(frozen=True)
class GeoTransform:
    """Affine pixel-to-world mapping (world file parameters A..F)."""

    origin_x: float
    origin_y: float
    pixel_size_x: float
    pixel_size_y: float
    rot_x: float = 0.0  # x change per row step (world file line 3)
    rot_y: float = 0.0  # y change per column step (world file line 2)

    def __post_init__(self):
        if not self.pixel_size_x > 0:
            raise ParameterError("pixel_size_x must be positive")
        if self.pixel_size_y == 0:
            raise ParameterError("pixel_size_y must be nonzero")
        if self._det() == 0:
            raise ParameterError("transform is singular")

    def _det(self) -> float:
        return self.pixel_size_x * self.pixel_size_y - self.rot_x * self.rot_y

    def pixel_to_world(self, col, row):
        """World coordinates of the pixel center at (col, row).

        Accepts fractional indices; (col, row) = (-0.5, -0.5) is the grid
        origin corner.
        """
        c = np.asarray(col, dtype=np.float64) + 0.5
        r = np.asarray(row, dtype=np.float64) + 0.5
        x = self.origin_x + c * self.pixel_size_x + r * self.rot_x
        y = self.origin_y + c * self.rot_y + r * self.pixel_size_y
        return x, y

    def world_to_pixel(self, x, y):
        """Fractional (col, row) of a world point; inverse of pixel_to_world."""
        dx = np.asarray(x, dtype=np.float64) - self.origin_x
        dy = np.asarray(y, dtype=np.float64) - self.origin_y
        det = self._det()
        c = (dx * self.pixel_size_y - dy * self.rot_x) / det
        r = (dy * self.pixel_size_x - dx * self.rot_y) / det
        return c - 0.5, r - 0.5

    def corner_to_world(self, corner_col, corner_row):
        """World coordinates of the pixel-corner lattice point (col, row).

        Corner (0, 0) is the top-left corner of pixel (0, 0).
        """
        return self.pixel_to_world(np.asarray(corner_col) - 0.5,
                                   np.asarray(corner_row) - 0.5)

    def scaled(self, col_ratio: float, row_ratio: float) -> "GeoTransform":
        """Transform for a resampled grid covering the same world extent."""
        return GeoTransform(
            origin_x=self.origin_x,
            origin_y=self.origin_y,
            pixel_size_x=self.pixel_size_x * col_ratio,
            pixel_size_y=self.pixel_size_y * row_ratio,
            rot_x=self.rot_x * row_ratio,
            rot_y=self.rot_y * col_ratio,
        )

    def world_file_text(self) -> str:
        lines = (self.pixel_size_x, self.rot_y, self.rot_x,
                 self.pixel_size_y, self.origin_x, self.origin_y)
        return "".join(f"{value!r}\n" for value in lines)


def read_world_file(path) -> GeoTransform:
    path = Path(path)
    if not path.exists():
        raise WorldFileError(f"world file not found: {path}")
    raw_lines = path.read_text().splitlines()
    lines = [line.strip() for line in raw_lines if line.strip()]
    if len(lines) != 6:
        raise WorldFileError(f"world file must have 6 lines, found {len(lines)}: {path}")
    values = []
    for i, line in enumerate(lines, start=1):
        try:
            values.append(float(line))
        except ValueError:
            raise WorldFileError(f"world file line {i} is not a number: {line!r}") from None
    a, d, b, e, c, f = values
    try:
        return GeoTransform(origin_x=c, origin_y=f, pixel_size_x=a,
                            pixel_size_y=e, rot_x=b, rot_y=d)
    except ParameterError as exc:
        raise WorldFileError(f"invalid world file {path}: {exc}") from None


def write_world_file(path, transform: GeoTransform) -> None:
    Path(path).write_text(transform.world_file_text())


@dataclass(frozen=True)
class ImageGrid:
    """8-bit RGB raster with a ground transform."""

    pixels: np.ndarray  # (h, w, 3) uint8
    transform: GeoTransform

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise RasterFormatError("image grid needs (h, w, 3) uint8 samples")
        if p.shape[0] < 2 or p.shape[1] < 2:
            raise RasterFormatError(f"image too small: {p.shape[1]}x{p.shape[0]}, need at least 2x2")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def extent(self) -> tuple[float, float]:
        """World width and height in meters."""
        t = self.transform
        return (self.width * abs(t.pixel_size_x), self.height * abs(t.pixel_size_y))


@dataclass(frozen=True)
class LabGrid:
    """CIELAB raster: channels L in [0,100], a and b roughly [-128,127]."""

    values: np.ndarray  # (h, w, 3) float32
    transform: GeoTransform

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class LabelMap:
    """Integer region labels partitioning a grid."""

    labels: np.ndarray  # (h, w) int32
    transform: GeoTransform

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]


def load_image(image_path, worldfile_path) -> ImageGrid:
    """Read an 8-bit RGB PNG or binary PPM plus its ESRI world file."""
    image_path = Path(image_path)
    if not image_path.exists():
        raise RasterFormatError(f"image not found: {image_path}")
    transform = read_world_file(worldfile_path)
    with Image.open(image_path) as img:
        if img.format not in ("PNG", "PPM"):
            raise RasterFormatError(f"unsupported image format {img.format!r}, expected PNG or PPM")
        if img.mode != "RGB":
            raise RasterFormatError(
                f"unsupported sample layout {img.mode!r}: 8-bit RGB required")
        pixels = np.asarray(img, dtype=np.uint8)
    return ImageGrid(pixels=pixels, transform=transform)


# --- Color space -------------------------------------------------------------

_SRGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_WHITE_POINT = np.array([0.95047, 1.0, 1.08883])


def rgb_to_lab(grid: ImageGrid) -> LabGrid:
    """sRGB (D65) to CIELAB with the standard gamma expansion."""
    rgb = grid.pixels.astype(np.float64) / 255.0
    linear = np.where(rgb > 0.04045, ((rgb + 0.055) / 1.055) ** 2.4, rgb / 12.92)
    xyz = linear @ _SRGB_TO_XYZ.T
    ratio = xyz / _WHITE_POINT
    f = np.where(ratio > 0.008856, np.cbrt(ratio), 7.787 * ratio + 16.0 / 116.0)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    np.clip(lab[..., 0], 0.0, 100.0, out=lab[..., 0])
    np.clip(lab[..., 1:], -128.0, 127.0, out=lab[..., 1:])
    return LabGrid(values=lab.astype(np.float32), transform=grid.transform)


# --- Resampling --------------------------------------------------------------

def resize_plane(plane: np.ndarray, new_w: int, new_h: int, method: str = "box") -> np.ndarray:
    """Resample one float plane; method 'box' or 'bilinear'."""
    resample = Image.Resampling.BOX if method == "box" else Image.Resampling.BILINEAR
    img = Image.fromarray(np.ascontiguousarray(plane, dtype=np.float32), mode="F")
    return np.asarray(img.resize((new_w, new_h), resample), dtype=np.float32)


def _downscaled_dims(width: int, height: int, max_dim: int) -> tuple[int, int]:
    if width >= height:
        new_w = max_dim
        new_h = max(2, round(height * max_dim / width))
    else:
        new_h = max_dim
        new_w = max(2, round(width * max_dim / height))
    return new_w, new_h


def downscale(grid, max_dim: int = 1000):
    """Box-filter a grid so its larger dimension is at most max_dim.

    Returns (grid, 1.0) unchanged when already small enough. The transform
    is rescaled so the world extent is preserved exactly.

    Args:
        grid: ImageGrid or LabGrid.
        max_dim: target cap in pixels, >= 2.

    Returns:
        (resampled grid of the same type, linear reduction factor)
    """
    if max_dim < 2:
        raise ParameterError("max_dim must be at least 2")
    w, h = grid.width, grid.height
    largest = max(w, h)
    if largest <= max_dim:
        return grid, 1.0
    new_w, new_h = _downscaled_dims(w, h, max_dim)
    transform = grid.transform.scaled(w / new_w, h / new_h)
    factor = largest / max_dim
    if isinstance(grid, ImageGrid):
        img = Image.fromarray(grid.pixels, mode="RGB")
        pixels = np.asarray(img.resize((new_w, new_h), Image.Resampling.BOX), dtype=np.uint8)
        return ImageGrid(pixels=pixels, transform=transform), factor
    if isinstance(grid, LabGrid):
        planes = [resize_plane(grid.values[..., i], new_w, new_h) for i in range(3)]
        return LabGrid(values=np.stack(planes, axis=-1), transform=transform), factor
    raise ParameterError(f"cannot downscale {type(grid).__name__}")


# --- PNG export --------------------------------------------------------------

def save_gray16_png(values: np.ndarray, path) -> None:
    """Write values in [0, 1] as a 16-bit grayscale PNG."""
    scaled = np.round(np.clip(values, 0.0, 1.0) * 65535.0).astype(np.uint16)
    Image.fromarray(scaled).save(path)


def save_labels_png(labels: np.ndarray, path) -> None:
    """Write a label map as a 16-bit grayscale PNG."""
    if labels.max(initial=0) > 65535:
        raise ParameterError("too many labels for 16-bit export")
    Image.fromarray(labels.astype(np.uint16)).save(path)
