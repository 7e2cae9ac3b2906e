"""Shared fixtures: tiny georeferenced rasters and world files."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from boundline.raster import GeoTransform, ImageGrid


DEFAULT_WORLDFILE = "0.05\n0\n0\n-0.05\n100.0\n200.0\n"


def make_transform(gsd: float = 0.05, origin=(100.0, 200.0)) -> GeoTransform:
    return GeoTransform(origin_x=origin[0], origin_y=origin[1],
                        pixel_size_x=gsd, pixel_size_y=-gsd)


def make_image_grid(pixels: np.ndarray, gsd: float = 0.05, origin=(100.0, 200.0)) -> ImageGrid:
    return ImageGrid(pixels=np.ascontiguousarray(pixels, dtype=np.uint8),
                     transform=make_transform(gsd, origin))


def write_png(path: Path, pixels: np.ndarray) -> Path:
    Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8), mode="RGB").save(path)
    return path


def write_worldfile(path: Path, text: str = DEFAULT_WORLDFILE) -> Path:
    path.write_text(text)
    return path


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20210521)


@pytest.fixture
def image_pair(tmp_path):
    """4x4 RGB PNG plus matching world file."""
    pixels = np.zeros((4, 4, 3), dtype=np.uint8)
    pixels[..., 0] = 200
    png = write_png(tmp_path / "tiny.png", pixels)
    wld = write_worldfile(tmp_path / "tiny.pgw")
    return png, wld
