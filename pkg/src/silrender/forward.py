"""Anti-aliased silhouette rendering by F x F supersampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import ScreenMesh


@dataclass(frozen=True)
class RenderSettings:
    F: int = 4
    p0: float = 0.0
    p1: float = 1.0

    def __post_init__(self):
        if int(self.F) != self.F or self.F < 1:
            raise ValueError(f"supersampling factor F must be an integer >= 1, got {self.F}")
        if self.p0 == self.p1:
            raise ValueError("foreground and background intensities must differ")
        object.__setattr__(self, "F", int(self.F))


@dataclass(frozen=True)
class SilhouetteImage:
    data: np.ndarray
    p0: float = 0.0
    p1: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2 or min(d.shape) < 1:
            raise ValueError(f"image data must be a non-empty 2D array, got shape {d.shape}")
        object.__setattr__(self, "data", d)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def point_in_triangle(p, a, b, c) -> bool:
    """Closed inside test (boundary counts as inside), either winding."""
    return bool(_kernels.tri_contains(float(p[0]), float(p[1]), float(a[0]), float(a[1]),
                                      float(b[0]), float(b[1]), float(c[0]), float(c[1])))


def sample_positions(F: int) -> np.ndarray:
    """Subsample offsets inside a unit pixel, centers of the F x F subgrid."""
    return (np.arange(F) + 0.5) / F


def coverage_counts(screen: ScreenMesh, H: int, W: int, F: int, accelerate: bool = True) -> np.ndarray:
    """Covered subsample count per pixel (integers in ``0..F*F``)."""
    return _kernels.coverage_counts(screen.vertices, screen.faces, int(H), int(W), int(F), bool(accelerate))


def rasterize(screen: ScreenMesh, H: int, W: int, settings: RenderSettings = RenderSettings(),
              accelerate: bool = True) -> SilhouetteImage:
    """Render the union of all faces; each pixel is the mean of F*F point samples.

    A sample scores ``p1`` when it lies inside (or on the border of) any
    non-degenerate face, either winding, and ``p0`` otherwise.
    """
    counts = coverage_counts(screen, H, W, settings.F, accelerate)
    frac = counts / float(settings.F * settings.F)
    data = settings.p0 + (settings.p1 - settings.p0) * frac
    return SilhouetteImage(data, settings.p0, settings.p1)


def coverage_accelerator(screen: ScreenMesh, H: int, W: int, tile: int = _kernels.TILE) -> dict[tuple[int, int], list[int]]:
    """Faces whose bounding box overlaps each ``tile x tile`` pixel block.

    Keys are ``(tile_row, tile_col)``; only non-empty tiles are listed.
    """
    offsets, items = _kernels.bin_faces(screen.vertices, screen.faces, int(H), int(W), int(tile))
    tx = (W + tile - 1) // tile
    out = {}
    for t in range(len(offsets) - 1):
        if offsets[t + 1] > offsets[t]:
            out[(t // tx, t % tx)] = items[offsets[t]:offsets[t + 1]].tolist()
    return out
