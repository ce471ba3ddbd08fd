"""Spherical projection of a scan onto an organized range image.

The image is the substrate for the two connected-component style
algorithms.  Each pixel stores the range and the index of the point that
occupies it; pixels nobody projected to are holes.  When two points fall
on the same pixel the nearer one wins and the farther one goes to an
overflow list so it can still be labeled at unprojection time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .model import PointCloud


@dataclass(frozen=True)
class ProjectionConfig:
    """Image geometry: beam rows, azimuth columns, elevation coverage."""

    rows: int = 64
    cols: int = 2048
    fov_up_deg: float = 3.0
    fov_down_deg: float = -25.0

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0:
            raise ValueError("rows and cols must be positive")
        if self.fov_up_deg <= self.fov_down_deg:
            raise ValueError("fov_up must exceed fov_down")

    @property
    def alpha_h(self) -> float:
        """Horizontal angular step between adjacent columns, radians."""
        return 2.0 * math.pi / self.cols

    @property
    def alpha_v(self) -> float:
        """Vertical angular step between adjacent rows, radians."""
        return math.radians(self.fov_up_deg - self.fov_down_deg) / max(self.rows - 1, 1)


def point_row_col(xyz: np.ndarray, config: ProjectionConfig):
    """Row/col placement of each point, vectorized.

    Returns ``(row, col, in_fov)``; rows count down from the top beam
    (fov_up) and columns wrap the full 360 degrees starting behind the
    sensor (azimuth pi at column 0).
    """
    xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
    r = np.linalg.norm(xyz, axis=1)
    valid = r > 0
    elev = np.zeros(len(xyz))
    elev[valid] = np.degrees(np.arcsin(np.clip(xyz[valid, 2] / r[valid], -1.0, 1.0)))
    az = np.arctan2(xyz[:, 1], xyz[:, 0])

    span = config.fov_up_deg - config.fov_down_deg
    row_f = (config.fov_up_deg - elev) / span * (config.rows - 1)
    row = np.rint(row_f).astype(np.int64)
    col = np.floor((0.5 - az / (2.0 * math.pi)) * config.cols).astype(np.int64) % config.cols

    in_fov = valid & (row >= 0) & (row < config.rows)
    return row, col, in_fov


@dataclass
class RangeImage:
    """Organized rows x cols view of a scan.

    ``point_index`` holds -1 on holes.  ``points`` caches the 3D
    coordinates per pixel (NaN on holes) because the scan-line algorithm
    measures true 3D distances, not range differences.
    """

    ranges: np.ndarray  # (rows, cols) float, 0 on holes
    point_index: np.ndarray  # (rows, cols) int, -1 on holes
    config: ProjectionConfig
    cloud: Optional[PointCloud] = None
    overflow: List[Tuple[int, int, int]] = field(default_factory=list)  # (point, row, col)
    points: np.ndarray = None  # (rows, cols, 3)

    def __post_init__(self):
        if self.points is None:
            pts = np.full(self.ranges.shape + (3,), np.nan)
            if self.cloud is not None:
                occ = self.point_index >= 0
                pts[occ] = self.cloud.xyz[self.point_index[occ]]
            self.points = pts

    @property
    def rows(self) -> int:
        return self.ranges.shape[0]

    @property
    def cols(self) -> int:
        return self.ranges.shape[1]

    @property
    def valid(self) -> np.ndarray:
        return self.point_index >= 0

    @property
    def alpha_h(self) -> float:
        return self.config.alpha_h

    @property
    def alpha_v(self) -> float:
        return self.config.alpha_v


def project(cloud: PointCloud, config: ProjectionConfig) -> RangeImage:
    """Map every point to its pixel; nearer point wins a collision."""
    rows, cols = config.rows, config.cols
    ranges = np.zeros((rows, cols))
    point_index = np.full((rows, cols), -1, dtype=np.int64)
    overflow: List[Tuple[int, int, int]] = []

    if len(cloud):
        row, col, in_fov = point_row_col(cloud.xyz, config)
        r = cloud.ranges
        for i in np.flatnonzero(in_fov):
            rr, cc = row[i], col[i]
            cur = point_index[rr, cc]
            if cur < 0:
                point_index[rr, cc] = i
                ranges[rr, cc] = r[i]
            elif r[i] < ranges[rr, cc]:
                overflow.append((int(cur), int(rr), int(cc)))
                point_index[rr, cc] = i
                ranges[rr, cc] = r[i]
            else:
                overflow.append((int(i), int(rr), int(cc)))

    return RangeImage(ranges, point_index, config, cloud=cloud, overflow=overflow)


def unproject(label_grid: np.ndarray, image: RangeImage) -> np.ndarray:
    """Per-point labels from a per-pixel label grid.

    Overflow points take their pixel occupant's label; points that never
    projected stay 0.
    """
    label_grid = np.asarray(label_grid)
    if label_grid.shape != image.ranges.shape:
        raise ValueError(
            f"label grid shape {label_grid.shape} != image shape {image.ranges.shape}"
        )
    n = len(image.cloud) if image.cloud is not None else int(image.point_index.max()) + 1
    labels = np.zeros(n, dtype=np.int64)
    occ = image.point_index >= 0
    labels[image.point_index[occ]] = label_grid[occ]
    for point, rr, cc in image.overflow:
        labels[point] = label_grid[rr, cc]
    return labels


def image_from_grid(points: np.ndarray, config: ProjectionConfig) -> RangeImage:
    """Build an image straight from a (rows, cols, 3) grid of points.

    NaN rows mark holes.  Used by tests and the synthetic generator, where
    the pixel of each point is known by construction.
    """
    points = np.asarray(points, dtype=np.float64)
    rows, cols = points.shape[:2]
    if (rows, cols) != (config.rows, config.cols):
        raise ValueError("grid shape does not match config")
    valid = np.isfinite(points).all(axis=2)
    ranges = np.zeros((rows, cols))
    ranges[valid] = np.linalg.norm(points[valid], axis=1)
    valid &= ranges > 0
    ranges[~valid] = 0.0

    flat_xyz = points[valid]
    point_index = np.full((rows, cols), -1, dtype=np.int64)
    point_index[valid] = np.arange(flat_xyz.shape[0])
    cloud = PointCloud(flat_xyz)
    return RangeImage(ranges, point_index, config, cloud=cloud)


def pixel_directions(config: ProjectionConfig) -> np.ndarray:
    """Unit ray direction of every pixel center, shape (rows, cols, 3).

    Inverse of :func:`point_row_col`: a point placed along the returned
    direction for pixel (r, c) projects back onto pixel (r, c).
    """
    rows, cols = config.rows, config.cols
    span = config.fov_up_deg - config.fov_down_deg
    elev = np.radians(config.fov_up_deg - np.arange(rows) / max(rows - 1, 1) * span)
    az = (0.5 - (np.arange(cols) + 0.5) / cols) * 2.0 * math.pi
    ce, se = np.cos(elev)[:, None], np.sin(elev)[:, None]
    ca, sa = np.cos(az)[None, :], np.sin(az)[None, :]
    out = np.empty((rows, cols, 3))
    out[..., 0] = ce * ca
    out[..., 1] = ce * sa
    out[..., 2] = se * np.ones((1, cols))
    return out


def image_from_ranges(ranges: np.ndarray, config: ProjectionConfig) -> RangeImage:
    """Turn a (rows, cols) range grid into a consistent image + cloud.

    Each pixel's point is placed on that pixel's central ray, so the 3D
    geometry and the ranges agree.  Zero or NaN ranges are holes.
    """
    ranges = np.asarray(ranges, dtype=np.float64)
    dirs = pixel_directions(config)
    grid = np.where(
        (np.nan_to_num(ranges) > 0)[..., None], dirs * np.nan_to_num(ranges)[..., None], np.nan
    )
    return image_from_grid(grid, config)
