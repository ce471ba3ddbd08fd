"""Connected-component labeling on the range image with the angle predicate.

Two neighboring beams with ranges d1 >= d2 separated by angle alpha see
the angle

    beta = arctan(d2 sin(alpha) / (d1 - d2 cos(alpha)))

between the line joining the two points and the longer beam.  A large
beta (nearly equal ranges) means the two points lie on the same surface;
the component crosses the edge iff beta exceeds the threshold theta.

Holes are tolerated by linking each occupied pixel to the nearest
occupied pixel within ``max_skip`` steps in each direction, with alpha
scaled by the number of steps skipped.  Columns wrap around the full
360 degree sweep; rows do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .projection import RangeImage


@dataclass(frozen=True)
class DepthParams:
    theta_deg: float = 10.0
    max_skip: int = 5

    def __post_init__(self):
        if not 0 < self.theta_deg < 90:
            raise ValueError(f"theta must be in (0, 90) degrees, got {self.theta_deg}")
        if self.max_skip < 1:
            raise ValueError(f"max_skip must be >= 1, got {self.max_skip}")


@dataclass
class DepthStats:
    predicate_evaluations: int = 0
    components: int = 0


def beta(d1: float, d2: float, alpha: float) -> float:
    """Angle between the joining line and the longer beam, in radians.

    Requires d1 >= d2 > 0.  When d1 - d2 cos(alpha) <= 0 the two ranges
    are nearly equal and the angle lands on the obtuse branch (> pi/2),
    which correctly reads as "same object".
    """
    if d2 <= 0 or d1 < d2:
        raise ValueError(f"need d1 >= d2 > 0, got d1={d1}, d2={d2}")
    if not 0 < alpha < math.pi / 2:
        raise ValueError(f"alpha must be in (0, pi/2), got {alpha}")
    return math.atan2(d2 * math.sin(alpha), d1 - d2 * math.cos(alpha))


def _neighbor_links(valid: np.ndarray, max_skip: int, axis: int, wrap: bool):
    """Edges to the nearest occupied pixel within max_skip along one axis.

    Returns (src_flat, dst_flat, steps) for the forward direction only;
    the reverse direction is the same edge set because "nearest occupied
    across a gap of holes" is symmetric.
    """
    rows, cols = valid.shape
    flat = np.arange(rows * cols).reshape(rows, cols)
    srcs, dsts, steps = [], [], []
    unresolved = valid.copy()
    for s in range(1, max_skip + 1):
        if wrap:
            shifted_valid = np.roll(valid, -s, axis=axis)
            shifted_flat = np.roll(flat, -s, axis=axis)
        else:
            shifted_valid = np.zeros_like(valid)
            shifted_flat = np.zeros_like(flat)
            if axis == 0:
                if s < rows:
                    shifted_valid[:-s] = valid[s:]
                    shifted_flat[:-s] = flat[s:]
            else:
                if s < cols:
                    shifted_valid[:, :-s] = valid[:, s:]
                    shifted_flat[:, :-s] = flat[:, s:]
        hit = unresolved & shifted_valid
        if hit.any():
            srcs.append(flat[hit])
            dsts.append(shifted_flat[hit])
            steps.append(np.full(int(hit.sum()), s))
            unresolved &= ~hit
        if not unresolved.any():
            break
    if not srcs:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, empty
    return np.concatenate(srcs), np.concatenate(dsts), np.concatenate(steps)


def depth_cluster(
    image: RangeImage, params: DepthParams = DepthParams(), stats: DepthStats | None = None
) -> np.ndarray:
    """Label the image's occupied pixels; returns a (rows, cols) grid, 0 on holes."""
    valid = image.valid
    rows, cols = valid.shape
    labels = np.zeros((rows, cols), dtype=np.int64)
    if not valid.any():
        if stats is not None:
            stats.components = 0
        return labels

    r_flat = image.ranges.ravel()
    theta = math.radians(params.theta_deg)

    all_src, all_dst = [], []
    n_eval = 0
    for axis, wrap, alpha_step in (
        (1, True, image.alpha_h),  # horizontal, circular
        (0, False, image.alpha_v),  # vertical
    ):
        src, dst, steps = _neighbor_links(valid, params.max_skip, axis, wrap)
        if src.size == 0:
            continue
        d1 = np.maximum(r_flat[src], r_flat[dst])
        d2 = np.minimum(r_flat[src], r_flat[dst])
        alpha = steps * alpha_step
        b = np.arctan2(d2 * np.sin(alpha), d1 - d2 * np.cos(alpha))
        n_eval += src.size
        keep = b > theta
        all_src.append(src[keep])
        all_dst.append(dst[keep])

    n = rows * cols
    if all_src:
        src = np.concatenate(all_src)
        dst = np.concatenate(all_dst)
        graph = coo_matrix((np.ones(src.size, dtype=np.int8), (src, dst)), shape=(n, n))
    else:
        graph = coo_matrix((n, n), dtype=np.int8)
    n_comp, comp = connected_components(graph, directed=False)

    # relabel occupied components 1..K in raster-scan order of first pixel
    occ = valid.ravel()
    occ_comp = comp[occ]
    _, first_idx = np.unique(occ_comp, return_index=True)
    order = np.argsort(first_idx)
    remap = np.empty(n_comp, dtype=np.int64)
    remap[occ_comp[np.sort(first_idx)]] = np.arange(1, order.size + 1)
    labels.ravel()[occ] = remap[occ_comp]

    if stats is not None:
        stats.predicate_evaluations = int(n_eval)
        stats.components = int(order.size)
    return labels
