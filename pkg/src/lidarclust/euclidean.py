"""Radius-based transitive clustering in 3D Euclidean space.

Two points belong to the same instance iff they are connected in the
graph whose edges join pairs closer than ``d_th``.  The full cloud is
first voxel-subsampled (one seeded-random representative per 10 cm voxel
by default) and the subsample's labels are propagated back, which keeps
the neighbor search cheap on 64-beam frames.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .model import PointCloud, propagate_labels, voxel_downsample
from .unionfind import UnionFind


@dataclass(frozen=True)
class EuclideanParams:
    d_th: float = 0.5  # meters, radius threshold
    voxel_edge: float = 0.1  # meters, subsampling voxel size
    seed: int = 0

    def __post_init__(self):
        if self.d_th <= 0:
            raise ValueError(f"d_th must be > 0, got {self.d_th}")
        if self.voxel_edge <= 0:
            raise ValueError(f"voxel_edge must be > 0, got {self.voxel_edge}")


def radius_components(xyz: np.ndarray, d_th: float) -> np.ndarray:
    """Connected components of the radius graph, labels starting at 1.

    Uses a uniform hash grid with cell size ``d_th``: any pair closer than
    ``d_th`` sits in the same or adjacent cells, so scanning the 27 cell
    neighborhood finds every edge.
    """
    xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
    n = xyz.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)

    cells: Dict[Tuple[int, int, int], np.ndarray] = {}
    keys = np.floor(xyz / d_th).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    counts = np.bincount(inverse, minlength=uniq.shape[0])
    bounds = np.concatenate([[0], np.cumsum(counts)])
    for v in range(uniq.shape[0]):
        cells[tuple(uniq[v])] = order[bounds[v] : bounds[v + 1]]

    uf = UnionFind(n)
    d2 = d_th * d_th
    offsets = [(dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)]
    for key, idx in cells.items():
        pts = xyz[idx]
        for off in offsets:
            nb = cells.get((key[0] + off[0], key[1] + off[1], key[2] + off[2]))
            if nb is None:
                continue
            # each unordered cell pair is visited twice; the union is idempotent
            dist2 = ((pts[:, None, :] - xyz[nb][None, :, :]) ** 2).sum(-1)
            for a, b in zip(*np.nonzero(dist2 < d2)):
                uf.union(int(idx[a]), int(nb[b]))

    roots = np.array([uf.find(i) for i in range(n)])
    # relabel components 1..K in order of first appearance
    _, first = np.unique(roots, return_index=True)
    remap = {roots[i]: rank + 1 for rank, i in enumerate(np.sort(first))}
    return np.array([remap[r] for r in roots], dtype=np.int64)


def euclidean_cluster(cloud: PointCloud, params: EuclideanParams = EuclideanParams()) -> np.ndarray:
    """Cluster a cloud; returns per-point instance labels starting at 1."""
    if len(cloud) == 0:
        return np.empty(0, dtype=np.int64)
    sample = voxel_downsample(cloud, params.voxel_edge, params.seed)
    labels = radius_components(sample.cloud.xyz, params.d_th)
    return propagate_labels(labels, sample.voxel_of_point)
