"""Seeded, spatially-constrained supervoxel clustering.

Space is voxelized at a fine resolution and seeded on a coarse grid; each
seed grows over the 26-adjacency voxel graph by best-first expansion
ordered by the weighted distance

    D = sqrt(w_c * Dc^2 + w_s * Ds^2 / (3 R^2) + w_n * Dn^2)

with the color term identically zero for LiDAR.  A voxel is only
reachable through an already-claimed neighbor, so every supervoxel is
connected by construction.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .model import PointCloud

_OFFSETS_26 = np.array(
    [
        (dx, dy, dz)
        for dx in (-1, 0, 1)
        for dy in (-1, 0, 1)
        for dz in (-1, 0, 1)
        if (dx, dy, dz) != (0, 0, 0)
    ],
    dtype=np.int64,
)


@dataclass(frozen=True)
class SupervoxelParams:
    w_c: float = 0.0
    w_s: float = 1.0
    w_n: float = 0.0
    voxel_resolution: float = 0.5  # meters
    seed_resolution: float = 8.0  # meters, R
    refinement_iterations: int = 2
    normal_k: int = 10
    min_seed_voxels: int = 3  # cells with fewer occupied voxels grow no seed

    def __post_init__(self):
        if min(self.w_c, self.w_s, self.w_n) < 0:
            raise ValueError("weights must be >= 0")
        if self.voxel_resolution <= 0:
            raise ValueError("voxel_resolution must be > 0")
        if self.seed_resolution < self.voxel_resolution:
            raise ValueError("seed_resolution must be >= voxel_resolution")
        if self.refinement_iterations < 0:
            raise ValueError("refinement_iterations must be >= 0")


def estimate_normals(cloud: PointCloud, k: int = 10) -> Tuple[np.ndarray, np.ndarray]:
    """Unit surface normals by PCA over the k nearest neighbors.

    Returns ``(normals, degenerate)``.  The normal is the eigenvector of
    the neighborhood covariance with the smallest eigenvalue, flipped to
    face the sensor origin.  Rank-deficient neighborhoods (e.g. collinear
    points) fall back to the vertical axis and are flagged.
    """
    if len(cloud) == 0:
        return np.empty((0, 3)), np.empty(0, dtype=bool)
    if k < 3:
        raise ValueError("normal estimation needs k >= 3")
    xyz = cloud.xyz
    k = min(k, len(cloud))
    tree = cKDTree(xyz)
    _, nn = tree.query(xyz, k=k)
    nn = np.atleast_2d(nn)
    if nn.ndim == 1:
        nn = nn[:, None]

    nbrs = xyz[nn]  # (N, k, 3)
    centered = nbrs - nbrs.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / k
    evals, evecs = np.linalg.eigh(cov)

    normals = evecs[:, :, 0]
    scale = np.maximum(evals[:, 2], 1e-30)
    degenerate = evals[:, 1] / scale < 1e-8
    normals[degenerate] = (0.0, 0.0, 1.0)

    # canonicalize toward the origin side of the surface
    dots = np.einsum("ni,ni->n", normals, xyz)
    flip = dots > 1e-9
    normals[flip] *= -1.0
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return normals, degenerate


def sv_distance(
    p_xyz: np.ndarray,
    p_normal: np.ndarray,
    c_xyz: np.ndarray,
    c_normal: np.ndarray,
    params: SupervoxelParams,
) -> np.ndarray:
    """Weighted supervoxel distance; broadcastable over leading axes."""
    d_s2 = ((np.asarray(p_xyz) - np.asarray(c_xyz)) ** 2).sum(axis=-1)
    d_n = 1.0 - np.abs(np.einsum("...i,...i->...", np.asarray(p_normal), np.asarray(c_normal)))
    r2 = params.seed_resolution**2
    return np.sqrt(params.w_s * d_s2 / (3.0 * r2) + params.w_n * d_n**2)


class _VoxelGraph:
    """Occupied fine voxels of a cloud with centroids, normals, adjacency."""

    def __init__(self, cloud: PointCloud, params: SupervoxelParams):
        res = params.voxel_resolution
        keys = np.floor(cloud.xyz / res).astype(np.int64)
        self.keys, self.point_voxel = np.unique(keys, axis=0, return_inverse=True)
        m = self.keys.shape[0]
        self.centroid = np.zeros((m, 3))
        np.add.at(self.centroid, self.point_voxel, cloud.xyz)
        counts = np.bincount(self.point_voxel, minlength=m)
        self.centroid /= counts[:, None]

        normals, _ = estimate_normals(cloud, params.normal_k)
        self.normal = np.zeros((m, 3))
        np.add.at(self.normal, self.point_voxel, normals)
        norms = np.linalg.norm(self.normal, axis=1)
        zero = norms < 1e-12
        self.normal[zero] = (0.0, 0.0, 1.0)
        self.normal[~zero] /= norms[~zero, None]

        index = {tuple(k): v for v, k in enumerate(self.keys)}
        self.neighbors: List[np.ndarray] = []
        for v in range(m):
            k = self.keys[v]
            nb = [index[t] for off in _OFFSETS_26 if (t := tuple(k + off)) in index]
            self.neighbors.append(np.array(nb, dtype=np.int64))

    def __len__(self) -> int:
        return self.keys.shape[0]


def _expand(
    graph: _VoxelGraph,
    start_voxels: List[int],
    centroids: np.ndarray,
    centroid_normals: np.ndarray,
    params: SupervoxelParams,
) -> np.ndarray:
    """Best-first growth of every cluster at once; returns voxel owner ids (-1 unclaimed)."""
    owner = np.full(len(graph), -1, dtype=np.int64)
    tiebreak = itertools.count()
    heap = [(0.0, cid, next(tiebreak), v) for cid, v in enumerate(start_voxels)]
    heapq.heapify(heap)
    while heap:
        dist, cid, _, v = heapq.heappop(heap)
        if owner[v] >= 0:
            continue
        owner[v] = cid
        nb = graph.neighbors[v]
        nb = nb[owner[nb] < 0]
        if nb.size:
            dists = sv_distance(
                graph.centroid[nb], graph.normal[nb], centroids[cid], centroid_normals[cid], params
            )
            for d, w in zip(np.atleast_1d(dists), nb):
                heapq.heappush(heap, (float(d), cid, next(tiebreak), int(w)))
    return owner


def supervoxel_cluster(cloud: PointCloud, params: SupervoxelParams = SupervoxelParams()) -> np.ndarray:
    """Cluster a cloud into supervoxels; per-point labels starting at 1."""
    if len(cloud) == 0:
        return np.empty(0, dtype=np.int64)
    graph = _VoxelGraph(cloud, params)

    # seed one cluster per sufficiently occupied coarse cell, at the voxel
    # nearest the cell center
    cell = np.floor(graph.centroid / params.seed_resolution).astype(np.int64)
    cells: Dict[Tuple[int, int, int], List[int]] = {}
    for v, c in enumerate(cell):
        cells.setdefault(tuple(c), []).append(v)

    start_voxels: List[int] = []
    for c, members in sorted(cells.items()):
        if len(members) < params.min_seed_voxels:
            continue
        center = (np.array(c) + 0.5) * params.seed_resolution
        d2 = ((graph.centroid[members] - center) ** 2).sum(axis=1)
        start_voxels.append(members[int(np.argmin(d2))])

    if start_voxels:
        centroids = graph.centroid[start_voxels].copy()
        normals = graph.normal[start_voxels].copy()
        owner = _expand(graph, start_voxels, centroids, normals, params)
        for _ in range(params.refinement_iterations):
            for cid in range(len(start_voxels)):
                members = np.flatnonzero(owner == cid)
                if members.size == 0:
                    continue
                centroids[cid] = graph.centroid[members].mean(axis=0)
                mean_n = graph.normal[members].mean(axis=0)
                norm = np.linalg.norm(mean_n)
                if norm > 1e-12:
                    normals[cid] = mean_n / norm
                d2 = ((graph.centroid[members] - centroids[cid]) ** 2).sum(axis=1)
                start_voxels[cid] = int(members[np.argmin(d2)])
            owner = _expand(graph, start_voxels, centroids, normals, params)
    else:
        owner = np.full(len(graph), -1, dtype=np.int64)

    # voxels no seed could reach become their own connected clusters
    next_cid = len(start_voxels)
    for v in range(len(graph)):
        if owner[v] >= 0:
            continue
        stack = [v]
        owner[v] = next_cid
        while stack:
            u = stack.pop()
            for w in graph.neighbors[u]:
                if owner[w] < 0:
                    owner[w] = next_cid
                    stack.append(int(w))
        next_cid += 1

    return (owner[graph.point_voxel] + 1).astype(np.int64)
