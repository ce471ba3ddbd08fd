"""Core domain types shared by every clustering algorithm.

A :class:`PointCloud` wraps an ``(N, 3)`` float array (plus optional
remission) and point index ``i`` stays a stable identifier for the whole
frame.  Instance labelings are plain ``(N,)`` integer arrays where ``0``
means "unassigned / not an instance".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class PointCloud:
    """An ordered frame of 3D points in the sensor frame (meters)."""

    xyz: np.ndarray  # (N, 3) float
    remission: Optional[np.ndarray] = None  # (N,) in [0, 1]

    def __post_init__(self):
        xyz = np.asarray(self.xyz, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "xyz", xyz)
        if self.remission is not None:
            rem = np.asarray(self.remission, dtype=np.float64).reshape(-1)
            if rem.shape[0] != xyz.shape[0]:
                raise ValueError(
                    f"remission length {rem.shape[0]} != point count {xyz.shape[0]}"
                )
            object.__setattr__(self, "remission", rem)

    def __len__(self) -> int:
        return self.xyz.shape[0]

    @property
    def ranges(self) -> np.ndarray:
        return np.linalg.norm(self.xyz, axis=1)


@dataclass(frozen=True)
class Violation:
    """One defective point found by :func:`validate_cloud`."""

    index: int
    reason: str


def validate_cloud(cloud: PointCloud) -> List[Violation]:
    """Return one violation per non-finite point; empty list means valid."""
    bad = ~np.isfinite(cloud.xyz).all(axis=1)
    out = [Violation(int(i), "non-finite coordinate") for i in np.flatnonzero(bad)]
    if cloud.remission is not None:
        bad_rem = ~np.isfinite(cloud.remission)
        out += [Violation(int(i), "non-finite remission") for i in np.flatnonzero(bad_rem)]
    return out


@dataclass(frozen=True)
class VoxelSample:
    """Result of :func:`voxel_downsample`.

    ``representative[j]`` is the original index of sample point ``j`` and
    ``voxel_of_point[i]`` maps every original point to its sample index, so
    label propagation is a plain fancy-index.  ``members_of`` keeps the full
    voxel partition for auditing.
    """

    cloud: PointCloud
    representative: np.ndarray  # (M,) original index per sample point
    voxel_of_point: np.ndarray  # (N,) sample index per original point
    members_of: Dict[Tuple[int, int, int], np.ndarray] = field(repr=False, default_factory=dict)


def voxel_keys(xyz: np.ndarray, edge: float) -> np.ndarray:
    """Integer grid cell of each point; grid anchored at the sensor origin."""
    return np.floor(np.asarray(xyz) / edge).astype(np.int64)


def voxel_downsample(cloud: PointCloud, edge: float, seed: int = 0) -> VoxelSample:
    """Keep one seeded-random representative point per occupied voxel.

    Every original index lands in exactly one voxel (partition property) and
    the choice of representative is bit-deterministic for a fixed seed.
    """
    if edge <= 0:
        raise ValueError(f"voxel edge must be > 0, got {edge}")
    n = len(cloud)
    if n == 0:
        return VoxelSample(cloud, np.empty(0, np.int64), np.empty(0, np.int64), {})

    keys = voxel_keys(cloud.xyz, edge)
    # unique returns voxels in lexicographic key order: stable across point order
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    rng = np.random.default_rng(seed)
    order = np.argsort(inverse, kind="stable")
    counts = np.bincount(inverse, minlength=uniq.shape[0])
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])

    reps = np.empty(uniq.shape[0], dtype=np.int64)
    members: Dict[Tuple[int, int, int], np.ndarray] = {}
    for v, (s, c) in enumerate(zip(starts, counts)):
        idx = order[s : s + c]
        reps[v] = idx[rng.integers(c)]
        members[tuple(uniq[v])] = idx

    rem = None if cloud.remission is None else cloud.remission[reps]
    sample = PointCloud(cloud.xyz[reps], rem)
    return VoxelSample(sample, reps, inverse, members)


def propagate_labels(sample_labels: np.ndarray, voxel_of_point: np.ndarray) -> np.ndarray:
    """Copy each voxel representative's label to all points of that voxel."""
    sample_labels = np.asarray(sample_labels)
    voxel_of_point = np.asarray(voxel_of_point)
    if voxel_of_point.size and voxel_of_point.max(initial=-1) >= sample_labels.shape[0]:
        raise ValueError(
            f"label count {sample_labels.shape[0]} does not cover "
            f"voxel index {int(voxel_of_point.max())}"
        )
    return sample_labels[voxel_of_point]


@dataclass(frozen=True)
class SemanticLabeling:
    """Per-point class ids plus the thing/stuff/ignore class split."""

    classes: np.ndarray  # (N,) int class ids
    thing_classes: frozenset
    stuff_classes: frozenset
    ignore_classes: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "classes", np.asarray(self.classes, dtype=np.int64))
        if self.thing_classes & self.stuff_classes:
            raise ValueError("thing and stuff class sets overlap")

    def __len__(self) -> int:
        return self.classes.shape[0]
