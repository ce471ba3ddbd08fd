"""Frame pipeline: semantic mask -> per-class clustering -> fused labels.

Thing classes are clustered independently by default, so an instance can
never span two classes and the semantic channel of the output is
byte-identical to the input predictions.  A cross-class mode (all thing
points jointly) plus an optional per-cluster majority vote exist for
ablation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .depth import DepthParams, depth_cluster
from .euclidean import EuclideanParams, euclidean_cluster
from .metrics import ClassConfig, PanopticFrame
from .model import PointCloud
from .projection import ProjectionConfig, RangeImage, project, unproject
from .slr import SlrParams, slr_cluster
from .supervoxel import SupervoxelParams, supervoxel_cluster

PARAM_TYPES = {
    "euclidean": EuclideanParams,
    "supervoxel": SupervoxelParams,
    "depth": DepthParams,
    "slr": SlrParams,
}

RANGE_IMAGE_ALGORITHMS = {"depth", "slr"}


def make_params(algorithm: str, overrides: Optional[Dict] = None):
    """Build the algorithm's parameter set from config-file style keys."""
    try:
        cls = PARAM_TYPES[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(PARAM_TYPES)}")
    overrides = dict(overrides or {})
    known = set(cls.__dataclass_fields__)
    bad = set(overrides) - known
    if bad:
        raise ValueError(f"unknown {algorithm} parameter(s): {sorted(bad)}")
    return cls(**overrides)


@dataclass
class FrameResult:
    frame: PanopticFrame
    cluster_ms: float
    projection_ms: float = 0.0


def _mask_image(image: RangeImage, keep_points: np.ndarray) -> RangeImage:
    """Copy of the image with pixels of unwanted points turned into holes."""
    occ = image.point_index >= 0
    keep_pix = np.zeros_like(occ)
    keep_pix[occ] = keep_points[image.point_index[occ]]
    return RangeImage(
        np.where(keep_pix, image.ranges, 0.0),
        np.where(keep_pix, image.point_index, -1),
        image.config,
        cloud=image.cloud,
        overflow=[o for o in image.overflow if keep_points[o[0]]],
    )


def _cluster_mask(
    cloud: PointCloud,
    mask: np.ndarray,
    algorithm: str,
    params,
    image: Optional[RangeImage],
) -> tuple[np.ndarray, float]:
    """Instance labels (0 outside the mask) and the clustering-only time."""
    labels = np.zeros(len(cloud), dtype=np.int64)
    if not mask.any():
        return labels, 0.0

    if algorithm in RANGE_IMAGE_ALGORITHMS:
        sub = _mask_image(image, mask)
        t0 = time.perf_counter()
        grid = depth_cluster(sub, params) if algorithm == "depth" else slr_cluster(sub, params)
        ms = (time.perf_counter() - t0) * 1e3
        labels = unproject(grid, sub)
        labels[~mask] = 0
    else:
        sub = PointCloud(cloud.xyz[mask])
        t0 = time.perf_counter()
        if algorithm == "euclidean":
            sub_labels = euclidean_cluster(sub, params)
        else:
            sub_labels = supervoxel_cluster(sub, params)
        ms = (time.perf_counter() - t0) * 1e3
        labels[mask] = sub_labels
    return labels, ms


def cluster_frame(
    cloud: PointCloud,
    semantic_classes: np.ndarray,
    class_config: ClassConfig,
    algorithm: str,
    params=None,
    projection: ProjectionConfig = ProjectionConfig(),
    per_class: bool = True,
    majority_vote: bool = False,
) -> FrameResult:
    """Cluster one frame's thing points on top of its semantic prediction."""
    if params is None:
        params = make_params(algorithm)
    semantic_classes = np.asarray(semantic_classes, dtype=np.int64)
    if semantic_classes.shape[0] != len(cloud):
        raise ValueError(
            f"semantics cover {semantic_classes.shape[0]} points, cloud has {len(cloud)}"
        )

    image = None
    proj_ms = 0.0
    if algorithm in RANGE_IMAGE_ALGORITHMS:
        t0 = time.perf_counter()
        image = project(cloud, projection)
        proj_ms = (time.perf_counter() - t0) * 1e3

    thing_mask = np.isin(semantic_classes, list(class_config.thing_classes))
    instances = np.zeros(len(cloud), dtype=np.int64)
    cluster_ms = 0.0

    if per_class:
        masks = [
            (semantic_classes == cid) for cid in sorted(class_config.thing_classes)
        ]
    else:
        masks = [thing_mask]

    offset = 0
    for mask in masks:
        labels, ms = _cluster_mask(cloud, mask, algorithm, params, image)
        cluster_ms += ms
        assigned = labels > 0
        if assigned.any():
            instances[assigned] = labels[assigned] + offset
            offset = int(instances.max())

    classes = semantic_classes.copy()
    if majority_vote:
        for inst in np.unique(instances[instances > 0]):
            members = instances == inst
            vals, counts = np.unique(classes[members], return_counts=True)
            classes[members] = vals[np.argmax(counts)]

    return FrameResult(PanopticFrame(classes, instances), cluster_ms, proj_ms)


@dataclass
class TimingReport:
    per_frame_ms: List[float] = field(default_factory=list)
    point_counts: List[int] = field(default_factory=list)
    projection_ms: List[float] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_frame_ms)) if self.per_frame_ms else 0.0

    @property
    def median(self) -> float:
        return float(np.median(self.per_frame_ms)) if self.per_frame_ms else 0.0

    @property
    def p95(self) -> float:
        return float(np.percentile(self.per_frame_ms, 95)) if self.per_frame_ms else 0.0

    def summary(self) -> str:
        return (
            f"frames {len(self.per_frame_ms)}  "
            f"cluster mean {self.mean:.2f} ms  median {self.median:.2f} ms  "
            f"p95 {self.p95:.2f} ms  "
            f"projection mean {float(np.mean(self.projection_ms)) if self.projection_ms else 0.0:.2f} ms"
        )
