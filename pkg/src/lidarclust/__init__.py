"""Traditional LiDAR point-cloud clustering with a panoptic benchmark harness."""

from .depth import DepthParams, beta, depth_cluster
from .estimators import (
    ALGORITHMS,
    DepthCluster,
    EuclideanCluster,
    ScanLineRunCluster,
    SupervoxelCluster,
    make_estimator,
)
from .euclidean import EuclideanParams, euclidean_cluster
from .metrics import (
    ClassConfig,
    MetricsReport,
    PanopticEvaluator,
    PanopticFrame,
    miou,
    panoptic_quality,
)
from .model import PointCloud, propagate_labels, validate_cloud, voxel_downsample
from .pipeline import cluster_frame, make_params
from .projection import ProjectionConfig, RangeImage, project, unproject
from .slr import SlrParams, find_runs, slr_cluster
from .supervoxel import SupervoxelParams, estimate_normals, supervoxel_cluster, sv_distance
from .synth import Box, Cylinder, SceneSpec, generate, load_scene_spec

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "Box",
    "ClassConfig",
    "Cylinder",
    "DepthCluster",
    "DepthParams",
    "EuclideanCluster",
    "EuclideanParams",
    "MetricsReport",
    "PanopticEvaluator",
    "PanopticFrame",
    "PointCloud",
    "ProjectionConfig",
    "RangeImage",
    "ScanLineRunCluster",
    "SceneSpec",
    "SlrParams",
    "SupervoxelCluster",
    "SupervoxelParams",
    "beta",
    "cluster_frame",
    "depth_cluster",
    "estimate_normals",
    "euclidean_cluster",
    "find_runs",
    "generate",
    "load_scene_spec",
    "make_estimator",
    "make_params",
    "miou",
    "panoptic_quality",
    "project",
    "propagate_labels",
    "slr_cluster",
    "supervoxel_cluster",
    "sv_distance",
    "unproject",
    "validate_cloud",
    "voxel_downsample",
]
