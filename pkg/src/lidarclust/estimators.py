"""Scikit-learn compatible wrappers around the four clustering algorithms.

Each estimator accepts an ``(N, 3)`` or ``(N, 4)`` array in ``fit`` /
``fit_predict`` and exposes per-point instance labels as ``labels_``
(0 is reserved for unassigned points, e.g. pixels lost outside the
range-image field of view).  Parameters mirror the functional API's
parameter dataclasses one-to-one so ``get_params`` round-trips through
the CLI config schema.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from .depth import DepthParams, depth_cluster
from .euclidean import EuclideanParams, euclidean_cluster
from .model import PointCloud
from .projection import ProjectionConfig, project, unproject
from .slr import SlrParams, slr_cluster
from .supervoxel import SupervoxelParams, supervoxel_cluster


def _as_cloud(X) -> PointCloud:
    X = check_array(X, ensure_min_features=3, dtype=np.float64)
    if X.shape[1] not in (3, 4):
        raise ValueError(f"expected (N, 3) or (N, 4) points, got {X.shape}")
    rem = X[:, 3] if X.shape[1] == 4 else None
    return PointCloud(X[:, :3], rem)


class EuclideanCluster(ClusterMixin, BaseEstimator):
    """Radius-graph transitive clustering on a voxel-subsampled cloud."""

    def __init__(self, d_th=0.5, voxel_edge=0.1, seed=0):
        self.d_th = d_th
        self.voxel_edge = voxel_edge
        self.seed = seed

    def fit(self, X, y=None):
        params = EuclideanParams(d_th=self.d_th, voxel_edge=self.voxel_edge, seed=self.seed)
        self.labels_ = euclidean_cluster(_as_cloud(X), params)
        return self


class SupervoxelCluster(ClusterMixin, BaseEstimator):
    """Seeded best-first supervoxel growth over the voxel adjacency graph."""

    def __init__(
        self,
        w_c=0.0,
        w_s=1.0,
        w_n=0.0,
        voxel_resolution=0.5,
        seed_resolution=8.0,
        refinement_iterations=2,
        normal_k=10,
        min_seed_voxels=3,
    ):
        self.w_c = w_c
        self.w_s = w_s
        self.w_n = w_n
        self.voxel_resolution = voxel_resolution
        self.seed_resolution = seed_resolution
        self.refinement_iterations = refinement_iterations
        self.normal_k = normal_k
        self.min_seed_voxels = min_seed_voxels

    def _params(self) -> SupervoxelParams:
        return SupervoxelParams(
            w_c=self.w_c,
            w_s=self.w_s,
            w_n=self.w_n,
            voxel_resolution=self.voxel_resolution,
            seed_resolution=self.seed_resolution,
            refinement_iterations=self.refinement_iterations,
            normal_k=self.normal_k,
            min_seed_voxels=self.min_seed_voxels,
        )

    def fit(self, X, y=None):
        self.labels_ = supervoxel_cluster(_as_cloud(X), self._params())
        return self


class _RangeImageCluster(ClusterMixin, BaseEstimator):
    """Shared projection plumbing for the two range-image algorithms."""

    def __init__(self, rows=64, cols=2048, fov_up_deg=3.0, fov_down_deg=-25.0):
        self.rows = rows
        self.cols = cols
        self.fov_up_deg = fov_up_deg
        self.fov_down_deg = fov_down_deg

    def _projection(self) -> ProjectionConfig:
        return ProjectionConfig(
            rows=self.rows, cols=self.cols, fov_up_deg=self.fov_up_deg, fov_down_deg=self.fov_down_deg
        )

    def _cluster_grid(self, image):
        raise NotImplementedError

    def fit(self, X, y=None):
        cloud = _as_cloud(X)
        image = project(cloud, self._projection())
        grid = self._cluster_grid(image)
        self.labels_ = unproject(grid, image)
        return self


class DepthCluster(_RangeImageCluster):
    """Angle-predicate connected components on the range image."""

    def __init__(
        self, theta_deg=10.0, max_skip=5, rows=64, cols=2048, fov_up_deg=3.0, fov_down_deg=-25.0
    ):
        super().__init__(rows=rows, cols=cols, fov_up_deg=fov_up_deg, fov_down_deg=fov_down_deg)
        self.theta_deg = theta_deg
        self.max_skip = max_skip

    def _cluster_grid(self, image):
        return depth_cluster(image, DepthParams(theta_deg=self.theta_deg, max_skip=self.max_skip))


class ScanLineRunCluster(_RangeImageCluster):
    """Row-wise run formation with cross-row label-equivalence merging."""

    def __init__(
        self,
        th_run=0.5,
        th_merge=1.0,
        nn_window=8,
        max_skip=5,
        use_range_scalar=False,
        rows=64,
        cols=2048,
        fov_up_deg=3.0,
        fov_down_deg=-25.0,
    ):
        super().__init__(rows=rows, cols=cols, fov_up_deg=fov_up_deg, fov_down_deg=fov_down_deg)
        self.th_run = th_run
        self.th_merge = th_merge
        self.nn_window = nn_window
        self.max_skip = max_skip
        self.use_range_scalar = use_range_scalar

    def _cluster_grid(self, image):
        return slr_cluster(
            image,
            SlrParams(
                th_run=self.th_run,
                th_merge=self.th_merge,
                nn_window=self.nn_window,
                max_skip=self.max_skip,
                use_range_scalar=self.use_range_scalar,
            ),
        )


ALGORITHMS = {
    "euclidean": EuclideanCluster,
    "supervoxel": SupervoxelCluster,
    "depth": DepthCluster,
    "slr": ScanLineRunCluster,
}


def make_estimator(algorithm: str, **params):
    """Instantiate an estimator by its CLI name."""
    try:
        cls = ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}")
    return cls(**params)
