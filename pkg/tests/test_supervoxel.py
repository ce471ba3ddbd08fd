import math

import numpy as np
import pytest
from conftest import partition_sets

from lidarclust.model import PointCloud
from lidarclust.supervoxel import (
    SupervoxelParams,
    estimate_normals,
    supervoxel_cluster,
    sv_distance,
)


def cluster_voxels_connected(xyz, labels, resolution):
    """BFS check: every cluster's occupied voxels form one 26-connected set."""
    keys = np.floor(np.asarray(xyz) / resolution).astype(np.int64)
    for v in np.unique(labels):
        cells = {tuple(k) for k in keys[labels == v]}
        start = next(iter(cells))
        seen = {start}
        stack = [start]
        while stack:
            x, y, z = stack.pop()
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for dz in (-1, 0, 1):
                        nb = (x + dx, y + dy, z + dz)
                        if nb in cells and nb not in seen:
                            seen.add(nb)
                            stack.append(nb)
        if seen != cells:
            return False
    return True


def blob(rng, center, n=200, spread=1.0):
    # bounded support so a blob stays inside its intended coarse cell
    return np.asarray(center) + rng.uniform(-spread, spread, size=(n, 3))


def test_params_validate():
    with pytest.raises(ValueError):
        SupervoxelParams(w_s=-1.0)
    with pytest.raises(ValueError):
        SupervoxelParams(voxel_resolution=0.0)
    with pytest.raises(ValueError):
        SupervoxelParams(voxel_resolution=2.0, seed_resolution=1.0)


def test_normals_planar_patch():
    rng = np.random.default_rng(0)
    xyz = np.zeros((50, 3))
    xyz[:, :2] = rng.uniform(-3, 3, size=(50, 2))
    normals, degenerate = estimate_normals(PointCloud(xyz))
    assert not degenerate.any()
    assert np.allclose(np.abs(normals[:, 2]), 1.0, atol=1e-9)
    assert np.allclose(np.linalg.norm(normals, axis=1), 1.0, atol=1e-6)


def test_normals_sphere_radial():
    rng = np.random.default_rng(1)
    v = rng.normal(size=(4000, 3))
    xyz = 5.0 * v / np.linalg.norm(v, axis=1, keepdims=True)
    normals, _ = estimate_normals(PointCloud(xyz), k=10)
    radial = xyz / 5.0
    # canonicalized toward the origin: anti-parallel to the radial direction
    cos = np.einsum("ni,ni->n", normals, radial)
    assert (cos <= -math.cos(math.radians(5.0))).all()


def test_normals_collinear_degenerate():
    xyz = np.array([[0.0, 0, 1], [1.0, 0, 1], [2.0, 0, 1]])
    normals, degenerate = estimate_normals(PointCloud(xyz), k=3)
    assert degenerate.all()
    assert np.allclose(np.abs(normals[:, 2]), 1.0)


def test_normals_reject_small_k():
    with pytest.raises(ValueError):
        estimate_normals(PointCloud([[0, 0, 0]]), k=2)


def test_sv_distance_zero_case():
    n = np.array([0.0, 0.0, 1.0])
    p = np.array([1.0, 2.0, 3.0])
    assert sv_distance(p, n, p, n, SupervoxelParams()) == 0.0


def test_sv_distance_spatial_normalization():
    # pure spatial weighting at distance R gives 1/sqrt(3)
    params = SupervoxelParams(w_c=0, w_s=1, w_n=0)
    n = np.array([0.0, 0.0, 1.0])
    p = np.array([params.seed_resolution, 0.0, 0.0])
    c = np.zeros(3)
    assert sv_distance(p, n, c, n, params) == pytest.approx(1 / math.sqrt(3), abs=1e-12)


def test_sv_distance_normal_term():
    # coincident position, orthogonal normals, w_n = 0.5 -> sqrt(0.5)
    params = SupervoxelParams(w_c=0, w_s=1, w_n=0.5)
    p = np.zeros(3)
    d = sv_distance(p, np.array([0.0, 0, 1]), p, np.array([1.0, 0, 0]), params)
    assert d == pytest.approx(math.sqrt(0.5), abs=1e-12)


def test_sv_distance_normal_sign_invariant():
    params = SupervoxelParams(w_c=0, w_s=1, w_n=1.0)
    p = np.zeros(3)
    q = np.array([1.0, 0, 0])
    n = np.array([0.0, 0, 1])
    assert sv_distance(p, n, q, n, params) == pytest.approx(
        sv_distance(p, -n, q, n, params), abs=1e-12
    )


def test_single_seed_cell_one_cluster():
    rng = np.random.default_rng(2)
    xyz = blob(rng, (4.0, 4.0, 4.0), n=300, spread=1.0)
    labels = supervoxel_cluster(PointCloud(xyz))
    assert (labels == 1).all()


def test_two_blobs_two_clusters():
    rng = np.random.default_rng(3)
    a = blob(rng, (4.0, 4.0, 4.0))
    b = blob(rng, (20.0, 4.0, 4.0))  # 2R away, different coarse cell
    labels = supervoxel_cluster(PointCloud(np.vstack([a, b])))
    assert len(np.unique(labels[:200])) == 1
    assert len(np.unique(labels[200:])) == 1
    assert labels[0] != labels[-1]


def test_empty_cloud():
    assert supervoxel_cluster(PointCloud(np.empty((0, 3)))).shape == (0,)


def test_full_partition_and_connectivity():
    rng = np.random.default_rng(4)
    for seed in range(2):
        rng = np.random.default_rng(seed)
        parts = [blob(rng, rng.uniform(-15, 15, size=3), n=150, spread=rng.uniform(0.5, 2))
                 for _ in range(5)]
        xyz = np.vstack(parts)
        params = SupervoxelParams()
        labels = supervoxel_cluster(PointCloud(xyz), params)
        assert labels.shape == (len(xyz),)
        assert (labels >= 1).all()  # full partition, nobody unassigned
        assert cluster_voxels_connected(xyz, labels, params.voxel_resolution)


@pytest.mark.parametrize("w_n", [0.0, 0.5])
def test_benchmark_weight_settings_partition(w_n):
    rng = np.random.default_rng(5)
    xyz = np.vstack([blob(rng, (5, 5, 0), 200), blob(rng, (-6, 3, 0), 200)])
    params = SupervoxelParams(w_c=0.0, w_s=1.0, w_n=w_n)
    labels = supervoxel_cluster(PointCloud(xyz), params)
    assert (labels >= 1).all()


def test_uniform_grid_boundaries_near_midplanes():
    # flat uniform grid, pure spatial weight: the split degenerates to an
    # even cut, so each point sits no farther from its own cluster's
    # centroid than from any other, up to one voxel of slack
    step = 0.5
    xs = np.arange(0.25, 32.0, step)
    xx, yy = np.meshgrid(xs, xs)
    xyz = np.column_stack([xx.ravel(), yy.ravel(), np.full(xx.size, 0.25)])
    params = SupervoxelParams(w_c=0, w_s=1, w_n=0, refinement_iterations=1)
    labels = supervoxel_cluster(PointCloud(xyz), params)
    assert (labels >= 1).all()
    ids = np.unique(labels)
    assert len(ids) == 16  # 4x4 occupied seed cells
    centroids = np.array([xyz[labels == v].mean(axis=0) for v in ids])
    d = np.linalg.norm(xyz[:, None, :] - centroids[None, :, :], axis=2)
    own = d[np.arange(len(xyz)), np.searchsorted(ids, labels)]
    best = d.min(axis=1)
    diag = params.voxel_resolution * math.sqrt(3)
    assert (own <= best + diag).all()


def test_deterministic():
    rng = np.random.default_rng(6)
    xyz = np.vstack([blob(rng, (3, 2, 0)), blob(rng, (-5, 4, 1))])
    a = supervoxel_cluster(PointCloud(xyz))
    b = supervoxel_cluster(PointCloud(xyz))
    assert np.array_equal(a, b)


def test_labels_cover_points_of_same_voxel_equally():
    rng = np.random.default_rng(7)
    xyz = blob(rng, (2, 2, 0), n=400, spread=3.0)
    params = SupervoxelParams()
    labels = supervoxel_cluster(PointCloud(xyz), params)
    keys = np.floor(xyz / params.voxel_resolution).astype(np.int64)
    _, inv = np.unique(keys, axis=0, return_inverse=True)
    for v in np.unique(inv):
        assert len(np.unique(labels[inv == v])) == 1
