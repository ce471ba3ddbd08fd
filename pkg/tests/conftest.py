"""Shared test helpers: partition comparison and synthetic range images."""

import numpy as np

from lidarclust.projection import ProjectionConfig, image_from_ranges


def same_partition(a, b) -> bool:
    """True iff two labelings induce the same grouping (labels renamed freely)."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        return False
    pairs = set(zip(a.tolist(), b.tolist()))
    return len(pairs) == len(set(a.tolist())) == len(set(b.tolist()))


def partition_sets(labels):
    """Grouping induced by a labeling, as a frozenset of frozensets of indices."""
    labels = np.asarray(labels).ravel()
    return frozenset(
        frozenset(np.flatnonzero(labels == v).tolist()) for v in np.unique(labels)
    )


def random_dense_ranges(rows, cols, seed, base=(2.5, 5.0), objects=(0.8, 1.8)):
    """Every-pixel-occupied range grid with a wavy background and nearer
    rectangular objects.

    The default ranges are close enough that background pixels connect
    under all default thresholds while object boundaries split, so the
    resulting partitions are non-trivial even on small images.
    """
    rng = np.random.default_rng(seed)
    r = np.full((rows, cols), rng.uniform(*base))
    r += rng.uniform(0.05, 0.15) * np.sin(np.linspace(0, 4 * np.pi, cols))[None, :]
    r += rng.uniform(0.02, 0.06) * np.cos(np.linspace(0, 2 * np.pi, rows))[:, None]
    for _ in range(int(rng.integers(3, 8))):
        h = int(rng.integers(3, max(4, rows // 2)))
        w = int(rng.integers(4, max(5, cols // 3)))
        rr = int(rng.integers(0, rows - h))
        cc = int(rng.integers(0, cols - w))
        r[rr : rr + h, cc : cc + w] = rng.uniform(*objects)
    return r


def random_dense_image(rows, cols, seed, config=None, **range_kwargs):
    config = config or ProjectionConfig(rows=rows, cols=cols)
    return image_from_ranges(random_dense_ranges(rows, cols, seed, **range_kwargs), config)
