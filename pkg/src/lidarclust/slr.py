"""Scan-line Run clustering on the organized range image.

Each row is split into runs (consecutive occupied pixels whose point
pair is closer than ``th_run``); runs inherit labels from the row above
when a point finds a close-enough neighbor there, with a label
equivalence store resolving collisions (the smaller label always wins).
When the one-row search fails for an entire run, a brute-force make-up
search over the two rows above fires before a fresh label is handed out,
which bridges the hole-ridden rows of real scans.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.spatial import cKDTree

from .projection import RangeImage
from .unionfind import UnionFind


@dataclass(frozen=True)
class SlrParams:
    th_run: float = 0.5  # meters, in-row grouping threshold
    th_merge: float = 1.0  # meters, cross-row merge threshold
    nn_window: int = 8  # columns, half-width of the neighbor search
    max_skip: int = 5  # in-row holes bridged per gap
    use_range_scalar: bool = False  # compare |r1 - r2| instead of 3D distance

    def __post_init__(self):
        if self.th_run <= 0 or self.th_merge <= 0:
            raise ValueError("thresholds must be > 0")
        if self.nn_window < 1:
            raise ValueError("nn_window must be >= 1")


@dataclass
class SlrStats:
    nn_queries: int = 0
    makeup_searches: int = 0
    runs: int = 0


def _pair_dist(p: np.ndarray, q: np.ndarray, rp: float, rq: float, scalar: bool) -> float:
    if scalar:
        return abs(rp - rq)
    return float(np.linalg.norm(p - q))


def find_runs(
    points_row: np.ndarray,
    valid_row: np.ndarray,
    ranges_row: np.ndarray,
    params: SlrParams = SlrParams(),
) -> List[np.ndarray]:
    """Split one circular row into runs of mutually close consecutive points.

    Returns column-index arrays.  Gaps of up to ``max_skip`` holes are
    bridged by testing the actual point pair across the gap; the last and
    first columns are adjacent (360 degree sweep).
    """
    occ = np.flatnonzero(valid_row)
    if occ.size == 0:
        return []
    cols = valid_row.shape[0]
    if occ.size == 1:
        return [occ]

    prev, cur = occ[:-1], occ[1:]
    if params.use_range_scalar:
        d = np.abs(ranges_row[cur] - ranges_row[prev])
    else:
        d = np.linalg.norm(points_row[cur] - points_row[prev], axis=1)
    close = (cur - prev <= params.max_skip) & (d < params.th_run)
    runs = np.split(occ, np.flatnonzero(~close) + 1)

    # circular closure: last run wraps onto the first
    if len(runs) > 1:
        first, last = occ[0], occ[-1]
        gap = cols - (last - first)
        if gap <= params.max_skip and (
            _pair_dist(
                points_row[first], points_row[last], ranges_row[first], ranges_row[last],
                params.use_range_scalar,
            )
            < params.th_run
        ):
            runs[0] = np.concatenate([runs.pop(), runs[0]])

    return runs


def _row_nearest_above(
    points: np.ndarray,
    ranges: np.ndarray,
    valid: np.ndarray,
    r: int,
    params: SlrParams,
):
    """Windowed nearest neighbor in row r-1 for every column of row r.

    Returns (nn_col, nn_dist) arrays over all columns; nn_col is -1 where
    no occupied pixel sits inside the window.
    """
    cols = valid.shape[1]
    best_d = np.full(cols, np.inf)
    best_c = np.full(cols, -1, dtype=np.int64)
    above_valid = valid[r - 1]
    base = np.arange(cols)
    for shift in range(-params.nn_window, params.nn_window + 1):
        cand_cols = (base + shift) % cols
        ok = above_valid[cand_cols]
        if params.use_range_scalar:
            d = np.abs(ranges[r] - ranges[r - 1, cand_cols])
        else:
            diff = points[r] - points[r - 1, cand_cols]
            d = np.einsum("ij,ij->i", diff, diff)
        d = np.where(ok, d, np.inf)
        better = d < best_d
        best_d[better] = d[better]
        best_c[better] = cand_cols[better]
    if not params.use_range_scalar:
        best_d = np.sqrt(best_d)
    return best_c, best_d


def slr_cluster(
    image: RangeImage, params: SlrParams = SlrParams(), stats: SlrStats | None = None
) -> np.ndarray:
    """Label the image row by row; returns a (rows, cols) grid, 0 on holes."""
    valid = image.valid
    rows, cols = valid.shape
    points = image.points
    ranges = image.ranges
    labels = np.zeros((rows, cols), dtype=np.int64)

    uf = UnionFind(1)  # index 0 is the hole label
    n_queries = 0
    n_makeup = 0
    n_runs = 0

    for r in range(rows):
        runs = find_runs(points[r], valid[r], ranges[r], params)
        if not runs:
            continue
        n_runs += len(runs)

        if r > 0:
            nn_col, nn_dist = _row_nearest_above(points, ranges, valid, r, params)

        for run in runs:
            candidates: List[int] = []
            if r > 0:
                n_queries += run.size
                hit = nn_dist[run] < params.th_merge
                raw = np.unique(labels[r - 1, nn_col[run[hit]]])
                candidates = [uf.find(int(v)) for v in raw]

            if not candidates and r > 0:
                # make-up search: brute force over the two rows above
                n_makeup += 1
                above_r = [rr for rr in (r - 1, r - 2) if rr >= 0]
                acols = [(rr, np.flatnonzero(valid[rr])) for rr in above_r]
                acols = [(rr, cc) for rr, cc in acols if cc.size]
                if acols:
                    albl = np.concatenate([labels[rr, cc] for rr, cc in acols])
                    n_queries += run.size
                    if params.use_range_scalar:
                        args = np.concatenate([ranges[rr, cc] for rr, cc in acols])
                        order = np.argsort(args)
                        srt = args[order]
                        lo = np.searchsorted(srt, ranges[r, run] - params.th_merge, "right")
                        hi = np.searchsorted(srt, ranges[r, run] + params.th_merge, "left")
                        close_idx = np.concatenate([order[a:b] for a, b in zip(lo, hi)])
                    else:
                        apts = np.concatenate([points[rr, cc] for rr, cc in acols])
                        tree = cKDTree(apts)
                        hits = tree.query_ball_point(points[r, run], params.th_merge)
                        flat = [j for h in hits for j in h]
                        close_idx = np.array(flat, dtype=np.int64)
                        if close_idx.size:
                            # ball query is closed; the merge test is strict
                            rep = np.repeat(points[r, run], [len(h) for h in hits], axis=0)
                            d = np.linalg.norm(apts[close_idx] - rep, axis=1)
                            close_idx = close_idx[d < params.th_merge]
                    for v in np.unique(albl[close_idx]):
                        candidates.append(uf.find(int(v)))

            candidates = [c for c in candidates if c > 0]
            if candidates:
                run_label = min(candidates)
                for c in candidates:
                    run_label = uf.union(run_label, c)
            else:
                run_label = uf.add()
            labels[r, run] = run_label

    # resolve every pixel to its equivalence-class root
    lut = np.array([uf.find(v) for v in range(len(uf.parent))], dtype=np.int64)
    labels[valid] = lut[labels[valid]]

    if stats is not None:
        stats.nn_queries = n_queries
        stats.makeup_searches = n_makeup
        stats.runs = n_runs
    return labels
