"""Panoptic quality evaluation: PQ, PQ-dagger, RQ, SQ, mIoU.

Segments are (class, instance) groups for thing classes and one group
per class for stuff.  A ground-truth / predicted segment pair matches
when IoU > 0.5, which makes every match unique.  Per class,

    PQ = sum(IoU over TP) / (TP + FP/2 + FN/2) = SQ * RQ.

PQ-dagger swaps the stuff-class PQ for the plain semantic IoU.
Counts accumulate dataset-wide before division; accumulators merge
associatively so frames may be evaluated in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class ClassConfig:
    """Thing / stuff / ignore split plus display names."""

    thing_classes: frozenset
    stuff_classes: frozenset
    ignore_classes: frozenset = frozenset()
    names: Dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        overlap = (
            (self.thing_classes & self.stuff_classes)
            | (self.thing_classes & self.ignore_classes)
            | (self.stuff_classes & self.ignore_classes)
        )
        if overlap:
            raise ValueError(f"classes in more than one set: {sorted(overlap)}")

    @property
    def evaluated(self) -> List[int]:
        return sorted(self.thing_classes | self.stuff_classes)

    def name(self, cid: int) -> str:
        return self.names.get(cid, str(cid))


@dataclass(frozen=True)
class PanopticFrame:
    """Per-point semantic class and instance id; stuff carries instance 0."""

    classes: np.ndarray
    instances: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.classes, dtype=np.int64).reshape(-1)
        i = np.asarray(self.instances, dtype=np.int64).reshape(-1)
        if c.shape != i.shape:
            raise ValueError(f"class/instance length mismatch: {c.shape} vs {i.shape}")
        object.__setattr__(self, "classes", c)
        object.__setattr__(self, "instances", i)

    def __len__(self) -> int:
        return self.classes.shape[0]


class EvaluationError(ValueError):
    pass


@dataclass
class ClassMetrics:
    pq: float = 0.0
    sq: float = 0.0
    rq: float = 0.0
    iou: float = 0.0
    tp: int = 0
    fp: int = 0
    fn: int = 0


@dataclass
class MetricsReport:
    per_class: Dict[int, ClassMetrics]
    pq: float
    pq_dagger: float
    rq: float
    sq: float
    pq_things: float
    rq_things: float
    sq_things: float
    pq_stuff: float
    rq_stuff: float
    sq_stuff: float
    miou: float
    min_points: int

    def as_dict(self) -> Dict[str, float]:
        return {
            "PQ": self.pq,
            "PQ_dagger": self.pq_dagger,
            "RQ": self.rq,
            "SQ": self.sq,
            "PQ_th": self.pq_things,
            "RQ_th": self.rq_things,
            "SQ_th": self.sq_things,
            "PQ_st": self.pq_stuff,
            "RQ_st": self.rq_stuff,
            "SQ_st": self.sq_stuff,
            "mIoU": self.miou,
        }

    def key_values(self) -> str:
        """Machine-readable one-metric-per-line view, percentages."""
        lines = [f"min_points {self.min_points}"]
        for k, v in self.as_dict().items():
            lines.append(f"{k} {100.0 * v:.1f}")
        return "\n".join(lines) + "\n"

    def table(self, config: Optional[ClassConfig] = None) -> str:
        head = f"# instance matching with min_points={self.min_points}\n"
        head += f"{'class':>14} {'PQ':>6} {'RQ':>6} {'SQ':>6} {'IoU':>6} {'TP':>5} {'FP':>5} {'FN':>5}\n"
        rows = []
        for cid in sorted(self.per_class):
            m = self.per_class[cid]
            name = config.name(cid) if config else str(cid)
            rows.append(
                f"{name:>14} {100*m.pq:6.1f} {100*m.rq:6.1f} {100*m.sq:6.1f}"
                f" {100*m.iou:6.1f} {m.tp:5d} {m.fp:5d} {m.fn:5d}"
            )
        agg = "\n".join(
            f"{k:>14} {100*v:6.1f}" for k, v in self.as_dict().items()
        )
        return head + "\n".join(rows) + "\n" + agg + "\n"


def _segments(classes, instances, cls_set, is_thing) -> Dict[Tuple[int, int], np.ndarray]:
    """Map (class, instance-or-0) -> point indices."""
    out: Dict[Tuple[int, int], np.ndarray] = {}
    for cid in cls_set:
        mask = classes == cid
        if not mask.any():
            continue
        if is_thing:
            idx = np.flatnonzero(mask)
            for inst in np.unique(instances[idx]):
                out[(cid, int(inst))] = idx[instances[idx] == inst]
        else:
            out[(cid, 0)] = np.flatnonzero(mask)
    return out


class PanopticEvaluator:
    """Accumulates TP/FP/FN/IoU statistics over frames."""

    def __init__(self, config: ClassConfig, min_points: int = 50):
        self.config = config
        self.min_points = min_points
        ids = self.config.evaluated
        self._idx = {cid: i for i, cid in enumerate(ids)}
        k = len(ids)
        self.tp = np.zeros(k, dtype=np.int64)
        self.fp = np.zeros(k, dtype=np.int64)
        self.fn = np.zeros(k, dtype=np.int64)
        self.iou_sum = np.zeros(k)
        # confusion over evaluated classes for mIoU (rows gt, cols pred)
        self.confusion = np.zeros((k + 1, k + 1), dtype=np.int64)  # extra bin: other

    def add_frame(self, gt: PanopticFrame, pred: PanopticFrame, frame_id: str = "") -> None:
        if len(gt) != len(pred):
            raise EvaluationError(
                f"frame {frame_id!r}: gt has {len(gt)} points, pred has {len(pred)}"
            )
        known = self.config.thing_classes | self.config.stuff_classes | self.config.ignore_classes
        unknown = set(np.unique(gt.classes)) - known
        if unknown:
            raise EvaluationError(f"frame {frame_id!r}: unknown gt classes {sorted(unknown)}")

        self._add_semantic(gt.classes, pred.classes)

        # points of ignored classes, and of undersized gt instances, drop out
        # of both intersection and union
        keep = ~np.isin(gt.classes, list(self.config.ignore_classes))
        for cid in self.config.thing_classes:
            mask = gt.classes == cid
            if not mask.any():
                continue
            idx = np.flatnonzero(mask)
            inst, counts = np.unique(gt.instances[idx], return_counts=True)
            small = inst[counts < self.min_points]
            if small.size:
                keep[idx[np.isin(gt.instances[idx], small)]] = False

        gt_c, gt_i = gt.classes[keep], gt.instances[keep]
        pr_c, pr_i = pred.classes[keep], pred.instances[keep]

        things = self.config.thing_classes
        stuff = self.config.stuff_classes
        gt_segs = {**_segments(gt_c, gt_i, things, True), **_segments(gt_c, gt_i, stuff, False)}
        pr_segs = {**_segments(pr_c, pr_i, things, True), **_segments(pr_c, pr_i, stuff, False)}

        gt_keys = list(gt_segs)
        pr_keys = list(pr_segs)
        n = gt_c.shape[0]
        gt_id = np.full(n, -1, dtype=np.int64)
        pr_id = np.full(n, -1, dtype=np.int64)
        for j, key in enumerate(gt_keys):
            gt_id[gt_segs[key]] = j
        for j, key in enumerate(pr_keys):
            pr_id[pr_segs[key]] = j
        gt_sizes = {k_: v.size for k_, v in gt_segs.items()}
        pr_sizes = {k_: v.size for k_, v in pr_segs.items()}
        matched_gt, matched_pr = set(), set()

        both = (gt_id >= 0) & (pr_id >= 0)
        combined = gt_id[both] * max(len(pr_keys), 1) + pr_id[both]
        pair_ids, ninters = np.unique(combined, return_counts=True)
        for pid, ninter in zip(pair_ids, ninters):
            gkey = gt_keys[pid // max(len(pr_keys), 1)]
            pkey = pr_keys[pid % max(len(pr_keys), 1)]
            if gkey[0] != pkey[0]:
                continue
            union = gt_sizes[gkey] + pr_sizes[pkey] - int(ninter)
            iou = int(ninter) / union
            if iou > 0.5:
                ci = self._idx[pkey[0]]
                self.tp[ci] += 1
                self.iou_sum[ci] += iou
                matched_gt.add(gkey)
                matched_pr.add(pkey)

        for key in gt_segs:
            if key not in matched_gt:
                self.fn[self._idx[key[0]]] += 1
        for key in pr_segs:
            if key not in matched_pr:
                self.fp[self._idx[key[0]]] += 1

    def _add_semantic(self, gt_classes: np.ndarray, pred_classes: np.ndarray) -> None:
        k = len(self._idx)
        top = int(max(gt_classes.max(initial=0), pred_classes.max(initial=0))) + 1
        lut = np.full(top, k, dtype=np.int64)
        for cid, i in self._idx.items():
            if cid < top:
                lut[cid] = i
        gt_bin = lut[gt_classes]
        pr_bin = lut[pred_classes]
        ignore = np.isin(gt_classes, list(self.config.ignore_classes))
        np.add.at(self.confusion, (gt_bin[~ignore], pr_bin[~ignore]), 1)

    def merge(self, other: "PanopticEvaluator") -> "PanopticEvaluator":
        assert self.config.evaluated == other.config.evaluated
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        self.iou_sum += other.iou_sum
        self.confusion += other.confusion
        return self

    def semantic_iou(self) -> Dict[int, float]:
        """Per-class point-wise IoU of the semantic channel."""
        out = {}
        conf = self.confusion
        for cid, i in self._idx.items():
            inter = conf[i, i]
            union = conf[i, :].sum() + conf[:, i].sum() - inter
            out[cid] = inter / union if union else 0.0
        return out

    def report(self) -> MetricsReport:
        per_class: Dict[int, ClassMetrics] = {}
        sem_iou = self.semantic_iou()
        evaluated: List[int] = []
        for cid, i in self._idx.items():
            tp, fp, fn = int(self.tp[i]), int(self.fp[i]), int(self.fn[i])
            denom = tp + 0.5 * fp + 0.5 * fn
            m = ClassMetrics(tp=tp, fp=fp, fn=fn, iou=sem_iou[cid])
            if denom > 0:
                m.pq = self.iou_sum[i] / denom
                m.rq = tp / denom
                m.sq = self.iou_sum[i] / tp if tp else 0.0
            per_class[cid] = m
            gt_present = self.confusion[i, :].sum() > 0
            if denom > 0 or gt_present:
                evaluated.append(cid)

        def mean(ids: Iterable[int], attr: str) -> float:
            vals = [getattr(per_class[c], attr) for c in ids]
            return float(np.mean(vals)) if vals else 0.0

        things = [c for c in evaluated if c in self.config.thing_classes]
        stuff = [c for c in evaluated if c in self.config.stuff_classes]
        pq_dagger_vals = [per_class[c].pq for c in things] + [per_class[c].iou for c in stuff]

        return MetricsReport(
            per_class=per_class,
            pq=mean(evaluated, "pq"),
            pq_dagger=float(np.mean(pq_dagger_vals)) if pq_dagger_vals else 0.0,
            rq=mean(evaluated, "rq"),
            sq=mean(evaluated, "sq"),
            pq_things=mean(things, "pq"),
            rq_things=mean(things, "rq"),
            sq_things=mean(things, "sq"),
            pq_stuff=mean(stuff, "pq"),
            rq_stuff=mean(stuff, "rq"),
            sq_stuff=mean(stuff, "sq"),
            miou=float(np.mean([sem_iou[c] for c in evaluated])) if evaluated else 0.0,
            min_points=self.min_points,
        )


def panoptic_quality(
    gt_frames,
    pred_frames,
    config: ClassConfig,
    min_points: int = 50,
) -> MetricsReport:
    """Evaluate one or more frame pairs in one shot."""
    if isinstance(gt_frames, PanopticFrame):
        gt_frames, pred_frames = [gt_frames], [pred_frames]
    ev = PanopticEvaluator(config, min_points=min_points)
    for i, (g, p) in enumerate(zip(gt_frames, pred_frames)):
        ev.add_frame(g, p, frame_id=str(i))
    return ev.report()


def miou(
    gt_classes: np.ndarray, pred_classes: np.ndarray, config: ClassConfig
) -> Tuple[Dict[int, float], float]:
    """Per-class IoU of the semantic channel plus the class mean."""
    gt_classes = np.asarray(gt_classes).reshape(-1)
    pred_classes = np.asarray(pred_classes).reshape(-1)
    if gt_classes.shape != pred_classes.shape:
        raise EvaluationError(
            f"length mismatch: {gt_classes.shape} vs {pred_classes.shape}"
        )
    ev = PanopticEvaluator(config)
    ev._add_semantic(gt_classes, pred_classes)
    per_class = ev.semantic_iou()
    present = [
        c
        for c, i in ev._idx.items()
        if ev.confusion[i, :].sum() + ev.confusion[:, i].sum() > 0
    ]
    mean = float(np.mean([per_class[c] for c in present])) if present else 0.0
    return per_class, mean
