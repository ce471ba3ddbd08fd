"""Bit-exact readers and writers for the dataset's binary formats.

Scans are little-endian float32 (x, y, z, remission) quadruples; labels
are little-endian uint32 words with the semantic class in the lower 16
bits and the instance id in the upper 16.  Semantic predictions from an
external network arrive in the same label format with zero instance
bits.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np

from .metrics import ClassConfig, PanopticFrame
from .model import PointCloud

DEFAULT_CLASS_CONFIG = Path(__file__).parent / "data" / "semantic_classes.txt"


class FormatError(ValueError):
    pass


def encode_label(classes: np.ndarray, instances: np.ndarray) -> np.ndarray:
    """Pack (class, instance) pairs into 32-bit label words."""
    c = np.asarray(classes, dtype=np.uint32)
    i = np.asarray(instances, dtype=np.uint32)
    return (c & 0xFFFF) | ((i & 0xFFFF) << 16)


def decode_label(words: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Split 32-bit label words into (class, instance) pairs."""
    words = np.asarray(words, dtype=np.uint32)
    return (words & 0xFFFF).astype(np.int64), (words >> 16).astype(np.int64)


def read_scan(path) -> PointCloud:
    """Read a binary scan file into a point cloud, order preserved."""
    raw = Path(path).read_bytes()
    if len(raw) % 16 != 0:
        raise FormatError(f"{path}: {len(raw)} bytes is not a multiple of 16")
    data = np.frombuffer(raw, dtype="<f4").reshape(-1, 4)
    return PointCloud(data[:, :3].astype(np.float64), data[:, 3].astype(np.float64))


def write_scan(path, cloud: PointCloud) -> None:
    data = np.empty((len(cloud), 4), dtype="<f4")
    data[:, :3] = cloud.xyz
    data[:, 3] = cloud.remission if cloud.remission is not None else 0.0
    Path(path).write_bytes(data.tobytes())


def read_labels(path, n: int) -> PanopticFrame:
    """Read a label file paired with a scan of ``n`` points."""
    raw = Path(path).read_bytes()
    if len(raw) % 4 != 0:
        raise FormatError(f"{path}: {len(raw)} bytes is not a multiple of 4")
    words = np.frombuffer(raw, dtype="<u4")
    if words.shape[0] != n:
        raise FormatError(f"{path}: {words.shape[0]} labels for {n} points")
    classes, instances = decode_label(words)
    return PanopticFrame(classes, instances)


def write_labels(path, frame: PanopticFrame, stuff_classes=None) -> None:
    """Write a label file; stuff points are forced to instance id 0."""
    instances = frame.instances
    if stuff_classes:
        instances = np.where(np.isin(frame.classes, list(stuff_classes)), 0, instances)
    words = encode_label(frame.classes, instances).astype("<u4")
    Path(path).write_bytes(words.tobytes())


class ConfigError(ValueError):
    pass


def load_class_config(path=None) -> ClassConfig:
    """Parse a "name id kind" per line class list (kind: thing|stuff|ignore)."""
    path = Path(path) if path is not None else DEFAULT_CLASS_CONFIG
    things, stuff, ignore = set(), set(), set()
    names = {}
    seen = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ConfigError(f"{path}:{lineno}: expected 'name id kind', got {line!r}")
        name, cid_s, kind = parts
        try:
            cid = int(cid_s)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad class id {cid_s!r}")
        if cid in seen:
            raise ConfigError(f"{path}:{lineno}: class {cid} already declared as {seen[cid]}")
        seen[cid] = kind
        names[cid] = name
        if kind == "thing":
            things.add(cid)
        elif kind == "stuff":
            stuff.add(cid)
        elif kind == "ignore":
            ignore.add(cid)
        else:
            raise ConfigError(f"{path}:{lineno}: unknown kind {kind!r}")
    if not (things or stuff):
        raise ConfigError(f"{path}: no classes declared")
    return ClassConfig(frozenset(things), frozenset(stuff), frozenset(ignore), names)


@dataclass(frozen=True)
class SequenceLayout:
    """sequences/<seq>/{velodyne,labels,predictions}/NNNNNN.{bin,label}"""

    root: Path
    sequence: str

    def __post_init__(self):
        object.__setattr__(self, "root", Path(self.root))

    @property
    def seq_dir(self) -> Path:
        return self.root / "sequences" / self.sequence

    def scan_path(self, frame: int) -> Path:
        return self.seq_dir / "velodyne" / f"{frame:06d}.bin"

    def label_path(self, frame: int) -> Path:
        return self.seq_dir / "labels" / f"{frame:06d}.label"

    def prediction_path(self, frame: int) -> Path:
        return self.seq_dir / "predictions" / f"{frame:06d}.label"

    def frames(self):
        vdir = self.seq_dir / "velodyne"
        if not vdir.is_dir():
            return []
        return sorted(int(p.stem) for p in vdir.glob("*.bin"))
