"""Dataset loading, on-disk layout, and synthetic dataset generation.

On-disk layout::

    <root>/features/<id>.npy        NPY v1.0 float array (or <id>.bin, see below)
    <root>/groundTruth/<id>.txt     one class name per line, exactly T lines
    <root>/mapping.txt              "<index> <name>" per line, indices 0..C-1
    <root>/splits/<name>.bundle     one "<id>" or "<id>.txt" per line

Feature files come in two formats: the NPY v1.0 array format used by the
public feature releases, and a dependency-free raw format with the ASCII
header ``SFTMN1 D T\\n`` followed by little-endian float32 values in
row-major (D, T) order.  NPY arrays may be stored either as T x D (the
public releases) or D x T; the caller states which via ``feature_layout``
and everything is normalized to D x T in memory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

RAW_MAGIC = "SFTMN1"
FEATURE_LAYOUTS = ("DxT", "TxD")


class DataError(ValueError):
    """Malformed or internally inconsistent dataset content."""


@dataclass(frozen=True)
class ClassMapping:
    """Dense class-index/name table. Indices are exactly 0..C-1."""

    entries: tuple[tuple[int, str], ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise DataError("class mapping is empty")
        indices = [i for i, _ in self.entries]
        names = [n for _, n in self.entries]
        if sorted(indices) != list(range(len(indices))):
            raise DataError(f"class indices must be exactly 0..{len(indices) - 1} "
                            f"with no gaps or duplicates, got {sorted(indices)}")
        if any(not n for n in names):
            raise DataError("class names must be non-empty")
        if len(set(names)) != len(names):
            raise DataError("class names must be unique")

    @classmethod
    def from_names(cls, names: Sequence[str]) -> "ClassMapping":
        return cls(tuple(enumerate(names)))

    @property
    def num_classes(self) -> int:
        return len(self.entries)

    @property
    def names(self) -> tuple[str, ...]:
        ordered = sorted(self.entries)
        return tuple(n for _, n in ordered)

    def index_of(self, name: str) -> int:
        for i, n in self.entries:
            if n == name:
                return i
        raise DataError(f"unknown class name {name!r}")

    def name_of(self, index: int) -> str:
        return self.names[index]


@dataclass(frozen=True)
class FeatureSequence:
    """Per-video feature array, shape (D, T). frame_rate_hz is metadata only."""

    values: np.ndarray
    frame_rate_hz: float = 1.0

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise DataError(f"features must be 2-D (D, T), got shape {self.values.shape}")
        d, t = self.values.shape
        if d < 1 or t < 1:
            raise DataError(f"features need D >= 1 and T >= 1, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise DataError("features contain non-finite values")
        if self.frame_rate_hz <= 0:
            raise DataError("frame_rate_hz must be positive")

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def num_frames(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LabelSequence:
    """Per-frame integer class labels with the class mapping attached."""

    labels: np.ndarray
    mapping: ClassMapping

    def __post_init__(self) -> None:
        if self.labels.ndim != 1 or len(self.labels) < 1:
            raise DataError("labels must be a non-empty 1-D array")
        if not np.issubdtype(self.labels.dtype, np.integer):
            raise DataError(f"labels must be integers, got dtype {self.labels.dtype}")
        c = self.mapping.num_classes
        if self.labels.min() < 0 or self.labels.max() >= c:
            raise DataError(f"labels must lie in [0, {c}), got range "
                            f"[{self.labels.min()}, {self.labels.max()}]")

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class VideoSample:
    id: str
    features: FeatureSequence
    labels: LabelSequence

    def __post_init__(self) -> None:
        if self.features.num_frames != len(self.labels):
            raise DataError(f"video {self.id!r}: feature frames ({self.features.num_frames}) "
                            f"!= label lines ({len(self.labels)})")


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a desk-scale dataset with recoverable structure.

    Labels are piecewise-constant with segment durations drawn around
    mean_segment_length; features are per-class prototypes (random unit
    vectors scaled by `separation`) plus Gaussian noise scaled by
    `noise_level`, so the frame class is recoverable from features up to
    the separation/noise ratio.
    """

    num_videos: int = 5
    num_classes: int = 4
    feature_dim: int = 16
    min_length: int = 80
    max_length: int = 160
    mean_segment_length: int = 20
    noise_level: float = 0.1
    separation: float = 2.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("num_videos", "num_classes", "feature_dim", "min_length",
                     "max_length", "mean_segment_length"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be positive")
        if self.min_length > self.max_length:
            raise DataError("min_length must not exceed max_length")
        if self.mean_segment_length > self.max_length:
            raise DataError("degenerate spec: mean_segment_length exceeds max_length")
        if self.noise_level < 0:
            raise DataError("noise_level must be >= 0")
        if self.separation <= 0:
            raise DataError("separation must be positive")


def parse_mapping(path: str | os.PathLike) -> ClassMapping:
    """Parse a mapping file of "<index> <name>" lines."""
    path = Path(path)
    entries: list[tuple[int, str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(maxsplit=1)
            if len(parts) != 2:
                raise DataError(f"{path}: line {lineno}: expected '<index> <name>', got {line!r}")
            try:
                index = int(parts[0])
            except ValueError:
                raise DataError(f"{path}: line {lineno}: non-integer class index {parts[0]!r}") from None
            if index < 0:
                raise DataError(f"{path}: line {lineno}: negative class index {index}")
            entries.append((index, parts[1]))
    if not entries:
        raise DataError(f"{path}: mapping file has no entries")
    return ClassMapping(tuple(entries))


def write_mapping(mapping: ClassMapping, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for index, name in sorted(mapping.entries):
            fh.write(f"{index} {name}\n")


def read_raw_features(path: str | os.PathLike) -> np.ndarray:
    """Read the self-describing raw format: "SFTMN1 D T\\n" + LE float32 (D, T)."""
    with open(path, "rb") as fh:
        header = fh.readline()
        try:
            magic, d_str, t_str = header.decode("ascii").split()
            d, t = int(d_str), int(t_str)
        except (UnicodeDecodeError, ValueError):
            raise DataError(f"{path}: bad raw feature header {header!r}") from None
        if magic != RAW_MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}, expected {RAW_MAGIC!r}")
        if d < 1 or t < 1:
            raise DataError(f"{path}: non-positive dims in header ({d}, {t})")
        payload = fh.read()
    expected = d * t * 4
    if len(payload) != expected:
        raise DataError(f"{path}: payload holds {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype="<f4").reshape(d, t).copy()


def write_raw_features(values: np.ndarray, path: str | os.PathLike) -> None:
    """Write a (D, T) array in the raw format. Values are stored as float32."""
    if values.ndim != 2:
        raise DataError(f"raw features must be 2-D, got shape {values.shape}")
    d, t = values.shape
    with open(path, "wb") as fh:
        fh.write(f"{RAW_MAGIC} {d} {t}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


def _check_layout(feature_layout: str) -> None:
    if feature_layout not in FEATURE_LAYOUTS:
        raise DataError(f"feature_layout must be one of {FEATURE_LAYOUTS}, got {feature_layout!r}")


def load_features(path: str | os.PathLike, feature_layout: str) -> np.ndarray:
    """Load one feature file (.npy or .bin) and normalize to (D, T) float32.

    The raw format is self-describing (header names D then T); the layout
    setting applies to NPY arrays, whose orientation the format cannot state.
    """
    _check_layout(feature_layout)
    path = Path(path)
    if path.suffix == ".npy":
        arr = np.load(path)
        if arr.ndim != 2:
            raise DataError(f"{path}: expected a 2-D array, got shape {arr.shape}")
        if feature_layout == "TxD":
            arr = arr.T
    else:
        arr = read_raw_features(path)
    return np.ascontiguousarray(arr, dtype=np.float32)


def _split_ids(split_file: str | os.PathLike) -> list[str]:
    ids: list[str] = []
    with open(split_file, "r", encoding="utf-8") as fh:
        for line in fh:
            name = line.strip()
            if not name:
                continue
            if name.endswith(".txt"):
                name = name[: -len(".txt")]
            ids.append(name)
    if not ids:
        raise DataError(f"{split_file}: split file lists no videos")
    return ids


def _find_feature_file(root: Path, video_id: str) -> Path:
    for ext in (".npy", ".bin"):
        candidate = root / "features" / f"{video_id}{ext}"
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"no feature file for video {video_id!r} under {root / 'features'}")


def load_dataset(root: str | os.PathLike, split_file: str | os.PathLike,
                 mapping: ClassMapping, feature_layout: str,
                 frame_rate_hz: float = 1.0) -> list[VideoSample]:
    """Load every video listed in the split file, in split-file order."""
    _check_layout(feature_layout)
    root = Path(root)
    if not (root / "features").is_dir() or not (root / "groundTruth").is_dir():
        raise FileNotFoundError(f"{root} must contain features/ and groundTruth/ subdirectories")
    samples: list[VideoSample] = []
    feature_dim: int | None = None
    for video_id in _split_ids(split_file):
        feature_path = _find_feature_file(root, video_id)
        label_path = root / "groundTruth" / f"{video_id}.txt"
        if not label_path.exists():
            raise FileNotFoundError(f"no label file for video {video_id!r} at {label_path}")
        values = load_features(feature_path, feature_layout)
        names = [line.strip() for line in label_path.read_text(encoding="utf-8").splitlines()
                 if line.strip()]
        labels = np.array([mapping.index_of(n) for n in names], dtype=np.int64)
        if len(labels) != values.shape[1]:
            raise DataError(f"video {video_id!r}: {values.shape[1]} feature frames but "
                            f"{len(labels)} label lines")
        if feature_dim is None:
            feature_dim = values.shape[0]
        elif values.shape[0] != feature_dim:
            raise DataError(f"video {video_id!r}: feature dim {values.shape[0]} differs from "
                            f"dataset dim {feature_dim}")
        samples.append(VideoSample(
            id=video_id,
            features=FeatureSequence(values, frame_rate_hz=frame_rate_hz),
            labels=LabelSequence(labels, mapping),
        ))
    return samples


def write_dataset(samples: Sequence[VideoSample], mapping: ClassMapping,
                  root: str | os.PathLike, feature_format: str = "npy",
                  feature_layout: str = "DxT", split_name: str = "all") -> None:
    """Write samples in the on-disk layout, plus mapping.txt and a split bundle."""
    if feature_format not in ("npy", "raw"):
        raise DataError(f"feature_format must be 'npy' or 'raw', got {feature_format!r}")
    _check_layout(feature_layout)
    root = Path(root)
    (root / "features").mkdir(parents=True, exist_ok=True)
    (root / "groundTruth").mkdir(parents=True, exist_ok=True)
    (root / "splits").mkdir(parents=True, exist_ok=True)
    for sample in samples:
        values = sample.features.values
        if feature_format == "npy":
            out = values if feature_layout == "DxT" else values.T
            np.save(root / "features" / f"{sample.id}.npy", out)
        else:
            write_raw_features(values, root / "features" / f"{sample.id}.bin")
        names = [mapping.name_of(int(l)) for l in sample.labels.labels]
        with open(root / "groundTruth" / f"{sample.id}.txt", "w", encoding="utf-8") as fh:
            fh.write("\n".join(names) + "\n")
    write_mapping(mapping, root / "mapping.txt")
    with open(root / "splits" / f"{split_name}.bundle", "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(f"{sample.id}\n")


def generate_synthetic(spec: SyntheticSpec) -> tuple[list[VideoSample], ClassMapping]:
    """Generate a deterministic synthetic dataset; all randomness comes from the seed."""
    rng = np.random.default_rng(spec.seed)
    c, d = spec.num_classes, spec.feature_dim
    mapping = ClassMapping.from_names([f"class{i:02d}" for i in range(c)])

    prototypes = rng.standard_normal((c, d))
    prototypes /= np.linalg.norm(prototypes, axis=1, keepdims=True)
    prototypes *= spec.separation

    samples: list[VideoSample] = []
    for v in range(spec.num_videos):
        t_total = int(rng.integers(spec.min_length, spec.max_length + 1))
        labels = np.empty(t_total, dtype=np.int64)
        t = 0
        current = int(rng.integers(c))
        while t < t_total:
            duration = max(1, int(rng.poisson(spec.mean_segment_length)))
            labels[t:t + duration] = current
            t += duration
            if c > 1:
                step = int(rng.integers(1, c))
                current = (current + step) % c
        values = prototypes[labels].T + spec.noise_level * rng.standard_normal((d, t_total))
        samples.append(VideoSample(
            id=f"video{v:03d}",
            features=FeatureSequence(values.astype(np.float32)),
            labels=LabelSequence(labels, mapping),
        ))
    return samples, mapping
