"""Dataset ingestion (CSV, IDX), stratified splitting and normalization."""

from __future__ import annotations

import csv
import gzip
import logging
import math
import struct
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from microhd.rng import Rng

log = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class DataFormatError(ValueError):
    """Malformed or inconsistent dataset file."""


@dataclass(frozen=True)
class FeatureStats:
    minimum: np.ndarray
    maximum: np.ndarray
    mean: np.ndarray
    std: np.ndarray

    def as_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("minimum", "maximum", "mean", "std")}

    @classmethod
    def from_dict(cls, data: dict) -> FeatureStats:
        return cls(*(np.asarray(data[k], dtype=np.float64) for k in ("minimum", "maximum", "mean", "std")))


@dataclass(frozen=True, eq=False)
class Dataset:
    samples: np.ndarray
    labels: np.ndarray
    n_classes: int
    label_names: tuple[str, ...] = ()
    stats: FeatureStats | None = None
    provenance: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if samples.ndim != 2:
            raise DataFormatError(f"samples must be 2-D, got shape {samples.shape}")
        if labels.shape != (samples.shape[0],):
            raise DataFormatError("one label per sample is required")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise DataFormatError(f"labels must lie in [0, {self.n_classes})")
        if not np.all(np.isfinite(samples)):
            raise DataFormatError("samples contain NaN or Inf")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def n_features(self) -> int:
        return self.samples.shape[1]

    def subset(self, index: np.ndarray, tag: str = "") -> Dataset:
        prov = f"{self.provenance}[{tag}]" if tag else self.provenance
        return replace(self, samples=self.samples[index], labels=self.labels[index], provenance=prov)


def _open_text(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8", newline="")
    return open(path, encoding="utf-8", newline="")


def load_csv(
    path,
    label_column: int | str = -1,
    has_header: bool = False,
    delimiter: str | None = ",",
    label_names: tuple[str, ...] | list[str] | None = None,
) -> Dataset:
    """Read a rectangular CSV of reals plus one label column.

    Labels are mapped to dense integers in order of first appearance, or
    through ``label_names`` when given (unknown labels are then an error);
    pass the training file's names when loading its test file.
    ``delimiter=None`` splits on runs of whitespace.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    with _open_text(path) as fh:
        if delimiter is None:
            rows = [line.split() for line in fh]
        else:
            rows = list(csv.reader(fh, delimiter=delimiter))
    numbered = [(i + 1, r) for i, r in enumerate(rows) if any(cell.strip() for cell in r)]
    if not numbered:
        raise DataFormatError(f"{path}: file is empty")
    header = None
    if has_header:
        header = [cell.strip() for cell in numbered[0][1]]
        numbered = numbered[1:]
        if not numbered:
            raise DataFormatError(f"{path}: header but no data rows")
    width = len(numbered[0][1])
    if isinstance(label_column, str):
        if header is None or label_column not in header:
            raise DataFormatError(f"{path}: unknown label column {label_column!r}")
        col = header.index(label_column)
    else:
        col = label_column + width if label_column < 0 else label_column
        if not 0 <= col < width:
            raise DataFormatError(f"{path}: label column {label_column} out of range for {width} columns")
    if width < 2:
        raise DataFormatError(f"{path}: need at least one feature and a label column")

    mapping: dict[str, int] = {}
    fixed = label_names is not None
    if fixed:
        mapping = {name: i for i, name in enumerate(label_names)}
    samples = np.empty((len(numbered), width - 1), dtype=np.float64)
    labels = np.empty(len(numbered), dtype=np.int64)
    for r, (lineno, row) in enumerate(numbered):
        if len(row) != width:
            raise DataFormatError(f"{path}:{lineno}: expected {width} columns, found {len(row)}")
        label = row[col].strip()
        if label not in mapping:
            if fixed:
                raise DataFormatError(f"{path}:{lineno}: unknown label {label!r}")
            mapping[label] = len(mapping)
        labels[r] = mapping[label]
        feats = row[:col] + row[col + 1 :]
        try:
            samples[r] = [float(cell) for cell in feats]
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: unparsable cell ({exc})") from None
    if not np.all(np.isfinite(samples)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(samples), axis=1))[0])
        raise DataFormatError(f"{path}:{numbered[bad][0]}: NaN or Inf value")
    names = tuple(mapping)
    return Dataset(samples, labels, len(names), names, provenance=f"csv:{path}")


def _read_bytes(path: Path) -> bytes:
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as fh:
            return fh.read()
    return path.read_bytes()


def load_idx(images_path, labels_path, label_names: tuple[str, ...] | list[str] | None = None) -> Dataset:
    """Read an IDX image/label pair; pixels are scaled to [0, 1]."""
    images_path, labels_path = Path(images_path), Path(labels_path)
    raw_images = _read_bytes(images_path)
    raw_labels = _read_bytes(labels_path)
    if len(raw_images) < 16 or len(raw_labels) < 8:
        raise DataFormatError("truncated IDX header")
    magic, count, rows, cols = struct.unpack(">IIII", raw_images[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise DataFormatError(f"{images_path}: bad image magic 0x{magic:08x}")
    lmagic, lcount = struct.unpack(">II", raw_labels[:8])
    if lmagic != IDX_LABELS_MAGIC:
        raise DataFormatError(f"{labels_path}: bad label magic 0x{lmagic:08x}")
    if count != lcount:
        raise DataFormatError(f"image count {count} does not match label count {lcount}")
    n_pixels = rows * cols
    if len(raw_images) - 16 < count * n_pixels:
        raise DataFormatError(f"{images_path}: truncated payload")
    if len(raw_labels) - 8 < count:
        raise DataFormatError(f"{labels_path}: truncated payload")
    pixels = np.frombuffer(raw_images, dtype=np.uint8, count=count * n_pixels, offset=16)
    raw = np.frombuffer(raw_labels, dtype=np.uint8, count=count, offset=8)
    if label_names is None:
        present = np.unique(raw)
        names = tuple(str(v) for v in range(int(present.max()) + 1)) if count else ()
    else:
        names = tuple(label_names)
        if count and int(raw.max()) >= len(names):
            raise DataFormatError(f"{labels_path}: label {int(raw.max())} outside the known classes")
    samples = pixels.reshape(count, n_pixels).astype(np.float64) / 255.0
    return Dataset(samples, raw.astype(np.int64), len(names), names, provenance=f"idx:{images_path}")


def split(dataset: Dataset, ratio: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Stratified, seeded split into (train, eval).

    Each class is shuffled and its first round(ratio * n) samples go to train
    (at least one sample lands on each side).  Classes with fewer than two
    samples go entirely to train.  Both parts keep the original sample order.
    """
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    rng = Rng(seed).child("split")
    train_idx, eval_idx = [], []
    for label in range(dataset.n_classes):
        members = np.flatnonzero(dataset.labels == label)
        if members.size == 0:
            continue
        if members.size < 2:
            warnings.warn(f"class {label} has {members.size} sample(s); all placed in train", stacklevel=2)
            train_idx.append(members)
            continue
        members = rng.generator.permutation(members)
        n_train = min(max(math.floor(ratio * members.size + 0.5), 1), members.size - 1)
        train_idx.append(members[:n_train])
        eval_idx.append(members[n_train:])
    tr = np.sort(np.concatenate(train_idx)) if train_idx else np.empty(0, dtype=np.int64)
    ev = np.sort(np.concatenate(eval_idx)) if eval_idx else np.empty(0, dtype=np.int64)
    return dataset.subset(tr, "train"), dataset.subset(ev, "eval")


def compute_stats(dataset: Dataset) -> FeatureStats:
    x = dataset.samples
    return FeatureStats(x.min(axis=0), x.max(axis=0), x.mean(axis=0), x.std(axis=0))


NORMALIZATIONS = ("minmax", "zscore", "none")


def normalize(dataset: Dataset, scheme: str, stats: FeatureStats | None = None) -> Dataset:
    """Apply per-feature normalization using (training-split) ``stats``.

    minmax maps the training range onto [0, 1]; zscore gives zero mean and
    unit variance.  Constant features map to 0 under both.
    """
    if scheme not in NORMALIZATIONS:
        raise ValueError(f"scheme must be one of {NORMALIZATIONS}, got {scheme!r}")
    stats = stats or dataset.stats
    if stats is None:
        raise ValueError("normalization needs feature statistics from the training split")
    if scheme == "none":
        return replace(dataset, stats=stats)
    x = dataset.samples
    if scheme == "minmax":
        span = stats.maximum - stats.minimum
        centre, scale = stats.minimum, span
    else:
        centre, scale = stats.mean, stats.std
    const = scale == 0
    out = (x - centre) / np.where(const, 1.0, scale)
    out[:, const] = 0.0
    return replace(dataset, samples=out, stats=stats)


def default_normalization(encoder: str) -> str:
    return "minmax" if encoder == "id-level" else "zscore"
