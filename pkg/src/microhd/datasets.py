"""Locators for the standard benchmark datasets.

Nothing is downloaded.  Files are looked up under ``$MICROHD_DATA_DIR``
(or an explicit root) in the layouts the public archives unpack to::

    isolet/isolet1+2+3+4.data, isolet/isolet5.data      (or directly in root)
    UCI HAR Dataset/train/X_train.txt, y_train.txt, test/X_test.txt, y_test.txt
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from microhd.data import Dataset, load_csv

DATA_DIR_ENV = "MICROHD_DATA_DIR"


class DatasetUnavailable(FileNotFoundError):
    pass


def data_root(root=None) -> Path:
    root = root or os.environ.get(DATA_DIR_ENV)
    if not root:
        raise DatasetUnavailable(f"set {DATA_DIR_ENV} to the directory holding the benchmark datasets")
    return Path(root)


def _first(root: Path, candidates: list[str]) -> Path:
    for c in candidates:
        if (root / c).exists():
            return root / c
    raise DatasetUnavailable(f"none of {candidates} found under {root}")


def isolet_paths(root=None) -> tuple[Path, Path]:
    root = data_root(root)
    train = _first(root, ["isolet/isolet1+2+3+4.data", "isolet1+2+3+4.data",
                          "isolet/isolet1+2+3+4.data.gz", "isolet1+2+3+4.data.gz"])
    test = _first(root, ["isolet/isolet5.data", "isolet5.data", "isolet/isolet5.data.gz", "isolet5.data.gz"])
    return train, test


def load_isolet(root=None) -> tuple[Dataset, Dataset]:
    """(train, test): 617 features, 26 letter classes."""
    train_path, test_path = isolet_paths(root)
    train = load_csv(train_path)
    # labels are written as "1.", "2.", ...; fix the class order numerically
    names = tuple(sorted(train.label_names, key=float))
    return load_csv(train_path, label_names=names), load_csv(test_path, label_names=names)


def _ucihar_split(base: Path, part: str, names: tuple[str, ...] | None) -> Dataset:
    x_path, y_path = base / part / f"X_{part}.txt", base / part / f"y_{part}.txt"
    for p in (x_path, y_path):
        if not p.exists():
            raise DatasetUnavailable(f"missing {p}")
    samples = np.loadtxt(x_path, dtype=np.float64, ndmin=2)
    raw = np.loadtxt(y_path, dtype=np.int64, ndmin=1)
    if raw.shape[0] != samples.shape[0]:
        raise ValueError(f"{x_path} and {y_path} disagree on the sample count")
    if names is None:
        names = tuple(str(v) for v in np.unique(raw))
    index = {int(n): i for i, n in enumerate(names)}
    labels = np.array([index[int(v)] for v in raw], dtype=np.int64)
    return Dataset(samples, labels, len(names), names, provenance=f"ucihar:{x_path}")


def load_ucihar(root=None) -> tuple[Dataset, Dataset]:
    """(train, test): 561 features, 6 activity classes."""
    root = data_root(root)
    base = _first(root, ["UCI HAR Dataset", "ucihar/UCI HAR Dataset", "ucihar", "UCIHAR"])
    train = _ucihar_split(base, "train", None)
    return train, _ucihar_split(base, "test", train.label_names)
