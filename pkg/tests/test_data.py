import gzip
import struct

import numpy as np
import pytest
from conftest import make_blobs
from hypothesis import given, settings
from hypothesis import strategies as st

from microhd.data import (
    DataFormatError,
    Dataset,
    FeatureStats,
    compute_stats,
    default_normalization,
    load_csv,
    load_idx,
    normalize,
    split,
)


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_csv_first_appearance_labels(tmp_path):
    ds = load_csv(_write(tmp_path, "a.csv", "1.0,2.0,a\n3.0,4.0,b\n"))
    assert ds.labels.tolist() == [0, 1]
    assert ds.label_names == ("a", "b")
    assert ds.samples.tolist() == [[1.0, 2.0], [3.0, 4.0]]


def test_csv_header_and_named_label(tmp_path):
    ds = load_csv(_write(tmp_path, "h.csv", "cls,x,y\nz,1,2\ny,3,4\nz,5,6\n"), "cls", True)
    assert ds.labels.tolist() == [0, 1, 0]
    assert ds.samples[:, 1].tolist() == [2, 4, 6]


def test_csv_fixed_label_names(tmp_path):
    p = _write(tmp_path, "t.csv", "1,b\n2,a\n")
    assert load_csv(p, label_names=("a", "b")).labels.tolist() == [1, 0]
    with pytest.raises(DataFormatError, match="unknown label"):
        load_csv(p, label_names=("a",))


def test_csv_whitespace_and_gzip(tmp_path):
    p = tmp_path / "w.txt.gz"
    with gzip.open(p, "wt") as fh:
        fh.write("1  2 x\n 3 4   y\n")
    ds = load_csv(p, delimiter=None)
    assert ds.samples.tolist() == [[1, 2], [3, 4]]


@pytest.mark.parametrize(
    "text, message",
    [
        ("", "empty"),
        ("1,2,a\n3,b\n", ":2: expected 3 columns"),
        ("1,2,a\n3,zz,b\n", ":2: unparsable"),
        ("1,nan,a\n", ":1: NaN"),
        ("a\n", "at least one feature"),
    ],
)
def test_csv_errors(tmp_path, text, message):
    with pytest.raises(DataFormatError, match=message):
        load_csv(_write(tmp_path, "bad.csv", text))


def test_csv_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "nope.csv")


def _idx(tmp_path, images, labels, image_magic=0x803, label_count=None):
    n, r, c = images.shape
    ip, lp = tmp_path / "img.idx", tmp_path / "lab.idx"
    ip.write_bytes(struct.pack(">IIII", image_magic, n, r, c) + images.astype(np.uint8).tobytes())
    lc = n if label_count is None else label_count
    lp.write_bytes(struct.pack(">II", 0x801, lc) + np.asarray(labels, np.uint8).tobytes())
    return ip, lp


def test_idx_round_trip(tmp_path):
    images = np.random.default_rng(0).integers(0, 256, (2, 3, 4))
    ds = load_idx(*_idx(tmp_path, images, [7, 2]))
    assert ds.samples.shape == (2, 12)
    assert np.array_equal(np.rint(ds.samples * 255).astype(int).reshape(2, 3, 4), images)
    assert ds.labels.tolist() == [7, 2]
    assert ds.n_classes == 8


def test_idx_count_mismatch(tmp_path):
    with pytest.raises(DataFormatError, match="does not match"):
        load_idx(*_idx(tmp_path, np.zeros((2, 2, 2)), [0, 1], label_count=3))


def test_idx_bad_magic(tmp_path):
    with pytest.raises(DataFormatError, match="magic"):
        load_idx(*_idx(tmp_path, np.zeros((1, 2, 2)), [0], image_magic=0x1234))


def test_idx_truncated(tmp_path):
    ip, lp = _idx(tmp_path, np.zeros((2, 2, 2)), [0, 1])
    ip.write_bytes(ip.read_bytes()[:-1])
    with pytest.raises(DataFormatError, match="truncated"):
        load_idx(ip, lp)


def test_split_sizes():
    ds = Dataset(np.arange(10.0)[:, None], np.zeros(10, int), 1)
    train, ev = split(ds, 0.8, 0)
    assert (len(train), len(ev)) == (8, 2)


def test_split_deterministic_and_disjoint():
    ds = make_blobs(3, 4, 17, seed=1)
    a, b = split(ds, 0.8, 5), split(ds, 0.8, 5)
    assert np.array_equal(a[0].samples, b[0].samples)
    rows = {tuple(r) for r in a[0].samples} | {tuple(r) for r in a[1].samples}
    assert len(rows) == len(ds)
    assert not np.array_equal(split(ds, 0.8, 6)[0].samples, a[0].samples)


@settings(max_examples=40)
@given(st.lists(st.integers(2, 40), min_size=1, max_size=6), st.floats(0.1, 0.9), st.integers(0, 1000))
def test_split_stratified(counts, ratio, seed):
    labels = np.repeat(np.arange(len(counts)), counts)
    ds = Dataset(np.zeros((labels.size, 1)), labels, len(counts))
    train, ev = split(ds, ratio, seed)
    for k, n in enumerate(counts):
        n_train = int(np.sum(train.labels == k))
        assert abs(n_train - ratio * n) <= 1
        assert 1 <= n_train <= n - 1
        assert n_train + int(np.sum(ev.labels == k)) == n


def test_split_singleton_class_goes_to_train():
    ds = Dataset(np.zeros((5, 1)), [0, 0, 0, 0, 1], 2)
    with pytest.warns(UserWarning, match="class 1"):
        train, ev = split(ds, 0.5, 0)
    assert 1 in train.labels.tolist() and 1 not in ev.labels.tolist()


def test_normalize_constant_feature():
    ds = Dataset(np.array([[1.0, 5.0], [2.0, 5.0], [4.0, 5.0]]), [0, 1, 0], 2)
    for scheme in ("minmax", "zscore"):
        out = normalize(ds, scheme, compute_stats(ds))
        assert out.samples[:, 1].tolist() == [0.0, 0.0, 0.0]


def test_minmax_spans_unit_interval():
    ds = make_blobs(2, 6, 20, seed=3)
    out = normalize(ds, "minmax", compute_stats(ds))
    assert np.allclose(out.samples.min(0), 0) and np.allclose(out.samples.max(0), 1)


def test_eval_rows_may_leave_unit_interval():
    train = Dataset(np.array([[0.0], [1.0]]), [0, 1], 2)
    ev = Dataset(np.array([[2.0], [-1.0]]), [0, 1], 2)
    assert normalize(ev, "minmax", compute_stats(train)).samples.ravel().tolist() == [2.0, -1.0]


def test_zscore_moments():
    ds = make_blobs(2, 6, 50, seed=4)
    out = normalize(ds, "zscore", compute_stats(ds))
    assert np.allclose(out.samples.mean(0), 0) and np.allclose(out.samples.std(0), 1)


def test_stats_round_trip():
    st_ = compute_stats(make_blobs(2, 3, 5))
    back = FeatureStats.from_dict(st_.as_dict())
    assert all(np.array_equal(getattr(st_, k), getattr(back, k)) for k in ("minimum", "maximum", "mean", "std"))


def test_dataset_validation():
    with pytest.raises(DataFormatError):
        Dataset(np.zeros((2, 2)), [0, 3], 2)
    with pytest.raises(DataFormatError):
        Dataset(np.array([[np.inf]]), [0], 1)
    with pytest.raises(ValueError):
        normalize(Dataset(np.zeros((1, 1)), [0], 1), "robust", compute_stats(Dataset(np.zeros((1, 1)), [0], 1)))


def test_default_normalization():
    assert default_normalization("id-level") == "minmax"
    assert default_normalization("projection") == "zscore"
