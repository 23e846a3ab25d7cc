import pytest

from microhd.config import (
    ConfigError,
    RunConfig,
    dump_manifest,
    int_list,
    load_manifest,
    merge,
    parse_manifest,
)


def test_parse_types_and_comments():
    text = """
    # run settings
    dataset = data/train.csv
    encoder = projection   # trailing comment
    d = 2000
    threshold = 0.5
    header = yes
    values-d = 200, 500,2000
    """
    out = parse_manifest(text)
    assert out == {
        "dataset": "data/train.csv",
        "encoder": "projection",
        "d": 2000,
        "threshold": 0.5,
        "header": True,
        "values_d": (200, 500, 2000),
    }


@pytest.mark.parametrize(
    "text, message",
    [
        ("d 10", "expected 'key = value'"),
        ("colour = red", "unknown key"),
        ("d = ten", ":1:"),
        ("header = maybe", "boolean"),
    ],
)
def test_parse_errors(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_manifest(text)


def test_dump_round_trip(tmp_path):
    cfg = RunConfig(dataset="x.csv", values_q=(1, 2, 16), header=True)
    p = tmp_path / "run.cfg"
    p.write_text(dump_manifest(cfg))
    assert merge(RunConfig(), load_manifest(p)) == cfg


def test_missing_manifest(tmp_path):
    with pytest.raises(ConfigError):
        load_manifest(tmp_path / "none.cfg")


@pytest.mark.parametrize(
    "changes",
    [{"threshold": -1.0}, {"epochs": 0}, {"encoder": "hash"}, {"encoder": "projection", "values_l": (2, 4)},
     {"split_ratio": 1.0}, {"threads": 0}, {"format": "parquet"}],
)
def test_validation(changes):
    with pytest.raises(ConfigError):
        merge(RunConfig(), changes).validate()


def test_merge_rejects_unknown():
    with pytest.raises(ConfigError):
        merge(RunConfig(), {"colour": "red"})


def test_int_list():
    assert int_list("1,2, 3,") == (1, 2, 3)
    with pytest.raises(ValueError):
        int_list("1,x")
