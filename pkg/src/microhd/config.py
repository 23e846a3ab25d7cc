"""Run configuration and the flat key-value manifest format.

Manifest grammar, one entry per line::

    line    := blank | comment | entry
    comment := "#" any-text
    entry   := key "=" value [ "#" any-text ]
    key     := [a-z_]+            (dashes are accepted and read as "_")
    value   := text, converted by the key's declared type

Types: int, float, bool (true/false/yes/no/1/0), str, and int lists
written as comma-separated integers.  Unknown keys and unparsable values
are errors.  Command-line flags override manifest entries.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path


class ConfigError(ValueError):
    """Invalid manifest or option combination."""


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ValueError(f"not a comma-separated integer list: {text!r}") from None


def _label_column(text: str) -> int | str:
    try:
        return int(text)
    except ValueError:
        return text.strip()


@dataclass(frozen=True)
class RunConfig:
    dataset: str | None = None
    test_dataset: str | None = None
    format: str = "csv"
    label_column: int | str = -1
    header: bool = False
    delimiter: str = ","
    normalize: str | None = None
    encoder: str = "id-level"
    d: int = 10000
    l: int = 1024
    q: int = 16
    threshold: float = 1.0  # percentage points
    values_d: tuple[int, ...] | None = None
    values_l: tuple[int, ...] | None = None
    values_q: tuple[int, ...] | None = None
    epochs: int = 30
    lr: float = 1.0
    similarity: str = "cosine"
    update: str = "perceptron"
    split_ratio: float = 0.8
    seed: int = 0
    threads: int | None = None
    out: str = "microhd-out"

    def validate(self) -> RunConfig:
        if self.threshold < 0:
            raise ConfigError("threshold must be >= 0")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.encoder not in ("id-level", "projection"):
            raise ConfigError(f"encoder must be id-level or projection, got {self.encoder!r}")
        if self.encoder == "projection" and self.values_l is not None:
            raise ConfigError("values_l applies to id-level encoding only")
        if self.format not in ("csv", "idx"):
            raise ConfigError(f"format must be csv or idx, got {self.format!r}")
        if not 0 < self.split_ratio < 1:
            raise ConfigError("split_ratio must be in (0, 1)")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be >= 1")
        return self


_PARSERS = {
    "dataset": str,
    "test_dataset": str,
    "format": str,
    "label_column": _label_column,
    "header": _bool,
    "delimiter": str,
    "normalize": str,
    "encoder": str,
    "d": int,
    "l": int,
    "q": int,
    "threshold": float,
    "values_d": int_list,
    "values_l": int_list,
    "values_q": int_list,
    "epochs": int,
    "lr": float,
    "similarity": str,
    "update": str,
    "split_ratio": float,
    "seed": int,
    "threads": int,
    "out": str,
}
assert set(_PARSERS) == {f.name for f in fields(RunConfig)}


def parse_manifest(text: str, source: str = "<manifest>") -> dict:
    entries: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            entries[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return entries


def load_manifest(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"manifest not found: {path}")
    return parse_manifest(path.read_text(encoding="utf-8"), str(path))


def dump_manifest(cfg: RunConfig) -> str:
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def merge(base: RunConfig, overrides: dict) -> RunConfig:
    unknown = set(overrides) - set(_PARSERS)
    if unknown:
        raise ConfigError(f"unknown options: {sorted(unknown)}")
    return replace(base, **overrides)
