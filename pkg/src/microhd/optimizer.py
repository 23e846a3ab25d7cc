"""Accuracy-constrained greedy / binary-search hyper-parameter compression.

Each tunable hyper-parameter (d, l, q) has an ascending list of admitted
values ending at the baseline.  Every iteration:

1. for each still-active parameter, take the midpoint of its binary-search
   window as the candidate value;
2. score every candidate by the resource savings it would bring (cost
   model only, no training) and pick the best one;
3. apply it, retrain, and evaluate on the evaluation split;
4. keep the change if evaluation accuracy stays at or above
   ``baseline - threshold`` (the window then moves left of the candidate),
   otherwise discard it (the window moves right).

The loop ends when every window is empty.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from microhd import cost
from microhd.data import Dataset
from microhd.encoders import encode_batch
from microhd.model import (
    ID_LEVEL,
    HdcConfig,
    TrainedModel,
    TrainOptions,
    build_encoder,
    evaluate_encoded,
    requantize,
    retrain_encoded,
    train_encoded,
)

log = logging.getLogger(__name__)

PARAM_ORDER = ("d", "l", "q")
DEFAULT_VALUES = {
    "d": (200, 500, 1000, 2000, 4000, 6000, 8000, 10000),
    "l": (4, 16, 32, 64, 128, 256, 512, 1024),
    "q": (1, 2, 3, 4, 5, 7, 8, 13, 14, 16),
}
# accuracy comparisons tolerate float noise in (correct / total) arithmetic
_ACC_EPS = 1e-12


@dataclass(frozen=True)
class Workload:
    """Training and evaluation splits; the test split is deliberately absent."""

    train: Dataset
    eval: Dataset

    def __post_init__(self):
        if self.train.n_features != self.eval.n_features:
            raise ValueError("train and eval splits have different feature counts")
        if len(self.eval) == 0:
            raise ValueError("the evaluation split is empty")

    @property
    def f(self) -> int:
        return self.train.n_features

    @property
    def c(self) -> int:
        return max(self.train.n_classes, self.eval.n_classes)


@dataclass(frozen=True)
class ParamSpace:
    values: dict[str, tuple[int, ...]]

    def __post_init__(self):
        clean = {}
        for name, vals in self.values.items():
            if name not in PARAM_ORDER:
                raise ValueError(f"unknown hyper-parameter {name!r}")
            vals = tuple(int(v) for v in vals)
            if not vals:
                raise ValueError(f"admitted values for {name} are empty")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"admitted values for {name} must be strictly ascending: {vals}")
            clean[name] = vals
        object.__setattr__(self, "values", clean)

    @classmethod
    def default(cls, config: HdcConfig) -> ParamSpace:
        """Default lists truncated below the baseline, baseline appended."""
        out = {}
        for name in config.tunable:
            base = getattr(config, name)
            out[name] = tuple(v for v in DEFAULT_VALUES[name] if v < base) + (base,)
        return cls(out)

    def params(self, config: HdcConfig) -> tuple[str, ...]:
        return tuple(p for p in PARAM_ORDER if p in config.tunable and p in self.values)

    def check(self, config: HdcConfig) -> None:
        for name in self.values:
            if name not in config.tunable:
                raise ValueError(f"{name} is not tunable for {config.encoder} encoding")
            if self.values[name][-1] != getattr(config, name):
                raise ValueError(
                    f"last admitted {name} ({self.values[name][-1]}) must equal the baseline ({getattr(config, name)})"
                )
        if "l" in self.values and self.values["l"][0] < 2:
            raise ValueError("admitted l values must be >= 2")
        if "q" in self.values and not (1 <= self.values["q"][0] and self.values["q"][-1] <= 16):
            raise ValueError("admitted q values must lie in [1, 16]")
        if "d" in self.values and self.values["d"][0] < 1:
            raise ValueError("admitted d values must be >= 1")

    def probe_bound(self, config: HdcConfig) -> int:
        """2 * H * ceil(log2 max|V|) + 1."""
        params = self.params(config)
        longest = max((len(self.values[p]) for p in params), default=1)
        return 2 * len(params) * math.ceil(math.log2(longest)) + 1


@dataclass
class Window:
    lower: int
    upper: int
    active: bool = True

    @property
    def empty(self) -> bool:
        return self.lower > self.upper


class OptTrace:
    """Append-only list of structured records (one baseline record, one per probe)."""

    def __init__(self, records: list[dict] | None = None):
        self._records: list[dict] = list(records or [])

    def append(self, record: dict) -> None:
        self._records.append(dict(record))

    @property
    def records(self) -> tuple[dict, ...]:
        return tuple(self._records)

    @property
    def probes(self) -> tuple[dict, ...]:
        return tuple(r for r in self._records if r["kind"] == "probe")

    @property
    def accepted(self) -> tuple[dict, ...]:
        return tuple(r for r in self.probes if r["accepted"])

    def __len__(self) -> int:
        return len(self._records)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self._records)

    def write(self, path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def from_jsonl(cls, text: str) -> OptTrace:
        records = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"trace line {lineno}: {exc}") from None
            if not isinstance(rec, dict) or rec.get("kind") not in ("baseline", "probe"):
                raise ValueError(f"trace line {lineno}: not a trace record")
            if "config" not in rec:
                raise ValueError(f"trace line {lineno}: missing config")
            records.append(rec)
        if not records or records[0]["kind"] != "baseline":
            raise ValueError("trace must start with a baseline record")
        return cls(records)

    @classmethod
    def read(cls, path) -> OptTrace:
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))


@dataclass
class SearchState:
    space: ParamSpace
    windows: dict[str, Window]
    config: HdcConfig
    model: TrainedModel
    baseline_accuracy: float
    accuracy: float
    accuracy_floor: float
    seed: int
    options: TrainOptions
    priority: str = "memory"
    encoded_train: np.ndarray | None = field(default=None, repr=False)
    encoded_eval: np.ndarray | None = field(default=None, repr=False)
    trace: OptTrace = field(default_factory=OptTrace)
    iteration: int = 0
    pending: dict[str, int] = field(default_factory=dict)

    def active_params(self) -> tuple[str, ...]:
        return tuple(p for p in PARAM_ORDER if p in self.windows and self.windows[p].active)


class Baseline(NamedTuple):
    model: TrainedModel
    accuracy: float
    accuracy_floor: float


class OptResult(NamedTuple):
    model: TrainedModel
    config: HdcConfig
    trace: OptTrace
    baseline_accuracy: float
    accuracy: float
    accuracy_floor: float


def _train(workload: Workload, config: HdcConfig, seed: int, options: TrainOptions):
    encoder = build_encoder(config, seed)
    enc_tr = encode_batch(workload.train.samples, encoder)
    enc_ev = encode_batch(workload.eval.samples, encoder)
    model = train_encoded(enc_tr, workload.train.labels, encoder, config, seed)
    model = retrain_encoded(model, enc_tr, workload.train.labels, options)
    acc = evaluate_encoded(model, enc_ev, workload.eval.labels, options.similarity)
    return model, acc, enc_tr, enc_ev


def establish_baseline(
    workload: Workload, config: HdcConfig, threshold: float, seed: int = 0, options: TrainOptions | None = None
) -> Baseline:
    """Train the baseline (single pass + retraining) and derive the accuracy floor."""
    options = options or TrainOptions()
    model, acc, _, _ = _train(workload, config, seed, options)
    return Baseline(model, acc, acc - threshold)


def init_state(
    workload: Workload,
    config: HdcConfig,
    space: ParamSpace,
    threshold: float,
    seed: int = 0,
    options: TrainOptions | None = None,
    priority: str = "memory",
) -> SearchState:
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    if priority not in ("memory", "compute"):
        raise ValueError("priority must be 'memory' or 'compute'")
    if (config.f, config.c) != (workload.f, workload.c):
        raise ValueError(f"config (f={config.f}, c={config.c}) does not match the workload "
                         f"(f={workload.f}, c={workload.c})")
    space.check(config)
    options = options or TrainOptions()
    model, acc, enc_tr, enc_ev = _train(workload, config, seed, options)
    windows = {}
    for p in space.params(config):
        n = len(space.values[p])
        windows[p] = Window(0, n - 2, active=n > 1)
    state = SearchState(space, windows, config, model, acc, acc, acc - threshold, seed, options, priority,
                        enc_tr, enc_ev)
    state.trace.append(_record(state, "baseline", config, accepted=True, accuracy=acc))
    return state


def _record(state: SearchState, kind: str, config: HdcConfig, **extra) -> dict:
    rep = cost.report(config)
    rec = {
        "kind": kind,
        "iteration": state.iteration,
        "config": config.as_dict(),
        "memory_bits": rep.memory_bits,
        "total_ops": rep.total_ops,
        "floor": state.accuracy_floor,
    }
    rec.update(extra)
    return rec


def propose_candidate(state: SearchState, param: str) -> int | None:
    """Midpoint of the parameter's window, or None (and exhausted) if empty."""
    win = state.windows[param]
    if not win.active:
        return None
    if win.empty:
        win.active = False
        return None
    return state.space.values[param][(win.lower + win.upper) // 2]


def _candidate_key(state: SearchState, param: str, value: int) -> tuple[float, float]:
    mem, comp = cost.savings(state.config, state.config.with_value(param, value))
    return (mem, comp) if state.priority == "memory" else (comp, mem)


def greedy_select(state: SearchState) -> str | None:
    """Active parameter whose candidate promises the largest savings.

    Ties resolve by the fixed order d, l, q.  Returns None once every
    parameter is exhausted.
    """
    best, best_key = None, None
    state.pending = {}
    for param in state.active_params():
        value = propose_candidate(state, param)
        if value is None:
            continue
        state.pending[param] = value
        key = _candidate_key(state, param, value)
        if best_key is None or key > best_key:
            best, best_key = param, key
    return best


def try_step(state: SearchState, param: str, value: int, workload: Workload) -> bool:
    """Apply one candidate, retrain, and accept iff eval accuracy >= floor.

    Window bookkeeping: accept moves the window left of the candidate,
    reject moves it right.  Rejected models are discarded entirely.
    """
    values = state.space.values[param]
    if value not in values:
        raise ValueError(f"{value} is not an admitted value for {param}")
    k = values.index(value)
    win = state.windows[param]
    if value == getattr(state.config, param):
        win.upper = min(win.upper, k - 1)
        return True
    state.iteration += 1
    candidate = state.config.with_value(param, value)
    previous = getattr(state.config, param)
    mem_ratio, comp_ratio = cost.savings(state.config, candidate)
    try:
        if candidate.encoder == ID_LEVEL and param == "q":
            model = requantize(state.model, value)
            enc_tr, enc_ev = state.encoded_train, state.encoded_eval
            model = retrain_encoded(model, enc_tr, workload.train.labels, state.options)
            acc = evaluate_encoded(model, enc_ev, workload.eval.labels, state.options.similarity)
        else:
            model, acc, enc_tr, enc_ev = _train(workload, candidate, state.seed, state.options)
        failed = None
    except (OverflowError, FloatingPointError) as exc:
        failed, acc = str(exc), float("nan")
    accepted = failed is None and acc >= state.accuracy_floor - _ACC_EPS
    extra = {}
    if failed:
        extra["error"] = failed
    state.trace.append(
        _record(
            state, "probe", candidate, param=param, value=value, previous=previous,
            memory_ratio=mem_ratio, compute_ratio=comp_ratio,
            eval_accuracy=None if math.isnan(acc) else acc, accepted=accepted, **extra,
        )
    )
    if accepted:
        state.config, state.model, state.accuracy = candidate, model, acc
        state.encoded_train, state.encoded_eval = enc_tr, enc_ev
        win.upper = k - 1
    else:
        win.lower = k + 1
    if win.empty:
        win.active = False
    log.info("probe %d: %s %d -> %d, eval acc %.4f (floor %.4f) %s", state.iteration, param, previous,
             value, acc, state.accuracy_floor, "accepted" if accepted else "rejected")
    return accepted


def optimize(
    workload: Workload,
    config: HdcConfig,
    threshold: float,
    space: ParamSpace | None = None,
    seed: int = 0,
    options: TrainOptions | None = None,
    priority: str = "memory",
) -> OptResult:
    """Run the full loop from the baseline ``config``.

    ``threshold`` is the tolerated eval-accuracy drop as a fraction
    (0.01 = one percentage point).
    """
    space = space or ParamSpace.default(config)
    state = init_state(workload, config, space, threshold, seed, options, priority)
    return run(state, workload)


def run(state: SearchState, workload: Workload) -> OptResult:
    while True:
        param = greedy_select(state)
        if param is None:
            break
        try_step(state, param, state.pending[param], workload)
    return OptResult(state.model, state.config, state.trace, state.baseline_accuracy, state.accuracy,
                     state.accuracy_floor)


def grid_search(
    workload: Workload,
    config: HdcConfig,
    space: ParamSpace,
    threshold: float,
    seed: int = 0,
    options: TrainOptions | None = None,
) -> list[tuple[HdcConfig, float, bool]]:
    """Exhaustive oracle: train every configuration in the product of the lists.

    Returns (config, eval accuracy, feasible) for each, where feasibility is
    judged against the baseline accuracy of ``config`` minus ``threshold``.
    Every configuration is trained from scratch.
    """
    options = options or TrainOptions()
    space.check(config)
    _, base_acc, _, _ = _train(workload, config, seed, options)
    floor = base_acc - threshold
    params = space.params(config)
    out = []
    for combo in np.ndindex(*(len(space.values[p]) for p in params)):
        cfg = config
        for p, i in zip(params, combo):
            cfg = cfg.with_value(p, space.values[p][i])
        _, acc, _, _ = _train(workload, cfg, seed, options)
        out.append((cfg, acc, acc >= floor - _ACC_EPS))
    return out
