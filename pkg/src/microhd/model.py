"""Class-hypervector models: single-pass training, retraining, quantization, inference."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from microhd.encoders import (
    Encoder,
    IdLevelCodebook,
    ProjectionMatrix,
    encode_batch,
    make_id_level_codebook,
    make_projection,
)
from microhd.hv import ACC_MAX, ACC_MIN, IntegerHV, int_range
from microhd.rng import Rng

log = logging.getLogger(__name__)

ID_LEVEL = "id-level"
PROJECTION = "projection"
ENCODER_KINDS = (ID_LEVEL, PROJECTION)

# float64 matmuls below are exact while |dot| < 2**53
_SCORE_CHUNK = 2048


@dataclass(frozen=True)
class HdcConfig:
    """Tunable hyper-parameters (d, l, q) plus workload constants (f, c).

    ``l`` is only meaningful for ID-level encoding and is 0 for projection.
    For projection, ``q`` is the bitwidth of both the class hypervectors
    and the projection matrix.
    """

    encoder: str
    d: int
    q: int
    f: int
    c: int
    l: int = 0

    def __post_init__(self):
        if self.encoder not in ENCODER_KINDS:
            raise ValueError(f"encoder must be one of {ENCODER_KINDS}, got {self.encoder!r}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if not 1 <= self.q <= 16:
            raise ValueError(f"q must be in [1, 16], got {self.q}")
        if self.f < 1 or self.c < 1:
            raise ValueError(f"f and c must be >= 1 (got f={self.f}, c={self.c})")
        if self.encoder == ID_LEVEL and self.l < 2:
            raise ValueError(f"id-level encoding needs l >= 2, got {self.l}")
        if self.encoder == PROJECTION and self.l != 0:
            raise ValueError("l applies to id-level encoding only")

    @property
    def tunable(self) -> tuple[str, ...]:
        return ("d", "l", "q") if self.encoder == ID_LEVEL else ("d", "q")

    def with_value(self, param: str, value: int) -> HdcConfig:
        return replace(self, **{param: int(value)})

    def as_dict(self) -> dict:
        return {"encoder": self.encoder, "d": self.d, "l": self.l, "q": self.q, "f": self.f, "c": self.c}


@dataclass(frozen=True)
class TrainOptions:
    """Retraining knobs.

    ``update="weighted"`` scales each correction by (1 - cosine similarity)
    as in OnlineHD; the default is the fixed-rate perceptron rule.
    ``batch_size=None`` refreshes the quantized class vectors once per epoch;
    a positive value refreshes them after every batch (1 = per sample), in
    which case ``shuffle`` reorders samples with ``shuffle_seed``.
    """

    epochs: int = 30
    lr: float = 1.0
    similarity: str = "cosine"
    update: str = "perceptron"
    batch_size: int | None = None
    shuffle: bool = False
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.similarity not in ("cosine", "dot"):
            raise ValueError(f"similarity must be 'cosine' or 'dot', got {self.similarity!r}")
        if self.update not in ("perceptron", "weighted"):
            raise ValueError(f"update must be 'perceptron' or 'weighted', got {self.update!r}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")


@dataclass(frozen=True, eq=False)
class TrainedModel:
    config: HdcConfig
    class_hvs: np.ndarray  # (c, d) int64 at bitwidth config.q
    encoder: Encoder
    seed: int
    shadow: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        hvs = np.array(self.class_hvs, dtype=np.int64)
        if hvs.shape != (self.config.c, self.config.d):
            raise ValueError(f"class_hvs must have shape {(self.config.c, self.config.d)}, got {hvs.shape}")
        lo, hi = int_range(self.config.q)
        if hvs.min() < lo or hvs.max() > hi:
            raise ValueError(f"class hypervector elements exceed the {self.config.q}-bit range")
        hvs.setflags(write=False)
        object.__setattr__(self, "class_hvs", hvs)

    def class_hv(self, label: int) -> IntegerHV:
        return IntegerHV(self.config.d, self.config.q, self.class_hvs[label])

    def __eq__(self, other) -> bool:
        """Equality of the deployed model (shadow accumulators are excluded)."""
        if not isinstance(other, TrainedModel):
            return NotImplemented
        return (
            self.config == other.config
            and self.seed == other.seed
            and self.encoder == other.encoder
            and np.array_equal(self.class_hvs, other.class_hvs)
        )


def build_encoder(config: HdcConfig, seed: int) -> Encoder:
    """Encoder for ``config``; regenerating at a new size reuses the seed."""
    rng = Rng(seed).child("encoder")
    if config.encoder == ID_LEVEL:
        return make_id_level_codebook(config.f, config.d, config.l, rng)
    return make_projection(config.f, config.d, config.q, rng)


def quantize_class_hvs(shadow: np.ndarray, q: int) -> np.ndarray:
    """Per-class symmetric linear quantization to q bits.

    scale = max|e| / (2^(q-1) - 1); out = clamp(round(e / scale)).
    At q = 1 the result is the elementwise sign with sign(0) -> +1.
    All-zero rows stay zero.
    """
    if not 1 <= q <= 16:
        raise ValueError(f"q must be in [1, 16], got {q}")
    shadow = np.atleast_2d(np.asarray(shadow))
    peak = np.abs(shadow).max(axis=1)
    nonzero = peak > 0
    out = np.zeros(shadow.shape, dtype=np.int64)
    if q == 1:
        out[nonzero] = np.where(shadow[nonzero] >= 0, 1, -1)
        return out
    lo, hi = int_range(q)
    scale = peak[nonzero].astype(np.float64) / hi
    out[nonzero] = np.clip(np.rint(shadow[nonzero] / scale[:, None]), lo, hi)
    return out


def quantization_scale(shadow: np.ndarray, q: int) -> np.ndarray:
    peak = np.abs(np.atleast_2d(shadow)).max(axis=1).astype(np.float64)
    return peak / int_range(q)[1] if q > 1 else peak


def _check_acc_range(shadow: np.ndarray) -> None:
    if shadow.size and (shadow.min() < ACC_MIN or shadow.max() > ACC_MAX):
        raise OverflowError("class accumulator overflowed 32 bits")


def accumulate_classes(encoded: np.ndarray, labels: np.ndarray, n_classes: int) -> np.ndarray:
    """Per-class sums of encoded samples (exact, int64 storage, 32-bit checked)."""
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels must lie in [0, {n_classes})")
    shadow = np.zeros((n_classes, encoded.shape[1]), dtype=np.int64)
    for start in range(0, len(labels), _SCORE_CHUNK):
        stop = start + _SCORE_CHUNK
        onehot = np.zeros((n_classes, len(labels[start:stop])), dtype=np.float64)
        onehot[labels[start:stop], np.arange(len(labels[start:stop]))] = 1.0
        shadow += (onehot @ encoded[start:stop].astype(np.float64)).astype(np.int64)
    _check_acc_range(shadow)
    return shadow


def _warn_empty(hvs: np.ndarray) -> np.ndarray:
    empty = ~hvs.any(axis=1)
    if empty.any():
        warnings.warn(f"classes {np.flatnonzero(empty).tolist()} have all-zero hypervectors", stacklevel=3)
    return empty


def scores(encoded: np.ndarray, class_hvs: np.ndarray, similarity: str = "cosine") -> np.ndarray:
    """Similarity of every encoded sample against every class; (N, c) float64.

    All-zero class vectors score -inf so they never win the argmax.
    """
    hvs = np.asarray(class_hvs, dtype=np.float64)
    empty = ~hvs.any(axis=1)
    out = np.empty((encoded.shape[0], hvs.shape[0]), dtype=np.float64)
    for start in range(0, encoded.shape[0], _SCORE_CHUNK):
        block = np.asarray(encoded[start : start + _SCORE_CHUNK], dtype=np.float64)
        dots = block @ hvs.T
        if similarity == "cosine":
            norms = np.linalg.norm(block, axis=1)[:, None] * np.linalg.norm(hvs, axis=1)[None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                dots = dots / norms
        out[start : start + _SCORE_CHUNK] = dots
    out[:, empty] = -np.inf
    return out


def predict_encoded(encoded: np.ndarray, class_hvs: np.ndarray, similarity: str = "cosine") -> np.ndarray:
    """argmax of similarity; ties go to the lowest label."""
    return np.argmax(scores(encoded, class_hvs, similarity), axis=1)


def train_encoded(
    encoded: np.ndarray, labels: np.ndarray, encoder: Encoder, config: HdcConfig, seed: int
) -> TrainedModel:
    shadow = accumulate_classes(encoded, labels, config.c)
    hvs = quantize_class_hvs(shadow, config.q)
    _warn_empty(hvs)
    return TrainedModel(config, hvs, encoder, seed, shadow)


def train_single_pass(
    samples: np.ndarray, labels: np.ndarray, encoder: Encoder, config: HdcConfig, seed: int = 0
) -> TrainedModel:
    """Class vector = quantized sum of the encodings carrying that label."""
    return train_encoded(encode_batch(samples, encoder), labels, encoder, config, seed)


def _retrain_step(shadow, hvs, block, y, lr, options) -> np.ndarray:
    s = scores(block, hvs, options.similarity)
    pred = np.argmax(s, axis=1)
    wrong = np.flatnonzero(pred != y)
    if wrong.size == 0:
        return shadow
    c = shadow.shape[0]
    rows = np.arange(wrong.size)
    if options.update == "weighted":
        sim = s[wrong] if options.similarity == "cosine" else scores(block[wrong], hvs, "cosine")
        sim = np.where(np.isfinite(sim), sim, 0.0)
        w_true = lr * (1.0 - sim[rows, y[wrong]])
        w_pred = lr * (1.0 - sim[rows, pred[wrong]])
    else:
        w_true = w_pred = np.full(wrong.size, lr)
    coef = np.zeros((c, wrong.size), dtype=np.float64)
    np.add.at(coef, (y[wrong], rows), w_true)
    np.add.at(coef, (pred[wrong], rows), -w_pred)
    delta = coef @ np.asarray(block[wrong], dtype=np.float64)
    if shadow.dtype.kind == "i":
        delta = np.rint(delta).astype(np.int64)
    out = shadow + delta
    _check_acc_range(out)
    return out


def retrain_epoch_encoded(
    model: TrainedModel, encoded: np.ndarray, labels: np.ndarray, options: TrainOptions, epoch: int = 0
) -> TrainedModel:
    """One corrective pass: for each misclassified (x, y) predicted as y',
    shadow[y] += lr * enc(x) and shadow[y'] -= lr * enc(x).

    Predictions use the quantized class vectors, which are refreshed from
    the shadow accumulators after every batch (default: once per epoch).
    """
    if model.shadow is None:
        raise ValueError("retraining needs the model's shadow accumulators")
    labels = np.asarray(labels)
    shadow = model.shadow
    integral = options.update == "perceptron" and float(options.lr).is_integer()
    shadow = shadow.astype(np.int64 if integral and shadow.dtype.kind == "i" else np.float64)
    lr = int(options.lr) if integral else float(options.lr)
    q = model.config.q
    hvs = model.class_hvs
    order = np.arange(len(labels))
    if options.shuffle:
        order = Rng(options.shuffle_seed).child(f"epoch-{epoch}").generator.permutation(len(labels))
    batch = options.batch_size or max(1, len(labels))
    for start in range(0, len(labels), batch):
        idx = order[start : start + batch]
        new_shadow = _retrain_step(shadow, hvs, encoded[idx], labels[idx], lr, options)
        if new_shadow is not shadow:
            shadow = new_shadow
            hvs = quantize_class_hvs(shadow, q)
    return replace(model, class_hvs=hvs, shadow=shadow)


def retrain_encoded(
    model: TrainedModel, encoded: np.ndarray, labels: np.ndarray, options: TrainOptions
) -> TrainedModel:
    for epoch in range(options.epochs):
        model = retrain_epoch_encoded(model, encoded, labels, options, epoch)
    return model


def retrain_epoch(model: TrainedModel, samples: np.ndarray, labels: np.ndarray, lr: float = 1.0,
                  options: TrainOptions | None = None) -> TrainedModel:
    options = replace(options or TrainOptions(), lr=lr)
    return retrain_epoch_encoded(model, encode_batch(samples, model.encoder), labels, options)


def requantize(model: TrainedModel, q: int) -> TrainedModel:
    """Same shadow accumulators, class vectors re-quantized at a new bitwidth."""
    if model.shadow is None:
        raise ValueError("requantization needs the model's shadow accumulators")
    config = model.config.with_value("q", q)
    return replace(model, config=config, class_hvs=quantize_class_hvs(model.shadow, q))


def predict(model: TrainedModel, sample, similarity: str = "cosine") -> int:
    encoded = encode_batch(np.asarray(sample, dtype=np.float64).reshape(1, -1), model.encoder)
    _warn_empty(model.class_hvs)
    return int(predict_encoded(encoded, model.class_hvs, similarity)[0])


def evaluate_encoded(model: TrainedModel, encoded: np.ndarray, labels: np.ndarray, similarity: str = "cosine") -> float:
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    return float(np.mean(predict_encoded(encoded, model.class_hvs, similarity) == labels))


def evaluate(model: TrainedModel, samples: np.ndarray, labels: np.ndarray, similarity: str = "cosine") -> float:
    """Fraction of correct predictions."""
    if len(labels) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    return evaluate_encoded(model, encode_batch(samples, model.encoder), labels, similarity)


def fit(
    samples: np.ndarray,
    labels: np.ndarray,
    config: HdcConfig,
    seed: int = 0,
    options: TrainOptions | None = None,
) -> TrainedModel:
    """Build the encoder, train single-pass, then retrain for ``options.epochs``."""
    options = options or TrainOptions()
    encoder = build_encoder(config, seed)
    encoded = encode_batch(samples, encoder)
    model = train_encoded(encoded, labels, encoder, config, seed)
    return retrain_encoded(model, encoded, labels, options)


__all__ = [
    "ENCODER_KINDS",
    "HdcConfig",
    "ID_LEVEL",
    "PROJECTION",
    "IdLevelCodebook",
    "ProjectionMatrix",
    "TrainOptions",
    "TrainedModel",
    "accumulate_classes",
    "build_encoder",
    "evaluate",
    "evaluate_encoded",
    "fit",
    "predict",
    "predict_encoded",
    "quantize_class_hvs",
    "requantize",
    "retrain_encoded",
    "retrain_epoch",
    "retrain_epoch_encoded",
    "scores",
    "train_encoded",
    "train_single_pass",
]
