"""Closed-form memory and compute requirements of an HDC configuration.

Memory (bits):
    id-level    d * (f + l + c*q)     ID, level and class hypervectors
    projection  d * q * (f + c)       projection matrix and class hypervectors

Compute (bit-level binding/bundling operations per sample; an operation on
a w-bit operand counts w):
    encode      id-level: f*d bind-bits + f*d bundle-bits = 2*f*d
                projection: f*d*q multiply-accumulate bits
    inference   c*d*q   similarity against every class hypervector
    train       d*q     one bundle into a class hypervector (single pass)
"""

from __future__ import annotations

from dataclasses import dataclass

from microhd.model import ID_LEVEL, HdcConfig


@dataclass(frozen=True)
class ResourceReport:
    memory_bits: int
    encode_ops: int
    inference_ops: int
    train_ops: int

    @property
    def total_ops(self) -> int:
        return self.encode_ops + self.inference_ops + self.train_ops

    @property
    def memory_kib(self) -> float:
        return self.memory_bits / 8 / 1024

    @property
    def memory_kb(self) -> float:
        return self.memory_bits / 8 / 1000

    def lines(self) -> list[str]:
        return [
            f"memory_bits = {self.memory_bits}",
            f"memory_kib = {self.memory_kib:.1f}",
            f"memory_kb = {self.memory_kb:.1f}",
            f"encode_ops_per_sample = {self.encode_ops}",
            f"inference_ops_per_sample = {self.inference_ops}",
            f"train_ops_per_sample = {self.train_ops}",
            "ops_definition = bind/bundle bit-ops; a w-bit operand counts w",
        ]


def memory_bits(config: HdcConfig) -> int:
    d, f, c, q = config.d, config.f, config.c, config.q
    if config.encoder == ID_LEVEL:
        return d * (f + config.l + c * q)
    return d * q * (f + c)


def compute_ops(config: HdcConfig) -> tuple[int, int, int]:
    """(encode, inference, train) bit-ops per sample."""
    d, f, c, q = config.d, config.f, config.c, config.q
    encode = 2 * f * d if config.encoder == ID_LEVEL else f * d * q
    return encode, c * d * q, d * q


def report(config: HdcConfig) -> ResourceReport:
    return ResourceReport(memory_bits(config), *compute_ops(config))


def savings(a: HdcConfig, b: HdcConfig) -> tuple[float, float]:
    """(memory ratio, compute ratio) of a over b; > 1 means b is cheaper."""
    if (a.encoder, a.f, a.c) != (b.encoder, b.f, b.c):
        raise ValueError("savings compares configurations of the same workload only")
    ra, rb = report(a), report(b)
    return ra.memory_bits / rb.memory_bits, ra.total_ops / rb.total_ops
