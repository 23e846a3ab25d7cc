"""Acceptance criteria C1-C7; one PASS/FAIL line per criterion is printed
in the terminal summary.

C1 and C2 need the ISOLET and UCIHAR files under $MICROHD_DATA_DIR and
fail (not skip) when they are absent.
"""

import math
import time

import numpy as np
import pytest
from conftest import make_blobs

from microhd import cost
from microhd.data import compute_stats, normalize, split
from microhd.datasets import DatasetUnavailable, load_isolet, load_ucihar
from microhd.encoders import (
    encode_batch,
    level_similarity_profile,
    make_id_level_codebook,
)
from microhd.hv import BipolarHV, bind, dot_similarity, hamming, permute, random_bipolar
from microhd.model import HdcConfig, TrainOptions, evaluate, evaluate_encoded, fit
from microhd.modelfile import HEADER_SIZE, payload_bits, to_bytes
from microhd.optimizer import (
    ParamSpace,
    Workload,
    establish_baseline,
    grid_search,
    optimize,
)
from microhd.rng import Rng

C1 = pytest.mark.criterion("C1", "baseline accuracy on ISOLET id-level and UCIHAR projection within 2 points")
C2 = pytest.mark.criterion("C2", "1% optimization: ISOLET <= 400 KB, test drop <= 2 points; UCIHAR <= 120 KB")
C3 = pytest.mark.criterion("C3", "memory formula equals serialized bits; reference memory figures within 1%")
C4 = pytest.mark.criterion("C4", "optimizer safety on 200 blob workloads; accepted steps cut memory")
C5 = pytest.mark.criterion("C5", "probe count <= 2*H*ceil(log2 max|V|) + 1 on every C4 run")
C6 = pytest.mark.criterion("C6", "greedy result feasible and within 1.5x of grid minimum memory, 20 seeds")
C7 = pytest.mark.criterion("C7", "hypervector algebra suite")

ACC_TOL = 2.0  # percentage points
KIB = 8 * 1024


# ---------------------------------------------------------------- C1 / C2

def _benchmark(loader, scheme):
    try:
        train_full, test = loader()
    except DatasetUnavailable as exc:
        pytest.fail(f"dataset not available ({exc}); place it under $MICROHD_DATA_DIR to run this criterion")
    train, ev = split(train_full, 0.8, 0)
    stats = compute_stats(train)
    return tuple(normalize(ds, scheme, stats) for ds in (train, ev, test))


@C1
@pytest.mark.slow
def test_c1_isolet_id_level_baseline():
    train, _, test = _benchmark(load_isolet, "minmax")
    assert (train.n_features, train.n_classes) == (617, 26)
    cfg = HdcConfig("id-level", d=10000, q=16, f=617, c=26, l=1024)
    t0 = time.perf_counter()
    model = fit(train.samples, train.labels, cfg, 0, TrainOptions(epochs=30))
    acc = 100 * evaluate(model, test.samples, test.labels)
    assert abs(acc - 91.41) <= ACC_TOL, f"test accuracy {acc:.2f}%"
    assert time.perf_counter() - t0 < 30 * 60


@C1
@pytest.mark.slow
def test_c1_ucihar_projection_baseline():
    train, _, test = _benchmark(load_ucihar, "zscore")
    assert (train.n_features, train.n_classes) == (561, 6)
    cfg = HdcConfig("projection", d=10000, q=16, f=561, c=6)
    t0 = time.perf_counter()
    model = fit(train.samples, train.labels, cfg, 0, TrainOptions(epochs=30))
    acc = 100 * evaluate(model, test.samples, test.labels)
    assert abs(acc - 91.31) <= ACC_TOL, f"test accuracy {acc:.2f}%"
    assert time.perf_counter() - t0 < 30 * 60


def _optimize_benchmark(loader, scheme, cfg):
    train, ev, test = _benchmark(loader, scheme)
    t0 = time.perf_counter()
    wl = Workload(train, ev)
    base = establish_baseline(wl, cfg, 0.01, 0)
    result = optimize(wl, cfg, 0.01, None, 0)
    elapsed = time.perf_counter() - t0
    assert result.baseline_accuracy == base.accuracy
    assert result.accuracy >= result.accuracy_floor - 1e-12
    base_test = evaluate(base.model, test.samples, test.labels)
    final_test = evaluate(result.model, test.samples, test.labels)
    return result, base_test, final_test, elapsed


@C2
@pytest.mark.slow
def test_c2_isolet_id_level_optimization():
    cfg = HdcConfig("id-level", d=10000, q=16, f=617, c=26, l=1024)
    result, base_test, final_test, elapsed = _optimize_benchmark(load_isolet, "minmax", cfg)
    kib = cost.memory_bits(result.config) / KIB
    assert kib <= 400, f"final memory {kib:.1f} KiB ({result.config})"
    assert 100 * (base_test - final_test) <= 2.0
    assert elapsed < 4 * 3600


@C2
@pytest.mark.slow
def test_c2_ucihar_projection_optimization():
    cfg = HdcConfig("projection", d=10000, q=16, f=561, c=6)
    result, _, _, elapsed = _optimize_benchmark(load_ucihar, "zscore", cfg)
    kib = cost.memory_bits(result.config) / KIB
    assert kib <= 120, f"final memory {kib:.1f} KiB ({result.config})"
    assert elapsed < 4 * 3600


# ---------------------------------------------------------------- C3

@C3
def test_c3_memory_bits_equal_serialized_payload():
    g = np.random.default_rng(2024)
    t0 = time.perf_counter()
    for i in range(50):
        encoder = "id-level" if i % 2 == 0 else "projection"
        d, q, f, c = int(g.integers(1, 300)), int(g.integers(1, 17)), int(g.integers(1, 40)), int(g.integers(1, 12))
        l = int(g.integers(2, 64)) if encoder == "id-level" else 0
        cfg = HdcConfig(encoder, d=d, q=q, f=f, c=c, l=l)
        x = g.random((2 * c, f))
        model = fit(x, np.arange(2 * c) % c, cfg, i, TrainOptions(epochs=0))
        if q == 1 and not model.class_hvs.all():
            model = type(model)(cfg, np.where(model.class_hvs >= 0, 1, -1), model.encoder, model.seed)
        assert payload_bits(model).size == cost.memory_bits(cfg)
        assert len(to_bytes(model)) == HEADER_SIZE + math.ceil(cost.memory_bits(cfg) / 8)
    assert time.perf_counter() - t0 < 1.0


# Reference memory figures (KB) for benchmark configurations, with public dataset shapes (f, c).
WORKLOADS = {"ISOLET": (617, 26), "UCIHAR": (561, 6), "MNIST": (784, 10), "FMNIST": (784, 10), "Connect-4": (42, 3)}
REFERENCE_MEMORY = [
    ("ISOLET", "id-level", 10000, 1024, 16, 2530.5),
    ("ISOLET", "id-level", 2000, 32, 16, 263.9),
    ("ISOLET", "projection", 10000, 0, 16, 12578.1),
    ("ISOLET", "projection", 200, 0, 16, 251.5),
    ("UCIHAR", "id-level", 10000, 1024, 16, 2071.5),
    ("UCIHAR", "id-level", 2000, 4, 3, 143.0),
    ("UCIHAR", "projection", 10000, 0, 16, 11093.7),
    ("UCIHAR", "projection", 200, 0, 4, 55.5),
    ("MNIST", "id-level", 10000, 1024, 16, 2421.9),
    ("MNIST", "id-level", 1000, 4, 2, 99.4),
    ("MNIST", "projection", 10000, 0, 16, 15527.3),
    ("MNIST", "projection", 500, 0, 13, 630.8),
    ("FMNIST", "id-level", 10000, 1024, 16, 2421.9),
    ("FMNIST", "id-level", 2000, 16, 2, 200.7),
    ("FMNIST", "projection", 10000, 0, 16, 15527.3),
    ("FMNIST", "projection", 200, 0, 5, 97.1),
    ("Connect-4", "id-level", 10000, 1024, 16, 1379.4),
    ("Connect-4", "id-level", 1000, 16, 7, 10.5),
    ("Connect-4", "projection", 10000, 0, 16, 898.4),
    ("Connect-4", "projection", 9000, 0, 14, 707.5),
]


@C3
@pytest.mark.parametrize("name, encoder, d, l, q, reported", REFERENCE_MEMORY,
                         ids=[f"{r[0]}-{r[1]}-d{r[2]}-q{r[4]}" for r in REFERENCE_MEMORY])
def test_c3_reference_memory_within_one_percent(name, encoder, d, l, q, reported):
    f, c = WORKLOADS[name]
    kib = cost.memory_bits(HdcConfig(encoder, d=d, q=q, f=f, c=c, l=l)) / KIB
    assert abs(kib - reported) / reported <= 0.01, f"{kib:.1f} KiB vs {reported} KB"


# ---------------------------------------------------------------- C4 / C5

def _random_run(i):
    g = np.random.default_rng(10_000 + i)
    encoder = "id-level" if i % 2 == 0 else "projection"
    n_classes, f = int(g.integers(2, 11)), int(g.integers(2, 33))
    full = make_blobs(n_classes, f, int(g.integers(12, 31)), spread=float(g.uniform(0.5, 4.0)),
                      separation=float(g.uniform(1.0, 5.0)), seed=20_000 + i)
    train, ev = split(full, 0.8, i)
    scheme = "minmax" if encoder == "id-level" else "zscore"
    stats = compute_stats(train)
    wl = Workload(normalize(train, scheme, stats), normalize(ev, scheme, stats))
    n_d = int(g.integers(1, 9))
    smaller = (50, 100, 200, 300, 500, 700, 800)
    d_values = tuple(sorted(g.choice(smaller, n_d - 1, replace=False).tolist())) + (1000,)
    values = {"d": d_values, "q": tuple(sorted(g.choice([1, 2, 3, 4, 5, 7], 3, replace=False).tolist())) + (8,)}
    if encoder == "id-level":
        values["l"] = (2, 4, 8, 16, 32)
    cfg = HdcConfig(encoder, d=1000, q=8, f=f, c=n_classes, l=32 if encoder == "id-level" else 0)
    threshold = float(g.choice([0.0, 0.005, 0.01, 0.05]))
    space = ParamSpace(values)
    options = TrainOptions(epochs=3)
    result = optimize(wl, cfg, threshold, space, i, options)
    base = establish_baseline(wl, cfg, threshold, i, options)
    final_acc = evaluate_encoded(result.model, encode_batch(wl.eval.samples, result.model.encoder), wl.eval.labels)
    return {"result": result, "baseline": base.accuracy, "threshold": threshold, "final_acc": final_acc,
            "bound": space.probe_bound(cfg), "space": space}


@pytest.fixture(scope="module")
def blob_runs():
    t0 = time.perf_counter()
    runs = [_random_run(i) for i in range(200)]
    return runs, time.perf_counter() - t0


@C4
def test_c4_optimizer_safety(blob_runs):
    runs, elapsed = blob_runs
    safe = 0
    for run in runs:
        res = run["result"]
        assert res.baseline_accuracy == run["baseline"]
        assert run["final_acc"] == res.accuracy
        if run["final_acc"] >= run["baseline"] - run["threshold"] - 1e-12:
            safe += 1
    assert safe == 200
    assert elapsed < 20 * 60


@C4
def test_c4_accepted_steps_strictly_decrease_memory(blob_runs):
    runs, _ = blob_runs
    for run in runs:
        trace = run["result"].trace
        bits = trace.records[0]["memory_bits"]
        for rec in trace.accepted:
            assert rec["memory_bits"] < bits
            bits = rec["memory_bits"]
        assert bits == cost.memory_bits(run["result"].config)


@C4
def test_c4_workloads_exercise_the_search(blob_runs):
    runs, _ = blob_runs
    assert sum(len(r["result"].trace.accepted) > 0 for r in runs) > 100
    assert sum(any(not p["accepted"] for p in r["result"].trace.probes) for r in runs) > 50


@C5
def test_c5_probe_count_bound(blob_runs):
    runs, _ = blob_runs
    for run in runs:
        trace = run["result"].trace
        assert len(trace.probes) <= run["bound"]
        assert len(trace) <= run["bound"]


# ---------------------------------------------------------------- C6

@C6
def test_c6_grid_oracle_equivalence():
    # ten classes in 32 features: small d and q visibly cost accuracy here
    options = TrainOptions(epochs=10)
    space = ParamSpace({"d": (100, 300, 1000), "q": (1, 3, 8)})
    cfg = HdcConfig("projection", d=1000, q=8, f=32, c=10)
    failures = []
    for seed in range(20):
        full = make_blobs(10, 32, 60, spread=3.0, separation=1.6, seed=300 + seed)
        train, ev = split(full, 0.8, seed)
        stats = compute_stats(train)
        wl = Workload(normalize(train, "zscore", stats), normalize(ev, "zscore", stats))
        grid = grid_search(wl, cfg, space, 0.01, seed, options)
        result = optimize(wl, cfg, 0.01, space, seed, options)
        feasible = [g[0] for g in grid if g[2]]
        best = min(cost.memory_bits(c) for c in feasible)
        ratio = cost.memory_bits(result.config) / best
        if result.config not in feasible or ratio > 1.5:
            failures.append(f"seed {seed}: {result.config.d}/{result.config.q} at {ratio:.2f}x, feasible "
                            f"{sorted((c.d, c.q) for c in feasible)}")
    assert not failures, "; ".join(failures)


# ---------------------------------------------------------------- C7

@C7
def test_c7_algebra():
    t0 = time.perf_counter()
    rng = Rng(77)
    for d in (1, 63, 64, 65, 1000):
        for _ in range(20):
            a, b, c = (random_bipolar(d, rng) for _ in range(3))
            assert bind(bind(a, b), b) == a
            assert bind(a, b) == bind(b, a)
            assert bind(bind(a, b), c) == bind(a, bind(b, c))
            assert permute(a, d) == a and permute(permute(a, 3), -3) == a
            assert np.array_equal(permute(a, 1).elements(), np.roll(a.elements(), 1))
            oracle = int(np.dot(a.elements().astype(int), b.elements().astype(int)))
            assert dot_similarity(a, b) == oracle == d - 2 * hamming(a, b)
    ratios = [abs(dot_similarity(random_bipolar(10000, rng), random_bipolar(10000, rng))) / 10000
              for _ in range(1000)]
    assert np.mean(ratios) < 0.02 and max(ratios) < 0.049
    cb = make_id_level_codebook(1, 10000, 1024, Rng(5))
    profile = level_similarity_profile(cb)
    assert np.all(np.diff(profile) < 0)
    assert profile[-1] < 0.25
    assert BipolarHV.from_elements([1, -1]).elements().tolist() == [1, -1]
    assert time.perf_counter() - t0 < 60
