"""Command-line front end: ``microhd {train,optimize,evaluate,report}``.

Exit codes: 0 success, 2 usage/config error, 3 data/model error,
4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from microhd import cost
from microhd.config import ConfigError, RunConfig, int_list, load_manifest, merge
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
from microhd.encoders import encode_batch
from microhd.model import HdcConfig, TrainOptions, evaluate_encoded, fit
from microhd.modelfile import ModelFileError, load_model, save_model
from microhd.optimizer import OptTrace, ParamSpace, Workload, init_state, run

log = logging.getLogger("microhd")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 2, 3, 4
DATA_DIR_ENV = "MICROHD_DATA_DIR"
MODEL_NAME = "model.mhd"
SIDECAR_SUFFIX = ".json"


class InvariantViolation(RuntimeError):
    pass


def resolve_path(path: str) -> Path:
    """``path`` as given, else relative to $MICROHD_DATA_DIR."""
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    root = os.environ.get(DATA_DIR_ENV)
    if root and (Path(root) / p).exists():
        return Path(root) / p
    return p


def load_dataset(spec: str, cfg: RunConfig, label_names=None) -> Dataset:
    if cfg.format == "idx":
        parts = spec.split(",")
        if len(parts) != 2:
            raise ConfigError("idx datasets are given as IMAGES,LABELS")
        images, labels = (resolve_path(p.strip()) for p in parts)
        for p in (images, labels):
            if not p.exists():
                raise FileNotFoundError(f"dataset file not found: {p}")
        return load_idx(images, labels, label_names)
    path = resolve_path(spec)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    delimiter = None if cfg.delimiter in ("whitespace", "space", " ") else cfg.delimiter
    return load_csv(path, cfg.label_column, cfg.header, delimiter, label_names)


@dataclass
class Prepared:
    train: Dataset
    eval: Dataset
    test: Dataset | None
    scheme: str
    stats: FeatureStats
    label_names: tuple[str, ...]


def prepare(cfg: RunConfig) -> Prepared:
    if not cfg.dataset:
        raise ConfigError("--dataset is required")
    full = load_dataset(cfg.dataset, cfg)
    test = load_dataset(cfg.test_dataset, cfg, full.label_names) if cfg.test_dataset else None
    if test is not None and test.n_features != full.n_features:
        raise DataFormatError(f"test set has {test.n_features} features, training set {full.n_features}")
    train, ev = split(full, cfg.split_ratio, cfg.seed)
    stats = compute_stats(train)
    scheme = cfg.normalize or default_normalization(cfg.encoder)
    train, ev = normalize(train, scheme, stats), normalize(ev, scheme, stats)
    if test is not None:
        test = normalize(test, scheme, stats)
    return Prepared(train, ev, test, scheme, stats, full.label_names)


def hdc_config(cfg: RunConfig, f: int, c: int) -> HdcConfig:
    l = cfg.l if cfg.encoder == "id-level" else 0
    try:
        return HdcConfig(cfg.encoder, d=cfg.d, q=cfg.q, f=f, c=c, l=l)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def train_options(cfg: RunConfig) -> TrainOptions:
    try:
        return TrainOptions(epochs=cfg.epochs, lr=cfg.lr, similarity=cfg.similarity, update=cfg.update)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _accuracy(model, ds: Dataset | None, similarity: str) -> float | None:
    if ds is None or len(ds) == 0:
        return None
    return evaluate_encoded(model, encode_batch(ds.samples, model.encoder), ds.labels, similarity)


def _fmt(value) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _config_lines(prefix: str, config: HdcConfig) -> list[str]:
    return [f"{prefix}{k} = {v}" for k, v in config.as_dict().items()]


def write_sidecar(model_path: Path, prep: Prepared, cfg: RunConfig) -> None:
    data = {
        "normalization": prep.scheme,
        "stats": prep.stats.as_dict(),
        "label_names": list(prep.label_names),
        "similarity": cfg.similarity,
        "format": cfg.format,
        "label_column": cfg.label_column,
        "header": cfg.header,
        "delimiter": cfg.delimiter,
    }
    Path(str(model_path) + SIDECAR_SUFFIX).write_text(json.dumps(data, indent=1, sort_keys=True), encoding="utf-8")


def _emit(lines: list[str], path: Path | None = None) -> None:
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if path is not None:
        path.write_text(text, encoding="utf-8")


def cmd_train(cfg: RunConfig) -> int:
    prep = prepare(cfg)
    config = hdc_config(cfg, prep.train.n_features, len(prep.label_names))
    options = train_options(cfg)
    model = fit(prep.train.samples, prep.train.labels, config, cfg.seed, options)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / MODEL_NAME
    size = save_model(model, model_path)
    write_sidecar(model_path, prep, cfg)
    rep = cost.report(config)
    lines = ["command = train", f"dataset = {cfg.dataset}", f"normalization = {prep.scheme}",
             f"seed = {cfg.seed}", f"epochs = {cfg.epochs}", f"lr = {cfg.lr}"]
    lines += _config_lines("", config)
    lines += [
        f"train_samples = {len(prep.train)}",
        f"eval_samples = {len(prep.eval)}",
        f"eval_accuracy = {_fmt(_accuracy(model, prep.eval, cfg.similarity))}",
        f"test_accuracy = {_fmt(_accuracy(model, prep.test, cfg.similarity))}",
    ]
    lines += rep.lines()
    lines += [f"model_file = {model_path}", f"model_file_bytes = {size}"]
    _emit(lines, out / "train_report.txt")
    return EXIT_OK


def param_space(cfg: RunConfig, config: HdcConfig) -> ParamSpace:
    space = ParamSpace.default(config).values
    for name, values in (("d", cfg.values_d), ("l", cfg.values_l), ("q", cfg.values_q)):
        if values is not None:
            space[name] = values
    try:
        ps = ParamSpace(space)
        ps.check(config)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ps


def cmd_optimize(cfg: RunConfig) -> int:
    prep = prepare(cfg)
    config = hdc_config(cfg, prep.train.n_features, len(prep.label_names))
    space = param_space(cfg, config)
    options = train_options(cfg)
    workload = Workload(prep.train, prep.eval)
    state = init_state(workload, config, space, cfg.threshold / 100.0, cfg.seed, options)
    baseline = state.model
    result = run(state, workload)
    if result.accuracy < result.accuracy_floor - 1e-12:
        raise InvariantViolation("final model violates the accuracy floor")
    probes = len(result.trace.probes)
    bound = space.probe_bound(config)
    if probes > bound:
        raise InvariantViolation(f"{probes} probes exceed the bound {bound}")

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / MODEL_NAME
    size = save_model(result.model, model_path)
    write_sidecar(model_path, prep, cfg)
    result.trace.write(out / "trace.jsonl")

    base_rep, final_rep = cost.report(config), cost.report(result.config)
    mem_factor, comp_factor = cost.savings(config, result.config)
    base_test = _accuracy(baseline, prep.test, cfg.similarity)
    final_test = _accuracy(result.model, prep.test, cfg.similarity)
    lines = ["command = optimize", f"dataset = {cfg.dataset}", f"normalization = {prep.scheme}",
             f"seed = {cfg.seed}", f"epochs = {cfg.epochs}", f"lr = {cfg.lr}",
             f"threshold_percent = {cfg.threshold}"]
    lines += [f"values_{p} = {','.join(map(str, space.values[p]))}" for p in space.params(config)]
    lines += _config_lines("baseline_", config)
    lines += _config_lines("final_", result.config)
    lines += [
        f"baseline_eval_accuracy = {_fmt(result.baseline_accuracy)}",
        f"accuracy_floor = {_fmt(result.accuracy_floor)}",
        f"final_eval_accuracy = {_fmt(result.accuracy)}",
        f"baseline_test_accuracy = {_fmt(base_test)}",
        f"final_test_accuracy = {_fmt(final_test)}",
        f"baseline_memory_bits = {base_rep.memory_bits}",
        f"final_memory_bits = {final_rep.memory_bits}",
        f"baseline_memory_kib = {base_rep.memory_kib:.1f}",
        f"final_memory_kib = {final_rep.memory_kib:.1f}",
        f"final_memory_kb = {final_rep.memory_kb:.1f}",
        f"compression_factor = {mem_factor:.4f}",
        f"compute_reduction_factor = {comp_factor:.4f}",
        f"probes = {probes}",
        f"probe_bound = {bound}",
        f"accepted_steps = {len(result.trace.accepted)}",
        f"model_file = {model_path}",
        f"model_file_bytes = {size}",
        f"trace_file = {out / 'trace.jsonl'}",
    ]
    _emit(lines, out / "report.txt")
    return EXIT_OK


def cmd_evaluate(model_path: str, cfg: RunConfig) -> int:
    path = Path(model_path)
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path}")
    model = load_model(path)
    sidecar = Path(str(path) + SIDECAR_SUFFIX)
    label_names = None
    similarity = cfg.similarity
    if sidecar.exists():
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
        label_names = meta["label_names"]
        similarity = meta.get("similarity", similarity)
    else:
        log.warning("no preprocessing sidecar next to %s; using samples as stored", path)
    if not cfg.dataset:
        raise ConfigError("--dataset is required")
    ds = load_dataset(cfg.dataset, cfg, label_names)
    if sidecar.exists():
        ds = normalize(ds, meta["normalization"], FeatureStats.from_dict(meta["stats"]))
    if ds.n_features != model.config.f:
        raise DataFormatError(f"dataset has {ds.n_features} features, model expects {model.config.f}")
    if ds.n_classes > model.config.c:
        raise DataFormatError(f"dataset has {ds.n_classes} classes, model has {model.config.c}")
    acc = _accuracy(model, ds, similarity)
    lines = ["command = evaluate", f"model_file = {path}", f"dataset = {cfg.dataset}"]
    lines += _config_lines("", model.config)
    lines += [f"samples = {len(ds)}", f"test_accuracy = {_fmt(acc)}"]
    lines += cost.report(model.config).lines()
    _emit(lines)
    return EXIT_OK


def _trace_config(rec: dict) -> HdcConfig:
    try:
        return HdcConfig(**rec["config"])
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed config in trace record: {exc}") from None


def report_rows(trace: OptTrace) -> list[dict]:
    """Per-record rows with cumulative factors against the baseline."""
    base = _trace_config(trace.records[0])
    current = base
    rows = []
    for rec in trace.records:
        cfg = _trace_config(rec)
        if rec["kind"] == "probe" and rec.get("accepted"):
            current = cfg
        mem, comp = cost.savings(base, current)
        rows.append({
            "iteration": rec.get("iteration", 0),
            "kind": rec["kind"],
            "param": rec.get("param", ""),
            "value": rec.get("value", ""),
            "eval_accuracy": rec.get("eval_accuracy", rec.get("accuracy")),
            "accepted": rec.get("accepted", True),
            "memory_bits": cost.memory_bits(cfg),
            "memory_factor": mem,
            "compute_factor": comp,
        })
    return rows


def report_csv(rows: list[dict]) -> str:
    cols = ["iteration", "kind", "param", "value", "eval_accuracy", "accepted", "memory_bits",
            "memory_factor", "compute_factor"]
    out = [",".join(cols)]
    for r in rows:
        vals = []
        for c in cols:
            v = r[c]
            if isinstance(v, float):
                v = f"{v:.6f}"
            elif isinstance(v, bool):
                v = "1" if v else "0"
            elif v is None:
                v = ""
            vals.append(str(v))
        out.append(",".join(vals))
    return "\n".join(out) + "\n"


def cmd_report(trace_path: str, csv_path: str | None) -> int:
    path = Path(trace_path)
    if not path.exists():
        raise FileNotFoundError(f"trace file not found: {path}")
    trace = OptTrace.read(path)
    rows = report_rows(trace)
    lines = [f"{'iter':>4}  {'param':<5} {'value':>7} {'eval_acc':>9} {'result':<8} {'memory_bits':>12}"]
    for r in rows:
        result = "baseline" if r["kind"] == "baseline" else ("accept" if r["accepted"] else "reject")
        acc = "n/a" if r["eval_accuracy"] is None else f"{r['eval_accuracy']:.4f}"
        lines.append(f"{r['iteration']:>4}  {r['param']:<5} {str(r['value']):>7} {acc:>9} {result:<8} "
                     f"{r['memory_bits']:>12}")
    base = _trace_config(trace.records[0])
    final = rows[-1]
    final_cfg = base
    for rec in trace.accepted:
        final_cfg = _trace_config(rec)
    lines += ["", f"probes = {len(trace.probes)}", f"accepted_steps = {len(trace.accepted)}"]
    lines += [f"accepted = {r['param']}={r['value']}" for r in trace.accepted]
    lines += _config_lines("baseline_", base) + _config_lines("final_", final_cfg)
    lines += [f"memory_factor = {final['memory_factor']:.4f}", f"compute_factor = {final['compute_factor']:.4f}"]
    csv_text = report_csv(rows)
    if csv_path:
        Path(csv_path).write_text(csv_text, encoding="utf-8")
        lines.append(f"csv_file = {csv_path}")
    else:
        lines += ["", csv_text.rstrip("\n")]
    _emit(lines)
    return EXIT_OK


def _add_run_flags(p: argparse.ArgumentParser, with_model: bool = False) -> None:
    p.add_argument("--config", help="key = value manifest; flags override it")
    p.add_argument("--dataset", help="training CSV, or IMAGES,LABELS for idx")
    p.add_argument("--test-dataset", dest="test_dataset", help="held-out test set, same format")
    p.add_argument("--format", choices=("csv", "idx"))
    p.add_argument("--label-column", dest="label_column")
    p.add_argument("--header", action="store_const", const=True, help="CSV has a header row")
    p.add_argument("--delimiter", help="CSV delimiter, or 'whitespace'")
    p.add_argument("--normalize", choices=("minmax", "zscore", "none"))
    p.add_argument("--similarity", choices=("cosine", "dot"))
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    if with_model:
        return
    p.add_argument("--encoder", choices=("id-level", "projection"))
    p.add_argument("--d", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--threshold", type=float, help="tolerated eval accuracy drop, percentage points")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--update", choices=("perceptron", "weighted"))
    p.add_argument("--split-ratio", dest="split_ratio", type=float)
    p.add_argument("--out")
    p.add_argument("--values-d", dest="values_d", type=int_list)
    p.add_argument("--values-l", dest="values_l", type=int_list)
    p.add_argument("--values-q", dest="values_q", type=int_list)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="microhd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("train", help="train a baseline model"))
    _add_run_flags(sub.add_parser("optimize", help="run the accuracy-constrained compression loop"))
    ev = sub.add_parser("evaluate", help="evaluate a saved model on a dataset")
    ev.add_argument("model", help="model file written by train/optimize")
    _add_run_flags(ev, with_model=True)
    rp = sub.add_parser("report", help="summarize an optimization trace")
    rp.add_argument("trace")
    rp.add_argument("--csv", help="write the per-iteration CSV here")
    return parser


def run_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = merge(cfg, load_manifest(args.config))
    flags = {k: v for k, v in vars(args).items()
             if v is not None and k not in ("config", "command", "verbose", "model", "trace", "csv")}
    if "label_column" in flags:
        try:
            flags["label_column"] = int(flags["label_column"])
        except ValueError:
            pass
    return merge(cfg, flags).validate()


def _threads(n: int | None):
    if n is None:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    np.seterr(all="ignore")
    try:
        if args.command == "report":
            return cmd_report(args.trace, args.csv)
        cfg = run_config(args)
        with _threads(cfg.threads):
            if args.command == "train":
                return cmd_train(cfg)
            if args.command == "optimize":
                return cmd_optimize(cfg)
            return cmd_evaluate(args.model, cfg)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"microhd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, ModelFileError, ValueError, OverflowError) as exc:
        print(f"microhd: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvariantViolation as exc:
        print(f"microhd: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
