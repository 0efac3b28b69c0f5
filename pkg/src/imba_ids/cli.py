"""Command-line surface: stats, train, evaluate, compare, gradcheck, synth.

Exit codes are a stable scripting contract: 0 success, 1 runtime failure
(missing files, bad data, diverged training), 2 usage or configuration
errors. Training commands write their artifacts into a run directory named
by a hash of the resolved configuration, so identical runs land in the same
place; the manifest records config, dataset fingerprints, and versions.
"""

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunSettings, load_settings
from .data import (
    DatasetSchema,
    EncodedDataset,
    Normalizer,
    apply_normalizer,
    count_labels,
    encode,
    fit_normalizer,
    load_csv,
    load_schema,
    load_synth_spec,
    stratified_split,
    synth_generate,
    synth_schema,
    write_synth_csv,
)
from .linalg import make_rng
from .losses import LossSpec
from .metrics import imbalance_measure
from .model import init_mlp, load_checkpoint, save_checkpoint
from .train import compare_strategies, evaluate, gradient_check, train

logger = logging.getLogger(__name__)

THREADS_ENV = "IMBA_IDS_THREADS"
GRADCHECK_TOLERANCE = 1e-4

# argparse dests that feed config overrides, mirroring config file keys
_OVERRIDE_DESTS = (
    "dataset", "schema", "eval_dataset", "split", "out",
    "hidden_width", "hidden_layers", "keep_prob", "loss", "lam",
    "class_weights", "optimizer", "learning_rate", "rho1", "rho2", "delta",
    "batch_size", "epochs", "seed", "resampling", "strategies",
)


def _threads_from_env() -> int:
    """Worker-thread cap from IMBA_IDS_THREADS: unset -> 1, 0 -> all cores."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or not raw.strip():
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError(f"{THREADS_ENV} must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


def _add_experiment_flags(p: argparse.ArgumentParser, strategies: bool = False) -> None:
    p.add_argument("--config", help="INI config file ([data]/[train]/[run] sections)")
    p.add_argument("--dataset", help="training CSV")
    p.add_argument("--schema", help="dataset schema JSON")
    p.add_argument("--eval-dataset", help="held-out CSV (default: stratified split of --dataset)")
    p.add_argument("--split", help="train:test ratio for the default split (default 5:1)")
    p.add_argument("--out", help="output root for run directories (default runs)")
    p.add_argument("--hidden-width", help="units per hidden layer")
    p.add_argument("--hidden-layers", help="number of hidden layers")
    p.add_argument("--keep-prob", help="dropout keep probability")
    p.add_argument("--loss", help="cross_entropy | attack_sharing | weighted_ce (ce/as/wce)")
    p.add_argument("--lambda", dest="lam", help="attack-sharing penalty weight")
    p.add_argument("--class-weights", help="comma-separated per-class weights for weighted_ce")
    p.add_argument("--optimizer", help="adam | sgd")
    p.add_argument("--learning-rate", help="step size")
    p.add_argument("--rho1", help="first-moment decay rate")
    p.add_argument("--rho2", help="second-moment decay rate")
    p.add_argument("--delta", help="denominator stabilizer")
    p.add_argument("--batch-size", help="minibatch size")
    p.add_argument("--epochs", help="training epochs")
    p.add_argument("--seed", help="run seed")
    p.add_argument("--resampling", help="none | over | under")
    if strategies:
        p.add_argument("--strategies", help="comma-separated strategies: ce,as,wce,over,under")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imba-ids",
        description="Train and evaluate intrusion-detection classifiers on imbalanced flow data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="class distribution and imbalance measure of a dataset")
    p.add_argument("--dataset", required=True, help="CSV path")
    p.add_argument("--schema", required=True, help="dataset schema JSON")

    p = sub.add_parser("train", help="train a model and write a run directory")
    _add_experiment_flags(p)

    p = sub.add_parser("evaluate", help="evaluate a saved run on a dataset")
    p.add_argument("--run", required=True, help="run directory from a previous train")
    p.add_argument("--dataset", required=True, help="CSV to evaluate on")

    p = sub.add_parser("compare", help="train one model per strategy and tabulate the reports")
    _add_experiment_flags(p, strategies=True)

    p = sub.add_parser("gradcheck", help="check backpropagation against finite differences")
    p.add_argument("--seed", type=int, default=0, help="seed for the random instances")

    p = sub.add_parser("synth", help="generate a Gaussian-cluster synthetic dataset")
    p.add_argument("--spec", required=True, help="synth spec JSON")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--seed", type=int, default=None, help="override the generation seed")

    return parser


def _settings_from_args(args: argparse.Namespace) -> RunSettings:
    overrides = {d: getattr(args, d) for d in _OVERRIDE_DESTS if getattr(args, d, None) is not None}
    return load_settings(args.config, overrides)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _fingerprint(path, rows: int) -> dict:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return {"path": str(path), "rows": int(rows), "sha256": digest.hexdigest()}


@dataclass
class PreparedData:
    train: EncodedDataset
    eval: EncodedDataset
    normalizer: Normalizer
    schema: DatasetSchema
    fingerprints: list[dict]


def _prepare_data(settings: RunSettings) -> PreparedData:
    """Load, encode, split (seed stream 4), and normalize with train-set
    statistics."""
    schema = load_schema(settings.schema)
    table = load_csv(settings.dataset, schema)
    full = encode(table, schema)
    fingerprints = [_fingerprint(settings.dataset, len(table))]
    if settings.eval_dataset:
        eval_table = load_csv(settings.eval_dataset, schema)
        train_raw, eval_raw = full, encode(eval_table, schema, vocab=full.vocab)
        fingerprints.append(_fingerprint(settings.eval_dataset, len(eval_table)))
    else:
        train_raw, eval_raw = stratified_split(full, settings.split, make_rng(settings.train.seed, 4))
    norm = fit_normalizer(train_raw)
    return PreparedData(
        apply_normalizer(train_raw, norm), apply_normalizer(eval_raw, norm),
        norm, schema, fingerprints,
    )


def _make_run_dir(settings: RunSettings) -> Path:
    digest = hashlib.sha256(
        json.dumps(settings.to_dict(), sort_keys=True).encode()
    ).hexdigest()[:12]
    run_dir = Path(settings.out) / digest
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def _write_manifest(run_dir: Path, settings: RunSettings, fingerprints: list[dict],
                    artifacts: dict) -> None:
    _write_json(run_dir / "manifest.json", {
        "config": settings.to_dict(),
        "datasets": fingerprints,
        "artifacts": artifacts,
        "versions": {
            "imba_ids": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    })


def _write_preprocess(path: Path, schema: DatasetSchema, vocab: dict, norm: Normalizer) -> None:
    _write_json(path, {
        "schema": schema.to_dict(),
        "vocab": {name: list(cats) for name, cats in vocab.items()},
        "normalizer": {
            "mean": norm.mean.tolist(),
            "std": norm.std.tolist(),
            "numeric_idx": norm.numeric_idx.tolist(),
        },
    })


def _load_preprocess(path: Path):
    with open(path, encoding="utf-8") as f:
        d = json.load(f)
    schema = DatasetSchema.from_dict(d["schema"])
    vocab = {name: tuple(cats) for name, cats in d["vocab"].items()}
    n = d["normalizer"]
    norm = Normalizer(
        np.asarray(n["mean"], dtype=np.float64),
        np.asarray(n["std"], dtype=np.float64),
        np.asarray(n["numeric_idx"], dtype=np.int64),
    )
    return schema, vocab, norm


def cmd_stats(args: argparse.Namespace) -> int:
    schema = load_schema(args.schema)
    counts, _ = count_labels(args.dataset, schema)
    total = int(counts.sum())
    if total == 0:
        raise ValueError(f"{args.dataset}: no usable rows")
    width = max(len(c) for c in schema.classes) + 2
    print(f"{'class':<{width}}{'count':>12}{'fraction':>10}")
    for name, count in zip(schema.classes, counts):
        print(f"{name:<{width}}{int(count):>12}{100.0 * count / total:>9.2f}%")
    print(f"{'total':<{width}}{total:>12}")
    print(f"Omega_imb: {imbalance_measure(counts):.2f}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    settings = _settings_from_args(args)
    settings.require("dataset", "schema")
    data = _prepare_data(settings)
    model, history = train(settings.train, data.train)
    report = evaluate(model, data.eval)

    run_dir = _make_run_dir(settings)
    save_checkpoint(model, run_dir / "checkpoint.npz")
    _write_preprocess(run_dir / "preprocess.json", data.schema, data.train.vocab, data.normalizer)
    _write_json(run_dir / "history.json", history.to_record())
    _write_json(run_dir / "report.json", report.to_record())
    _write_manifest(run_dir, settings, data.fingerprints, {
        "checkpoint": "checkpoint.npz",
        "preprocess": "preprocess.json",
        "history": "history.json",
        "report": "report.json",
    })
    print(report.format_table())
    print(f"run_dir: {run_dir}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    run_dir = Path(args.run)
    schema, vocab, norm = _load_preprocess(run_dir / "preprocess.json")
    model = load_checkpoint(run_dir / "checkpoint.npz")
    table = load_csv(args.dataset, schema)
    ds = apply_normalizer(encode(table, schema, vocab=vocab), norm)
    print(evaluate(model, ds).format_table())
    return 0


def _compare_table(results) -> str:
    classes = results[0].report.class_names
    best = max(range(len(results)), key=lambda i: results[i].report.cba)
    head = f"{'strategy':<10}{'CBA':>8}"
    for c in classes:
        head += f"{c[:10] + ' P':>13}{c[:10] + ' R':>13}"
    lines = [head]
    for i, r in enumerate(results):
        line = f"{r.strategy:<10}{r.report.cba:>8.2f}"
        for p, q in zip(r.report.precision, r.report.recall):
            line += f"{p:>13.2f}{q:>13.2f}"
        if i == best:
            line += "  *best"
        lines.append(line)
    return "\n".join(lines)


def cmd_compare(args: argparse.Namespace) -> int:
    settings = _settings_from_args(args)
    settings.require("dataset", "schema")
    threads = _threads_from_env()
    data = _prepare_data(settings)
    results = compare_strategies(settings.train, settings.strategies,
                                 data.train, data.eval, threads=threads)

    run_dir = _make_run_dir(settings)
    rows = [{"strategy": r.strategy, **r.report.to_record()} for r in results]
    (run_dir / "compare.jsonl").write_text(
        "".join(json.dumps(row) + "\n" for row in rows), encoding="utf-8")
    _write_manifest(run_dir, settings, data.fingerprints, {"compare": "compare.jsonl"})
    print(_compare_table(results))
    print(f"run_dir: {run_dir}")
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    rng = make_rng(args.seed)
    input_dim, hidden_dims, num_classes, batch = 6, [12, 8], 4, 8
    checks = [
        ("cross_entropy", LossSpec(kind="cross_entropy")),
        ("attack_sharing lam=1", LossSpec(kind="attack_sharing", lam=1.0)),
        ("attack_sharing lam=10", LossSpec(kind="attack_sharing", lam=10.0)),
        ("weighted_ce", LossSpec(kind="weighted_ce", weights=(2.0, 0.5, 1.0, 1.5))),
    ]
    all_ok = True
    for name, spec in checks:
        model = init_mlp(input_dim, hidden_dims, num_classes, rng)
        x = rng.standard_normal((batch, input_dim))
        labels = rng.integers(0, num_classes, size=batch)
        result = gradient_check(model, spec, x, labels)
        ok = result.max_rel_err < GRADCHECK_TOLERANCE
        all_ok &= ok
        print(f"{name:<22} {result}  [{'ok' if ok else 'FAIL'}]")
    print(f"gradient check {'passed' if all_ok else 'FAILED'} (tolerance {GRADCHECK_TOLERANCE:g})")
    return 0 if all_ok else 1


def cmd_synth(args: argparse.Namespace) -> int:
    spec = load_synth_spec(args.spec)
    seed = spec.seed if args.seed is None else args.seed
    ds = synth_generate(spec, make_rng(seed))
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    write_synth_csv(ds, out)
    schema_path = out.with_suffix(".schema.json")
    _write_json(schema_path, synth_schema(spec).to_dict())
    print(f"wrote {ds.n} rows to {out} (schema: {schema_path})")
    return 0


_COMMANDS = {
    "stats": cmd_stats,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "gradcheck": cmd_gradcheck,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
