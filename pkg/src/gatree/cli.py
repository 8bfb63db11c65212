"""Command-line interface: ``gatree {train,predict,crossval,export,datagen}``.

Exit codes: 0 success, 1 unreadable or malformed input, 2 invalid
configuration, 3 model/data schema mismatch.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import sys
from dataclasses import fields
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .arff import ArffError, parse_arff, write_arff
from .evaluation import cross_validate
from .evolution import EvolutionConfig, GenerationStats, accuracy, evolve
from .soil import GenConfig, default_table, generate, header_comments
from .tree import (
    MissingValueError,
    ModelFormatError,
    SchemaMismatchError,
    deserialize,
    extract_rules,
    format_rules,
    predict,
    serialize,
    to_dot,
)

EXIT_PARSE, EXIT_CONFIG, EXIT_SCHEMA = 1, 2, 3

STATS_HEADER = ["generation", "best_fitness", "avg_fitness", "best_size", "train_acc", "test_acc"]


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# --------------------------------------------------------------------------
# helpers


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_PARSE) from None


def _load_arff(path: str, **kwargs):
    try:
        return parse_arff(_read_text(path), **kwargs)
    except ArffError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from None


def _load_model(path: str, schema=None):
    try:
        return deserialize(_read_text(path), schema)
    except SchemaMismatchError as exc:
        raise CliError(f"{path}: {exc}", EXIT_SCHEMA) from None
    except ModelFormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from None


def _digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x)) if isinstance(x, float) else str(x)


def stats_rows(history: Sequence[GenerationStats]):
    for s in history:
        yield [
            s.generation, _fmt(s.best_fitness), _fmt(s.avg_fitness),
            s.best_size, _fmt(s.best_train_accuracy), _fmt(s.test_accuracy),
        ]


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _manifest(command: str, items: list[tuple[str, object]]) -> str:
    lines = ["tool=gatree", f"version={__version__}", f"command={command}"]
    lines += [f"{k}={_fmt(v) if isinstance(v, float) else v}" for k, v in items]
    return "\n".join(lines) + "\n"


def _config_from(args) -> EvolutionConfig:
    try:
        return EvolutionConfig(
            population_size=args.population,
            generations=args.generations,
            crossover_prob=args.crossover,
            mutation_prob=args.mutation,
            replacement_fraction=args.replace,
            size_bias_x=args.size_bias,
            elitism=args.elitism,
            seed=args.seed,
            max_size=args.max_size,
            workers=args.workers,
        )
    except ValueError as exc:
        raise CliError(f"invalid configuration: {exc}", EXIT_CONFIG) from None


def _config_items(cfg: EvolutionConfig) -> list[tuple[str, object]]:
    # workers never changes outputs, so it stays out of the manifest
    return [(f"config.{f.name}", getattr(cfg, f.name)) for f in fields(cfg) if f.name != "workers"]


def _evolve(cfg, train, test=None):
    try:
        return evolve(cfg, train, test)
    except MissingValueError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None


# --------------------------------------------------------------------------
# commands


def cmd_train(args) -> int:
    cfg = _config_from(args)
    train = _load_arff(args.data, class_attribute=args.class_attr)
    test = None
    if args.test:
        test = _load_arff(args.test, class_attribute=args.class_attr)
        if test.schema.fingerprint != train.schema.fingerprint:
            raise CliError("test file schema differs from training file", EXIT_SCHEMA)
    best, history = _evolve(cfg, train, test)

    model_path = Path(args.model)
    stats_path = Path(args.stats) if args.stats else model_path.with_suffix(".stats.csv")
    manifest_path = Path(args.manifest) if args.manifest else model_path.with_suffix(".manifest")
    _write(model_path, serialize(best))
    _write(stats_path, _csv(STATS_HEADER, stats_rows(history)))
    items = [("input.train", args.data), ("input.train.sha256", _digest(args.data))]
    if args.test:
        items += [("input.test", args.test), ("input.test.sha256", _digest(args.test))]
    items += [("class_attribute", train.schema.class_attribute.name)]
    items += _config_items(cfg)
    items += [
        ("seed", cfg.seed),
        ("output.model", str(model_path)),
        ("output.stats", str(stats_path)),
        ("result.best_size", best.root.size),
        ("result.best_train_accuracy", accuracy(best, train)),
    ]
    _write(manifest_path, _manifest("train", items))
    print(
        f"best tree: size={best.root.size} train_acc={accuracy(best, train):.4f} "
        f"-> {model_path}",
        file=sys.stderr,
    )
    return 0


def cmd_predict(args) -> int:
    data = _load_arff(args.data, class_attribute=args.class_attr, allow_unlabeled=True)
    model = _load_model(args.model, data.schema)
    try:
        labels = predict(model, data)
    except MissingValueError as exc:
        raise CliError(f"{args.data}: {exc}", EXIT_PARSE) from None
    classes = model.schema.classes
    lines = [classes[i] for i in labels]
    if data.is_labeled and len(data):
        lines.append(f"# accuracy={_fmt(accuracy(model, data))}")
    text = "\n".join(lines) + "\n" if lines else ""
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_crossval(args) -> int:
    cfg = _config_from(args)
    data = _load_arff(args.data, class_attribute=args.class_attr)
    if not 2 <= args.folds <= len(data):
        raise CliError(f"--folds must be in [2, {len(data)}], got {args.folds}", EXIT_CONFIG)
    try:
        report = cross_validate(cfg, data, args.folds, args.seed, fold_workers=args.fold_workers)
    except MissingValueError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None

    rows = []
    for fold, history in enumerate(report.per_fold_history):
        rows += [[fold] + r for r in stats_rows(history)]
    summary_rows = [
        [fold, _fmt(acc), size]
        for fold, (acc, size) in enumerate(zip(report.per_fold_accuracy, report.per_fold_best_size))
    ]
    summary_rows.append(["mean", _fmt(report.mean_accuracy), _fmt(report.mean_best_size)])
    summary = _csv(["fold", "test_acc", "best_size"], summary_rows)

    out = Path(args.stats)
    summary_path = Path(args.summary) if args.summary else out.with_suffix(".summary.csv")
    manifest_path = Path(args.manifest) if args.manifest else out.with_suffix(".manifest")
    _write(out, _csv(["fold"] + STATS_HEADER, rows))
    _write(summary_path, summary)
    items = [("input.data", args.data), ("input.data.sha256", _digest(args.data))]
    items += [("class_attribute", data.schema.class_attribute.name), ("folds", args.folds)]
    items += _config_items(cfg)
    items += [
        ("seed", args.seed),
        ("output.stats", str(out)),
        ("output.summary", str(summary_path)),
        ("result.mean_accuracy", report.mean_accuracy),
    ]
    _write(manifest_path, _manifest("crossval", items))
    sys.stdout.write(summary)
    return 0


def cmd_export(args) -> int:
    model = _load_model(args.model)
    text = to_dot(model) if args.dot else format_rules(extract_rules(model), model.schema)
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_datagen(args) -> int:
    try:
        cfg = GenConfig(
            n=args.n, seed=args.seed, noise_rate=args.noise,
            depth_range=(args.depth_min, args.depth_max),
        )
    except ValueError as exc:
        raise CliError(f"invalid configuration: {exc}", EXIT_CONFIG) from None
    table = default_table()
    data = generate(cfg, table)
    out = Path(args.out)
    _write(out, write_arff(data, header_comments(cfg, table)))
    sidecar = Path(str(out) + ".meta")
    items = [
        ("n", cfg.n), ("seed", cfg.seed), ("noise_rate", cfg.noise_rate),
        ("depth_min", cfg.depth_range[0]), ("depth_max", cfg.depth_range[1]),
        ("boundary_table", table.version), ("output", str(out)),
    ]
    _write(sidecar, _manifest("datagen", items))
    return 0


# --------------------------------------------------------------------------
# argument parsing


def _add_evolution_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("evolution")
    g.add_argument("--population", type=int, default=100)
    g.add_argument("--generations", type=int, default=100)
    g.add_argument("--crossover", type=float, default=0.99)
    g.add_argument("--mutation", type=float, default=0.01)
    g.add_argument("--replace", type=float, default=0.25)
    g.add_argument("--size-bias", type=float, default=1000.0)
    g.add_argument("--elitism", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--max-size", type=int, default=None,
                   help="offspring size cap (default 10 * attributes * classes)")
    g.add_argument("--workers", type=int, default=1,
                   help="threads for fitness evaluation; results do not depend on it")
    p.add_argument("--class-attr", default=None, help="class attribute name (default: last)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gatree", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gatree {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="evolve a tree on an ARFF file")
    p.add_argument("data")
    p.add_argument("--model", required=True, help="output model file (JSON)")
    p.add_argument("--stats", help="per-generation CSV (default <model>.stats.csv)")
    p.add_argument("--manifest", help="run manifest (default <model>.manifest)")
    p.add_argument("--test", help="ARFF file scored each generation, never used for selection")
    _add_evolution_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="label the rows of an ARFF file")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--out")
    p.add_argument("--class-attr", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("crossval", help="k-fold cross-validation")
    p.add_argument("data")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--stats", required=True, help="per-fold, per-generation CSV")
    p.add_argument("--summary", help="per-fold accuracy table (default <stats>.summary.csv)")
    p.add_argument("--manifest")
    p.add_argument("--fold-workers", type=int, default=1)
    _add_evolution_flags(p)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("export", help="write a model as DOT or rules")
    p.add_argument("model")
    kind = p.add_mutually_exclusive_group(required=True)
    kind.add_argument("--dot", action="store_true")
    kind.add_argument("--rules", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("datagen", help="generate a synthetic soil-texture ARFF file")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--depth-min", type=float, default=0.0)
    p.add_argument("--depth-max", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_datagen)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"gatree: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
