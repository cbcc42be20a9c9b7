"""Command-line pipeline: featurize, partition, train, predict, evaluate,
ablate, synth.

One flat key=value config file is shared by the training stages, with
flag > file > default precedence. A single --seed drives every random
choice; no stage reads the clock, so identical commands produce
byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .datasets import (
    MATCH,
    GoldStandard,
    IngestError,
    SyntheticConfig,
    generate_synthetic,
    load_gold,
    load_records,
    save_gold,
)
from .diversity import (
    PARTITION_FORMAT_VERSION,
    build_partition,
    load_partition,
    save_partition,
)
from .evaluation import compute_metrics, evaluate_run, format_table, run_ablation_suite
from .features import (
    INSTANCE_FORMAT_VERSION,
    BlockingSpec,
    InstancePool,
    featurize_to_file,
    read_instance_file,
    write_instance_file,
)
from .nn import CHECKPOINT_FORMAT_VERSION, load_model, save_model
from .training import TrainConfig, predict, run, write_report

_CONFIG_KEYS = {
    "batch_size": int,
    "real_weight": float,
    "inner_iters": int,
    "propagate_count": str,  # integer or "pool"
    "seed": int,
    "gen_hidden": str,
    "disc_hidden": str,
    "optimizer": str,
    "learning_rate": float,
    "disc_optimizer": str,
    "disc_learning_rate": float,
    "variant": str,
}


def read_config_file(path: str | Path) -> dict:
    """Flat key=value file; '#' starts a comment; unknown keys are rejected."""
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise IngestError(f"{path}:{lineno}: expected key=value")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _CONFIG_KEYS:
            raise IngestError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _CONFIG_KEYS[key](value)
    return values


def _parse_hidden(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _parse_propagate(text: str) -> int | None:
    return None if text == "pool" else int(text)


def build_train_config(args) -> TrainConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    flag_map = {
        "batch_size": args.batch_size,
        "real_weight": args.real_weight,
        "inner_iters": args.inner_iters,
        "propagate_count": args.propagate_count,
        "seed": args.seed,
        "gen_hidden": args.gen_hidden,
        "disc_hidden": args.disc_hidden,
        "optimizer": args.optimizer,
        "learning_rate": args.learning_rate,
        "disc_optimizer": args.disc_optimizer,
        "disc_learning_rate": args.disc_learning_rate,
        "variant": args.variant,
    }
    for key, flag_value in flag_map.items():
        if flag_value is not None:
            values[key] = flag_value
    if "gen_hidden" in values and isinstance(values["gen_hidden"], str):
        values["gen_hidden"] = _parse_hidden(values["gen_hidden"])
    if "disc_hidden" in values and isinstance(values["disc_hidden"], str):
        values["disc_hidden"] = _parse_hidden(values["disc_hidden"])
    if "propagate_count" in values and isinstance(values["propagate_count"], str):
        values["propagate_count"] = _parse_propagate(values["propagate_count"])
    if "variant" in values:
        values["variant"] = values["variant"].replace("-", "_")
    return TrainConfig(**values)


def _load_pool(path: str) -> tuple[InstancePool, dict]:
    instances, meta = read_instance_file(path)
    return InstancePool(instances), meta


def _gold_for(pool: InstancePool, gold_path: str | None, gold_header: bool) -> GoldStandard:
    if gold_path:
        return load_gold(gold_path, has_header=gold_header)
    gold = GoldStandard()
    missing = 0
    for pid, label in zip(pool.ids, pool.real_labels):
        if label is None:
            missing += 1
        elif label == MATCH:
            gold.add(*pid)
    if missing == len(pool.ids):
        raise IngestError("instance file has no labels; provide --gold")
    return gold


def _partition_for(args, pool: InstancePool):
    if getattr(args, "partition", None):
        part = load_partition(args.partition)
        part.assign_all(pool.ids, pool.features)
        return part
    feature_indices = None
    if getattr(args, "split_features", None):
        feature_indices = [int(t) for t in args.split_features.split(",")]
    return build_partition(pool.ids, pool.features, feature_indices)


def _write_labels_file(path: Path, labels: dict) -> None:
    with path.open("w", encoding="utf-8") as fh:
        fh.write("id_a\tid_b\tlabel\n")
        for pid in sorted(labels):
            fh.write(f"{pid[0]}\t{pid[1]}\t{labels[pid]}\n")


def _read_labels_file(path: str) -> dict:
    labels = {}
    with Path(path).open(encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header != ["id_a", "id_b", "label"]:
            raise IngestError(f"{path}: not a labels file")
        for line in fh:
            id_a, id_b, label = line.rstrip("\n").split("\t")
            labels[(id_a, id_b)] = label
    return labels


def cmd_synth(args) -> int:
    cfg = SyntheticConfig(
        n_matches=args.matches,
        imbalance_rate=args.imbalance,
        n_features=args.features,
        separation=args.separation,
        seed=args.seed if args.seed is not None else 0,
    )
    instances, gold = generate_synthetic(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_instance_file(out / "instances.tsv", instances)
    save_gold(gold, out / "gold.csv")
    print(f"wrote {len(instances)} instances ({len(gold)} matches) to {out}")
    return 0


def cmd_featurize(args) -> int:
    schema = args.schema.split(",") if args.schema else None
    left = load_records(
        args.left,
        schema=schema or _infer_schema(args.left, args.id_column, args.delimiter),
        id_column=args.id_column,
        delimiter=args.delimiter,
    )
    right = None
    if args.right:
        right = load_records(
            args.right,
            schema=left.schema,
            id_column=args.id_column,
            delimiter=args.delimiter,
        )
    gold = load_gold(args.gold, has_header=args.gold_header) if args.gold else None
    blocking = BlockingSpec(args.block_on) if args.block_on else None
    workers = args.workers if args.workers else (os.cpu_count() or 1)
    count = featurize_to_file(
        args.out, left, right, gold=gold, q=args.q, blocking=blocking, workers=workers
    )
    print(f"wrote {count} instances to {args.out}")
    return 0


def _infer_schema(path: str, id_column: str, delimiter: str) -> list[str]:
    with Path(path).open(encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(delimiter)
    if id_column not in header:
        raise IngestError(f"missing column {id_column!r} in {path}")
    return [col for col in header if col != id_column]


def cmd_partition(args) -> int:
    pool, _ = _load_pool(args.instances)
    feature_indices = None
    if args.split_features:
        feature_indices = [int(t) for t in args.split_features.split(",")]
    part = build_partition(pool.ids, pool.features, feature_indices)
    save_partition(part, args.out)
    print(f"wrote partition ({part.b} subspaces) to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = build_train_config(args)
    pool, _ = _load_pool(args.instances)
    partition = _partition_for(args, pool)
    gold = _gold_for(pool, args.gold, args.gold_header)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run(
        cfg,
        pool,
        partition,
        gold=gold,
        seed_budget=args.seed_budget,
        checkpoint_dir=out / "checkpoints" if args.checkpoints else None,
    )
    save_partition(partition, out / "partition.json")
    save_model(out / "generator.npz", result.generator, seed=cfg.seed,
               kind="classifier" if cfg.variant == "no_adversary" else "generator")
    if result.discriminator is not None:
        save_model(out / "discriminator.npz", result.discriminator,
                   seed=cfg.seed, kind="discriminator")
    _write_labels_file(out / "labels.tsv", result.predictions)
    try:
        metrics = evaluate_run(pool, result.predictions)
        result.report["final"]["metrics"] = metrics.as_dict()
        print(
            f"precision={metrics.precision:.4f} recall={metrics.recall:.4f} "
            f"f_measure={metrics.f_measure:.4f}"
        )
    except ValueError:
        pass  # pool carries no ground truth beyond the seeds
    write_report(result.report, out / "report.json")
    print(f"rounds={result.report['final']['rounds']} pool={len(result.labeled_pool)}")
    return 0


def cmd_predict(args) -> int:
    instances, _ = read_instance_file(args.instances)
    model, _, _ = load_model(args.model)
    labels = predict(model, instances)
    _write_labels_file(Path(args.out), {inst.pair: lab for inst, lab in zip(instances, labels)})
    print(f"wrote {len(labels)} labels to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    predicted = _read_labels_file(args.predicted)
    truth_instances, _ = read_instance_file(args.truth)
    truth = {inst.pair: inst.real_label for inst in truth_instances}
    if any(lab is None for lab in truth.values()):
        raise IngestError(f"{args.truth}: truth file must carry labels")
    common = sorted(set(predicted) & set(truth))
    if not common:
        raise IngestError("no overlapping pairs between predictions and truth")
    metrics = compute_metrics([predicted[p] for p in common], [truth[p] for p in common])
    print(
        f"precision={metrics.precision:.4f} recall={metrics.recall:.4f} "
        f"f_measure={metrics.f_measure:.4f} objective={metrics.objective_score:.4f} "
        f"tp={metrics.tp} fp={metrics.fp} fn={metrics.fn} tn={metrics.tn}"
    )
    if args.out:
        Path(args.out).write_text(
            json.dumps(metrics.as_dict(), indent=2, sort_keys=True) + "\n"
        )
    return 0


def cmd_ablate(args) -> int:
    cfg = build_train_config(args)
    pool, _ = _load_pool(args.instances)
    partition = _partition_for(args, pool)
    gold = _gold_for(pool, args.gold, args.gold_header)
    budgets = [int(t) for t in args.budgets.split(",")] if args.budgets else []
    fractions = [float(t) for t in args.fractions.split(",")] if args.fractions else []
    variants = [v.replace("-", "_") for v in args.variants.split(",")]
    base_seed = cfg.seed
    seeds = [base_seed + k for k in range(args.seeds)]
    workers = args.workers if args.workers else (os.cpu_count() or 1)
    table = run_ablation_suite(
        pool, partition, gold, cfg,
        variants=variants, budgets=budgets, fractions=fractions, seeds=seeds,
        workers=workers,
    )
    rows = table.aggregate()
    print(format_table(rows))
    if args.out:
        with Path(args.out).open("w", encoding="utf-8") as fh:
            fh.write("variant\tbudget\tfraction\tseed\tprecision\trecall\tf_measure\n")
            for cell in table.cells:
                fh.write(
                    f"{cell.variant}\t{cell.budget if cell.budget is not None else ''}\t"
                    f"{cell.fraction if cell.fraction is not None else ''}\t{cell.seed}\t"
                    f"{cell.metrics.precision!r}\t{cell.metrics.recall!r}\t"
                    f"{cell.metrics.f_measure!r}\n"
                )
    return 0


def _add_train_config_flags(sub) -> None:
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--batch-size", type=int, default=None, dest="batch_size")
    sub.add_argument("--real-weight", type=float, default=None, dest="real_weight")
    sub.add_argument("--inner-iters", type=int, default=None, dest="inner_iters")
    sub.add_argument(
        "--propagate-count", default=None, dest="propagate_count",
        help="instances propagated per round, or 'pool' to grow by pool size",
    )
    sub.add_argument("--gen-hidden", default=None, dest="gen_hidden")
    sub.add_argument("--disc-hidden", default=None, dest="disc_hidden")
    sub.add_argument("--optimizer", choices=("adam", "sgd"), default=None)
    sub.add_argument("--learning-rate", type=float, default=None, dest="learning_rate")
    sub.add_argument("--disc-optimizer", choices=("adam", "sgd"), default=None, dest="disc_optimizer")
    sub.add_argument("--disc-learning-rate", type=float, default=None, dest="disc_learning_rate")
    sub.add_argument(
        "--variant", default=None,
        choices=("full", "no-diversity", "no-propagation", "no-adversary"),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matchgan",
        description="semi-supervised record-pair matching via adversarial label generation",
    )
    parser.add_argument(
        "--version", action="version",
        version=(
            f"matchgan {__version__} "
            f"(instance format v{INSTANCE_FORMAT_VERSION}, "
            f"partition format v{PARTITION_FORMAT_VERSION}, "
            f"checkpoint format v{CHECKPOINT_FORMAT_VERSION})"
        ),
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", help="generate a synthetic labeled workload")
    p.add_argument("--matches", type=int, required=True)
    p.add_argument("--imbalance", type=int, required=True)
    p.add_argument("--features", type=int, default=4)
    p.add_argument("--separation", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("featurize", help="stream record pairs into an instance file")
    p.add_argument("--left", required=True)
    p.add_argument("--right")
    p.add_argument("--gold")
    p.add_argument("--gold-header", action="store_true", dest="gold_header")
    p.add_argument("--schema", help="comma-separated attribute columns (default: all but id)")
    p.add_argument("--id-column", default="id", dest="id_column")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--block-on", dest="block_on")
    p.add_argument("-q", type=int, default=2)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = subs.add_parser("partition", help="build and persist a subspace partition")
    p.add_argument("--instances", required=True)
    p.add_argument("--split-features", dest="split_features",
                   help="comma-separated feature indices for the median split")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_partition)

    p = subs.add_parser("train", help="train on an instance file")
    p.add_argument("--instances", required=True)
    p.add_argument("--partition", help="partition file (default: build from instances)")
    p.add_argument("--split-features", dest="split_features")
    p.add_argument("--gold")
    p.add_argument("--gold-header", action="store_true", dest="gold_header")
    p.add_argument("--seed-budget", type=int, required=True, dest="seed_budget")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--checkpoints", action="store_true")
    p.add_argument("-o", "--out", required=True)
    _add_train_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("predict", help="label held-out instances with a trained model")
    p.add_argument("--instances", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("evaluate", help="score predicted labels against truth")
    p.add_argument("--predicted", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_evaluate)

    p = subs.add_parser("ablate", help="variant x label-cost x seed experiment grid")
    p.add_argument("--instances", required=True)
    p.add_argument("--partition")
    p.add_argument("--split-features", dest="split_features")
    p.add_argument("--gold")
    p.add_argument("--gold-header", action="store_true", dest="gold_header")
    p.add_argument("--budgets", help="comma-separated label budgets")
    p.add_argument("--fractions", help="comma-separated train fractions")
    p.add_argument("--variants", default="full")
    p.add_argument("--seeds", type=int, default=3, help="number of seeds (base --seed + k)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("-o", "--out")
    _add_train_config_flags(p)
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (IngestError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
