"""Splitting, match-quality metrics, and the ablation experiment harness."""

from __future__ import annotations

import statistics
from dataclasses import dataclass

import numpy as np

from .datasets import MATCH, NON_MATCH, GoldStandard
from .diversity import SubspacePartition
from .features import InstancePool
from .training import TrainConfig, run


@dataclass
class MetricsReport:
    precision: float
    recall: float
    f_measure: float
    tp: int
    fp: int
    fn: int
    tn: int
    # fraction of instances labeled correctly
    objective_score: float

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "objective_score": self.objective_score,
        }


def split_pool(
    pool_size: int,
    seed: int,
    train_fraction: float | None = None,
    label_budget: int | None = None,
) -> tuple[list[int], list[int]]:
    """Uniform random (train, test) split over instance positions.

    Fraction mode takes floor(fraction * n) train positions; budget mode
    takes exactly label_budget. Disjoint and covering by construction.
    """
    if (train_fraction is None) == (label_budget is None):
        raise ValueError("specify exactly one of train_fraction or label_budget")
    if train_fraction is not None:
        if not 0.0 < train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        n_train = int(pool_size * train_fraction)
    else:
        if not 0 < label_budget <= pool_size:
            raise ValueError("label_budget must lie in (0, pool size]")
        n_train = label_budget
    order = np.random.default_rng(seed).permutation(pool_size)
    return sorted(int(i) for i in order[:n_train]), sorted(int(i) for i in order[n_train:])


def compute_metrics(predicted, actual) -> MetricsReport:
    """Precision/recall/f-measure with zero-denominator conventions.

    Empty denominators score 0 (so a run predicting no matches reports
    precision = recall = f-measure = 0 rather than failing).
    """
    predicted = list(predicted)
    actual = list(actual)
    if len(predicted) != len(actual):
        raise ValueError(f"length mismatch: {len(predicted)} vs {len(actual)}")
    tp = fp = fn = tn = 0
    for pred, act in zip(predicted, actual):
        if pred == MATCH and act == MATCH:
            tp += 1
        elif pred == MATCH and act == NON_MATCH:
            fp += 1
        elif pred == NON_MATCH and act == MATCH:
            fn += 1
        else:
            tn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    fm = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    total = len(predicted)
    objective = (tp + tn) / total if total else 0.0
    return MetricsReport(precision, recall, fm, tp, fp, fn, tn, objective)


@dataclass
class AblationCell:
    variant: str
    budget: int | None
    fraction: float | None
    seed: int
    metrics: MetricsReport


@dataclass
class AblationTable:
    cells: list[AblationCell]

    def aggregate(self) -> list[dict]:
        """Mean and standard deviation of f-measure per (variant, cost)."""
        groups: dict[tuple, list[AblationCell]] = {}
        for cell in self.cells:
            groups.setdefault((cell.variant, cell.budget, cell.fraction), []).append(cell)
        rows = []
        for (variant, budget, fraction), cells in sorted(
            groups.items(), key=lambda kv: (kv[0][0], str(kv[0][1]), str(kv[0][2]))
        ):
            fms = [c.metrics.f_measure for c in cells]
            rows.append(
                {
                    "variant": variant,
                    "budget": budget,
                    "fraction": fraction,
                    "seeds": len(cells),
                    "fm_mean": statistics.fmean(fms),
                    "fm_std": statistics.stdev(fms) if len(fms) > 1 else 0.0,
                }
            )
        return rows


def evaluate_run(pool: InstancePool, predictions: dict) -> MetricsReport:
    """Score a run's transductive labels against the pool's real labels."""
    ids = sorted(predictions)
    predicted = [predictions[pid] for pid in ids]
    actual = [pool.real_labels[pool.row_of(pid)] for pid in ids]
    if any(a is None for a in actual):
        raise ValueError("pool instances lack real labels; cannot score")
    return compute_metrics(predicted, actual)


def run_cell(
    pool: InstancePool,
    partition: SubspacePartition,
    gold: GoldStandard,
    base_config: TrainConfig,
    variant: str,
    seed: int,
    budget: int | None = None,
    fraction: float | None = None,
) -> AblationCell:
    """One experiment: seed labels by budget (method-selected) or by a
    uniform train fraction (all train instances labeled), then train and
    score the propagated labels."""
    cfg = TrainConfig(
        batch_size=base_config.batch_size,
        real_weight=base_config.real_weight,
        inner_iters=base_config.inner_iters,
        propagate_count=base_config.propagate_count,
        seed=seed,
        gen_hidden=base_config.gen_hidden,
        disc_hidden=base_config.disc_hidden,
        optimizer=base_config.optimizer,
        learning_rate=base_config.learning_rate,
        variant=variant,
    )
    if budget is not None:
        result = run(cfg, pool, partition, gold=gold, seed_budget=budget)
    else:
        train_rows, _ = split_pool(len(pool), seed, train_fraction=fraction)
        seed_labels = {
            pool.ids[r]: gold.label_of(*pool.ids[r]) for r in train_rows
        }
        result = run(cfg, pool, partition, seed_labels=seed_labels)
    return AblationCell(
        variant=variant,
        budget=budget,
        fraction=fraction,
        seed=seed,
        metrics=evaluate_run(pool, result.predictions),
    )


def _run_cell_task(args):
    return run_cell(*args[:-2], budget=args[-2], fraction=args[-1])


def run_ablation_suite(
    pool: InstancePool,
    partition: SubspacePartition,
    gold: GoldStandard,
    base_config: TrainConfig,
    variants=("full",),
    budgets=(),
    fractions=(),
    seeds=(0, 1, 2),
    workers: int = 1,
) -> AblationTable:
    """Cross-product of variants x label costs x seeds, each trained and scored.

    Cells are independent and internally deterministic, so they may run in
    parallel; results keep the canonical cell order regardless of workers.
    """
    if not budgets and not fractions:
        raise ValueError("need at least one budget or fraction")
    tasks = []
    for variant in variants:
        for budget in budgets:
            for seed in seeds:
                tasks.append((pool, partition, gold, base_config, variant, seed, budget, None))
        for fraction in fractions:
            for seed in seeds:
                tasks.append((pool, partition, gold, base_config, variant, seed, None, fraction))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            cells = list(ex.map(_run_cell_task, tasks))
    else:
        cells = [_run_cell_task(t) for t in tasks]
    return AblationTable(cells)


def format_table(rows: list[dict]) -> str:
    """Human-readable aligned ablation summary."""
    header = f"{'variant':<16} {'cost':>8} {'seeds':>5} {'fm_mean':>8} {'fm_std':>7}"
    lines = [header, "-" * len(header)]
    for row in rows:
        cost = row["budget"] if row["budget"] is not None else f"{row['fraction']:.0%}"
        lines.append(
            f"{row['variant']:<16} {cost!s:>8} {row['seeds']:>5} "
            f"{row['fm_mean']:>8.4f} {row['fm_std']:>7.4f}"
        )
    return "\n".join(lines)
