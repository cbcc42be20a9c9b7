"""Alternating adversarial training with confidence-ranked label propagation.

One run interleaves two processes until every unlabeled instance has been
absorbed into the labeled pool:

  1. batch training: for a fixed number of iterations, sample a
     diversity-maximizing minibatch of unlabeled instances, let the
     generator produce soft labels for them, sample a uniform minibatch
     from the labeled pool, then update the discriminator (ascending its
     objective) and the generator (descending its loss);
  2. label propagation: score every not-yet-propagated instance by the
     discriminator's confidence in its pseudo label and move the
     top-scoring slice into the labeled pool.

The labeled pool only ever grows: real seed labels are never overwritten
and pseudo-labeled entries are never relabeled. Ablation variants disable
the diversity sampler, the propagation loop, or the adversarial pairing.

Training is transductive: the run's final label for each unlabeled pool
instance is its propagated pseudo label. Instances outside the pool (held
out from training entirely) are labeled afterwards via predict().
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .datasets import MATCH, NON_MATCH, GoldStandard
from .diversity import SubspacePartition, diverse_sample, waterfill_counts
from .features import Instance, InstancePool, PairId
from . import nn

VARIANTS = ("full", "no_diversity", "no_propagation", "no_adversary")

REAL = "real"
PSEUDO = "pseudo"

_LABEL_TO_FLOAT = {MATCH: 1.0, NON_MATCH: 0.0}


@dataclass(frozen=True)
class PoolEntry:
    label: str
    provenance: str
    round_added: int


class LabeledPool:
    """Monotone-growing map of instance id -> (label, provenance, round)."""

    def __init__(self):
        self.entries: dict[PairId, PoolEntry] = {}

    def add(self, pair_id: PairId, label: str, provenance: str, round_added: int) -> None:
        if pair_id in self.entries:
            raise ValueError(f"instance {pair_id} already in labeled pool")
        if label not in (MATCH, NON_MATCH):
            raise ValueError(f"invalid label {label!r}")
        self.entries[pair_id] = PoolEntry(label, provenance, round_added)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, pair_id: PairId) -> bool:
        return pair_id in self.entries

    def label_of(self, pair_id: PairId) -> str:
        return self.entries[pair_id].label

    def real_ids(self) -> list[PairId]:
        return [pid for pid, e in self.entries.items() if e.provenance == REAL]

    def pseudo_ids(self) -> list[PairId]:
        return [pid for pid, e in self.entries.items() if e.provenance == PSEUDO]


@dataclass
class TrainConfig:
    """Training knobs. The generator's default learning rate is half the
    discriminator's: the generator must commit to hard labels more slowly
    than the discriminator can correct mislabeled regions, otherwise the
    pair chases each other into a single-label collapse."""

    batch_size: int = 100
    real_weight: float = 1.0
    inner_iters: int = 500
    propagate_count: int | None = None  # None: grow by current pool size
    seed: int = 0
    gen_hidden: tuple[int, ...] = (32, 16)
    disc_hidden: tuple[int, ...] = (32, 16)
    optimizer: str = "adam"
    learning_rate: float = 5e-4
    disc_optimizer: str = "adam"
    disc_learning_rate: float = 1e-3
    variant: str = "full"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.real_weight < 0:
            raise ValueError("real_weight must be non-negative")
        if self.inner_iters < 1:
            raise ValueError("inner_iters must be at least 1")
        if self.propagate_count is not None and self.propagate_count < 1:
            raise ValueError("propagate_count must be at least 1 when fixed")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        for opt in (self.optimizer, self.disc_optimizer):
            if opt not in ("adam", "sgd"):
                raise ValueError("optimizer must be 'adam' or 'sgd'")
        self.gen_hidden = tuple(self.gen_hidden)
        self.disc_hidden = tuple(self.disc_hidden)


@dataclass
class PropagationState:
    round_index: int
    remaining: list[PairId]


@dataclass
class RunResult:
    labeled_pool: LabeledPool
    generator: nn.MlpModel
    discriminator: nn.MlpModel | None
    report: dict
    predictions: dict[PairId, str]


def select_seed_labels(
    pool: InstancePool,
    gold: GoldStandard,
    budget: int,
    partition: SubspacePartition,
    rng: np.random.Generator,
    variant: str = "full",
) -> list[PairId]:
    """Choose which instances receive real labels.

    Diversity-aware selection spreads the budget across subspaces; the
    no_diversity variant draws uniformly instead.
    """
    if budget > len(pool):
        raise ValueError(f"budget {budget} exceeds pool size {len(pool)}")
    if variant == "no_diversity":
        rows = rng.choice(len(pool), size=budget, replace=False)
        return [pool.ids[r] for r in np.sort(rows)]
    populations = partition.populations(pool.ids)
    selection = diverse_sample(populations, budget, rng)
    return sorted(selection.selected_ids)


def pseudo_label(gen: nn.MlpModel, x: Instance | np.ndarray) -> tuple[str, float]:
    """Hard label plus the generator's soft score; ties go to non-match."""
    feats = x.features if isinstance(x, Instance) else np.asarray(x)
    score = nn.forward(gen, feats)
    return (MATCH if score > 0.5 else NON_MATCH), score


def _pseudo_labels_batch(gen: nn.MlpModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scores = nn.forward_batch(gen, X)
    labels = np.where(scores > 0.5, MATCH, NON_MATCH)
    return labels, scores


def _labeled_arrays(pool: InstancePool, labeled: LabeledPool):
    rows = np.array([pool.row_of(pid) for pid in labeled.entries], dtype=np.intp)
    y = np.array([_LABEL_TO_FLOAT[e.label] for e in labeled.entries.values()])
    return pool.features[rows], y


def _subspace_rows(pool: InstancePool, partition: SubspacePartition, rows: np.ndarray):
    """Group pool rows by subspace; rows stay ascending inside each group."""
    pops: list[list[int]] = [[] for _ in range(partition.b)]
    for r in rows:
        pops[partition.assignment[pool.ids[r]]].append(int(r))
    return pops


class _MinibatchSampler:
    """Per-round minibatch source over the fixed unlabeled index.

    Subspace populations do not change within a round, so the diversity
    allocation (water-filling counts) is computed once; each draw only
    picks uniformly within subspaces.
    """

    def __init__(self, pops, u_rows: np.ndarray, size: int, diverse: bool):
        self.u_rows = u_rows
        self.size = size
        self.diverse = diverse
        if diverse:
            self.pop_arrays = [np.asarray(p, dtype=np.intp) for p in pops if len(p)]
            sizes = [len(p) for p in self.pop_arrays]
            counts = waterfill_counts(sizes, size)
            self.plan = [
                (pop, c) for pop, c in zip(self.pop_arrays, counts) if c > 0
            ]

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        if not self.diverse:
            return rng.choice(self.u_rows, size=self.size, replace=False)
        parts = [
            pop if c == len(pop) else pop[rng.choice(len(pop), size=c, replace=False)]
            for pop, c in self.plan
        ]
        return np.concatenate(parts)


def inner_train(
    gen: nn.MlpModel,
    disc: nn.MlpModel,
    pool: InstancePool,
    labeled: LabeledPool,
    cfg: TrainConfig,
    partition: SubspacePartition,
    rng: np.random.Generator,
    opt_gen: nn.OptState | None = None,
    opt_disc: nn.OptState | None = None,
    iters: int | None = None,
) -> tuple[nn.MlpModel, nn.MlpModel, dict]:
    """Run the alternating minibatch updates for one propagation round.

    Unlabeled minibatches come from the full unlabeled index regardless of
    propagation progress; labeled minibatches come uniformly from the
    current pool. Returns the models plus mean losses for reporting.
    """
    if len(labeled) == 0:
        raise ValueError("labeled pool is empty")
    n_iters = cfg.inner_iters if iters is None else iters
    if opt_gen is None:
        opt_gen = nn.OptState.for_model(gen, cfg.optimizer, cfg.learning_rate)
    if opt_disc is None:
        opt_disc = nn.OptState.for_model(disc, cfg.disc_optimizer, cfg.disc_learning_rate)

    u_rows = pool.unlabeled_rows
    pops = _subspace_rows(pool, partition, u_rows)
    lab_X, lab_y = _labeled_arrays(pool, labeled)
    fake_size = min(cfg.batch_size, len(u_rows))
    real_size = min(cfg.batch_size, lab_X.shape[0])
    sampler = _MinibatchSampler(pops, u_rows, fake_size, cfg.variant != "no_diversity")

    d_sum = g_sum = 0.0
    for _ in range(n_iters):
        rows = sampler.draw(rng)
        Xf = pool.features[rows]
        # the discriminator judges hard pseudo labels, so generated and real
        # pairs share the same label alphabet; the generator's own update
        # below keeps the soft differentiable path
        g_soft = nn.forward_batch(gen, Xf)
        fake_y = (g_soft > 0.5).astype(np.float64)
        fake_in = np.hstack([Xf, fake_y[:, None]])
        ridx = rng.choice(lab_X.shape[0], size=real_size, replace=False)
        real_in = np.hstack([lab_X[ridx], lab_y[ridx][:, None]])
        d_obj, d_grads = nn.discriminator_backward(
            disc, fake_in, real_in, cfg.real_weight
        )
        nn.opt_step(disc, d_grads, opt_disc)
        g_loss, g_grads = nn.generator_backward(gen, disc, Xf)
        nn.opt_step(gen, g_grads, opt_gen)
        d_sum += d_obj
        g_sum += g_loss
    stats = {
        "iterations": n_iters,
        "d_objective": d_sum / n_iters if n_iters else None,
        "g_loss": g_sum / n_iters if n_iters else None,
    }
    return gen, disc, stats


def _inner_train_classifier(
    clf: nn.MlpModel,
    pool: InstancePool,
    labeled: LabeledPool,
    cfg: TrainConfig,
    rng: np.random.Generator,
    opt: nn.OptState,
    iters: int | None = None,
) -> dict:
    """Plain supervised loop on the labeled pool (adversary removed)."""
    n_iters = cfg.inner_iters if iters is None else iters
    lab_X, lab_y = _labeled_arrays(pool, labeled)
    size = min(cfg.batch_size, lab_X.shape[0])
    loss_sum = 0.0
    for _ in range(n_iters):
        idx = rng.choice(lab_X.shape[0], size=size, replace=False)
        loss, grads = nn.classifier_backward(clf, lab_X[idx], lab_y[idx])
        nn.opt_step(clf, grads, opt)
        loss_sum += loss
    return {
        "iterations": n_iters,
        "d_objective": None,
        "g_loss": loss_sum / n_iters if n_iters else None,
    }


def confidence_scores(
    gen: nn.MlpModel, disc: nn.MlpModel | None, X: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Pseudo labels plus the confidence used to rank propagation.

    Adversarial mode scores (x, G(x)) with the discriminator. Classifier
    mode uses the classifier's own output, folded so that confident
    predictions of either class rank high.
    """
    labels, soft = _pseudo_labels_batch(gen, X)
    if disc is not None:
        hard = (soft > 0.5).astype(np.float64)
        conf = nn.forward_batch(disc, np.hstack([X, hard[:, None]]))
    else:
        conf = np.maximum(soft, 1.0 - soft)
    return labels, conf


def select_top(ids: list[PairId], scores: np.ndarray, count: int) -> list[int]:
    """Positions of the count highest scores; ties broken by id ascending."""
    order = sorted(range(len(ids)), key=lambda k: (-scores[k], ids[k]))
    return order[: min(count, len(ids))]


def propagate(
    gen: nn.MlpModel,
    disc: nn.MlpModel | None,
    pool: InstancePool,
    remaining: list[PairId],
    count: int,
) -> list[tuple[PairId, str, float]]:
    """Pick the count most-confident remaining instances with their pseudo labels."""
    if not remaining:
        raise ValueError("no remaining instances to propagate")
    rows = np.array([pool.row_of(pid) for pid in remaining], dtype=np.intp)
    labels, conf = confidence_scores(gen, disc, pool.features[rows])
    chosen = select_top(remaining, conf, count)
    return [(remaining[k], str(labels[k]), float(conf[k])) for k in chosen]


def run(
    cfg: TrainConfig,
    pool: InstancePool,
    partition: SubspacePartition,
    gold: GoldStandard | None = None,
    seed_budget: int | None = None,
    seed_labels: dict[PairId, str] | None = None,
    checkpoint_dir: str | Path | None = None,
) -> RunResult:
    """Full training run: seed labeling, alternating training, propagation.

    Seeds come either from an explicit id -> label map or from gold via
    diversity-aware selection of seed_budget instances. Ends when every
    unlabeled instance has been propagated; the final prediction for each
    is its propagated pseudo label.
    """
    rng = np.random.default_rng(cfg.seed)

    if seed_labels is None:
        if gold is None or seed_budget is None:
            raise ValueError("need either seed_labels or gold plus seed_budget")
        seed_ids = select_seed_labels(pool, gold, seed_budget, partition, rng, cfg.variant)
        seed_labels = {pid: gold.label_of(*pid) for pid in seed_ids}
    if not seed_labels:
        raise ValueError("cannot train without any seed labels")

    labeled = LabeledPool()
    for pid in sorted(seed_labels):
        labeled.add(pid, seed_labels[pid], REAL, round_added=0)
    pool.set_labeled(seed_labels.keys())

    d = pool.n_features
    gen = nn.init_mlp((d, *cfg.gen_hidden, 1), rng)
    adversarial = cfg.variant != "no_adversary"
    disc = nn.init_mlp((d + 1, *cfg.disc_hidden, 1), rng) if adversarial else None
    opt_gen = nn.OptState.for_model(gen, cfg.optimizer, cfg.learning_rate)
    opt_disc = (
        nn.OptState.for_model(disc, cfg.disc_optimizer, cfg.disc_learning_rate)
        if adversarial
        else None
    )

    report: dict = {
        "config": _config_dict(cfg),
        "seed_count": len(seed_labels),
        "pool_size": len(pool),
        "rounds": [],
    }
    state = PropagationState(round_index=0, remaining=pool.unlabeled_ids())

    if not state.remaining:
        report["final"] = _final_summary(pool, labeled, gen, disc, {})
        return RunResult(labeled, gen, disc, report, {})

    predictions: dict[PairId, str] = {}
    while state.remaining:
        if adversarial:
            _, _, stats = inner_train(
                gen, disc, pool, labeled, cfg, partition, rng, opt_gen, opt_disc
            )
        else:
            stats = _inner_train_classifier(gen, pool, labeled, cfg, rng, opt_gen)
        state.round_index += 1

        if cfg.variant == "no_propagation":
            # label everything directly; no confidence ranking, single round
            rows = np.array([pool.row_of(pid) for pid in state.remaining], dtype=np.intp)
            labels, _ = _pseudo_labels_batch(gen, pool.features[rows])
            batch = [(pid, str(lab), 0.0) for pid, lab in zip(state.remaining, labels)]
        else:
            gamma = cfg.propagate_count if cfg.propagate_count is not None else len(labeled)
            batch = propagate(gen, disc, pool, state.remaining, gamma)

        for pid, label, _score in batch:
            labeled.add(pid, label, PSEUDO, round_added=state.round_index)
            predictions[pid] = label
        moved = {pid for pid, _, _ in batch}
        state.remaining = [pid for pid in state.remaining if pid not in moved]

        round_record = {
            "round": state.round_index,
            "gamma": len(batch),
            "propagated": len(batch),
            "pool_size_after": len(labeled),
            "remaining_after": len(state.remaining),
            "d_objective": stats["d_objective"],
            "g_loss": stats["g_loss"],
        }
        fm = _pseudo_label_fm(pool, labeled)
        if fm is not None:
            round_record["pseudo_fm"] = fm
        report["rounds"].append(round_record)

        if checkpoint_dir is not None:
            _save_round_checkpoints(checkpoint_dir, state.round_index, gen, disc, cfg)

    report["final"] = _final_summary(pool, labeled, gen, disc, predictions)
    return RunResult(labeled, gen, disc, report, predictions)


def predict(gen: nn.MlpModel, instances: list[Instance]) -> list[str]:
    """Label instances that never entered the training pool."""
    if not instances:
        return []
    X = np.vstack([inst.features for inst in instances])
    labels, _ = _pseudo_labels_batch(gen, X)
    return [str(lab) for lab in labels]


def _config_dict(cfg: TrainConfig) -> dict:
    out = asdict(cfg)
    out["gen_hidden"] = list(cfg.gen_hidden)
    out["disc_hidden"] = list(cfg.disc_hidden)
    return out


def _pseudo_label_fm(pool: InstancePool, labeled: LabeledPool) -> float | None:
    """F-measure of pseudo labels propagated so far against known real labels."""
    from .evaluation import compute_metrics

    predicted, truth = [], []
    for pid, entry in labeled.entries.items():
        if entry.provenance != PSEUDO:
            continue
        actual = pool.real_labels[pool.row_of(pid)]
        if actual is None:
            return None
        predicted.append(entry.label)
        truth.append(actual)
    if not predicted:
        return None
    return compute_metrics(predicted, truth).f_measure


def _final_summary(pool, labeled, gen, disc, predictions) -> dict:
    counts = {MATCH: 0, NON_MATCH: 0}
    for pid in predictions:
        counts[labeled.label_of(pid)] += 1
    summary = {
        "pool_size": len(labeled),
        "rounds": max((e.round_added for e in labeled.entries.values()), default=0),
        "pseudo_label_counts": counts,
        "consistency": _prediction_consistency(pool, labeled, gen, predictions),
    }
    fm = _pseudo_label_fm(pool, labeled)
    if fm is not None:
        summary["pseudo_fm"] = fm
    return summary


def _prediction_consistency(pool, labeled, gen, predictions) -> float | None:
    """Agreement between the generator's direct labels and propagated labels.

    Reported only; propagation is authoritative for pool instances.
    """
    if not predictions:
        return None
    ids = sorted(predictions)
    rows = np.array([pool.row_of(pid) for pid in ids], dtype=np.intp)
    fresh, _ = _pseudo_labels_batch(gen, pool.features[rows])
    agree = sum(1 for pid, lab in zip(ids, fresh) if predictions[pid] == str(lab))
    return agree / len(ids)


def _save_round_checkpoints(directory, round_index, gen, disc, cfg):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    nn.save_model(
        directory / f"generator_round{round_index}.npz", gen, seed=cfg.seed,
        kind="classifier" if cfg.variant == "no_adversary" else "generator",
    )
    if disc is not None:
        nn.save_model(
            directory / f"discriminator_round{round_index}.npz", disc,
            seed=cfg.seed, kind="discriminator",
        )


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
