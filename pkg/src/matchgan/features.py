"""Candidate pair streaming and per-attribute similarity featurization.

A pair of records becomes an instance: a vector with one similarity value
per attribute, each in [0, 1]. Pairs are streamed in sorted id order
(deterministic regardless of worker count) and instances can be written
to / read from a delimited instance file so that large pools never need
to live fully in memory.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np

from .datasets import MATCH, NON_MATCH, GoldStandard, IngestError, Record, RecordSet

PairId = tuple[str, str]

INSTANCE_FORMAT_VERSION = 1


@dataclass
class Instance:
    """Feature vector of one record pair, optionally carrying its real label."""

    pair: PairId
    features: np.ndarray
    real_label: str | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.pair[0] == self.pair[1]:
            raise IngestError(f"instance pair ids must be distinct: {self.pair}")
        if self.features.ndim != 1:
            raise IngestError("instance features must be a flat vector")
        if np.any(self.features < 0.0) or np.any(self.features > 1.0):
            raise IngestError("instance features must lie in [0, 1]")


class InstancePool:
    """Instances indexed by pair id, split into labeled and unlabeled sets.

    Row order is canonical (sorted by pair id), so positional indices are
    deterministic and id-ascending; the labeled and unlabeled index sets
    are disjoint and together cover every instance.
    """

    def __init__(self, instances: Iterable[Instance], labeled_ids: Iterable[PairId] = ()):
        ordered = sorted(instances, key=lambda inst: inst.pair)
        self.ids: list[PairId] = [inst.pair for inst in ordered]
        if len(set(self.ids)) != len(self.ids):
            raise IngestError("duplicate pair ids in pool")
        self.features = (
            np.vstack([inst.features for inst in ordered])
            if ordered
            else np.empty((0, 0))
        )
        self.real_labels: list[str | None] = [inst.real_label for inst in ordered]
        self._row_of = {pid: i for i, pid in enumerate(self.ids)}
        self.labeled_rows: np.ndarray = np.empty(0, dtype=np.intp)
        self.unlabeled_rows: np.ndarray = np.arange(len(self.ids), dtype=np.intp)
        if labeled_ids:
            self.set_labeled(labeled_ids)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def row_of(self, pair_id: PairId) -> int:
        return self._row_of[pair_id]

    def set_labeled(self, labeled_ids: Iterable[PairId]) -> None:
        rows = sorted(self._row_of[pid] for pid in set(labeled_ids))
        mask = np.zeros(len(self.ids), dtype=bool)
        mask[rows] = True
        self.labeled_rows = np.flatnonzero(mask)
        self.unlabeled_rows = np.flatnonzero(~mask)

    def labeled_ids(self) -> list[PairId]:
        return [self.ids[i] for i in self.labeled_rows]

    def unlabeled_ids(self) -> list[PairId]:
        return [self.ids[i] for i in self.unlabeled_rows]

    def instance(self, pair_id: PairId) -> Instance:
        row = self._row_of[pair_id]
        return Instance(
            pair=pair_id, features=self.features[row], real_label=self.real_labels[row]
        )


@dataclass(frozen=True)
class BlockingSpec:
    """Token blocking on one attribute: only same-block pairs are compared."""

    attribute: str


def qgrams(text: str, q: int) -> frozenset[str]:
    """Set of overlapping q-grams of the case-folded string (empty if too short)."""
    folded = text.casefold()
    return frozenset(folded[i : i + q] for i in range(len(folded) - q + 1))


def qgram_jaccard(s1: str, s2: str, q: int = 2, both_empty: float = 1.0) -> float:
    """Jaccard overlap of the two strings' q-gram sets, in [0, 1].

    Two empty gram sets score both_empty (default 1.0: agreement on
    absence); exactly one empty scores 0.0. Total function, symmetric in
    its string arguments.
    """
    if q < 1:
        raise ValueError("q must be at least 1")
    grams1, grams2 = qgrams(s1, q), qgrams(s2, q)
    if not grams1 and not grams2:
        return both_empty
    if not grams1 or not grams2:
        return 0.0
    return len(grams1 & grams2) / len(grams1 | grams2)


def featurize_pair(
    r_i: Record,
    r_j: Record,
    sim: Callable[[str, str, int], float] = qgram_jaccard,
    q: int = 2,
    real_label: str | None = None,
) -> Instance:
    """Instance whose k-th feature is sim applied to attribute k of both records."""
    if len(r_i.attributes) != len(r_j.attributes):
        raise IngestError(
            f"schema mismatch: {len(r_i.attributes)} vs {len(r_j.attributes)} attributes"
        )
    feats = np.array(
        [sim(a, b, q) for a, b in zip(r_i.attributes, r_j.attributes)],
        dtype=np.float64,
    )
    return Instance(pair=(r_i.id, r_j.id), features=feats, real_label=real_label)


def block_by_token(records: RecordSet, attr: str) -> dict[str, list[str]]:
    """Map each case-folded whitespace token of the attribute to record ids."""
    col = records.attribute_index(attr)
    blocks: dict[str, list[str]] = {}
    for rec in records.records:
        for token in rec.attributes[col].casefold().split():
            blocks.setdefault(token, []).append(rec.id)
    return blocks


def _blocked_pair_ids(
    left: RecordSet, right: RecordSet | None, blocking: BlockingSpec
) -> list[PairId]:
    left_blocks = block_by_token(left, blocking.attribute)
    seen: set[PairId] = set()
    if right is None:
        for ids in left_blocks.values():
            for a, b in itertools.combinations(sorted(ids), 2):
                seen.add((a, b))
    else:
        right_blocks = block_by_token(right, blocking.attribute)
        for token, left_ids in left_blocks.items():
            for a in left_ids:
                for b in right_blocks.get(token, ()):
                    seen.add((a, b))
    return sorted(seen)


def generate_pairs(
    set1: RecordSet,
    set2: RecordSet | None = None,
    blocking: BlockingSpec | None = None,
) -> Iterator[tuple[Record, Record]]:
    """Stream candidate record pairs in sorted (id_i, id_j) order.

    One set yields all C(n, 2) unordered pairs; two sets yield the full
    cross product. With blocking only same-block pairs appear, each once.
    """
    if blocking is not None:
        by_id_left = {rec.id: rec for rec in set1.records}
        by_id_right = by_id_left if set2 is None else {rec.id: rec for rec in set2.records}
        for a, b in _blocked_pair_ids(set1, set2, blocking):
            yield by_id_left[a], by_id_right[b]
        return
    if set2 is None:
        ordered = sorted(set1.records, key=lambda rec: rec.id)
        for r_i, r_j in itertools.combinations(ordered, 2):
            yield r_i, r_j
    else:
        left = sorted(set1.records, key=lambda rec: rec.id)
        right = sorted(set2.records, key=lambda rec: rec.id)
        for r_i in left:
            for r_j in right:
                yield r_i, r_j


# One featurization task per worker chunk; module-level so it pickles.
def _featurize_chunk(args) -> list[tuple[str, str, list[float], str]]:
    pairs, q, match_pairs = args
    out = []
    for r_i, r_j in pairs:
        inst = featurize_pair(r_i, r_j, q=q)
        label = ""
        if match_pairs is not None:
            label = MATCH if frozenset((r_i.id, r_j.id)) in match_pairs else NON_MATCH
        out.append((r_i.id, r_j.id, inst.features.tolist(), label))
    return out


def featurize_to_file(
    out_path: str | Path,
    left: RecordSet,
    right: RecordSet | None = None,
    gold: GoldStandard | None = None,
    q: int = 2,
    blocking: BlockingSpec | None = None,
    workers: int = 1,
    chunk_size: int = 2048,
) -> int:
    """Featurize all candidate pairs straight to an instance file.

    Output ordering is by (id_i, id_j) regardless of worker count.
    Returns the number of instances written.
    """
    schema = left.schema
    match_pairs = gold.matches if gold is not None else None
    pair_stream = generate_pairs(left, right, blocking)
    count = 0
    with Path(out_path).open("w", encoding="utf-8") as fh:
        _write_instance_header(fh, schema, q, labeled=gold is not None)
        chunks = _chunked(pair_stream, chunk_size)
        if workers <= 1:
            results = (_featurize_chunk((chunk, q, match_pairs)) for chunk in chunks)
            for block in results:
                count += _write_instance_rows(fh, block, labeled=gold is not None)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                tasks = ((chunk, q, match_pairs) for chunk in chunks)
                # map preserves submission order, keeping output deterministic
                for block in pool.map(_featurize_chunk, tasks):
                    count += _write_instance_rows(fh, block, labeled=gold is not None)
    return count


def _chunked(stream: Iterator, size: int) -> Iterator[list]:
    while True:
        chunk = list(itertools.islice(stream, size))
        if not chunk:
            return
        yield chunk


def _write_instance_header(fh, schema: tuple[str, ...], q: int, labeled: bool) -> None:
    fh.write(f"# instances v{INSTANCE_FORMAT_VERSION} q={q}\n")
    cols = ["id_a", "id_b", *schema]
    if labeled:
        cols.append("label")
    fh.write("\t".join(cols) + "\n")


def _write_instance_rows(fh, rows, labeled: bool) -> int:
    for id_a, id_b, feats, label in rows:
        cells = [id_a, id_b, *(repr(v) for v in feats)]
        if labeled:
            cells.append(label)
        fh.write("\t".join(cells) + "\n")
    return len(rows)


def write_instance_file(
    path: str | Path,
    instances: Iterable[Instance],
    schema: tuple[str, ...] | None = None,
    q: int = 2,
) -> None:
    instances = list(instances)
    labeled = any(inst.real_label is not None for inst in instances)
    if schema is None:
        width = instances[0].features.shape[0] if instances else 0
        schema = tuple(f"f{k}" for k in range(width))
    rows = [
        (
            inst.pair[0],
            inst.pair[1],
            inst.features.tolist(),
            inst.real_label or "",
        )
        for inst in instances
    ]
    with Path(path).open("w", encoding="utf-8") as fh:
        _write_instance_header(fh, schema, q, labeled)
        _write_instance_rows(fh, rows, labeled)


def read_instance_file(path: str | Path) -> tuple[list[Instance], dict]:
    """Read instances plus file metadata ({'q': int, 'schema': tuple})."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"missing file: {path}")
    meta: dict = {}
    instances: list[Instance] = []
    with path.open(encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# instances"):
            raise IngestError(f"{path}: not an instance file (bad header)")
        for token in first.split():
            if "=" in token:
                key, value = token.split("=", 1)
                meta[key] = int(value) if value.isdigit() else value
        header = fh.readline().rstrip("\n").split("\t")
        if header[:2] != ["id_a", "id_b"]:
            raise IngestError(f"{path}: malformed column header")
        has_label = header[-1] == "label"
        attr_cols = header[2 : -1 if has_label else len(header)]
        meta["schema"] = tuple(attr_cols)
        n_feats = len(attr_cols)
        for lineno, line in enumerate(fh, start=3):
            line = line.rstrip("\n")
            if not line:
                continue
            cells = line.split("\t")
            expected = 2 + n_feats + (1 if has_label else 0)
            if len(cells) != expected:
                raise IngestError(f"{path}:{lineno}: expected {expected} columns")
            feats = np.array([float(v) for v in cells[2 : 2 + n_feats]])
            label = cells[-1] if has_label and cells[-1] else None
            instances.append(
                Instance(pair=(cells[0], cells[1]), features=feats, real_label=label)
            )
    return instances, meta
