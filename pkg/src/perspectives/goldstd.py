"""Majority-vote gold standards and seeded train/test splits.

One split is drawn per dataset and then applied to every gold variant (overall
and per group), so all classifiers are scored on the same held-out items.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .corpus import MISSING, AnnotationError, AnnotationMatrix, LabelScheme

__all__ = [
    "TIE_POLICIES",
    "TieError",
    "GoldStandard",
    "SplitSpec",
    "SplitManifest",
    "majority_gold",
    "union_gold",
    "make_split",
    "apply_split",
    "train_test_split",
    "read_gold_csv",
]

TIE_POLICIES = ("prefer-positive", "prefer-negative", "prefer-expert", "error")


class TieError(ValueError):
    """A vote tie that the chosen policy cannot resolve."""


@dataclass(frozen=True)
class GoldStandard:
    labels: Mapping[str, str]
    scheme: LabelScheme = LabelScheme()
    source: str = "overall"
    tie_policy: str = "prefer-positive"
    tie_count: int = 0
    tied_items: tuple[str, ...] = ()
    excluded_items: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "labels", dict(sorted(self.labels.items())))
        bad = {v for v in self.labels.values() if v not in self.scheme.categories}
        if bad:
            raise AnnotationError(f"gold labels {sorted(bad)} not in scheme {self.scheme.categories}")

    def __len__(self):
        return len(self.labels)

    @property
    def items(self) -> tuple[str, ...]:
        return tuple(self.labels)

    def positives(self) -> set[str]:
        return {i for i, v in self.labels.items() if v == self.scheme.positive}

    def restrict(self, item_ids: Iterable[str], source: str | None = None) -> "GoldStandard":
        keep = set(item_ids)
        return GoldStandard(
            {i: v for i, v in self.labels.items() if i in keep},
            self.scheme,
            source or self.source,
            self.tie_policy,
            sum(1 for i in self.tied_items if i in keep),
            tuple(i for i in self.tied_items if i in keep),
        )

    def to_csv(self, copies: Mapping[str, int] | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["item_id", "label"] + (["copies"] if copies is not None else []))
        for item, label in self.labels.items():
            w.writerow([item, label] + ([copies[item]] if copies is not None else []))
        return buf.getvalue()


def read_gold_csv(path: str | Path, scheme: LabelScheme = LabelScheme(), source: str | None = None) -> GoldStandard:
    """Read ``item_id,label[,copies]``; the copies column, if any, is ignored."""
    labels = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["item_id", "label"]:
            raise AnnotationError("line 1: expected header item_id,label")
        for row in reader:
            if not row:
                continue
            item, label = row[0].strip(), row[1].strip()
            if label not in scheme.categories:
                raise AnnotationError(f"line {reader.line_num}: label {label!r} not in scheme")
            if item in labels:
                raise AnnotationError(f"line {reader.line_num}: duplicate item {item!r}")
            labels[item] = label
    return GoldStandard(labels, scheme, source or Path(path).stem)


def _resolve_tie(item, tied, policy, scheme, expert_codes):
    cats = scheme.categories
    pos = scheme.index(scheme.positive)
    if policy == "prefer-positive":
        return pos if pos in tied else tied[0]
    if policy == "prefer-negative":
        non_pos = [c for c in tied if c != pos]
        return non_pos[0]
    if policy == "prefer-expert":
        votes = np.bincount(expert_codes, minlength=len(cats)) if len(expert_codes) else None
        if votes is not None:
            top = np.flatnonzero(votes == votes.max())
            if len(top) == 1:
                return int(top[0])
        raise TieError(f"tie on item {item!r} not resolved by expert annotators")
    raise TieError(f"tie on item {item!r}")


def majority_gold(
    matrix: AnnotationMatrix,
    annotator_subset: Iterable[str] | None = None,
    tie_policy: str = "prefer-positive",
    source: str | None = None,
) -> GoldStandard:
    """Modal label per item among ``annotator_subset`` (default: all annotators).

    Ties are settled by ``tie_policy``:

    ``prefer-positive`` / ``prefer-negative``
        take the positive class (or a non-positive one) when it is among the
        tied categories; otherwise the first tied category in scheme order.
    ``prefer-expert``
        majority of the expert-flagged annotators of the subset on that item;
        a tie among experts, or no expert label, raises :class:`TieError`.
    ``error``
        raise :class:`TieError` naming the item.

    Items with no label from the subset are left out and listed in
    ``excluded_items``.
    """
    if tie_policy not in TIE_POLICIES:
        raise ValueError(f"unknown tie policy {tie_policy!r}; choose from {TIE_POLICIES}")
    ids = list(matrix.annotator_ids if annotator_subset is None else annotator_subset)
    if not ids:
        raise ValueError("annotator subset is empty")
    cols = matrix.columns(ids)
    experts = [c for c, a in zip(cols, ids) if matrix.annotator(a).expert]
    if tie_policy == "prefer-expert" and not experts:
        raise ValueError("prefer-expert needs at least one expert annotator in the subset")

    counts = matrix.counts(ids)
    labels, tied_items, excluded = {}, [], []
    for i, item in enumerate(matrix.items):
        row = counts[i]
        if row.sum() == 0:
            excluded.append(item)
            continue
        tied = [int(c) for c in np.flatnonzero(row == row.max())]
        if len(tied) == 1:
            code = tied[0]
        else:
            expert_codes = matrix.codes[i, experts]
            code = _resolve_tie(item, tied, tie_policy, matrix.scheme, expert_codes[expert_codes != MISSING])
            tied_items.append(item)
        labels[item] = matrix.scheme.categories[code]
    return GoldStandard(
        labels,
        matrix.scheme,
        source or ("overall" if annotator_subset is None else "subset"),
        tie_policy,
        len(tied_items),
        tuple(tied_items),
        tuple(excluded),
    )


def union_gold(golds: Iterable[GoldStandard], source: str = "union") -> GoldStandard:
    """Positive wherever any of ``golds`` is positive, over their common items."""
    golds = list(golds)
    common = set(golds[0].labels).intersection(*(g.labels for g in golds[1:]))
    scheme = golds[0].scheme
    labels = {}
    for item in common:
        pos = any(g.labels[item] == scheme.positive for g in golds)
        labels[item] = scheme.positive if pos else golds[0].labels[item]
    return GoldStandard(labels, scheme, source, "union")


# -- splitting --------------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.85
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class SplitManifest:
    seed: int
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    stratified: bool
    train_fraction: float

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "stratified": self.stratified,
            "train_fraction": self.train_fraction,
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping) -> "SplitManifest":
        return cls(
            int(d["seed"]),
            tuple(d["train_ids"]),
            tuple(d["test_ids"]),
            bool(d.get("stratified", False)),
            float(d.get("train_fraction", 0.0)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "SplitManifest":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _train_size(n: int, fraction: float) -> int:
    # Tolerance guards against e.g. 1120 * 0.85 landing just below 952.
    n_train = math.floor(n * fraction + 1e-9)
    return min(max(n_train, 1), n - 1)


def _allocate(class_sizes: list[int], n_train: int) -> list[int]:
    """Largest-remainder apportionment of ``n_train`` across classes."""
    n = sum(class_sizes)
    quotas = [s * n_train / n for s in class_sizes]
    alloc = [math.floor(q + 1e-9) for q in quotas]
    order = sorted(range(len(quotas)), key=lambda c: (-(quotas[c] - alloc[c]), c))
    for c in order[: n_train - sum(alloc)]:
        alloc[c] += 1
    return alloc


def make_split(gold: GoldStandard, spec: SplitSpec = SplitSpec()) -> SplitManifest:
    """Draw a seeded split of ``gold``'s items.

    The train size is ``floor(n * train_fraction)``.  In stratified mode each
    class receives its proportional share (largest-remainder rounding), so
    per-class ratios are kept to within one item.
    """
    items = sorted(gold.labels)
    if len(items) < 2:
        raise ValueError("need at least two items to split")
    rng = np.random.default_rng(spec.seed)
    n_train = _train_size(len(items), spec.train_fraction)
    if spec.stratified:
        by_class = {c: [i for i in items if gold.labels[i] == c] for c in gold.scheme.categories}
        absent = [c for c, v in by_class.items() if not v]
        if absent:
            raise ValueError(f"stratified split impossible: class(es) {absent} absent")
        pools = list(by_class.values())
        alloc = _allocate([len(p) for p in pools], n_train)
    else:
        pools, alloc = [items], [n_train]
    train, test = [], []
    for pool, k in zip(pools, alloc):
        perm = rng.permutation(len(pool))
        train += [pool[j] for j in perm[:k]]
        test += [pool[j] for j in perm[k:]]
    return SplitManifest(spec.seed, tuple(sorted(train)), tuple(sorted(test)), spec.stratified, spec.train_fraction)


def apply_split(gold: GoldStandard, manifest: SplitManifest) -> tuple[GoldStandard, GoldStandard]:
    """Restrict ``gold`` to the manifest's train and test ids."""
    return gold.restrict(manifest.train_ids), gold.restrict(manifest.test_ids)


def train_test_split(gold: GoldStandard, spec: SplitSpec = SplitSpec()) -> tuple[GoldStandard, GoldStandard]:
    return apply_split(gold, make_split(gold, spec))
