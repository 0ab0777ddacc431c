"""Per-item polarization index and the aggregates built on it.

For an item whose annotations are split across ``k`` annotator groups::

    P(i) = (1/k) * sum_w a(G_i^w) * (1 - a(G_i))

where ``a`` is the normalized chi-square agreement from
:mod:`perspectives.agreement`, ``G_i^w`` the labels of group ``w`` and ``G_i``
all labels of the partitioned annotators.  P is high only when each group
agrees internally while the pooled labels are split.

Every group must contribute at least two labels for P to be defined; items
failing that are skipped by the aggregates and reported, never imputed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

import numpy as np

from ._util import percent
from .agreement import UndefinedAgreement, _exact_agreement
from .corpus import AnnotationMatrix

__all__ = [
    "PolarizationScore",
    "AveragePolarization",
    "RankedItem",
    "p_index",
    "score_items",
    "average_p_index",
    "rank_by_polarization",
    "polarization_census",
    "ranking_tsv",
]

#: Tolerance used when testing p against 0 and 1.
P_TOL = 1e-9


@dataclass(frozen=True)
class PolarizationScore:
    item_id: str
    p: float
    exact: Fraction = field(repr=False)
    group_agreements: tuple[float, ...]
    overall_agreement: float
    group_modes: tuple[str | None, ...] = ()
    direction: tuple[str, ...] | None = None


def _mode(counts, categories) -> str | None:
    top = max(counts)
    tied = [c for c, x in zip(categories, counts) if x == top]
    return tied[0] if len(tied) == 1 else None


def _score_from_counts(item_id, group_counts, categories, group_labels, positive):
    """``group_counts`` is a sequence of per-group count tuples."""
    for label, counts in zip(group_labels, group_counts):
        if sum(counts) < 2:
            raise UndefinedAgreement(f"item {item_id!r}: group {label!r} has fewer than 2 labels")
    overall = tuple(int(x) for x in np.sum(group_counts, axis=0))
    group_a = [_exact_agreement(tuple(int(x) for x in c)) for c in group_counts]
    a_all = _exact_agreement(overall)
    exact = sum(group_a, Fraction(0)) / len(group_a) * (1 - a_all)

    modes = tuple(_mode(c, categories) for c in group_counts)
    direction = None
    if positive is not None and len(set(modes)) > 1:
        direction = tuple(lbl for lbl, m in zip(group_labels, modes) if m == positive)
    return PolarizationScore(
        item_id,
        float(exact),
        exact,
        tuple(float(a) for a in group_a),
        float(a_all),
        modes,
        direction,
    )


def p_index(
    item_annotations: Mapping[str, Hashable],
    partition,
    categories: Sequence[Hashable] = (0, 1),
    positive: Hashable | None = None,
    item_id: str = "",
) -> PolarizationScore:
    """Polarization of one item.

    ``item_annotations`` maps annotator id to label; annotators absent from the
    mapping (or mapped to ``None``) are treated as missing.  ``categories`` is
    the full category set of the scheme.  ``positive`` enables the
    ``direction`` attribution (which groups' modal label is positive).

    >>> from perspectives.partition import Partition
    >>> part = Partition((("a", "b", "c"), ("d", "e", "f")))
    >>> labels = dict(zip("abcdef", [1, 0, 0, 1, 1, 1]))
    >>> round(p_index(labels, part).p, 2)
    0.49
    """
    cats = list(categories)
    index = {c: i for i, c in enumerate(cats)}
    group_counts = []
    for group in partition.groups:
        counts = [0] * len(cats)
        for ann in group:
            label = item_annotations.get(ann)
            if label is None:
                continue
            if label not in index:
                raise ValueError(f"label {label!r} not in categories {cats}")
            counts[index[label]] += 1
        group_counts.append(tuple(counts))
    return _score_from_counts(item_id, group_counts, cats, partition.labels, positive)


def score_items(matrix: AnnotationMatrix, partition) -> list[PolarizationScore | None]:
    """P-index of every matrix item (``None`` where undefined), in item order."""
    per_group = [matrix.counts(g) for g in partition.groups]
    cats = matrix.scheme.categories
    positive = matrix.scheme.positive if matrix.scheme.is_binary else None
    out: list[PolarizationScore | None] = []
    for i, item in enumerate(matrix.items):
        counts = [tuple(int(x) for x in g[i]) for g in per_group]
        if any(sum(c) < 2 for c in counts):
            out.append(None)
            continue
        out.append(_score_from_counts(item, counts, cats, partition.labels, positive))
    return out


@dataclass(frozen=True)
class AveragePolarization:
    value: float
    exact: Fraction = field(repr=False)
    n_defined: int
    skipped: tuple[str, ...] = ()


def _exact_average(matrix: AnnotationMatrix, partition) -> tuple[Fraction, int, tuple[str, ...]]:
    # Fast path for search: only the exact P values are needed.
    per_group = [matrix.counts(g) for g in partition.groups]
    k = len(per_group)
    total = Fraction(0)
    n = 0
    skipped = []
    for i, item in enumerate(matrix.items):
        rows = [tuple(int(x) for x in g[i]) for g in per_group]
        if any(sum(r) < 2 for r in rows):
            skipped.append(item)
            continue
        overall = tuple(map(sum, zip(*rows)))
        total += sum(map(_exact_agreement, rows), Fraction(0)) * (1 - _exact_agreement(overall)) / k
        n += 1
    return total, n, tuple(skipped)


def average_p_index(matrix: AnnotationMatrix, partition) -> AveragePolarization:
    """Mean P over items where it is defined; undefined items are listed in ``skipped``."""
    total, n, skipped = _exact_average(matrix, partition)
    if n == 0:
        raise UndefinedAgreement("no item has a defined P-index under this partition")
    mean = total / n
    return AveragePolarization(float(mean), mean, n, skipped)


@dataclass(frozen=True)
class RankedItem:
    item_id: str
    score: PolarizationScore | None

    @property
    def p(self) -> float | None:
        return None if self.score is None else self.score.p


def rank_by_polarization(matrix: AnnotationMatrix, partition, descending: bool = True) -> list[RankedItem]:
    """Items sorted by P (ties by item id ascending), undefined items last."""
    scores = score_items(matrix, partition)
    defined = [(s.exact, s.item_id, s) for s in scores if s is not None]
    defined.sort(key=lambda t: t[1])
    defined.sort(key=lambda t: t[0], reverse=descending)
    undefined = sorted(it for it, s in zip(matrix.items, scores) if s is None)
    return [RankedItem(it, s) for _, it, s in defined] + [RankedItem(it, None) for it in undefined]


def polarization_census(matrix: AnnotationMatrix, partition, tol: float = P_TOL) -> dict:
    """Counts of maximally (P = 1) and non-polarized (P = 0) items.

    For binary schemes each P = 1 item is attributed to the group(s) that voted
    positive, under keys ``"<group label>-positive"``.  For larger schemes the
    tuple of group modal labels is counted instead.
    """
    scores = score_items(matrix, partition)
    defined = [s for s in scores if s is not None]
    n_def = len(defined)
    maxed = [s for s in defined if abs(s.p - 1.0) <= tol]
    zero = [s for s in defined if abs(s.p) <= tol]
    census = {
        "n_items": len(matrix.items),
        "n_defined": n_def,
        "undefined_items": [it for it, s in zip(matrix.items, scores) if s is None],
        "max_polarization": len(maxed),
        "max_polarization_pct": percent(len(maxed), n_def),
        "zero_polarization": len(zero),
        "zero_polarization_pct": percent(len(zero), n_def),
        "max_polarization_items": [s.item_id for s in maxed],
    }
    if matrix.scheme.is_binary:
        directions = {f"{lbl}-positive": 0 for lbl in partition.labels}
        for s in maxed:
            for lbl in s.direction or ():
                directions[f"{lbl}-positive"] += 1
        census["directions"] = directions
    else:
        modes: dict[str, int] = {}
        for s in maxed:
            key = "|".join(f"{lbl}={m}" for lbl, m in zip(partition.labels, s.group_modes))
            modes[key] = modes.get(key, 0) + 1
        census["group_modes"] = dict(sorted(modes.items()))
    return census


def ranking_tsv(ranked: Sequence[RankedItem], texts: Mapping[str, str] | None = None) -> str:
    """``item_id<TAB>p[<TAB>text]`` lines; undefined P is written as ``NA``."""
    header = "item_id\tp" + ("\ttext" if texts is not None else "")
    lines = [header]
    for r in ranked:
        cols = [r.item_id, "NA" if r.p is None else f"{r.p:.6f}"]
        if texts is not None:
            cols.append(" ".join(texts.get(r.item_id, "").split()))
        lines.append("\t".join(cols))
    return "\n".join(lines) + "\n"

